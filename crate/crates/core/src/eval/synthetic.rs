//! Seeded generator for the bundled claim/perspective benchmark.
//!
//! Every claim says something positive or negative about a plural subject.
//! Perspectives about the same subject carry their own polarity and the gold
//! label is `support` exactly when the two polarities match. Polarity phrases
//! are built from words the bundled templates rewrite (`help` becomes `harm`,
//! `are` gains a `not`, and so on), so template negation flips polarity.
//! A small share of perspectives is neutral with a random label, and a small
//! share of labels is flipped, to keep the task from being perfectly clean.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{ExamplePair, Split};
use crate::stance::Stance;

pub const SYNTHETIC_SEED: u64 = 20_201_027;
pub const SYNTHETIC_SIZE: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub size: usize,
    pub seed: u64,
    /// Share of perspectives drawn from the neutral pool, labelled at random.
    pub neutral_rate: f64,
    /// Share of labels flipped after generation.
    pub noise_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            size: SYNTHETIC_SIZE,
            seed: SYNTHETIC_SEED,
            neutral_rate: 0.05,
            noise_rate: 0.02,
        }
    }
}

const SUBJECTS: [&str; 30] = [
    "Electric cars",
    "Social media platforms",
    "Video games",
    "Nuclear power plants",
    "School uniforms",
    "Online classes",
    "Genetically modified crops",
    "Standardized tests",
    "Private prisons",
    "Public libraries",
    "Zoos",
    "Self-driving trucks",
    "Cryptocurrencies",
    "Minimum wage laws",
    "Sugar taxes",
    "Remote jobs",
    "Wind farms",
    "Smartphones",
    "Homework assignments",
    "Space programs",
    "Fast food chains",
    "Labor unions",
    "Tourist visas",
    "Plastic bags",
    "Vaccination mandates",
    "Tariffs",
    "Open borders",
    "Four-day work weeks",
    "Chess clubs",
    "Energy drinks",
];

const CLAIM_POSITIVE: [&str; 6] = [
    "are good for society",
    "should be encouraged",
    "make life better",
    "deserve public funding",
    "are a positive force",
    "should be promoted",
];

const CLAIM_NEGATIVE: [&str; 6] = [
    "are bad for society",
    "should be banned",
    "make life worse",
    "deserve strict limits",
    "are a harmful force",
    "should be discouraged",
];

const PERSPECTIVE_POSITIVE: [&str; 12] = [
    "help local communities",
    "benefit young people",
    "help families save money",
    "benefit the economy",
    "are good for education",
    "are safe for children",
    "will improve public health",
    "will create good jobs",
    "are useful for everyone",
    "are not harmful to anyone",
    "are not dangerous",
    "can improve daily life",
];

const PERSPECTIVE_NEGATIVE: [&str; 12] = [
    "harm local communities",
    "hurt young people",
    "damage the economy",
    "harm small businesses",
    "are bad for education",
    "are dangerous for children",
    "will worsen public health",
    "cause serious problems",
    "are harmful to everyone",
    "are not good for anyone",
    "are not useful",
    "can ruin daily life",
];

const NEUTRAL: [&str; 6] = [
    "are discussed often in the news",
    "are a popular topic of debate",
    "were introduced decades ago",
    "appear in many surveys",
    "are studied by researchers",
    "vary from place to place",
];

const OPENERS: [&str; 6] = ["", "", "In my view, ", "Studies suggest that ", "Clearly, ", "Critics and fans agree that "];

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Generates the benchmark. Splits are exact 70/15/15 shares after a seeded
/// shuffle; ids are `syn-0001`, `syn-0002`, ... in output order.
pub fn generate(config: &SyntheticConfig) -> Vec<ExamplePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pairs = Vec::with_capacity(config.size);
    for _ in 0..config.size {
        let subject = *SUBJECTS.choose(&mut rng).unwrap();
        let claim_positive = rng.gen_bool(0.5);
        let claim_pred = if claim_positive {
            CLAIM_POSITIVE.choose(&mut rng).unwrap()
        } else {
            CLAIM_NEGATIVE.choose(&mut rng).unwrap()
        };
        let claim = format!("{subject} {claim_pred}.");

        let neutral = rng.gen_bool(config.neutral_rate);
        let (pred, label) = if neutral {
            let label = if rng.gen_bool(0.5) { Stance::Support } else { Stance::Oppose };
            (*NEUTRAL.choose(&mut rng).unwrap(), label)
        } else {
            let positive = rng.gen_bool(0.5);
            let pool: &[&str] = if positive { &PERSPECTIVE_POSITIVE } else { &PERSPECTIVE_NEGATIVE };
            let label = if positive == claim_positive { Stance::Support } else { Stance::Oppose };
            (*pool.choose(&mut rng).unwrap(), label)
        };
        let opener = *OPENERS.choose(&mut rng).unwrap();
        let perspective = if opener.is_empty() {
            format!("{subject} {pred}.")
        } else {
            format!("{opener}{} {pred}.", lower_first(subject))
        };
        let label = if rng.gen_bool(config.noise_rate) { label.flip() } else { label };
        pairs.push((claim, perspective, label));
    }

    let n_train = config.size * 70 / 100;
    let n_dev = config.size * 15 / 100;
    let mut splits: Vec<Split> = (0..config.size)
        .map(|i| {
            if i < n_train {
                Split::Train
            } else if i < n_train + n_dev {
                Split::Dev
            } else {
                Split::Test
            }
        })
        .collect();
    splits.shuffle(&mut rng);

    pairs
        .into_iter()
        .zip(splits)
        .enumerate()
        .map(|(i, ((claim, perspective, label), split))| ExamplePair {
            id: format!("syn-{:04}", i + 1),
            claim,
            perspective,
            label,
            split,
        })
        .collect()
}

/// The default benchmark.
pub fn bundled() -> Vec<ExamplePair> {
    generate(&SyntheticConfig::default())
}
