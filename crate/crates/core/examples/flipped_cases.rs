//! Trains a pair-only model (no negated inputs) and counts, for each of the
//! three negators, how many test predictions change when the perspective is
//! replaced by its negation.
//!
//!     cargo run --release --example flipped_cases

use tribrid::encoder::{EncoderConfig, EncoderParams};
use tribrid::eval::{flip_report, split_of, synthetic, triple_for, Split};
use tribrid::negation::{Negator, RuleSet};
use tribrid::objective::{train, TrainConfig, TrainExample};

fn main() -> tribrid::Result<()> {
    let data = synthetic::bundled();
    let rules = RuleSet::bundled();
    let config = TrainConfig {
        use_negation: false,
        ..TrainConfig::default()
    };
    let examples: Vec<TrainExample> = split_of(&data, Split::Train)
        .iter()
        .map(|p| TrainExample {
            triple: triple_for(&rules, p, false),
            label: p.label,
        })
        .collect();
    let (model, _) = train(EncoderParams::init(EncoderConfig::default(), config.seed), &examples, &config)?;

    let report = flip_report(&model, &rules, &Negator::ALL, &split_of(&data, Split::Test));
    println!("negator    coverage  flipped  F1 on flipped (P, R)");
    for r in &report.rows {
        println!(
            "{:<9}  {:>7.2}%  {:>7}  {}",
            r.negator.name(),
            100.0 * r.coverage,
            r.flipped,
            r.flipped_metrics.percent_summary()
        );
    }
    report.write_csv(std::io::stdout().lock())
}
