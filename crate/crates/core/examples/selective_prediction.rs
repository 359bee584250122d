//! Trades coverage for precision: thresholds are calibrated on the dev split
//! so that a given share of inputs is discarded, then applied to the test
//! split, for both the logit and the distance procedure.
//!
//!     cargo run --release --example selective_prediction

use tribrid::decision::Family;
use tribrid::encoder::{EncoderConfig, EncoderParams};
use tribrid::eval::{negatable, score_dataset, split_of, sweep_filter_calibrated, synthetic, triple_for, Split};
use tribrid::negation::RuleSet;
use tribrid::objective::{train, TrainConfig, TrainExample};

fn main() -> tribrid::Result<()> {
    let data = synthetic::bundled();
    let rules = RuleSet::bundled();
    let config = TrainConfig::default();
    let examples: Vec<TrainExample> = split_of(&data, Split::Train)
        .iter()
        .map(|p| TrainExample {
            triple: triple_for(&rules, p, true),
            label: p.label,
        })
        .collect();
    let (model, _) = train(EncoderParams::init(EncoderConfig::default(), config.seed), &examples, &config)?;

    let dev = negatable(&score_dataset(&model, &rules, &split_of(&data, Split::Dev), true));
    let test = negatable(&score_dataset(&model, &rules, &split_of(&data, Split::Test), true));
    let xs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();

    println!("discard  method  tau       F1 (P, R)               coverage");
    for family in [Family::Logit, Family::Distance] {
        for row in sweep_filter_calibrated(&dev, &test, family, &xs)?.rows {
            println!(
                "{:>6.0}%  {:<6}  {:<8.4}  {:<22}  {:.1}%",
                100.0 * row.x,
                family.name(),
                row.tau,
                row.metrics.percent_summary(),
                100.0 * row.metrics.coverage
            );
        }
    }
    Ok(())
}
