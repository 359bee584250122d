//! Compares the two decision signals of a trained model: the support/oppose
//! logits and the distances to the perspective and to its negation. Reports
//! how often they agree and how accurate the agreeing subset is.
//!
//!     cargo run --release --example signal_agreement

use tribrid::decision::Family;
use tribrid::encoder::{EncoderConfig, EncoderParams};
use tribrid::eval::{agreement_analysis, evaluate_at, negatable, score_dataset, split_of, synthetic, triple_for, Split};
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

    let test = score_dataset(&model, &rules, &split_of(&data, Split::Test), true);
    let rows = negatable(&test);
    println!("{} of {} test perspectives negated", rows.len(), test.len());
    println!("logit,    all rows:  {}", evaluate_at(&rows, Family::Logit, 0.0));
    println!("distance, all rows:  {}", evaluate_at(&rows, Family::Distance, 0.0));
    let agree = agreement_analysis(&test);
    println!("signals agree on {:.2}% of rows: {}", 100.0 * agree.coverage, agree.percent_summary());

    println!("\nsome disagreements:");
    for s in rows.iter().filter(|s| tribrid::decision::signals_agree(&s.signals).is_none()).take(5) {
        let pair = data.iter().find(|p| p.id == s.id).expect("scored from data");
        println!(
            "  {} | {}\n    gold {}, logit gap {:+.3}, distance gap {:+.3}",
            pair.claim,
            pair.perspective,
            s.label,
            s.signals.lpos - s.signals.lneg,
            s.signals.dist_np.unwrap() - s.signals.dist_p
        );
    }
    Ok(())
}
