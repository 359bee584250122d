//! Combines ten thresholded decision procedures with the label model so that
//! every input gets a prediction, and compares it with each single column and
//! with a majority vote.
//!
//!     cargo run --release --example weak_ensemble

use tribrid::decision::Verdict;
use tribrid::encoder::{EncoderConfig, EncoderParams, Signals};
use tribrid::eval::{score_dataset, split_of, synthetic, triple_for, MetricsReport, Split};
use tribrid::label_model::{self, fallback_stance, Ensemble, DEFAULT_BANK_FRACTIONS, REFERENCE_TAU_DIST, REFERENCE_TAU_LOG};
use tribrid::negation::RuleSet;
use tribrid::objective::{train, TrainConfig, TrainExample};
use tribrid::Stance;

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

    let signals = |split| -> Vec<Signals> {
        score_dataset(&model, &rules, &split_of(&data, split), true).into_iter().map(|s| s.signals).collect()
    };
    let train_signals = signals(Split::Train);
    let test_signals = signals(Split::Test);
    let gold: Vec<Stance> = split_of(&data, Split::Test).iter().map(|p| p.label).collect();

    // The reference banks suit a different gap scale; place ours at the
    // 10%..50% discard quantiles of the training gaps instead.
    println!("reference banks: log {REFERENCE_TAU_LOG:?}, dist {REFERENCE_TAU_DIST:?}");
    let (tau_log, tau_dist) = label_model::quantile_banks(&train_signals, &DEFAULT_BANK_FRACTIONS)?;

    let params = label_model::fit(&train_signals, &tau_log, &tau_dist)?;
    println!("column      accuracy  propensity");
    for ((t, a), p) in params.columns.iter().zip(&params.accuracies).zip(&params.propensities) {
        println!("{:<5}{:<7.3} {a:.3}     {p:.3}", t.family.name(), t.tau);
    }

    // Single columns answer everything too: abstains and rows without a
    // negation take the pair-only logit decision.
    println!();
    for t in &params.columns {
        let verdicts: Vec<Verdict> = test_signals
            .iter()
            .map(|s| match (s.has_negation(), t.decide(s).verdict) {
                (true, v) if v != Verdict::Abstain => v,
                _ => fallback_stance(s).into(),
            })
            .collect();
        println!("{}:{:.3}  {}", t.family.name(), t.tau, MetricsReport::from_aligned(&verdicts, &gold, Stance::Support));
    }
    for ensemble in [Ensemble::Weak, Ensemble::Majority] {
        let preds = label_model::fit_predict_pipeline(&train_signals, &test_signals, &tau_log, &tau_dist, ensemble)?;
        let verdicts: Vec<Verdict> = preds.iter().map(|p| p.verdict()).collect();
        println!("{ensemble:?}: {}", MetricsReport::from_aligned(&verdicts, &gold, Stance::Support));
    }
    Ok(())
}
