use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::ExamplePair;
use super::metrics::MetricsReport;
use crate::decision::{calibrate_tau, class_log, signals_agree, Family, Verdict};
use crate::encoder::{InputTriple, SignalModel, Signals};
use crate::error::{Error, Result};
use crate::negation::{CoverageReport, Negator, RuleSet};
use crate::stance::Stance;

/// Model signals for one gold pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub id: String,
    pub label: Stance,
    pub negated: Option<String>,
    pub signals: Signals,
}

pub fn triple_for(rules: &RuleSet, pair: &ExamplePair, use_negation: bool) -> InputTriple {
    let negated = if use_negation {
        rules.negate(&pair.perspective).map(|r| r.negated_text)
    } else {
        None
    };
    InputTriple::new(pair.claim.clone(), pair.perspective.clone(), negated)
}

pub fn score_dataset(
    model: &impl SignalModel,
    rules: &RuleSet,
    pairs: &[ExamplePair],
    use_negation: bool,
) -> Vec<ScoredExample> {
    pairs
        .iter()
        .map(|p| {
            let triple = triple_for(rules, p, use_negation);
            ScoredExample {
                id: p.id.clone(),
                label: p.label,
                signals: model.signals(&triple),
                negated: triple.negated,
            }
        })
        .collect()
}

/// Rows that carry a negated perspective.
pub fn negatable(scored: &[ScoredExample]) -> Vec<ScoredExample> {
    scored.iter().filter(|s| s.signals.has_negation()).cloned().collect()
}

/// Metrics of one decision family at a fixed threshold.
pub fn evaluate_at(scored: &[ScoredExample], family: Family, tau: f64) -> MetricsReport {
    let verdicts: Vec<Verdict> = scored.iter().map(|s| family.decide(&s.signals, tau).verdict).collect();
    let gold: Vec<Stance> = scored.iter().map(|s| s.label).collect();
    MetricsReport::from_aligned(&verdicts, &gold, Stance::Support)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Family,
    /// Requested discard fraction.
    pub x: f64,
    pub tau: f64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["method", "X", "tau", "f1", "precision", "recall", "coverage"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.method.name().to_string(),
                format!("{:.2}", r.x),
                format!("{:.6}", r.tau),
                format!("{:.4}", r.metrics.f1),
                format!("{:.4}", r.metrics.precision),
                format!("{:.4}", r.metrics.recall),
                format!("{:.4}", r.metrics.coverage),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }

    pub fn rows_for(&self, method: Family) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }
}

/// Per discard fraction `x`, calibrates tau on the scored rows themselves and
/// reports metrics on the retained subset. Rows for which `method` has no gap
/// (no negated perspective under `dist`) are left out entirely.
pub fn sweep_filter(scored: &[ScoredExample], method: Family, percentages: &[f64]) -> Result<SweepReport> {
    sweep_filter_calibrated(scored, scored, method, percentages)
}

/// Like [`sweep_filter`], with thresholds calibrated on a separate set.
pub fn sweep_filter_calibrated(
    calibration: &[ScoredExample],
    scored: &[ScoredExample],
    method: Family,
    percentages: &[f64],
) -> Result<SweepReport> {
    for (i, x) in percentages.iter().enumerate() {
        if !(*x > 0.0 && *x < 1.0) {
            return Err(Error::InvalidArgument(format!("filter percentage {x} outside (0, 1)")));
        }
        if i > 0 && *x <= percentages[i - 1] {
            return Err(Error::InvalidArgument("filter percentages must be strictly increasing".into()));
        }
    }
    let gaps: Vec<f64> = calibration.iter().filter_map(|s| method.gap(&s.signals)).collect();
    let usable: Vec<ScoredExample> = scored.iter().filter(|s| method.gap(&s.signals).is_some()).cloned().collect();
    let mut rows = Vec::with_capacity(percentages.len());
    for &x in percentages {
        let tau = calibrate_tau(&gaps, x)?;
        rows.push(SweepRow {
            method,
            x,
            tau,
            metrics: evaluate_at(&usable, method, tau),
        });
    }
    Ok(SweepReport { rows })
}

/// Metrics on the rows where both signal pairs agree; coverage is the
/// agreeing fraction of the rows that have a negated perspective.
pub fn agreement_analysis(scored: &[ScoredExample]) -> MetricsReport {
    let rows = negatable(scored);
    let verdicts: Vec<Verdict> = rows
        .iter()
        .map(|s| signals_agree(&s.signals).map_or(Verdict::Abstain, Verdict::from))
        .collect();
    let gold: Vec<Stance> = rows.iter().map(|s| s.label).collect();
    MetricsReport::from_aligned(&verdicts, &gold, Stance::Support)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipRow {
    pub negator: Negator,
    pub total: usize,
    pub negatable: usize,
    pub coverage: f64,
    pub flipped: usize,
    /// Original-perspective predictions on the flipped subset.
    pub flipped_metrics: MetricsReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    pub rows: Vec<FlipRow>,
}

impl FlipReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["negator", "total", "negatable", "coverage", "flipped", "f1", "precision", "recall"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.negator.name().to_string(),
                r.total.to_string(),
                r.negatable.to_string(),
                format!("{:.4}", r.coverage),
                r.flipped.to_string(),
                format!("{:.4}", r.flipped_metrics.f1),
                format!("{:.4}", r.flipped_metrics.precision),
                format!("{:.4}", r.flipped_metrics.recall),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

/// Counts the pairs whose pair-only prediction changes when the perspective
/// is replaced by its negation under `negator`.
pub fn flipped_cases(model: &impl SignalModel, rules: &RuleSet, negator: Negator, data: &[ExamplePair]) -> FlipRow {
    let predict = |claim: &str, perspective: &str| {
        let s = model.signals(&InputTriple::new(claim, perspective, None));
        class_log(&s, 0.0).verdict
    };
    let mut negatable = 0;
    let mut verdicts = Vec::new();
    let mut gold = Vec::new();
    for pair in data {
        let Some(negated) = negator.apply(rules, &pair.perspective) else {
            continue;
        };
        negatable += 1;
        let original = predict(&pair.claim, &pair.perspective);
        if original != predict(&pair.claim, &negated) {
            verdicts.push(original);
            gold.push(pair.label);
        }
    }
    FlipRow {
        negator,
        total: data.len(),
        negatable,
        coverage: CoverageReport::new(negatable, data.len()).rate,
        flipped: verdicts.len(),
        flipped_metrics: MetricsReport::from_aligned(&verdicts, &gold, Stance::Support),
    }
}

pub fn flip_report(model: &impl SignalModel, rules: &RuleSet, negators: &[Negator], data: &[ExamplePair]) -> FlipReport {
    FlipReport {
        rows: negators.iter().map(|n| flipped_cases(model, rules, *n, data)).collect(),
    }
}
