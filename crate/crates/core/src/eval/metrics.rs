use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::ExamplePair;
use crate::decision::Verdict;
use crate::error::{Error, Result};
use crate::stance::Stance;

/// Binary precision/recall/F1 over the non-abstained predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    /// Fraction of items that received a prediction.
    pub coverage: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub abstained: usize,
    pub total: usize,
}

impl MetricsReport {
    /// Positionally aligned verdicts and gold labels.
    pub fn from_aligned(verdicts: &[Verdict], gold: &[Stance], positive: Stance) -> Self {
        assert_eq!(verdicts.len(), gold.len(), "verdicts and gold differ in length");
        let (mut tp, mut fp, mut fn_, mut tn, mut abstained) = (0, 0, 0, 0, 0);
        for (v, g) in verdicts.iter().zip(gold) {
            match v.stance() {
                None => abstained += 1,
                Some(p) => match (p == positive, *g == positive) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                },
            }
        }
        Self::from_counts(tp, fp, fn_, tn, abstained)
    }

    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize, abstained: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let total = tp + fp + fn_ + tn + abstained;
        MetricsReport {
            f1,
            precision,
            recall,
            coverage: ratio(total - abstained, total),
            tp,
            fp,
            fn_,
            tn,
            abstained,
            total,
        }
    }

    pub fn accuracy(&self) -> f64 {
        let answered = self.total - self.abstained;
        if answered == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / answered as f64
        }
    }

    /// `F1 (P, R)` in percent, two decimals: `81.35 (81.00, 81.71)`.
    pub fn percent_summary(&self) -> String {
        format!(
            "{:.2} ({:.2}, {:.2})",
            100.0 * self.f1,
            100.0 * self.precision,
            100.0 * self.recall
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  coverage {:.2}%", self.percent_summary(), 100.0 * self.coverage)
    }
}

/// Metrics for predictions matched to gold pairs by id. Every gold id must be
/// predicted exactly once and no unknown ids may appear.
pub fn compute_metrics(predictions: &[(String, Verdict)], gold: &[ExamplePair], positive: Stance) -> Result<MetricsReport> {
    let by_id: HashMap<&str, Stance> = gold.iter().map(|p| (p.id.as_str(), p.label)).collect();
    if predictions.len() != gold.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions for {} gold items",
            predictions.len(),
            gold.len()
        )));
    }
    let mut verdicts = Vec::with_capacity(predictions.len());
    let mut labels = Vec::with_capacity(predictions.len());
    let mut seen = std::collections::HashSet::new();
    for (id, v) in predictions {
        let label = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::IdMismatch(format!("unknown id `{id}`")))?;
        if !seen.insert(id.as_str()) {
            return Err(Error::IdMismatch(format!("id `{id}` predicted twice")));
        }
        verdicts.push(*v);
        labels.push(*label);
    }
    Ok(MetricsReport::from_aligned(&verdicts, &labels, positive))
}
