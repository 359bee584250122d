//! Fusing a bank of threshold classifiers into one always-answering
//! classifier.
//!
//! Each (family, tau) pair is a labeling function voting +1, -1 or 0
//! (abstain). Column accuracies are recovered from agreement rates alone:
//! for conditionally independent columns `E[l_i l_j] = a'_i a'_j` where
//! `a'_i = 2 a_i - 1`, so any triple of columns gives
//! `|a'_i| = sqrt(|E[l_i l_j] E[l_i l_k] / E[l_j l_k]|)`. Moments are taken
//! over the rows where both columns vote. Prediction is a naive-Bayes
//! log-odds sum over the voting columns.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decision::{calibrate_tau, class_log, Family, Threshold, Verdict};
use crate::encoder::Signals;
use crate::error::{Error, Result};
use crate::stance::Stance;

/// Logit thresholds of the reference five-classifier bank.
pub const REFERENCE_TAU_LOG: [f64; 5] = [5.0, 5.5, 8.5, 11.0, 13.0];
/// Distance thresholds of the reference five-classifier bank.
pub const REFERENCE_TAU_DIST: [f64; 5] = [0.01, 0.2, 1.3, 1.5, 1.9];

/// Discard fractions used by [`quantile_banks`] by default.
pub const DEFAULT_BANK_FRACTIONS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

pub const ACCURACY_FLOOR: f64 = 0.51;
pub const ACCURACY_CEIL: f64 = 0.99;
pub const DEFAULT_ACCURACY: f64 = 0.7;
const MIN_DENOMINATOR: f64 = 1e-6;

/// `m x (n_log + n_dist)` votes in {+1, -1, 0}; logit columns come first.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub columns: Vec<Threshold>,
    pub rows: Vec<Vec<i8>>,
}

impl LabelMatrix {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = i8> + '_ {
        self.rows.iter().map(move |r| r[j])
    }

    pub fn header(&self) -> Vec<String> {
        self.columns.iter().map(|t| format!("{}:{}", t.family, t.tau)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header()).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<LabelMatrix> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let bad = |line: usize, message: String| Error::DatasetParse { line, message };
        let header = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
        let mut columns = Vec::with_capacity(header.len());
        for h in header.iter() {
            let (fam, tau) = h
                .split_once(':')
                .ok_or_else(|| bad(1, format!("column `{h}` is not family:tau")))?;
            let family = match fam {
                "log" => Family::Logit,
                "dist" => Family::Distance,
                other => return Err(bad(1, format!("unknown family `{other}`"))),
            };
            let tau: f64 = tau.parse().map_err(|_| bad(1, format!("bad tau in `{h}`")))?;
            columns.push(Threshold::new(tau, family)?);
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| bad(line, e.to_string()))?;
            let row = rec
                .iter()
                .map(|c| match c.trim() {
                    "1" => Ok(1),
                    "-1" => Ok(-1),
                    "0" => Ok(0),
                    other => Err(bad(line, format!("cell `{other}` not in {{1,-1,0}}"))),
                })
                .collect::<Result<Vec<i8>>>()?;
            rows.push(row);
        }
        Ok(LabelMatrix { columns, rows })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<LabelMatrix> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        LabelMatrix::read_csv(std::io::BufReader::new(file))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// One column per threshold: the logit bank first, then the distance bank.
pub fn build_label_matrix(signals: &[Signals], tau_log: &[f64], tau_dist: &[f64]) -> Result<LabelMatrix> {
    let columns = tau_log
        .iter()
        .map(|t| Threshold::new(*t, Family::Logit))
        .chain(tau_dist.iter().map(|t| Threshold::new(*t, Family::Distance)))
        .collect::<Result<Vec<_>>>()?;
    if columns.is_empty() {
        return Err(Error::Empty("threshold banks"));
    }
    let rows = signals
        .iter()
        .map(|s| columns.iter().map(|t| t.decide(s).verdict.sign()).collect())
        .collect();
    Ok(LabelMatrix { columns, rows })
}

/// Banks placed at gap quantiles: for each fraction `x`, the threshold that
/// would discard `x` of `signals` (distance gaps only over rows that have
/// one). Useful when a model's gap scale differs from the reference banks.
pub fn quantile_banks(signals: &[Signals], fractions: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let log: Vec<f64> = signals.iter().map(Signals::logit_gap).collect();
    let dist: Vec<f64> = signals.iter().filter_map(Signals::distance_gap).collect();
    let bank = |gaps: &[f64]| fractions.iter().map(|x| calibrate_tau(gaps, *x)).collect::<Result<Vec<_>>>();
    Ok((bank(&log)?, bank(&dist)?))
}

/// Sign of the vote sum; on a tie (including all abstains) `fallback` wins.
pub fn majority_vote(row: &[i8], fallback: Stance) -> Stance {
    let sum: i32 = row.iter().map(|v| i32::from(*v)).sum();
    match sum.signum() {
        1 => Stance::Support,
        -1 => Stance::Oppose,
        _ => fallback,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModelParams {
    pub columns: Vec<Threshold>,
    /// P(vote = truth | vote != 0), clamped to [0.51, 0.99].
    pub accuracies: Vec<f64>,
    /// P(vote != 0).
    pub propensities: Vec<f64>,
    /// P(truth = support).
    pub prior: f64,
    /// Columns without any usable triple; their accuracy is the default.
    pub defaulted: Vec<usize>,
}

impl LabelModelParams {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: LabelModelParams = serde_json::from_str(&text)?;
        let n = params.columns.len();
        if params.accuracies.len() != n || params.propensities.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: params.accuracies.len(),
            });
        }
        Ok(params)
    }

    /// Per-column log-odds weight `ln(a / (1 - a))`.
    pub fn weights(&self) -> Vec<f64> {
        self.accuracies.iter().map(|a| (a / (1.0 - a)).ln()).collect()
    }
}

/// Pairwise agreement moments over jointly voting rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    n: usize,
    mean: Vec<Option<f64>>,
}

impl Moments {
    pub fn from_matrix(matrix: &LabelMatrix) -> Self {
        let n = matrix.num_columns();
        let mut sum = vec![0i64; n * n];
        let mut count = vec![0u64; n * n];
        for row in &matrix.rows {
            for i in 0..n {
                if row[i] == 0 {
                    continue;
                }
                for j in 0..n {
                    if row[j] != 0 {
                        sum[i * n + j] += i64::from(row[i] * row[j]);
                        count[i * n + j] += 1;
                    }
                }
            }
        }
        let mean = sum
            .iter()
            .zip(&count)
            .map(|(s, c)| (*c > 0).then(|| *s as f64 / *c as f64))
            .collect();
        Moments { n, mean }
    }

    /// `E[l_i l_j | l_i != 0, l_j != 0]`, `None` when the two never vote together.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.mean[i * self.n + j]
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Closed-form parameter estimate; never looks at gold labels.
pub fn estimate(matrix: &LabelMatrix) -> Result<LabelModelParams> {
    let n = matrix.num_columns();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "label model needs at least 3 columns, got {n}"
        )));
    }
    if matrix.rows.is_empty() {
        return Err(Error::Empty("label matrix"));
    }
    if matrix.rows.len() < 30 {
        log::warn!("label model estimated from only {} rows", matrix.rows.len());
    }
    let moments = Moments::from_matrix(matrix);

    // |a'_i| from the median over all admissible triples
    let mut magnitude = vec![0.0; n];
    let mut defaulted = Vec::new();
    for i in 0..n {
        let mut estimates = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                if j == i || k == i {
                    continue;
                }
                let (Some(mij), Some(mik), Some(mjk)) = (moments.get(i, j), moments.get(i, k), moments.get(j, k))
                else {
                    continue;
                };
                if mjk.abs() < MIN_DENOMINATOR {
                    continue;
                }
                estimates.push((mij * mik / mjk).abs().sqrt());
            }
        }
        if estimates.is_empty() {
            log::warn!("column {i}: no admissible triple, accuracy defaults to {DEFAULT_ACCURACY}");
            defaulted.push(i);
            magnitude[i] = 2.0 * DEFAULT_ACCURACY - 1.0;
        } else {
            magnitude[i] = median(&mut estimates).min(1.0);
        }
    }

    // signs relative to the strongest column, then flipped so the average
    // column is better than chance
    let reference = (0..n)
        .filter(|i| !defaulted.contains(i))
        .max_by(|a, b| magnitude[*a].total_cmp(&magnitude[*b]))
        .unwrap_or(0);
    let mut signed: Vec<f64> = (0..n)
        .map(|i| {
            let s = match moments.get(reference, i) {
                Some(m) if i != reference && m < 0.0 => -1.0,
                _ => 1.0,
            };
            s * magnitude[i]
        })
        .collect();
    if signed.iter().sum::<f64>() < 0.0 {
        signed.iter_mut().for_each(|a| *a = -*a);
    }
    let accuracies: Vec<f64> = signed
        .iter()
        .map(|a| ((a + 1.0) / 2.0).clamp(ACCURACY_FLOOR, ACCURACY_CEIL))
        .collect();

    let m = matrix.rows.len() as f64;
    let propensities: Vec<f64> = (0..n)
        .map(|j| matrix.column(j).filter(|v| *v != 0).count() as f64 / m)
        .collect();

    let best = (0..n)
        .max_by(|a, b| accuracies[*a].total_cmp(&accuracies[*b]).then(b.cmp(a)))
        .expect("n >= 3");
    let votes: Vec<i8> = matrix.column(best).filter(|v| *v != 0).collect();
    let prior = if votes.is_empty() {
        0.5
    } else {
        let pos = votes.iter().filter(|v| **v > 0).count() as f64 / votes.len() as f64;
        pos.clamp(0.01, 0.99)
    };

    Ok(LabelModelParams {
        columns: matrix.columns.clone(),
        accuracies,
        propensities,
        prior,
        defaulted,
    })
}

/// Naive-Bayes posterior. Returns the stance (support on a log-odds tie) and
/// P(support | row).
pub fn predict(params: &LabelModelParams, row: &[i8]) -> (Stance, f64) {
    let mut log_odds = (params.prior / (1.0 - params.prior)).ln();
    for (v, a) in row.iter().zip(&params.accuracies) {
        if *v != 0 {
            log_odds += f64::from(*v) * (a / (1.0 - a)).ln();
        }
    }
    let posterior = 1.0 / (1.0 + (-log_odds).exp());
    let stance = if log_odds >= 0.0 { Stance::Support } else { Stance::Oppose };
    (stance, posterior)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Moment-estimated label model.
    Weak,
    Majority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub stance: Stance,
    /// Posterior P(support); `None` for majority votes and fallbacks.
    pub posterior: Option<f64>,
    /// No negated perspective, so the pair-only logit decision was used.
    pub fallback: bool,
}

impl EnsemblePrediction {
    pub fn verdict(&self) -> Verdict {
        self.stance.into()
    }
}

/// Pair-only decision used when the distance signals are missing.
pub fn fallback_stance(s: &Signals) -> Stance {
    class_log(s, 0.0).verdict.stance().expect("tau = 0 never abstains")
}

/// Estimates on the training rows that have a negated perspective.
pub fn fit(train: &[Signals], tau_log: &[f64], tau_dist: &[f64]) -> Result<LabelModelParams> {
    let usable: Vec<Signals> = train.iter().filter(|s| s.has_negation()).copied().collect();
    if usable.is_empty() {
        return Err(Error::Empty("training signals with a negated perspective"));
    }
    estimate(&build_label_matrix(&usable, tau_log, tau_dist)?)
}

/// Predicts every row of `eval` with a fitted model.
pub fn predict_signals(params: &LabelModelParams, eval: &[Signals]) -> Vec<EnsemblePrediction> {
    eval.iter()
        .map(|s| {
            if !s.has_negation() {
                return EnsemblePrediction {
                    stance: fallback_stance(s),
                    posterior: None,
                    fallback: true,
                };
            }
            let row: Vec<i8> = params.columns.iter().map(|t| t.decide(s).verdict.sign()).collect();
            let (stance, posterior) = predict(params, &row);
            EnsemblePrediction {
                stance,
                posterior: Some(posterior),
                fallback: false,
            }
        })
        .collect()
}

/// Fit on `train`, predict `eval`.
pub fn fit_predict_pipeline(
    train: &[Signals],
    eval: &[Signals],
    tau_log: &[f64],
    tau_dist: &[f64],
    ensemble: Ensemble,
) -> Result<Vec<EnsemblePrediction>> {
    if tau_log.is_empty() && tau_dist.is_empty() {
        return Err(Error::Empty("threshold banks"));
    }
    match ensemble {
        Ensemble::Weak => Ok(predict_signals(&fit(train, tau_log, tau_dist)?, eval)),
        Ensemble::Majority => {
            let matrix = build_label_matrix(eval, tau_log, tau_dist)?;
            Ok(eval
                .iter()
                .zip(&matrix.rows)
                .map(|(s, row)| {
                    if !s.has_negation() {
                        return EnsemblePrediction {
                            stance: fallback_stance(s),
                            posterior: None,
                            fallback: true,
                        };
                    }
                    EnsemblePrediction {
                        stance: majority_vote(row, fallback_stance(s)),
                        posterior: None,
                        fallback: false,
                    }
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<i8>>) -> LabelMatrix {
        let n = rows[0].len();
        LabelMatrix {
            columns: (0..n).map(|i| Threshold::new(i as f64, Family::Logit).unwrap()).collect(),
            rows,
        }
    }

    fn sig(lpos: f64, lneg: f64, k: f64, knp: Option<f64>) -> Signals {
        Signals {
            lpos,
            lneg,
            dist_p: k,
            dist_np: knp,
            cos_p: 0.0,
            cos_np: knp.map(|_| 0.0),
        }
    }

    #[test]
    fn reference_banks_give_ten_columns() {
        let signals = vec![sig(20.0, 0.0, 0.0, Some(5.0)), sig(0.0, 1.0, 0.3, Some(0.2))];
        let m = build_label_matrix(&signals, &REFERENCE_TAU_LOG, &REFERENCE_TAU_DIST).unwrap();
        assert_eq!(m.num_columns(), 10);
        assert!(m.rows[0].iter().all(|v| *v == 1));
        assert_eq!(m.rows[1], vec![0, 0, 0, 0, 0, -1, 0, 0, 0, 0]);
        assert_eq!(m.header()[0], "log:5");
        assert_eq!(m.header()[9], "dist:1.9");
    }

    #[test]
    fn increasing_bank_means_monotone_abstains() {
        let signals: Vec<Signals> = (0..50)
            .map(|i| sig((i as f64 * 0.37).sin() * 15.0, 0.0, 1.0, Some(1.0 + (i as f64).cos() * 2.0)))
            .collect();
        let m = build_label_matrix(&signals, &REFERENCE_TAU_LOG, &REFERENCE_TAU_DIST).unwrap();
        for row in &m.rows {
            for fam in [&row[..5], &row[5..]] {
                for w in fam.windows(2) {
                    assert!(w[0] != 0 || w[1] == 0, "{row:?}");
                }
            }
        }
    }

    #[test]
    fn majority_cases() {
        assert_eq!(majority_vote(&[1, 1, -1], Stance::Oppose), Stance::Support);
        assert_eq!(majority_vote(&[1, -1, 0, 0], Stance::Oppose), Stance::Oppose);
        assert_eq!(majority_vote(&[0, 0, 0], Stance::Support), Stance::Support);
        assert_eq!(majority_vote(&[0, 0, 0], Stance::Oppose), Stance::Oppose);
    }

    #[test]
    fn perfect_agreement_hits_the_ceiling() {
        let rows: Vec<Vec<i8>> = (0..40).map(|i| vec![if i % 3 == 0 { -1 } else { 1 }; 3]).collect();
        let p = estimate(&matrix(rows)).unwrap();
        assert_eq!(p.accuracies, vec![ACCURACY_CEIL; 3]);
        assert_eq!(p.propensities, vec![1.0; 3]);
        assert!(p.defaulted.is_empty());
    }

    #[test]
    fn estimate_needs_three_columns() {
        assert!(estimate(&matrix(vec![vec![1, 1]])).is_err());
    }

    #[test]
    fn column_without_overlap_defaults() {
        // column 2 never votes
        let rows: Vec<Vec<i8>> = (0..40).map(|i| vec![if i % 2 == 0 { 1 } else { -1 }, 1, 0, 1]).collect();
        let p = estimate(&matrix(rows)).unwrap();
        assert!(p.defaulted.contains(&2));
        assert_eq!(p.accuracies[2], DEFAULT_ACCURACY);
    }

    #[test]
    fn predict_cases() {
        let p = LabelModelParams {
            columns: vec![],
            accuracies: vec![0.99],
            propensities: vec![1.0],
            prior: 0.5,
            defaulted: vec![],
        };
        let (s, post) = predict(&p, &[1]);
        assert_eq!(s, Stance::Support);
        assert!((post - 0.99).abs() < 1e-12);
        let (s, post) = predict(&p, &[0]);
        assert_eq!((s, post), (Stance::Support, 0.5));

        let p = LabelModelParams {
            accuracies: vec![0.8, 0.8],
            propensities: vec![1.0, 1.0],
            ..p
        };
        let (s, post) = predict(&p, &[1, -1]);
        assert_eq!(s, Stance::Support);
        assert!((post - 0.5).abs() < 1e-15);
    }

    #[test]
    fn moments_are_symmetric_with_unit_diagonal() {
        let rows = vec![vec![1, -1, 0], vec![1, 1, 1], vec![-1, 0, 1], vec![0, 1, -1]];
        let mo = Moments::from_matrix(&matrix(rows));
        for i in 0..3 {
            assert_eq!(mo.get(i, i), Some(1.0));
            for j in 0..3 {
                assert_eq!(mo.get(i, j), mo.get(j, i));
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let signals = vec![sig(6.0, 0.0, 0.1, Some(0.5)), sig(0.0, 12.0, 0.3, None)];
        let m = build_label_matrix(&signals, &REFERENCE_TAU_LOG, &REFERENCE_TAU_DIST).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("log:5,log:5.5,log:8.5,log:11,log:13,dist:0.01"));
        assert_eq!(LabelMatrix::read_csv(&buf[..]).unwrap(), m);
        assert!(LabelMatrix::read_csv("log:1\n2\n".as_bytes()).is_err());
        assert!(LabelMatrix::read_csv("foo\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn pipeline_errors_and_fallbacks() {
        let train = vec![sig(1.0, 0.0, 0.1, Some(0.5)); 5];
        assert!(fit_predict_pipeline(&train, &train, &[], &[], Ensemble::Weak).is_err());
        let eval = vec![sig(0.0, 1.0, 0.1, None)];
        for e in [Ensemble::Weak, Ensemble::Majority] {
            let out = fit_predict_pipeline(&train, &eval, &[0.0, 0.5], &[0.0, 0.1], e).unwrap();
            assert_eq!(out[0].stance, Stance::Oppose);
            assert!(out[0].fallback);
        }
    }
}
