//! Threshold decision procedures over [`Signals`].
//!
//! `class_log` compares the two logits, `class_dist` compares the distances
//! from the claim to the perspective and to its negation. Both abstain when
//! the gap between the two compared values is below `tau`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::encoder::Signals;
use crate::error::{Error, Result};
use crate::stance::Stance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "S")]
    Support,
    #[serde(rename = "O")]
    Oppose,
    #[serde(rename = "A")]
    Abstain,
}

impl Verdict {
    pub fn stance(self) -> Option<Stance> {
        match self {
            Verdict::Support => Some(Stance::Support),
            Verdict::Oppose => Some(Stance::Oppose),
            Verdict::Abstain => None,
        }
    }

    /// +1, -1 or 0.
    pub fn sign(self) -> i8 {
        self.stance().map_or(0, Stance::sign)
    }

    pub fn code(self) -> &'static str {
        match self {
            Verdict::Support => "S",
            Verdict::Oppose => "O",
            Verdict::Abstain => "A",
        }
    }
}

impl From<Stance> for Verdict {
    fn from(s: Stance) -> Self {
        match s {
            Stance::Support => Verdict::Support,
            Stance::Oppose => Verdict::Oppose,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Family {
    #[serde(rename = "log")]
    #[value(name = "log")]
    Logit,
    #[serde(rename = "dist")]
    #[value(name = "dist")]
    Distance,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Logit => "log",
            Family::Distance => "dist",
        }
    }

    /// The confidence gap this family thresholds, if defined for `s`.
    pub fn gap(self, s: &Signals) -> Option<f64> {
        match self {
            Family::Logit => Some(s.logit_gap()),
            Family::Distance => s.distance_gap(),
        }
    }

    pub fn decide(self, s: &Signals, tau: f64) -> StanceDecision {
        match self {
            Family::Logit => class_log(s, tau),
            Family::Distance => class_dist(s, tau),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub tau: f64,
    pub family: Family,
}

impl Threshold {
    pub fn new(tau: f64, family: Family) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {tau}")));
        }
        Ok(Threshold { tau, family })
    }

    pub fn decide(&self, s: &Signals) -> StanceDecision {
        self.family.decide(s, self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceDecision {
    pub verdict: Verdict,
    /// The gap that was compared against `tau`.
    pub confidence: f64,
    /// `class_dist` was asked to decide an input without a negated perspective.
    pub no_negation: bool,
}

/// Logit procedure: support when `lpos >= lneg`, oppose otherwise, abstain
/// when `|lpos - lneg| < tau`.
pub fn class_log(s: &Signals, tau: f64) -> StanceDecision {
    let gap = s.logit_gap();
    let verdict = if !(gap >= tau) {
        Verdict::Abstain
    } else if s.lpos >= s.lneg {
        Verdict::Support
    } else {
        Verdict::Oppose
    };
    StanceDecision {
        verdict,
        confidence: gap,
        no_negation: false,
    }
}

/// Distance procedure: support when the perspective is strictly closer to the
/// claim than its negation, oppose otherwise (ties oppose), abstain when the
/// distance gap is below `tau` or there is no negation.
pub fn class_dist(s: &Signals, tau: f64) -> StanceDecision {
    let Some(np) = s.dist_np else {
        return StanceDecision {
            verdict: Verdict::Abstain,
            confidence: 0.0,
            no_negation: true,
        };
    };
    let gap = (s.dist_p - np).abs();
    let verdict = if !(gap >= tau) {
        Verdict::Abstain
    } else if s.dist_p < np {
        Verdict::Support
    } else {
        Verdict::Oppose
    };
    StanceDecision {
        verdict,
        confidence: gap,
        no_negation: false,
    }
}

/// Stance on which both signal pairs agree, with strict inequalities.
pub fn signals_agree(s: &Signals) -> Option<Stance> {
    let np = s.dist_np?;
    if s.lpos > s.lneg && s.dist_p < np {
        Some(Stance::Support)
    } else if s.lpos < s.lneg && s.dist_p > np {
        Some(Stance::Oppose)
    } else {
        None
    }
}

/// Threshold that discards (about) `discard` of the given gaps.
///
/// With `k = ceil(discard * m)` and the gaps sorted ascending, returns the
/// `k`-th smallest gap, so that exactly the gaps strictly below it are
/// discarded. Ties can only lower the discarded count. `discard = 0`
/// returns 0; `discard = 1` returns a value above every gap.
pub fn calibrate_tau(gaps: &[f64], discard: f64) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::Empty("gap collection"));
    }
    if !(0.0..=1.0).contains(&discard) {
        return Err(Error::InvalidArgument(format!("discard fraction {discard} outside [0, 1]")));
    }
    if let Some(bad) = gaps.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::InvalidArgument(format!("gap {bad} is not a finite nonnegative value")));
    }
    if discard == 0.0 {
        return Ok(0.0);
    }
    let mut sorted = gaps.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    // guard against 0.3 * 10 = 3.0000000000000004
    let k = ((discard * m as f64) - 1e-9).ceil().max(0.0) as usize;
    if k >= m {
        let max = sorted[m - 1];
        return Ok(max + max.abs().max(1.0) * 1e-9);
    }
    Ok(sorted[k])
}

/// Fraction of gaps strictly below `tau`.
pub fn discarded_fraction(gaps: &[f64], tau: f64) -> f64 {
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.iter().filter(|g| **g < tau).count() as f64 / gaps.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn class_log_cases() {
        let d = class_log(&sig(5.0, 1.0, 0.0, None), 2.0);
        assert_eq!((d.verdict, d.confidence), (Verdict::Support, 4.0));
        let d = class_log(&sig(1.0, 1.5, 0.0, None), 1.0);
        assert_eq!((d.verdict, d.confidence), (Verdict::Abstain, 0.5));
        assert_eq!(class_log(&sig(1.0, 1.0, 0.0, None), 0.0).verdict, Verdict::Support);
        assert_eq!(class_log(&sig(1.0, 1.5, 0.0, None), 0.0).verdict, Verdict::Oppose);
    }

    #[test]
    fn class_dist_cases() {
        assert_eq!(class_dist(&sig(0.0, 0.0, 0.4, Some(0.4)), 0.0).verdict, Verdict::Oppose);
        let d = class_dist(&sig(0.0, 0.0, 0.2, Some(1.0)), 0.5);
        assert_eq!(d.verdict, Verdict::Support);
        assert!((d.confidence - 0.8).abs() < 1e-15);
        assert_eq!(class_dist(&sig(0.0, 0.0, 0.2, Some(0.3)), 0.5).verdict, Verdict::Abstain);

        let d = class_dist(&sig(3.0, 0.0, 0.2, None), 0.0);
        assert_eq!(d.verdict, Verdict::Abstain);
        assert!(d.no_negation);
    }

    #[test]
    fn agreement_cases() {
        assert_eq!(signals_agree(&sig(3.0, 1.0, 0.1, Some(0.9))), Some(Stance::Support));
        assert_eq!(signals_agree(&sig(1.0, 3.0, 0.9, Some(0.1))), Some(Stance::Oppose));
        assert_eq!(signals_agree(&sig(3.0, 1.0, 0.9, Some(0.1))), None);
        assert_eq!(signals_agree(&sig(2.0, 2.0, 0.1, Some(0.9))), None);
        assert_eq!(signals_agree(&sig(3.0, 1.0, 0.5, Some(0.5))), None);
        assert_eq!(signals_agree(&sig(3.0, 1.0, 0.1, None)), None);
    }

    #[test]
    fn calibrate_examples() {
        let gaps = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(calibrate_tau(&gaps, 0.5).unwrap(), 3.0);
        assert_eq!(discarded_fraction(&gaps, 3.0), 0.5);
        assert_eq!(calibrate_tau(&gaps, 0.0).unwrap(), 0.0);
        let all = calibrate_tau(&gaps, 1.0).unwrap();
        assert!(all > 4.0);
        assert_eq!(discarded_fraction(&gaps, all), 1.0);
        // ties: discarding half of four equal gaps is impossible, keep them all
        assert_eq!(discarded_fraction(&[1.0; 4], calibrate_tau(&[1.0; 4], 0.5).unwrap()), 0.0);
    }

    #[test]
    fn calibrate_errors() {
        assert!(matches!(calibrate_tau(&[], 0.5), Err(Error::Empty(_))));
        assert!(calibrate_tau(&[1.0], 1.5).is_err());
        assert!(calibrate_tau(&[f64::NAN], 0.5).is_err());
        assert!(Threshold::new(-0.1, Family::Logit).is_err());
    }

    #[test]
    fn decisions_serialize_as_codes() {
        assert_eq!(serde_json::to_string(&Verdict::Abstain).unwrap(), "\"A\"");
        assert_eq!(serde_json::to_string(&Family::Distance).unwrap(), "\"dist\"");
    }
}
