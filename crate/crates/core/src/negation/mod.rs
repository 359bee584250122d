//! Template-based perspective negation.
//!
//! A [`RuleSet`] is an ordered list of [`Template`]s. [`RuleSet::negate`]
//! tries them in order and keeps only the first rewrite. The two baseline
//! negators used for comparison live in [`baselines`].

pub mod baselines;
mod lexicon;
mod rules;

use serde::{Deserialize, Serialize};

pub use self::baselines::{negate_appsuff, negate_delnot, AppSuffResult, APPSUFF_SUFFIX};
pub use self::lexicon::VerbLexicon;
pub use self::rules::{AnchorElement, NegationResult, RewriteElement, Template};

use crate::error::Result;
use crate::tokenizer::tokenize_spans;

/// The fourteen bundled rules (`templates/tribrid14.rules`).
pub const BUNDLED_RULES: &str = include_str!("../../templates/tribrid14.rules");

#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Template>,
    lexicon: VerbLexicon,
}

impl RuleSet {
    /// Parses a rule file. One template per non-blank, non-`#` line; the first
    /// not-deletion rule is moved to the front, all others keep file order.
    pub fn parse(source: &str, lexicon: VerbLexicon) -> Result<RuleSet> {
        let mut rules = Vec::new();
        for (lineno, line) in source.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            rules.push(Template::parse(trimmed, rules.len(), lineno + 1)?);
        }
        if let Some(pos) = rules.iter().position(Template::is_not_deletion) {
            let not_rule = rules.remove(pos);
            rules.insert(0, not_rule);
        }
        Ok(RuleSet { rules, lexicon })
    }

    /// The bundled rules with the bundled verb lexicon.
    pub fn bundled() -> RuleSet {
        RuleSet::parse(BUNDLED_RULES, VerbLexicon::bundled()).expect("bundled rule file parses")
    }

    pub fn from_file(path: impl AsRef<std::path::Path>, lexicon: VerbLexicon) -> Result<RuleSet> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        RuleSet::parse(&source, lexicon)
    }

    /// Rules in application order.
    pub fn rules(&self) -> &[Template] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn lexicon(&self) -> &VerbLexicon {
        &self.lexicon
    }

    /// Appends a rule at the end of the application order.
    pub fn push(&mut self, mut rule: Template) {
        rule.index = self.rules.len();
        self.rules.push(rule);
    }

    /// Rewrites `sentence` with the first rule whose anchor matches.
    pub fn negate(&self, sentence: &str) -> Option<NegationResult> {
        let tokens = tokenize_spans(sentence);
        if tokens.is_empty() {
            return None;
        }
        self.rules
            .iter()
            .find_map(|rule| rule.apply(&tokens, &self.lexicon))
    }

    pub fn apply_template(&self, rule: &Template, sentence: &str) -> Option<NegationResult> {
        rule.apply(&tokenize_spans(sentence), &self.lexicon)
    }

    pub fn coverage<S: AsRef<str>>(&self, corpus: &[S]) -> CoverageReport {
        let mut per_rule = vec![0usize; self.rules.len()];
        let covered = corpus
            .iter()
            .filter_map(|s| self.negate(s.as_ref()))
            .inspect(|r| per_rule[r.rule_index] += 1)
            .count();
        let mut report = CoverageReport::new(covered, corpus.len());
        report.per_rule = per_rule;
        report
    }
}

/// Fraction of a corpus a negator can rewrite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub total: usize,
    pub rate: f64,
    /// Set when the corpus was empty; `rate` is then 0.
    pub empty_corpus: bool,
    /// Hits per rule, indexed by the rule's position in its source file.
    /// Empty for the baseline negators.
    pub per_rule: Vec<usize>,
}

impl CoverageReport {
    pub fn new(covered: usize, total: usize) -> Self {
        let empty_corpus = total == 0;
        if empty_corpus {
            log::warn!("coverage requested on an empty corpus");
        }
        CoverageReport {
            covered,
            total,
            rate: if empty_corpus { 0.0 } else { covered as f64 / total as f64 },
            empty_corpus,
            per_rule: Vec::new(),
        }
    }
}

impl std::fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ({}/{})", self.rate, self.covered, self.total)
    }
}

/// The three negation strategies compared by the flip protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Negator {
    Templates,
    #[value(name = "appsuff")]
    AppSuff,
    #[value(name = "delnot")]
    DelNot,
}

impl Negator {
    pub const ALL: [Negator; 3] = [Negator::AppSuff, Negator::DelNot, Negator::Templates];

    pub fn name(self) -> &'static str {
        match self {
            Negator::Templates => "templates",
            Negator::AppSuff => "appsuff",
            Negator::DelNot => "delnot",
        }
    }

    pub fn apply(self, rules: &RuleSet, sentence: &str) -> Option<String> {
        match self {
            Negator::Templates => rules.negate(sentence).map(|r| r.negated_text),
            Negator::AppSuff => Some(negate_appsuff(sentence).text),
            Negator::DelNot => negate_delnot(sentence),
        }
    }

    pub fn coverage<S: AsRef<str>>(self, rules: &RuleSet, corpus: &[S]) -> CoverageReport {
        if self == Negator::Templates {
            return rules.coverage(corpus);
        }
        let covered = corpus
            .iter()
            .filter(|s| self.apply(rules, s.as_ref()).is_some())
            .count();
        CoverageReport::new(covered, corpus.len())
    }
}
