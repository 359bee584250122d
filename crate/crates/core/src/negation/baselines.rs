//! Literature baselines: suffix appending and first-`not` deletion.

use serde::Serialize;

use crate::tokenizer::{detokenize, tokenize_spans};

pub const APPSUFF_SUFFIX: &str = " but this is not true";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppSuffResult {
    pub text: String,
    /// The input was empty or blank, so the output is just the suffix.
    pub degenerate: bool,
}

pub fn negate_appsuff(sentence: &str) -> AppSuffResult {
    AppSuffResult {
        text: format!("{sentence}{APPSUFF_SUFFIX}"),
        degenerate: sentence.trim().is_empty(),
    }
}

/// Drops the first whole-token `not` or contracted `n't`.
pub fn negate_delnot(sentence: &str) -> Option<String> {
    let tokens = tokenize_spans(sentence);
    let pos = tokens.iter().position(|t| t.norm == "not" || t.norm == "n't")?;
    let mut kept = tokens.clone();
    kept.remove(pos);
    if pos > 0 && tokens[pos].norm == "n't" && kept[pos - 1].is_clipped_host() {
        let host = &mut kept[pos - 1];
        let upper = host.surface.chars().next().is_some_and(char::is_uppercase);
        host.surface = if upper {
            let mut c = host.norm.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        } else {
            host.norm.clone()
        };
    }
    if pos == 0 {
        if let Some(first) = kept.first_mut() {
            if tokens[0].surface.chars().next().is_some_and(char::is_uppercase) {
                let mut c = first.surface.chars();
                first.surface = c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default();
            }
        }
    }
    Some(detokenize(&kept))
}
