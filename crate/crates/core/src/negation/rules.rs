//! Rule file parsing and single-template application.
//!
//! A rule line reads `premise => rewrite`. The premise is `[X] anchor... [Y]`
//! where each anchor element is a literal, an alternation `a/b/c`, or the verb
//! wildcard `<VERB>`. Anchor elements are numbered from 1 and can be referred
//! to in the rewrite with `$k` (copies the matched token) or `a/b@k` (picks
//! the alternative with the same position as the one matched by group `k`).

use serde::Serialize;

use super::lexicon::VerbLexicon;
use crate::error::{Error, Result};
use crate::tokenizer::{normalize_word, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorElement {
    /// One or more accepted lowercase spellings. A plain literal has one.
    Choice(Vec<String>),
    Verb,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteElement {
    Literal(String),
    BackRef(usize),
    Paired { group: usize, options: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    /// Elements between `[X]` and `[Y]`.
    pub anchor: Vec<AnchorElement>,
    /// Elements between `[X]` and `[Y]` on the rewrite side; may be empty.
    pub rewrite: Vec<RewriteElement>,
    /// 0-based position among the rules of the source file.
    pub index: usize,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NegationResult {
    pub negated_text: String,
    pub rule_index: usize,
    /// Half-open token interval covered by the anchor.
    pub matched_span: (usize, usize),
}

impl Template {
    /// Parses one rule. `line` is 1-based and only used for error messages.
    pub fn parse(text: &str, index: usize, line: usize) -> Result<Template> {
        let err = |message: String| Error::RuleParse { line, message };
        let text = text.replace('\u{21D2}', "=>");
        let mut sides = text.split("=>");
        let (premise, rewrite) = match (sides.next(), sides.next(), sides.next()) {
            (Some(p), Some(r), None) => (p.trim(), r.trim()),
            (_, None, _) => return Err(err("missing `=>`".into())),
            _ => return Err(err("more than one `=>`".into())),
        };
        if premise.is_empty() {
            return Err(err("empty premise".into()));
        }
        if rewrite.is_empty() {
            return Err(err("empty rewrite".into()));
        }

        let premise: Vec<&str> = premise.split_whitespace().collect();
        let inner = strip_variables(&premise).map_err(|m| err(format!("premise: {m}")))?;
        if inner.is_empty() {
            return Err(err("premise needs at least one anchor element".into()));
        }
        let mut anchor = Vec::with_capacity(inner.len());
        for el in inner {
            if el == "<VERB>" {
                anchor.push(AnchorElement::Verb);
            } else if el.starts_with('$') || el.contains('@') || el.starts_with('[') {
                return Err(err(format!("`{el}` is not allowed in a premise")));
            } else {
                let options: Vec<String> = el.split('/').map(normalize_word).collect();
                if options.iter().any(String::is_empty) {
                    return Err(err(format!("empty alternative in `{el}`")));
                }
                anchor.push(AnchorElement::Choice(options));
            }
        }

        let rewrite_els: Vec<&str> = rewrite.split_whitespace().collect();
        let inner = strip_variables(&rewrite_els).map_err(|m| err(format!("rewrite: {m}")))?;
        let mut out = Vec::with_capacity(inner.len());
        for el in inner {
            out.push(parse_rewrite_element(el, &anchor).map_err(err)?);
        }

        Ok(Template {
            anchor,
            rewrite: out,
            index,
            source: text.trim().to_string(),
        })
    }

    /// Leftmost anchor occurrence in `tokens`, as a half-open interval.
    pub fn find(&self, tokens: &[Token], lexicon: &VerbLexicon) -> Option<(usize, usize)> {
        let n = self.anchor.len();
        if tokens.len() < n {
            return None;
        }
        (0..=tokens.len() - n)
            .find(|&start| {
                self.anchor
                    .iter()
                    .zip(&tokens[start..start + n])
                    .all(|(el, tok)| el.matches(&tok.norm, lexicon))
            })
            .map(|start| (start, start + n))
    }

    /// Applies the template to an already tokenized sentence.
    pub fn apply(&self, tokens: &[Token], lexicon: &VerbLexicon) -> Option<NegationResult> {
        let (start, end) = self.find(tokens, lexicon)?;
        let matched = &tokens[start..end];

        // (token, index of the source token it was copied from)
        let mut out: Vec<(Token, Option<usize>)> = Vec::with_capacity(tokens.len() + 2);
        out.extend(tokens[..start].iter().cloned().enumerate().map(|(i, t)| (t, Some(i))));
        for el in &self.rewrite {
            match el {
                RewriteElement::Literal(word) => out.push((literal(word), None)),
                RewriteElement::BackRef(group) => {
                    let pos = start + group - 1;
                    out.push((tokens[pos].clone(), Some(pos)));
                }
                RewriteElement::Paired { group, options } => {
                    let tok = &matched[group - 1];
                    let choice = match &self.anchor[group - 1] {
                        AnchorElement::Choice(alts) => alts.iter().position(|a| *a == tok.norm),
                        AnchorElement::Verb => None,
                    };
                    let word = &options[choice.unwrap_or(0)];
                    out.push((literal(word), None));
                }
            }
        }
        out.extend(tokens[end..].iter().cloned().enumerate().map(|(i, t)| (t, Some(end + i))));

        repair_clipped_hosts(&mut out);
        if start == 0 && starts_upper(&tokens[0].surface) {
            if let Some((first, src)) = out.first_mut() {
                if *src != Some(0) {
                    first.surface = capitalize(&first.surface);
                }
            }
        }

        let rendered: Vec<Token> = out.into_iter().map(|(t, _)| t).collect();
        let negated_text = crate::tokenizer::detokenize(&rendered);
        let original = crate::tokenizer::detokenize(tokens);
        if negated_text == original {
            return None;
        }
        Some(NegationResult {
            negated_text,
            rule_index: self.index,
            matched_span: (start, end),
        })
    }

    /// True for the `[X] not/n't [Y] => [X] [Y]` shape: the anchor accepts
    /// `not` and the rewrite drops it without adding anything.
    pub fn is_not_deletion(&self) -> bool {
        self.rewrite.is_empty()
            && self.anchor.len() == 1
            && matches!(&self.anchor[0], AnchorElement::Choice(o) if o.iter().any(|w| w == "not"))
    }

    /// True when the rewrite keeps the anchor and adds a bare `not`, so that
    /// deleting the first `not` restores the input.
    pub fn inserts_not(&self) -> bool {
        let literals: Vec<&str> = self
            .rewrite
            .iter()
            .filter_map(|e| match e {
                RewriteElement::Literal(w) => Some(w.as_str()),
                _ => None,
            })
            .collect();
        let backrefs: Vec<usize> = self
            .rewrite
            .iter()
            .filter_map(|e| match e {
                RewriteElement::BackRef(g) => Some(*g),
                _ => None,
            })
            .collect();
        literals == ["not"] && backrefs == (1..=self.anchor.len()).collect::<Vec<_>>()
    }
}

impl AnchorElement {
    fn matches(&self, norm: &str, lexicon: &VerbLexicon) -> bool {
        match self {
            AnchorElement::Choice(options) => options.iter().any(|o| o == norm),
            AnchorElement::Verb => lexicon.is_verb(norm),
        }
    }
}

fn strip_variables<'a>(els: &[&'a str]) -> std::result::Result<Vec<&'a str>, String> {
    let xs = els.iter().filter(|e| **e == "[X]").count();
    let ys = els.iter().filter(|e| **e == "[Y]").count();
    if xs != 1 || ys != 1 {
        return Err(format!("expected exactly one [X] and one [Y], found {xs} and {ys}"));
    }
    if els.first() != Some(&"[X]") {
        return Err("[X] must come first".into());
    }
    if els.last() != Some(&"[Y]") {
        return Err("[Y] must come last".into());
    }
    let inner = els[1..els.len() - 1].to_vec();
    if let Some(bad) = inner.iter().find(|e| e.starts_with('[') && e.ends_with(']')) {
        return Err(format!("unknown variable {bad}"));
    }
    Ok(inner)
}

fn parse_rewrite_element(el: &str, anchor: &[AnchorElement]) -> std::result::Result<RewriteElement, String> {
    let group_ok = |g: usize| -> std::result::Result<usize, String> {
        if g == 0 || g > anchor.len() {
            Err(format!("back-reference ${g} does not resolve (premise has {} group(s))", anchor.len()))
        } else {
            Ok(g)
        }
    };
    if let Some(num) = el.strip_prefix('$') {
        let g: usize = num.parse().map_err(|_| format!("bad back-reference `{el}`"))?;
        return Ok(RewriteElement::BackRef(group_ok(g)?));
    }
    if let Some((alts, num)) = el.rsplit_once('@') {
        let g: usize = num.parse().map_err(|_| format!("bad paired reference `{el}`"))?;
        let g = group_ok(g)?;
        let options: Vec<String> = alts.split('/').map(|s| s.replace('\u{2019}', "'")).collect();
        match &anchor[g - 1] {
            AnchorElement::Choice(premise) if premise.len() == options.len() => {}
            _ => {
                return Err(format!(
                    "`{el}` needs group {g} to be an alternation with {} options",
                    options.len()
                ))
            }
        }
        return Ok(RewriteElement::Paired { group: g, options });
    }
    if el.contains('/') {
        return Err(format!("alternation `{el}` in a rewrite needs a group selector (`@k`)"));
    }
    if el == "<VERB>" {
        return Err("<VERB> is only allowed in a premise; use $k".into());
    }
    Ok(RewriteElement::Literal(el.replace('\u{2019}', "'")))
}

fn literal(word: &str) -> Token {
    Token {
        surface: word.to_string(),
        norm: normalize_word(word),
        space_before: true,
    }
}

/// A host like `ca` in `can't` is rendered in full once its `n't` is gone.
fn repair_clipped_hosts(out: &mut [(Token, Option<usize>)]) {
    for i in 0..out.len() {
        let Some(src) = out[i].1 else { continue };
        if !out[i].0.is_clipped_host() {
            continue;
        }
        let next_src = out.get(i + 1).and_then(|(_, s)| *s);
        if next_src != Some(src + 1) {
            let tok = &mut out[i].0;
            tok.surface = if starts_upper(&tok.surface) {
                capitalize(&tok.norm)
            } else {
                tok.norm.clone()
            };
        }
    }
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
