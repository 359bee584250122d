use std::collections::HashSet;

const BUNDLED_VERBS: &str = include_str!("../../templates/verbs.txt");

/// Lowercase verb base forms backing the `<VERB>` wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerbLexicon {
    words: HashSet<String>,
}

impl VerbLexicon {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .collect();
        VerbLexicon { words }
    }

    pub fn bundled() -> Self {
        VerbLexicon::new(BUNDLED_VERBS.lines())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// Lexicon lookup extended with -s/-es/-ies, -ed/-ied and -ing inflections.
    pub fn is_verb(&self, word: &str) -> bool {
        if self.contains(word) {
            return true;
        }
        if word.len() <= 3 {
            return false;
        }
        candidate_stems(word).iter().any(|s| self.contains(s))
    }
}

fn candidate_stems(word: &str) -> Vec<String> {
    let mut stems = Vec::new();
    if let Some(s) = word.strip_suffix("ies") {
        stems.push(format!("{s}y"));
    }
    if let Some(s) = word.strip_suffix("es") {
        stems.push(s.to_string());
    }
    if let Some(s) = word.strip_suffix('s') {
        if !s.ends_with('s') {
            stems.push(s.to_string());
        }
    }
    if let Some(s) = word.strip_suffix("ied") {
        stems.push(format!("{s}y"));
    }
    if let Some(s) = word.strip_suffix("ed") {
        push_with_variants(&mut stems, s);
    }
    if let Some(s) = word.strip_suffix("ing") {
        push_with_variants(&mut stems, s);
    }
    stems
}

// "us" + e -> "use", "stopp" -> "stop"
fn push_with_variants(stems: &mut Vec<String>, s: &str) {
    if s.is_empty() {
        return;
    }
    stems.push(s.to_string());
    stems.push(format!("{s}e"));
    let b = s.as_bytes();
    if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
        stems.push(s[..s.len() - 1].to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_size() {
        let lex = VerbLexicon::bundled();
        assert!(lex.len() > 900, "{}", lex.len());
    }

    #[test]
    fn inflections() {
        let lex = VerbLexicon::bundled();
        for w in ["ban", "bans", "banned", "banning", "used", "using", "carries", "carried", "taxes", "watches"] {
            assert!(lex.is_verb(w), "{w}");
        }
        for w in ["school", "the", "people", "is", "glass"] {
            assert!(!lex.is_verb(w), "{w}");
        }
    }
}
