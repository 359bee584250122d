//! Shared word tokenizer used by both the negation engine and the encoder.
//!
//! Splitting happens on whitespace; leading and trailing punctuation is
//! detached one character per token, and a trailing `n't` is split from its
//! host word (`aren't` -> `are` + `n't`). Matching always happens on the
//! lowercase `norm` of a token, while `surface` keeps the original spelling
//! so rewritten sentences can be rendered with their casing intact.

/// A token with its original spelling and its lowercase matching form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    /// False when the token was glued to the previous one in the source text.
    pub space_before: bool,
}

impl Token {
    fn new(surface: &str, norm: String, space_before: bool) -> Self {
        Token {
            surface: surface.to_string(),
            norm,
            space_before,
        }
    }

    /// A host word whose surface form was shortened by a contraction
    /// (`ca` in `can't`, `wo` in `won't`).
    pub fn is_clipped_host(&self) -> bool {
        self.surface.to_lowercase() != self.norm
    }
}

/// Lowercased token sequence for `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|t| t.norm).collect()
}

/// Lowercases and maps the typographic apostrophe to an ASCII one.
pub fn normalize_word(word: &str) -> String {
    word.to_lowercase().replace('\u{2019}', "'")
}

/// Full tokenization keeping surface forms and spacing.
pub fn tokenize_spans(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_detachable(chars[start]) {
            start += 1;
        }
        while end > start && is_detachable(chars[end - 1]) {
            end -= 1;
        }

        let mut glued = false;
        for c in &chars[..start] {
            let s = c.to_string();
            out.push(Token::new(&s, normalize_word(&s), !glued));
            glued = true;
        }

        if start < end {
            let word: String = chars[start..end].iter().collect();
            push_word(&mut out, &word, !glued);
        }

        for c in &chars[end..] {
            let s = c.to_string();
            out.push(Token::new(&s, normalize_word(&s), false));
        }
    }
    out
}

/// Renders tokens back to text honoring `space_before`.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && t.space_before {
            out.push(' ');
        }
        out.push_str(&t.surface);
    }
    out
}

fn is_detachable(c: char) -> bool {
    // Apostrophes stay attached so contractions survive; hyphens and other
    // inner punctuation never reach here unless they sit at a word edge.
    !c.is_alphanumeric() && c != '\'' && c != '\u{2019}'
}

fn push_word(out: &mut Vec<Token>, word: &str, space_before: bool) {
    let norm = normalize_word(word);
    if norm.len() > 3 && norm.ends_with("n't") {
        let split_at = word
            .char_indices()
            .rev()
            .nth(2)
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (host, suffix) = word.split_at(split_at);
        let host_norm = match normalize_word(host).as_str() {
            "ca" => "can".to_string(),
            "wo" => "will".to_string(),
            "sha" => "shall".to_string(),
            other => other.to_string(),
        };
        out.push(Token::new(host, host_norm, space_before));
        out.push(Token::new(suffix, "n't".to_string(), false));
    } else {
        out.push(Token::new(word, norm, space_before));
    }
}
