//! Whitespace tokenization, edge-punctuation cleaning, and IOB token labeling.
//!
//! Offsets are everywhere expressed in Unicode scalar values (`char` counts
//! into the source string), never bytes, so downstream redaction can splice
//! text without worrying about UTF-8 boundaries.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;

use crate::entity_catalog::{Catalog, EntityKind};
use crate::error::{Error, Result};

/// A whitespace-delimited token with its position in the source text.
///
/// `start`/`end` are 0-based char offsets; `end` is exclusive. The token text
/// never contains whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// A token after edge-punctuation removal.
///
/// The strip counts record how many chars were removed from each side so
/// that the cleaned text can be mapped back to source offsets exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanToken {
    pub original: Token,
    pub cleaned: String,
    pub leading_stripped: usize,
    pub trailing_stripped: usize,
}

impl CleanToken {
    /// A token that cleaned to the empty string carries no label and is
    /// skipped by the labeling stage, but is retained for offset bookkeeping.
    pub fn is_dropped(&self) -> bool {
        self.cleaned.is_empty()
    }

    /// Char offset of the cleaned region's first char in the source.
    pub fn clean_start(&self) -> usize {
        self.original.start + self.leading_stripped
    }

    /// Char offset one past the cleaned region's last char in the source.
    pub fn clean_end(&self) -> usize {
        self.original.end - self.trailing_stripped
    }
}

/// One IOB label: outside, or the beginning/inside of an entity run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IobLabel {
    Outside,
    Begin(EntityKind),
    Inside(EntityKind),
}

impl IobLabel {
    pub fn kind(&self) -> Option<EntityKind> {
        match self {
            IobLabel::Outside => None,
            IobLabel::Begin(k) | IobLabel::Inside(k) => Some(*k),
        }
    }

    pub fn is_labeled(&self) -> bool {
        !matches!(self, IobLabel::Outside)
    }
}

impl fmt::Display for IobLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IobLabel::Outside => write!(f, "O"),
            IobLabel::Begin(k) => write!(f, "B-{}", k.as_str()),
            IobLabel::Inside(k) => write!(f, "I-{}", k.as_str()),
        }
    }
}

/// Splits text on runs of whitespace, recording char offsets.
///
/// Empty input yields an empty list. Concatenating the returned tokens with
/// single spaces loses only the original whitespace variation.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;

    for (pos, ch) in text.chars().enumerate() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token {
                    text: std::mem::take(&mut current),
                    start,
                    end: pos,
                });
            }
        } else {
            if current.is_empty() {
                start = pos;
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        let end = start + current.chars().count();
        tokens.push(Token {
            text: current,
            start,
            end,
        });
    }
    tokens
}

static UNICODE_PUNCT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\A\p{P}\z").expect("punctuation class compiles"));

/// True for chars in the Unicode punctuation categories (P*).
///
/// Currency and math symbols (S*) are excluded, so `$` survives cleaning and
/// the MONEY pattern can still match.
pub fn is_edge_punct(c: char) -> bool {
    if c.is_ascii() {
        matches!(
            c,
            '!' | '"'
                | '#'
                | '%'
                | '&'
                | '\''
                | '('
                | ')'
                | '*'
                | ','
                | '-'
                | '.'
                | '/'
                | ':'
                | ';'
                | '?'
                | '@'
                | '['
                | '\\'
                | ']'
                | '_'
                | '{'
                | '}'
        )
    } else {
        UNICODE_PUNCT.is_match(c.encode_utf8(&mut [0u8; 4]))
    }
}

/// Strips punctuation from both edges of a token until a non-punctuation
/// char is reached. Interior chars are never touched, so values like
/// `a@b.com`, `10,500`, and `123-45-6789` survive intact.
pub fn clean_token(token: Token) -> CleanToken {
    let chars: Vec<char> = token.text.chars().collect();
    let mut lead = 0usize;
    while lead < chars.len() && is_edge_punct(chars[lead]) {
        lead += 1;
    }
    let mut trail = 0usize;
    while lead + trail < chars.len() && is_edge_punct(chars[chars.len() - 1 - trail]) {
        trail += 1;
    }
    let cleaned: String = chars[lead..chars.len() - trail].iter().collect();
    CleanToken {
        original: token,
        cleaned,
        leading_stripped: lead,
        trailing_stripped: trail,
    }
}

/// Tokenizes and cleans in one pass. Dropped (all-punctuation) tokens are
/// retained and flagged.
pub fn clean_tokens(text: &str) -> Vec<CleanToken> {
    tokenize(text).into_iter().map(clean_token).collect()
}

/// Labels each token with the first catalog pattern it fully matches.
///
/// Labels default to O. A match emits B-kind when the running active entity
/// differs from the matched kind, I-kind otherwise; a non-matching token
/// resets the active entity. Adjacent same-kind matches therefore continue a
/// run even though each token matched the full pattern on its own.
pub fn label_tokens<S: AsRef<str>>(tokens: &[S], catalog: &Catalog) -> Vec<IobLabel> {
    let mut labels = vec![IobLabel::Outside; tokens.len()];
    let mut active: Option<EntityKind> = None;

    for (i, token) in tokens.iter().enumerate() {
        let mut found = false;
        for pattern in catalog.patterns() {
            if pattern.matches(token.as_ref()) {
                if active != Some(pattern.kind()) {
                    labels[i] = IobLabel::Begin(pattern.kind());
                    active = Some(pattern.kind());
                } else {
                    labels[i] = IobLabel::Inside(pattern.kind());
                }
                found = true;
                break;
            }
        }
        if !found {
            active = None;
        }
    }
    labels
}

/// Checks the I-after-reset soundness invariant: every I label is
/// immediately preceded by a B or I of the same kind.
pub fn validate_labels(labels: &[IobLabel]) -> Result<()> {
    for (i, label) in labels.iter().enumerate() {
        if let IobLabel::Inside(kind) = label {
            let prev = if i == 0 { None } else { labels[i - 1].kind() };
            match (i, prev) {
                (0, _) => {
                    return Err(Error::LabelSequence(format!(
                        "I-{} at start of sequence",
                        kind.as_str()
                    )))
                }
                (_, Some(p)) if p == *kind => {}
                _ => {
                    return Err(Error::LabelSequence(format!(
                        "I-{} at position {i} without preceding B/I of the same kind",
                        kind.as_str()
                    )))
                }
            }
        }
    }
    Ok(())
}
