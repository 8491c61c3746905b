//! Sensitive-entity taxonomy, the ordered default regex catalog, and the
//! conversion of IOB label sequences into concrete entity spans.

use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text_pipeline::{clean_tokens, label_tokens, CleanToken, IobLabel};

/// The closed set of sensitive-entity kinds.
///
/// PASSPORT is part of the taxonomy but ships without a default pattern;
/// callers may register one through a catalog override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    Email,
    Phone,
    Ssn,
    Money,
    CreditCard,
    Url,
    Passport,
}

impl EntityKind {
    pub const ALL: [EntityKind; 7] = [
        EntityKind::Email,
        EntityKind::Phone,
        EntityKind::Ssn,
        EntityKind::Money,
        EntityKind::CreditCard,
        EntityKind::Url,
        EntityKind::Passport,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EntityKind::Email => "EMAIL",
            EntityKind::Phone => "PHONE",
            EntityKind::Ssn => "SSN",
            EntityKind::Money => "MONEY",
            EntityKind::CreditCard => "CREDIT_CARD",
            EntityKind::Url => "URL",
            EntityKind::Passport => "PASSPORT",
        }
    }

    pub fn parse(s: &str) -> Result<EntityKind> {
        EntityKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown entity kind {s:?}")))
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One catalog entry in source form: kind, regex source, and its position in
/// the evaluation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityPattern {
    pub kind: EntityKind,
    pub pattern: String,
    pub order: usize,
}

/// A compiled catalog entry. The regex is anchored to the full token.
#[derive(Debug, Clone)]
pub struct CompiledPattern {
    kind: EntityKind,
    source: String,
    regex: Regex,
}

impl CompiledPattern {
    fn compile(kind: EntityKind, source: &str) -> Result<CompiledPattern> {
        let anchored = format!("\\A(?:{source})\\z");
        let regex = Regex::new(&anchored).map_err(|e| Error::InvalidPattern {
            kind: kind.as_str().to_string(),
            source: e,
        })?;
        Ok(CompiledPattern {
            kind,
            source: source.to_string(),
            regex,
        })
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Full-token match: the whole token must satisfy the pattern.
    pub fn matches(&self, token: &str) -> bool {
        self.regex.is_match(token)
    }
}

/// An ordered, immutable set of entity patterns. First match wins.
#[derive(Debug, Clone)]
pub struct Catalog {
    patterns: Vec<CompiledPattern>,
}

/// Default evaluation order. Structurally distinctive patterns come first;
/// CREDIT_CARD is deliberately placed before PHONE so that a bare 13-16
/// digit run resolves as a card number.
const DEFAULT_PATTERNS: [(EntityKind, &str); 6] = [
    (EntityKind::Ssn, r"\d{3}-\d{2}-\d{4}"),
    (EntityKind::Money, r"\$\d{1,3}(?:,\d{3})*(?:\.\d{2})?"),
    (EntityKind::Url, r"https?://[^\s]+"),
    (EntityKind::Email, r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}"),
    (EntityKind::CreditCard, r"\d{13,16}"),
    (EntityKind::Phone, r"\+\d{6,15}"),
];

impl Catalog {
    /// The built-in catalog covering EMAIL, PHONE, SSN, MONEY, CREDIT_CARD,
    /// and URL.
    pub fn default_catalog() -> Catalog {
        Catalog::new(
            DEFAULT_PATTERNS
                .iter()
                .map(|(k, p)| (*k, p.to_string()))
                .collect(),
        )
        .expect("built-in patterns compile")
    }

    /// Builds a catalog from (kind, regex source) pairs in evaluation order.
    pub fn new(entries: Vec<(EntityKind, String)>) -> Result<Catalog> {
        let patterns = entries
            .into_iter()
            .map(|(kind, src)| CompiledPattern::compile(kind, &src))
            .collect::<Result<Vec<_>>>()?;
        Ok(Catalog { patterns })
    }

    /// Loads a catalog override file: one `KIND<TAB>regex` entry per line,
    /// evaluation order = line order. Blank lines and `#` comments are
    /// skipped.
    pub fn from_override_file(path: &Path) -> Result<Catalog> {
        let contents = std::fs::read_to_string(path)?;
        let mut entries = Vec::new();
        for (lineno, line) in contents.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, pattern) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "catalog line {}: expected KIND<TAB>regex",
                    lineno + 1
                ))
            })?;
            entries.push((EntityKind::parse(kind)?, pattern.to_string()));
        }
        Catalog::new(entries)
    }

    pub fn patterns(&self) -> &[CompiledPattern] {
        &self.patterns
    }

    /// Source-form entries, orders assigned 0..n in evaluation order.
    pub fn entries(&self) -> Vec<EntityPattern> {
        self.patterns
            .iter()
            .enumerate()
            .map(|(order, p)| EntityPattern {
                kind: p.kind,
                pattern: p.source.clone(),
                order,
            })
            .collect()
    }

    /// SHA-256 over the ordered `KIND\tpattern\n` lines, as lowercase hex.
    /// Recorded in the store manifest to detect catalog drift.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.patterns {
            hasher.update(p.kind.as_str().as_bytes());
            hasher.update(b"\t");
            hasher.update(p.source.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// The composite detection pipeline: tokenize, clean, label, and emit
    /// spans. Deterministic; pure function of the input text.
    pub fn detect(&self, text: &str) -> Vec<EntitySpan> {
        let cleaned = clean_tokens(text);
        let kept: Vec<&CleanToken> = cleaned.iter().filter(|t| !t.is_dropped()).collect();
        let words: Vec<&str> = kept.iter().map(|t| t.cleaned.as_str()).collect();
        let labels = label_tokens(&words, self);
        spans_from_labels_ref(&kept, &labels)
            .expect("labels produced by label_tokens are consistent")
    }
}

/// A pluggable detector. The regex [`Catalog`] is the default
/// implementation; a trained sequence tagger can satisfy the same contract.
pub trait Detector {
    fn detect(&self, text: &str) -> Vec<EntitySpan>;
}

impl Detector for Catalog {
    fn detect(&self, text: &str) -> Vec<EntitySpan> {
        Catalog::detect(self, text)
    }
}

/// One detected sensitive value.
///
/// `value` is the cleaned token string; `char_start`/`char_end` delimit the
/// cleaned region in the source text (char offsets, end exclusive).
/// `token_index` is the position within the labeled (non-dropped) token
/// sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub kind: EntityKind,
    pub value: String,
    pub token_index: usize,
    pub char_start: usize,
    pub char_end: usize,
}

/// Converts an IOB label sequence into entity spans.
///
/// Emits one span per labeled token: each token inside a B,I,I run matched
/// the full pattern on its own and is an independent value.
pub fn spans_from_labels(tokens: &[CleanToken], labels: &[IobLabel]) -> Result<Vec<EntitySpan>> {
    let refs: Vec<&CleanToken> = tokens.iter().collect();
    spans_from_labels_ref(&refs, labels)
}

fn spans_from_labels_ref(tokens: &[&CleanToken], labels: &[IobLabel]) -> Result<Vec<EntitySpan>> {
    if tokens.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "token/label length mismatch: {} vs {}",
            tokens.len(),
            labels.len()
        )));
    }
    crate::text_pipeline::validate_labels(labels)?;

    let mut spans = Vec::new();
    for (i, (token, label)) in tokens.iter().zip(labels.iter()).enumerate() {
        if let Some(kind) = label.kind() {
            spans.push(EntitySpan {
                kind,
                value: token.cleaned.clone(),
                token_index: i,
                char_start: token.clean_start(),
                char_end: token.clean_end(),
            });
        }
    }
    Ok(spans)
}
