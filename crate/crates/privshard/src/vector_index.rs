//! TF-IDF sparse vectors over redacted text and cosine similarity.
//!
//! TF is term count over total token count for the document; IDF is the
//! smoothed `ln((1+N)/(1+df)) + 1`, so ubiquitous terms keep a non-zero
//! weight and an unseen df can never divide by zero. The formula tag is
//! recorded in the store manifest so persisted vectors stay reproducible.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};
use crate::text_pipeline::clean_tokens;

/// Manifest tag for the IDF formula in effect.
pub const IDF_FORMULA: &str = "ln((1+N)/(1+df))+1";

/// Redaction placeholders after edge cleaning look like `EMAIL#0`; they are
/// excluded from the vocabulary so stored vectors carry no trace of where
/// sensitive values sat.
static PLACEHOLDER_TERM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\A[A-Z_]+#[0-9]+\z").expect("placeholder pattern compiles"));

/// Lowercased cleaned tokens of a document, with redaction placeholders
/// removed. This is the shared path for corpus fitting, document
/// vectorization, and query vectorization.
pub fn doc_terms(text: &str) -> Vec<String> {
    clean_tokens(text)
        .into_iter()
        .filter(|t| !t.is_dropped())
        .filter(|t| !PLACEHOLDER_TERM.is_match(&t.cleaned))
        .map(|t| t.cleaned.to_lowercase())
        .collect()
}

/// Term-to-id map with per-term document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<VocabEntry>,
    index: HashMap<String, u32>,
    doc_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub term: String,
    pub df: u32,
}

impl Vocabulary {
    /// Fits a vocabulary over a corpus of redacted texts. Term ids are
    /// assigned in first-seen order, contiguous from 0.
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Result<Vocabulary> {
        if corpus.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit a vocabulary over an empty corpus".into(),
            ));
        }
        let mut terms: Vec<VocabEntry> = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut seen_in_doc: Vec<u32> = Vec::new();

        for doc in corpus {
            seen_in_doc.clear();
            for term in doc_terms(doc.as_ref()) {
                let id = match index.get(&term) {
                    Some(&id) => id,
                    None => {
                        let id = terms.len() as u32;
                        terms.push(VocabEntry {
                            term: term.clone(),
                            df: 0,
                        });
                        index.insert(term, id);
                        id
                    }
                };
                if !seen_in_doc.contains(&id) {
                    seen_in_doc.push(id);
                    terms[id as usize].df += 1;
                }
            }
        }

        Ok(Vocabulary {
            terms,
            index,
            doc_count: corpus.len() as u32,
        })
    }

    /// Rebuilds a vocabulary from persisted (term, df) entries in id order.
    pub fn from_entries(entries: Vec<VocabEntry>, doc_count: u32) -> Vocabulary {
        let index = entries
            .iter()
            .enumerate()
            .map(|(id, e)| (e.term.clone(), id as u32))
            .collect();
        Vocabulary {
            terms: entries,
            index,
            doc_count,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn doc_count(&self) -> u32 {
        self.doc_count
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn df(&self, id: u32) -> u32 {
        self.terms[id as usize].df
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.terms
    }

    pub fn idf(&self, id: u32) -> f64 {
        let n = f64::from(self.doc_count);
        let df = f64::from(self.df(id));
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// Builds the TF-IDF vector for a document. Out-of-vocabulary terms are
    /// ignored; a document with no countable terms yields the zero vector.
    pub fn vectorize(&self, doc: &str) -> TfIdfVector {
        let terms = doc_terms(doc);
        if terms.is_empty() {
            return TfIdfVector::zero();
        }
        let total = terms.len() as f64;
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for term in &terms {
            if let Some(id) = self.term_id(term) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(id, count)| (id, (f64::from(count) / total) * self.idf(id)))
            .collect();
        entries.sort_unstable_by_key(|(id, _)| *id);
        TfIdfVector::from_sorted_entries(entries)
    }
}

/// A sparse term-weight vector with a cached L2 norm. Entries are sorted by
/// term id and weights are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfVector {
    entries: Vec<(u32, f64)>,
    norm: f64,
}

impl TfIdfVector {
    pub fn zero() -> TfIdfVector {
        TfIdfVector {
            entries: Vec::new(),
            norm: 0.0,
        }
    }

    /// Builds a vector from (term id, weight) pairs; entries are sorted and
    /// zero weights removed.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> TfIdfVector {
        entries.retain(|(_, w)| *w != 0.0);
        entries.sort_unstable_by_key(|(id, _)| *id);
        TfIdfVector::from_sorted_entries(entries)
    }

    fn from_sorted_entries(entries: Vec<(u32, f64)>) -> TfIdfVector {
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        TfIdfVector { entries, norm }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, id: u32) -> f64 {
        self.entries
            .binary_search_by_key(&id, |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    /// Sparse dot product; both entry lists are sorted by term id.
    pub fn dot(&self, other: &TfIdfVector) -> f64 {
        let mut sum = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        let a = &self.entries;
        let b = &other.entries;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

/// Cosine similarity `(q·d)/(‖q‖·‖d‖)`, defined as 0 when either norm is 0.
/// With non-negative weights the score lies in [0, 1].
pub fn cosine_similarity(q: &TfIdfVector, d: &TfIdfVector) -> f64 {
    if q.norm == 0.0 || d.norm == 0.0 {
        return 0.0;
    }
    q.dot(d) / (q.norm * d.norm)
}
