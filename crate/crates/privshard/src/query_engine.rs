//! Query routing: classify a query as sensitive, non-sensitive, or mixed,
//! send each part down the matching path, and merge the results.
//!
//! An exact encrypted-field match is a stronger signal than a cosine score,
//! so hybrid results place exact hits first with their score pinned to 1.

use std::time::Instant;

use crate::crypto_vault::KeyBundle;
use crate::entity_catalog::{Catalog, EntitySpan};
use crate::error::{Error, Result};
use crate::secure_store::SecureStore;
use crate::text_pipeline::clean_tokens;

/// How a query will be executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    /// Only sensitive terms: blind-index lookup.
    Exact,
    /// No sensitive terms: clustered ranked search.
    Ranked,
    /// Both: lookup plus ranked search over the residual.
    Hybrid,
}

impl QueryMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            QueryMode::Exact => "EXACT",
            QueryMode::Ranked => "RANKED",
            QueryMode::Hybrid => "HYBRID",
        }
    }
}

/// A routed query: detected sensitive terms, the residual text with those
/// spans removed, and the execution mode.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    pub sensitive_terms: Vec<EntitySpan>,
    pub residual_text: String,
    pub mode: QueryMode,
}

/// One result with provenance flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub doc_id: u64,
    pub score: f64,
    pub exact: bool,
    pub ranked: bool,
}

/// Merged, deduplicated results plus the wall-clock spent on each path.
#[derive(Debug, Clone, Default)]
pub struct ResultSet {
    pub hits: Vec<Hit>,
    pub exact_nanos: u64,
    pub ranked_nanos: u64,
}

/// Runs entity detection over the query text and partitions it into
/// sensitive terms and residual prose.
pub fn plan_query(text: &str, catalog: &Catalog) -> QueryPlan {
    let sensitive_terms = catalog.detect(text);

    let chars: Vec<char> = text.chars().collect();
    let mut residual = String::with_capacity(text.len());
    let mut cursor = 0usize;
    for span in &sensitive_terms {
        residual.extend(&chars[cursor..span.char_start]);
        residual.push(' ');
        cursor = span.char_end;
    }
    residual.extend(&chars[cursor..]);

    let mode = if sensitive_terms.is_empty() {
        QueryMode::Ranked
    } else if has_alphabetic_tokens(&residual) {
        QueryMode::Hybrid
    } else {
        QueryMode::Exact
    };

    QueryPlan {
        sensitive_terms,
        residual_text: residual,
        mode,
    }
}

fn has_alphabetic_tokens(text: &str) -> bool {
    clean_tokens(text)
        .iter()
        .filter(|t| !t.is_dropped())
        .any(|t| t.cleaned.chars().any(char::is_alphabetic))
}

/// Execution knobs: run the hybrid paths concurrently, and how many
/// clusters the ranked path probes.
#[derive(Debug, Clone, Copy)]
pub struct ExecOptions {
    pub parallel: bool,
    pub probe: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            parallel: false,
            probe: 1,
        }
    }
}

/// Executes a plan sequentially with a single-cluster probe. Keys are
/// required only when the plan carries sensitive terms; ranked queries run
/// without any key material.
pub fn execute(
    plan: &QueryPlan,
    keys: Option<&KeyBundle>,
    store: &SecureStore,
    top_n: usize,
) -> Result<ResultSet> {
    execute_opts(plan, keys, store, top_n, ExecOptions::default())
}

/// Executes a plan, optionally running the two hybrid paths on separate
/// threads. A finalized store supports any number of concurrent readers.
pub fn execute_opts(
    plan: &QueryPlan,
    keys: Option<&KeyBundle>,
    store: &SecureStore,
    top_n: usize,
    opts: ExecOptions,
) -> Result<ResultSet> {
    match plan.mode {
        QueryMode::Exact => {
            let (hits, nanos) = exact_path(plan, keys, store)?;
            Ok(ResultSet {
                hits,
                exact_nanos: nanos,
                ranked_nanos: 0,
            })
        }
        QueryMode::Ranked => {
            let (hits, nanos) = ranked_path(plan, store, top_n, opts.probe)?;
            Ok(ResultSet {
                hits,
                exact_nanos: 0,
                ranked_nanos: nanos,
            })
        }
        QueryMode::Hybrid => {
            let (exact, ranked) = if opts.parallel {
                std::thread::scope(|scope| {
                    let exact_handle = scope.spawn(|| exact_path(plan, keys, store));
                    let ranked = ranked_path(plan, store, top_n, opts.probe);
                    let exact = exact_handle.join().expect("exact path panicked");
                    (exact, ranked)
                })
            } else {
                (
                    exact_path(plan, keys, store),
                    ranked_path(plan, store, top_n, opts.probe),
                )
            };
            let (mut hits, exact_nanos) = exact?;
            let (ranked_hits, ranked_nanos) = ranked?;

            for ranked_hit in ranked_hits {
                if let Some(existing) = hits.iter_mut().find(|h| h.doc_id == ranked_hit.doc_id) {
                    existing.ranked = true;
                } else {
                    hits.push(ranked_hit);
                }
            }
            Ok(ResultSet {
                hits,
                exact_nanos,
                ranked_nanos,
            })
        }
    }
}

/// Union of blind-index lookups over all sensitive terms, ascending doc id,
/// score pinned to 1.
fn exact_path(
    plan: &QueryPlan,
    keys: Option<&KeyBundle>,
    store: &SecureStore,
) -> Result<(Vec<Hit>, u64)> {
    let keys = keys.ok_or(Error::MissingKeys)?;
    let start = Instant::now();
    let mut ids = std::collections::BTreeSet::new();
    for term in &plan.sensitive_terms {
        for id in store.lookup_sensitive(term.kind, &term.value, keys)? {
            ids.insert(id);
        }
    }
    let hits = ids
        .into_iter()
        .map(|doc_id| Hit {
            doc_id,
            score: 1.0,
            exact: true,
            ranked: false,
        })
        .collect();
    Ok((hits, start.elapsed().as_nanos() as u64))
}

fn ranked_path(
    plan: &QueryPlan,
    store: &SecureStore,
    top_n: usize,
    probe: usize,
) -> Result<(Vec<Hit>, u64)> {
    let start = Instant::now();
    let hits = store
        .search_nonsensitive_probe(&plan.residual_text, top_n, probe)?
        .into_iter()
        .map(|(doc_id, score)| Hit {
            doc_id,
            score,
            exact: false,
            ranked: true,
        })
        .collect();
    Ok((hits, start.elapsed().as_nanos() as u64))
}
