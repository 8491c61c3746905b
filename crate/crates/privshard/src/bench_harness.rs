//! Synthetic corpora and the three performance experiments: build-phase
//! cost, direct vs blind lookup, and clustered vs full-scan search.
//!
//! Times are wall-clock nanoseconds from a monotonic clock. Absolute values
//! are environment-bound; consumers should compare trends and ratios. Every
//! experiment excludes one warm-up pass and reports medians over at least
//! three repetitions.

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::crypto_vault::{canonicalize, KeyBundle};
use crate::entity_catalog::{Catalog, EntityKind};
use crate::error::{Error, Result};
use crate::secure_store::SecureStore;
use crate::vector_index::cosine_similarity;

/// Experiment parameters.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Corpus sizes, ascending.
    pub sizes: Vec<usize>,
    pub seed: u64,
    /// Measured repetitions per point (a warm-up pass is run on top).
    pub repetitions: usize,
    /// Cluster count for the search experiment.
    pub k: usize,
    /// Queries per trial.
    pub queries: usize,
    /// Refuse corpora larger than this.
    pub memory_budget_docs: usize,
    /// Mix topics into each document to stress clustered search.
    pub low_separability: bool,
    /// Run background reader threads during search trials.
    pub concurrent_readers: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![1_000, 10_000],
            seed: 42,
            repetitions: 5,
            k: 10,
            queries: 20,
            memory_budget_docs: 2_000_000,
            low_separability: false,
            concurrent_readers: false,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidArgument("no corpus sizes given".into()));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("sizes must be ascending".into()));
        }
        if self.repetitions < 3 {
            return Err(Error::InvalidArgument(
                "repetitions must be at least 3".into(),
            ));
        }
        if self.queries < 1 {
            return Err(Error::InvalidArgument("queries must be at least 1".into()));
        }
        if let Some(&max) = self.sizes.iter().max() {
            if max > self.memory_budget_docs {
                return Err(Error::MemoryBudget {
                    requested: max,
                    budget: self.memory_budget_docs,
                });
            }
        }
        Ok(())
    }
}

/// One CSV row: a measured phase at one corpus size.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub experiment: String,
    pub n: usize,
    pub phase: String,
    pub median_ns: u64,
    pub p90_ns: u64,
    pub agreement: Option<f64>,
}

/// A generated document with its ground truth: the topic it was drawn from
/// and every sensitive value injected into it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDoc {
    pub text: String,
    pub topic: usize,
    pub injected: Vec<(EntityKind, String)>,
}

/// Ten disjoint topic vocabularies. Disjointness is what makes the clustered
/// corpus separable.
pub const TOPICS: [[&str; 20]; 10] = [
    [
        "invoice", "payment", "ledger", "quarterly", "revenue", "asset", "liability", "dividend",
        "portfolio", "equity", "margin", "forecast", "budget", "treasury", "escrow", "accrual",
        "capital", "fiscal", "audit", "solvency",
    ],
    [
        "patient", "diagnosis", "clinical", "therapy", "dosage", "symptom", "prescription",
        "oncology", "cardiology", "immunology", "pathology", "radiology", "surgical", "recovery",
        "vaccine", "biopsy", "chronic", "referral", "ward", "triage",
    ],
    [
        "contract", "clause", "litigation", "counsel", "statute", "verdict", "plaintiff",
        "defendant", "arbitration", "deposition", "affidavit", "jurisdiction", "indemnity",
        "covenant", "subpoena", "appellate", "paralegal", "notary", "docket", "tort",
    ],
    [
        "freight", "cargo", "container", "customs", "logistics", "warehouse", "pallet", "courier",
        "tracking", "waybill", "harbor", "vessel", "consignment", "dispatch", "forwarder",
        "transit", "backhaul", "drayage", "tariff", "stevedore",
    ],
    [
        "turbine", "actuator", "torque", "compressor", "hydraulic", "voltage", "gearbox", "alloy",
        "welding", "tolerance", "calibration", "bearing", "flange", "piston", "valve", "conduit",
        "lathe", "machining", "tensile", "fatigue",
    ],
    [
        "campaign", "branding", "outreach", "engagement", "conversion", "funnel", "audience",
        "impression", "newsletter", "sponsorship", "billboard", "slogan", "demographic",
        "retention", "churn", "loyalty", "promo", "viral", "influencer", "segmentation",
    ],
    [
        "onboarding", "payroll", "benefits", "recruiter", "resume", "interview", "appraisal",
        "vacancy", "tenure", "grievance", "probation", "timesheet", "overtime", "staffing",
        "headcount", "morale", "mentoring", "attrition", "secondment", "sabbatical",
    ],
    [
        "firewall", "intrusion", "malware", "phishing", "keylogger", "botnet", "exploit",
        "patching", "honeypot", "forensics", "ransomware", "spoofing", "sandboxing", "rootkit",
        "antivirus", "breach", "perimeter", "zeroday", "hardening", "telemetry",
    ],
    [
        "itinerary", "boarding", "layover", "visa", "hostel", "resort", "excursion", "airfare",
        "departure", "terminal", "concierge", "luggage", "cruise", "safari", "roadtrip",
        "backpacking", "jetlag", "stopover", "souvenir", "embassy",
    ],
    [
        "ticket", "escalation", "helpdesk", "troubleshooting", "outage", "downtime", "refund",
        "complaint", "chatbot", "warranty", "hotline", "diagnostics", "reboot", "firmware",
        "callback", "resolution", "backlog", "queue", "knowledgebase", "severity",
    ],
];

const FILLER: [&str; 16] = [
    "the", "a", "of", "and", "for", "with", "on", "regarding", "update", "note", "review",
    "summary", "team", "weekly", "status", "item",
];

const EMAIL_NAMES: [&str; 12] = [
    "maya", "jon", "priya", "chen", "amara", "luis", "sofia", "tariq", "nina", "oleg", "ines",
    "kofi",
];
const EMAIL_DOMAINS: [&str; 8] = [
    "corpmail", "globex", "initech", "umbrella", "acmegrp", "vandelay", "stark", "wayneco",
];
const EMAIL_TLDS: [&str; 4] = ["com", "net", "org", "io"];
const URL_SLUGS: [&str; 10] = [
    "reports", "portal", "wiki", "docs", "files", "intranet", "archive", "drive", "board", "hub",
];

fn gen_value(kind: EntityKind, rng: &mut ChaCha20Rng) -> String {
    match kind {
        EntityKind::Email => format!(
            "{}{}@{}.{}",
            EMAIL_NAMES[rng.gen_range(0..EMAIL_NAMES.len())],
            rng.gen_range(100..100_000),
            EMAIL_DOMAINS[rng.gen_range(0..EMAIL_DOMAINS.len())],
            EMAIL_TLDS[rng.gen_range(0..EMAIL_TLDS.len())],
        ),
        EntityKind::Phone => {
            let len = rng.gen_range(10..=13);
            let mut digits = String::new();
            digits.push(char::from(b'1' + rng.gen_range(0..9u8)));
            for _ in 1..len {
                digits.push(char::from(b'0' + rng.gen_range(0..10u8)));
            }
            format!("+{digits}")
        }
        EntityKind::Ssn => format!(
            "{:03}-{:02}-{:04}",
            rng.gen_range(100..900),
            rng.gen_range(10..100),
            rng.gen_range(1000..10_000)
        ),
        EntityKind::CreditCard => {
            let len = rng.gen_range(13..=16);
            let mut digits = String::new();
            digits.push(char::from(b'1' + rng.gen_range(0..9u8)));
            for _ in 1..len {
                digits.push(char::from(b'0' + rng.gen_range(0..10u8)));
            }
            digits
        }
        // Always at least one thousands group and cents, so the canonical
        // form is long enough to make the leakage scan meaningful.
        EntityKind::Money => {
            let groups = rng.gen_range(1..=2);
            let mut s = format!("${}", rng.gen_range(1..1000));
            for _ in 0..groups {
                s.push_str(&format!(",{:03}", rng.gen_range(0..1000)));
            }
            s.push_str(&format!(".{:02}", rng.gen_range(0..100)));
            s
        }
        EntityKind::Url => format!(
            "https://{}.example/{}{}",
            URL_SLUGS[rng.gen_range(0..URL_SLUGS.len())],
            URL_SLUGS[rng.gen_range(0..URL_SLUGS.len())],
            rng.gen_range(10..10_000),
        ),
        EntityKind::Passport => unreachable!("no generator for PASSPORT"),
    }
}

const INJECTABLE: [EntityKind; 6] = [
    EntityKind::Email,
    EntityKind::Phone,
    EntityKind::Ssn,
    EntityKind::CreditCard,
    EntityKind::Money,
    EntityKind::Url,
];

/// Deterministic synthetic corpus: topic-templated prose with sensitive
/// values injected as standalone tokens at known positions.
pub fn gen_corpus(n: usize, seed: u64) -> Vec<GeneratedDoc> {
    gen_corpus_with(n, seed, false)
}

/// As [`gen_corpus`]; `low_separability` mixes other topics into each
/// document to stress clustered search.
pub fn gen_corpus_with(n: usize, seed: u64, low_separability: bool) -> Vec<GeneratedDoc> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n);

    for _ in 0..n {
        let topic = rng.gen_range(0..TOPICS.len());
        let len = rng.gen_range(14..=30);
        // At least 60% of the prose comes straight from the topic template
        // (30% when separability is lowered), so topic overlap holds by
        // construction rather than by chance.
        let guaranteed = if low_separability {
            (len * 3) / 10
        } else {
            (len * 6) / 10
        };
        let mut words: Vec<&str> = Vec::with_capacity(len);
        for _ in 0..guaranteed {
            words.push(TOPICS[topic][rng.gen_range(0..20)]);
        }
        for _ in guaranteed..len {
            let roll: f64 = rng.gen();
            if low_separability && roll < 0.35 {
                let other = rng.gen_range(0..TOPICS.len());
                words.push(TOPICS[other][rng.gen_range(0..20)]);
            } else if roll < 0.65 {
                words.push(TOPICS[topic][rng.gen_range(0..20)]);
            } else {
                words.push(FILLER[rng.gen_range(0..FILLER.len())]);
            }
        }
        words.shuffle(&mut rng);

        let entity_count = match rng.gen_range(0..100) {
            0..=24 => 0,
            25..=59 => 1,
            60..=84 => 2,
            _ => 3,
        };
        let mut tokens: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        let mut injected = Vec::with_capacity(entity_count);
        for _ in 0..entity_count {
            let kind = INJECTABLE[rng.gen_range(0..INJECTABLE.len())];
            let value = gen_value(kind, &mut rng);
            // Sometimes dress the token in edge punctuation; cleaning must
            // still recover the value exactly.
            let dressed = match rng.gen_range(0..10) {
                0 => format!("({value})"),
                1 => format!("{value},"),
                2 => format!("{value}."),
                _ => value.clone(),
            };
            let pos = rng.gen_range(0..=tokens.len());
            tokens.insert(pos, dressed);
            injected.push((kind, value));
        }

        docs.push(GeneratedDoc {
            text: tokens.join(" "),
            topic,
            injected,
        });
    }
    docs
}

/// Build a finalized store over a generated corpus.
pub fn build_store(docs: &[GeneratedDoc], keys: &KeyBundle, k: usize, seed: u64) -> Result<SecureStore> {
    let catalog = Catalog::default_catalog();
    let mut store = SecureStore::new(keys, catalog.hash());
    for doc in docs {
        store.ingest_document(&doc.text, keys, &catalog)?;
    }
    store.finalize(k.min(docs.len()), seed)?;
    Ok(store)
}

/// Full-corpus cosine scan: the "normal search" baseline the clustered path
/// is compared against.
pub fn full_scan(store: &SecureStore, query: &str, top_n: usize) -> Vec<(u64, f64)> {
    let vocab = store.vocabulary().expect("store is finalized");
    let q = vocab.vectorize(query);
    let mut hits: Vec<(u64, f64)> = store
        .records()
        .iter()
        .filter_map(|r| {
            let score = cosine_similarity(&q, &r.vector);
            (score > 0.0).then_some((r.doc_id, score))
        })
        .collect();
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    hits.truncate(top_n);
    hits
}

fn percentile(sorted: &[u64], p: f64) -> u64 {
    debug_assert!(!sorted.is_empty());
    let idx = ((sorted.len() as f64 * p).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

fn summarize(mut samples: Vec<u64>) -> (u64, u64) {
    samples.sort_unstable();
    (percentile(&samples, 0.5), percentile(&samples, 0.9))
}

/// Measures encryption-only, blind-index-only, and total ingest time per
/// corpus size.
pub fn bench_build(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let catalog = Catalog::default_catalog();
    let mut rows = Vec::new();

    for &n in &cfg.sizes {
        let docs = gen_corpus_with(n, cfg.seed, cfg.low_separability);
        let mut totals = Vec::new();
        let mut encs = Vec::new();
        let mut macs = Vec::new();

        for rep in 0..=cfg.repetitions {
            let keys = KeyBundle::generate(None);
            let mut store = SecureStore::new(&keys, catalog.hash());
            let start = Instant::now();
            for doc in &docs {
                store.ingest_document(&doc.text, &keys, &catalog)?;
            }
            let total = start.elapsed().as_nanos() as u64;
            if rep > 0 {
                let timing = store.build_timing();
                totals.push(total);
                encs.push(timing.enc_nanos);
                macs.push(timing.mac_nanos);
            }
        }

        for (phase, samples) in [("aes", encs), ("blind_index", macs), ("total", totals)] {
            let (median_ns, p90_ns) = summarize(samples);
            rows.push(BenchRow {
                experiment: "build".into(),
                n,
                phase: phase.into(),
                median_ns,
                p90_ns,
                agreement: None,
            });
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// A lookup query with its ground-truth answer.
struct LookupQuery {
    kind: EntityKind,
    value: String,
    canonical: String,
}

fn lookup_queries(docs: &[GeneratedDoc], count: usize, seed: u64) -> Vec<LookupQuery> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x6c6f6f6b);
    let mut queries = Vec::with_capacity(count * 2);

    let present: Vec<(EntityKind, &String)> = docs
        .iter()
        .flat_map(|d| d.injected.iter().map(|(k, v)| (*k, v)))
        .collect();
    for _ in 0..count {
        if let Some(&(kind, value)) = present.get(rng.gen_range(0..present.len().max(1))) {
            queries.push(LookupQuery {
                kind,
                value: value.clone(),
                canonical: canonicalize(value, kind),
            });
        }
    }
    // Absent values: syntactically valid, guaranteed out of corpus by the
    // reserved domain / digit prefix.
    for i in 0..count {
        let value = format!("absent{i}@reserved.example");
        queries.push(LookupQuery {
            kind: EntityKind::Email,
            value: value.clone(),
            canonical: canonicalize(&value, EntityKind::Email),
        });
    }
    queries
}

/// Measures a plaintext linear scan against the blind-index lookup for the
/// same query set, checking set equality of the results on every trial.
pub fn bench_lookup(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();

    for &n in &cfg.sizes {
        let docs = gen_corpus_with(n, cfg.seed, cfg.low_separability);
        let keys = KeyBundle::generate(None);
        let store = build_store(&docs, &keys, cfg.k, cfg.seed)?;

        // Plaintext ground truth the direct scan walks over.
        let truth: Vec<(EntityKind, String, u64)> = docs
            .iter()
            .enumerate()
            .flat_map(|(id, d)| {
                d.injected
                    .iter()
                    .map(move |(k, v)| (*k, canonicalize(v, *k), id as u64))
            })
            .collect();
        let queries = lookup_queries(&docs, cfg.queries, cfg.seed);

        let mut direct_ns = Vec::new();
        let mut blind_ns = Vec::new();
        let mut agree = 0usize;
        let mut trials = 0usize;

        // The two strategies run as separate passes over the same query
        // set, so neither measurement pays for the other's cache traffic.
        for rep in 0..=cfg.repetitions {
            let mut direct_results = Vec::with_capacity(queries.len());
            for q in &queries {
                let t0 = Instant::now();
                let mut direct: Vec<u64> = truth
                    .iter()
                    .filter(|(k, canon, _)| *k == q.kind && canon == &q.canonical)
                    .map(|(_, _, id)| *id)
                    .collect();
                let dn = t0.elapsed().as_nanos() as u64;
                direct.sort_unstable();
                direct.dedup();
                direct_results.push((dn, direct));
            }

            for (q, (dn, direct)) in queries.iter().zip(&direct_results) {
                let t1 = Instant::now();
                let blind = store.lookup_sensitive(q.kind, &q.value, &keys)?;
                let bn = t1.elapsed().as_nanos() as u64;

                if rep > 0 {
                    direct_ns.push(*dn);
                    blind_ns.push(bn);
                    trials += 1;
                    if direct == &blind {
                        agree += 1;
                    }
                }
            }
        }

        let agreement = agree as f64 / trials as f64;
        let (median_ns, p90_ns) = summarize(direct_ns);
        rows.push(BenchRow {
            experiment: "lookup".into(),
            n,
            phase: "direct_scan".into(),
            median_ns,
            p90_ns,
            agreement: None,
        });
        let (median_ns, p90_ns) = summarize(blind_ns);
        rows.push(BenchRow {
            experiment: "lookup".into(),
            n,
            phase: "blind_lookup".into(),
            median_ns,
            p90_ns,
            agreement: Some(agreement),
        });
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Topical queries for the search experiment.
pub fn search_queries(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x73726368);
    (0..count)
        .map(|_| {
            let topic = rng.gen_range(0..TOPICS.len());
            let len = rng.gen_range(6..=10);
            (0..len)
                .map(|_| TOPICS[topic][rng.gen_range(0..20)])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Per-query timings of full-corpus scan vs clustered search, plus top-1
/// agreement between the two.
pub struct SearchTrial {
    pub full_nanos: Vec<u64>,
    pub clustered_nanos: Vec<u64>,
    pub agreements: usize,
    pub trials: usize,
}

/// Runs the search comparison over one finalized store.
pub fn search_trial(
    store: &SecureStore,
    queries: &[String],
    top_n: usize,
    repetitions: usize,
) -> Result<SearchTrial> {
    let mut trial = SearchTrial {
        full_nanos: Vec::new(),
        clustered_nanos: Vec::new(),
        agreements: 0,
        trials: 0,
    };
    for rep in 0..=repetitions {
        for query in queries {
            let t0 = Instant::now();
            let full = full_scan(store, query, top_n);
            let fnanos = t0.elapsed().as_nanos() as u64;

            let t1 = Instant::now();
            let clustered = store.search_nonsensitive(query, top_n)?;
            let cnanos = t1.elapsed().as_nanos() as u64;

            if rep > 0 {
                trial.full_nanos.push(fnanos);
                trial.clustered_nanos.push(cnanos);
                trial.trials += 1;
                if full.first().map(|h| h.0) == clustered.first().map(|h| h.0) {
                    trial.agreements += 1;
                }
            }
        }
    }
    Ok(trial)
}

/// Measures full-corpus cosine scan vs clustered search per corpus size.
pub fn bench_search(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();

    for &n in &cfg.sizes {
        let docs = gen_corpus_with(n, cfg.seed, cfg.low_separability);
        let keys = KeyBundle::generate(None);
        let store = build_store(&docs, &keys, cfg.k, cfg.seed)?;
        let queries = search_queries(cfg.queries, cfg.seed);

        let stop = AtomicBool::new(false);
        let trial = std::thread::scope(|scope| {
            if cfg.concurrent_readers {
                for _ in 0..2 {
                    scope.spawn(|| {
                        let mut i = 0usize;
                        while !stop.load(Ordering::Relaxed) {
                            let q = &queries[i % queries.len()];
                            let _ = store.search_nonsensitive(q, 5);
                            i += 1;
                        }
                    });
                }
            }
            let trial = search_trial(&store, &queries, 10, cfg.repetitions);
            stop.store(true, Ordering::Relaxed);
            trial
        })?;

        let agreement = trial.agreements as f64 / trial.trials as f64;
        let (median_ns, p90_ns) = summarize(trial.full_nanos);
        rows.push(BenchRow {
            experiment: "search".into(),
            n,
            phase: "normal_search".into(),
            median_ns,
            p90_ns,
            agreement: None,
        });
        let (median_ns, p90_ns) = summarize(trial.clustered_nanos);
        rows.push(BenchRow {
            experiment: "search".into(),
            n,
            phase: "cluster_search".into(),
            median_ns,
            p90_ns,
            agreement: Some(agreement),
        });
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn sort_rows(rows: &mut [BenchRow]) {
    rows.sort_by(|a, b| a.experiment.cmp(&b.experiment).then(a.n.cmp(&b.n)));
}

/// CSV schema version header, written as the first line of every file.
pub const CSV_SCHEMA: &str = "#schema=privshard-bench-1";

/// Writes rows as `experiment,n,phase,median_ns,p90_ns,agreement`, sorted
/// by (experiment, n).
pub fn write_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut out = String::new();
    out.push_str(CSV_SCHEMA);
    out.push('\n');
    out.push_str("experiment,n,phase,median_ns,p90_ns,agreement\n");
    for row in &rows {
        let agreement = row
            .agreement
            .map(|a| format!("{a:.4}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.experiment, row.n, row.phase, row.median_ns, row.p90_ns, agreement
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
