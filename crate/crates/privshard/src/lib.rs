//! privshard is a privacy-aware document store. It detects sensitive values
//! (emails, phone numbers, SSNs, card numbers, money amounts, URLs) in
//! unstructured text, encrypts each one with AES-128-GCM, and stores a
//! deterministic HMAC blind index beside the ciphertext so exact-match
//! search works without any decryption. The non-sensitive remainder is
//! redacted with placeholders, vectorized with TF-IDF, clustered with
//! k-means, and served through cosine-ranked search restricted to the
//! query's nearest cluster.
//!
//! The pipeline, end to end:
//!
//! ```text
//! text ── tokenize ── clean ── IOB label ── spans
//!                                            │
//!               ┌────────────────────────────┤
//!               │ encrypt (AES-128-GCM)      │ redact [[KIND#n]]
//!               │ blind index (HMAC-SHA256)  │ TF-IDF ── k-means
//!               ▼                            ▼
//!          blind-index map              cluster model
//!               │                            │
//!          exact lookup                 ranked search
//! ```
//!
//! Queries are routed by the same detector: sensitive terms go to the
//! blind-index map, prose goes to clustered search, and mixed queries take
//! both paths.
//!
//! # Example
//!
//! ```
//! use privshard::{Catalog, EntityKind, KeyBundle, SecureStore};
//!
//! let keys = KeyBundle::generate(Some(1));
//! let catalog = Catalog::default_catalog();
//! let mut store = SecureStore::new(&keys, catalog.hash());
//! store.ingest_document("invoice for a@b.com is $1,204.50", &keys, &catalog).unwrap();
//! store.ingest_document("quarterly revenue forecast", &keys, &catalog).unwrap();
//! store.finalize(1, 42).unwrap();
//!
//! let hits = store.lookup_sensitive(EntityKind::Email, "A@B.COM", &keys).unwrap();
//! assert_eq!(hits, vec![0]);
//! let ranked = store.search_nonsensitive("revenue forecast", 5).unwrap();
//! assert_eq!(ranked[0].0, 1);
//! ```

pub mod bench_harness;
pub mod cluster_engine;
pub mod crypto_vault;
pub mod entity_catalog;
pub mod error;
pub mod query_engine;
pub mod secure_store;
pub mod text_pipeline;
pub mod vector_index;

pub use cluster_engine::{assign_cluster, kmeans_fit, ranked_search, ClusterModel};
pub use crypto_vault::{
    blind_index, canonicalize, decrypt_value, encrypt_value, BlindIndex, Ciphertext, KeyBundle,
};
pub use entity_catalog::{Catalog, Detector, EntityKind, EntityPattern, EntitySpan};
pub use error::{Error, Result};
pub use query_engine::{execute, execute_opts, plan_query, ExecOptions, QueryMode, QueryPlan, ResultSet};
pub use secure_store::{SecureRecord, SecureStore, StoreManifest};
pub use vector_index::{cosine_similarity, TfIdfVector, Vocabulary};
