//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by any privshard operation.
#[derive(Debug, Error)]
pub enum Error {
    /// A catalog entry failed to compile.
    #[error("invalid pattern for {kind}: {source}")]
    InvalidPattern {
        kind: String,
        #[source]
        source: regex::Error,
    },

    /// A caller-supplied argument violated a precondition.
    #[error("{0}")]
    InvalidArgument(String),

    /// Encryption was requested for an empty value.
    #[error("plaintext must not be empty")]
    EmptyPlaintext,

    /// Decryption failed: wrong key or tampered ciphertext. The causes are
    /// deliberately indistinguishable.
    #[error("authentication failed")]
    Authentication,

    /// The supplied key bundle does not match the store's recorded fingerprint.
    #[error("key fingerprint {actual} does not match store fingerprint {expected}")]
    KeyMismatch { expected: String, actual: String },

    /// A query over sensitive terms was attempted without a key bundle.
    #[error("query contains sensitive terms; a key bundle is required")]
    MissingKeys,

    /// A record, entity, or file was not found.
    #[error("{0} not found")]
    NotFound(String),

    /// The store is finalized; inserts are rejected.
    #[error("store is finalized and read-only")]
    StoreSealed,

    /// The operation requires a finalized store.
    #[error("store has not been finalized")]
    NotFinalized,

    /// An I label appeared without a preceding B/I of the same kind.
    #[error("inconsistent label sequence: {0}")]
    LabelSequence(String),

    /// A store, manifest, key, or input file did not parse.
    #[error("malformed input: {0}")]
    Format(String),

    /// A benchmark size exceeded the configured memory budget.
    #[error("requested corpus of {requested} docs exceeds the memory budget of {budget} docs")]
    MemoryBudget { requested: usize, budget: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
