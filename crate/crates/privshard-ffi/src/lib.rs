//! C ABI for the privshard document store.
//!
//! Handles (`PsKeys`, `PsStore`) are opaque pointers created and destroyed
//! by the matching `*_free` functions. Every fallible call returns a
//! [`PsStatus`]; on failure, [`ps_last_error`] returns a human-readable
//! message for the calling thread. Strings crossing the boundary are
//! NUL-terminated UTF-8; arrays are returned as (pointer, length) pairs and
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use privshard::query_engine::{execute_opts, plan_query, ExecOptions};
use privshard::secure_store::SecureStore;
use privshard::{Catalog, EntityKind, Error, KeyBundle, QueryMode};

/// Status code for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument violated a precondition (bad k, empty corpus, ...).
    InvalidArgument = 3,
    /// Decryption failed: wrong key or tampered data.
    Authentication = 4,
    /// The key bundle does not match the store fingerprint.
    KeyMismatch = 5,
    /// The query carries sensitive terms but no keys were supplied.
    MissingKeys = 6,
    NotFound = 7,
    /// The store is finalized; inserts are rejected.
    Sealed = 8,
    /// The operation requires a finalized store.
    NotFinalized = 9,
    Io = 10,
    /// A file or pattern failed to parse.
    Format = 11,
    Internal = 12,
}

/// Opaque key bundle handle.
pub struct PsKeys {
    inner: KeyBundle,
}

/// Opaque store handle. Carries the detector catalog used for ingestion
/// and query planning.
pub struct PsStore {
    store: SecureStore,
    catalog: Catalog,
}

/// One search or query result.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsHit {
    pub doc_id: u64,
    pub score: f64,
    /// 1 when the document matched a sensitive term exactly.
    pub exact: u8,
    /// 1 when the document came from ranked similarity search.
    pub ranked: u8,
}

/// Query routing mode, mirroring the planner's decision.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsQueryMode {
    Exact = 0,
    Ranked = 1,
    Hybrid = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").expect("static string"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> PsStatus {
    match err {
        Error::InvalidPattern { .. } | Error::Format(_) => PsStatus::Format,
        Error::InvalidArgument(_) | Error::EmptyPlaintext | Error::MemoryBudget { .. } => {
            PsStatus::InvalidArgument
        }
        Error::Authentication => PsStatus::Authentication,
        Error::KeyMismatch { .. } => PsStatus::KeyMismatch,
        Error::MissingKeys => PsStatus::MissingKeys,
        Error::NotFound(_) => PsStatus::NotFound,
        Error::StoreSealed => PsStatus::Sealed,
        Error::NotFinalized => PsStatus::NotFinalized,
        Error::LabelSequence(_) => PsStatus::Internal,
        Error::Io(_) => PsStatus::Io,
    }
}

fn fail(err: Error) -> PsStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn fail_with(status: PsStatus, message: &str) -> PsStatus {
    set_error(message.to_string());
    status
}

/// Reads a required C string argument.
///
/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, PsStatus> {
    if ptr.is_null() {
        return Err(fail_with(PsStatus::NullArgument, &format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail_with(PsStatus::InvalidUtf8, &format!("{name} is not UTF-8")))
}

fn give_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("").expect("static string"))
        .into_raw()
}

/// Returns the last error message raised on this thread, or null. The
/// caller frees it with `ps_string_free`.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates a fresh random key bundle.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_keys_generate(out: *mut *mut PsKeys) -> PsStatus {
    if out.is_null() {
        return fail_with(PsStatus::NullArgument, "out is null");
    }
    let keys = KeyBundle::generate(None);
    *out = Box::into_raw(Box::new(PsKeys { inner: keys }));
    PsStatus::Ok
}

/// Loads a 48-byte key file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_keys_load(path: *const c_char, out: *mut *mut PsKeys) -> PsStatus {
    if out.is_null() {
        return fail_with(PsStatus::NullArgument, "out is null");
    }
    let path = match read_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match KeyBundle::from_file(Path::new(path)) {
        Ok(keys) => {
            *out = Box::into_raw(Box::new(PsKeys { inner: keys }));
            PsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Writes the 48-byte key file with owner-only permissions.
///
/// # Safety
/// `keys` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ps_keys_save(keys: *const PsKeys, path: *const c_char) -> PsStatus {
    let Some(keys) = keys.as_ref() else {
        return fail_with(PsStatus::NullArgument, "keys is null");
    };
    let path = match read_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match keys.inner.to_file(Path::new(path)) {
        Ok(()) => PsStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Returns the key fingerprint as lowercase hex. Caller frees.
///
/// # Safety
/// `keys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_keys_fingerprint(keys: *const PsKeys) -> *mut c_char {
    match keys.as_ref() {
        Some(keys) => give_string(keys.inner.fingerprint_hex()),
        None => std::ptr::null_mut(),
    }
}

/// Destroys a key handle.
///
/// # Safety
/// `keys` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_keys_free(keys: *mut PsKeys) {
    if !keys.is_null() {
        drop(Box::from_raw(keys));
    }
}

/// Creates an empty store bound to the given keys. `catalog_path` may be
/// null for the built-in catalog, or point to a `KIND<TAB>regex` file.
///
/// # Safety
/// Pointer arguments must be valid; `catalog_path` may be null.
#[no_mangle]
pub unsafe extern "C" fn ps_store_create(
    keys: *const PsKeys,
    catalog_path: *const c_char,
    out: *mut *mut PsStore,
) -> PsStatus {
    if out.is_null() {
        return fail_with(PsStatus::NullArgument, "out is null");
    }
    let Some(keys) = keys.as_ref() else {
        return fail_with(PsStatus::NullArgument, "keys is null");
    };
    let catalog = if catalog_path.is_null() {
        Catalog::default_catalog()
    } else {
        let path = match read_str(catalog_path, "catalog_path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Catalog::from_override_file(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return fail(e),
        }
    };
    let store = SecureStore::new(&keys.inner, catalog.hash());
    *out = Box::into_raw(Box::new(PsStore { store, catalog }));
    PsStatus::Ok
}

/// Loads a store directory written by `ps_store_save`.
///
/// # Safety
/// `dir` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_store_open(dir: *const c_char, out: *mut *mut PsStore) -> PsStatus {
    if out.is_null() {
        return fail_with(PsStatus::NullArgument, "out is null");
    }
    let dir = match read_str(dir, "dir") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match SecureStore::load_from_dir(Path::new(dir)) {
        Ok(store) => {
            *out = Box::into_raw(Box::new(PsStore {
                store,
                catalog: Catalog::default_catalog(),
            }));
            PsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Writes `store.jsonl` and `manifest.json` into a directory.
///
/// # Safety
/// `store` must be a live handle; `dir` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ps_store_save(store: *const PsStore, dir: *const c_char) -> PsStatus {
    let Some(handle) = store.as_ref() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    let dir = match read_str(dir, "dir") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match handle.store.save_to_dir(Path::new(dir)) {
        Ok(()) => PsStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Destroys a store handle.
///
/// # Safety
/// `store` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_store_free(store: *mut PsStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Ingests one document; writes the new doc id to `out_doc_id`.
///
/// # Safety
/// All pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ps_store_ingest(
    store: *mut PsStore,
    keys: *const PsKeys,
    text: *const c_char,
    out_doc_id: *mut u64,
) -> PsStatus {
    let Some(handle) = store.as_mut() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    let Some(keys) = keys.as_ref() else {
        return fail_with(PsStatus::NullArgument, "keys is null");
    };
    let text = match read_str(text, "text") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match handle.store.ingest_document(text, &keys.inner, &handle.catalog) {
        Ok(id) => {
            if !out_doc_id.is_null() {
                *out_doc_id = id;
            }
            PsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Fits vectors and clusters; seals the store against inserts.
///
/// # Safety
/// `store` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_store_finalize(store: *mut PsStore, k: u64, seed: u64) -> PsStatus {
    let Some(handle) = store.as_mut() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    match handle.store.finalize(k as usize, seed) {
        Ok(_) => PsStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Number of stored documents.
///
/// # Safety
/// `store` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_store_doc_count(store: *const PsStore) -> u64 {
    store.as_ref().map_or(0, |h| h.store.len() as u64)
}

/// Whether the store has been finalized.
///
/// # Safety
/// `store` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_store_is_finalized(store: *const PsStore) -> bool {
    store.as_ref().is_some_and(|h| h.store.is_finalized())
}

fn parse_kind(kind: &str) -> Result<EntityKind, PsStatus> {
    EntityKind::parse(kind).map_err(fail)
}

/// Exact-match lookup over encrypted values. On success `*out_ids` holds
/// `*out_len` ascending doc ids; free with `ps_ids_free`.
///
/// # Safety
/// All pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ps_store_lookup(
    store: *const PsStore,
    keys: *const PsKeys,
    kind: *const c_char,
    value: *const c_char,
    out_ids: *mut *mut u64,
    out_len: *mut usize,
) -> PsStatus {
    if out_ids.is_null() || out_len.is_null() {
        return fail_with(PsStatus::NullArgument, "output pointers are null");
    }
    let Some(handle) = store.as_ref() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    let Some(keys) = keys.as_ref() else {
        return fail_with(PsStatus::NullArgument, "keys is null");
    };
    let kind = match read_str(kind, "kind") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let kind = match parse_kind(kind) {
        Ok(k) => k,
        Err(status) => return status,
    };
    let value = match read_str(value, "value") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match handle.store.lookup_sensitive(kind, value, &keys.inner) {
        Ok(ids) => {
            let mut ids = ids.into_boxed_slice();
            *out_len = ids.len();
            *out_ids = ids.as_mut_ptr();
            std::mem::forget(ids);
            PsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Frees an id array returned by `ps_store_lookup`.
///
/// # Safety
/// `(ptr, len)` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ps_ids_free(ptr: *mut u64, len: usize) {
    if !ptr.is_null() {
        drop(Vec::from_raw_parts(ptr, len, len));
    }
}

fn give_hits(hits: Vec<PsHit>, out_hits: *mut *mut PsHit, out_len: *mut usize) -> PsStatus {
    let mut hits = hits.into_boxed_slice();
    unsafe {
        *out_len = hits.len();
        *out_hits = hits.as_mut_ptr();
    }
    std::mem::forget(hits);
    PsStatus::Ok
}

/// Clustered ranked search over redacted text. Free results with
/// `ps_hits_free`.
///
/// # Safety
/// All pointers must be valid; `query` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ps_store_search(
    store: *const PsStore,
    query: *const c_char,
    top_n: usize,
    out_hits: *mut *mut PsHit,
    out_len: *mut usize,
) -> PsStatus {
    if out_hits.is_null() || out_len.is_null() {
        return fail_with(PsStatus::NullArgument, "output pointers are null");
    }
    let Some(handle) = store.as_ref() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    let query = match read_str(query, "query") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match handle.store.search_nonsensitive(query, top_n) {
        Ok(hits) => give_hits(
            hits.into_iter()
                .map(|(doc_id, score)| PsHit {
                    doc_id,
                    score,
                    exact: 0,
                    ranked: 1,
                })
                .collect(),
            out_hits,
            out_len,
        ),
        Err(e) => fail(e),
    }
}

/// Routes a free-form query: sensitive terms to blind-index lookup, prose
/// to ranked search, mixed queries to both. `keys` may be null for queries
/// without sensitive terms. Free results with `ps_hits_free`.
///
/// # Safety
/// Pointers must be valid; `keys` and `out_mode` may be null.
#[no_mangle]
pub unsafe extern "C" fn ps_store_query(
    store: *const PsStore,
    keys: *const PsKeys,
    text: *const c_char,
    top_n: usize,
    out_mode: *mut PsQueryMode,
    out_hits: *mut *mut PsHit,
    out_len: *mut usize,
) -> PsStatus {
    if out_hits.is_null() || out_len.is_null() {
        return fail_with(PsStatus::NullArgument, "output pointers are null");
    }
    let Some(handle) = store.as_ref() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    let text = match read_str(text, "text") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let plan = plan_query(text, &handle.catalog);
    if !out_mode.is_null() {
        *out_mode = match plan.mode {
            QueryMode::Exact => PsQueryMode::Exact,
            QueryMode::Ranked => PsQueryMode::Ranked,
            QueryMode::Hybrid => PsQueryMode::Hybrid,
        };
    }
    let keys = keys.as_ref().map(|k| &k.inner);
    match execute_opts(&plan, keys, &handle.store, top_n, ExecOptions::default()) {
        Ok(results) => give_hits(
            results
                .hits
                .into_iter()
                .map(|h| PsHit {
                    doc_id: h.doc_id,
                    score: h.score,
                    exact: h.exact.into(),
                    ranked: h.ranked.into(),
                })
                .collect(),
            out_hits,
            out_len,
        ),
        Err(e) => fail(e),
    }
}

/// Frees a hit array.
///
/// # Safety
/// `(ptr, len)` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ps_hits_free(ptr: *mut PsHit, len: usize) {
    if !ptr.is_null() {
        drop(Vec::from_raw_parts(ptr, len, len));
    }
}

/// Decrypts one stored entity back to its original text. Caller frees the
/// string.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_store_reveal(
    store: *const PsStore,
    keys: *const PsKeys,
    doc_id: u64,
    ordinal: u32,
    out: *mut *mut c_char,
) -> PsStatus {
    if out.is_null() {
        return fail_with(PsStatus::NullArgument, "out is null");
    }
    let Some(handle) = store.as_ref() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    let Some(keys) = keys.as_ref() else {
        return fail_with(PsStatus::NullArgument, "keys is null");
    };
    match handle.store.reveal(doc_id, ordinal, &keys.inner) {
        Ok(value) => {
            *out = give_string(value);
            PsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Returns a document's redacted text. Caller frees the string.
///
/// # Safety
/// `store` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ps_store_record_text(
    store: *const PsStore,
    doc_id: u64,
    out: *mut *mut c_char,
) -> PsStatus {
    if out.is_null() {
        return fail_with(PsStatus::NullArgument, "out is null");
    }
    let Some(handle) = store.as_ref() else {
        return fail_with(PsStatus::NullArgument, "store is null");
    };
    match handle.store.record(doc_id) {
        Some(record) => {
            *out = give_string(record.redacted_text.clone());
            PsStatus::Ok
        }
        None => fail(Error::NotFound(format!("doc {doc_id}"))),
    }
}
