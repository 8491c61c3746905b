//! Exercises the C ABI end to end: handle lifecycle, status codes, and the
//! generated header.

use std::ffi::{CStr, CString};
use std::ptr;

use privshard_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe {
        let ptr = ps_last_error();
        assert!(!ptr.is_null(), "no error message recorded");
        let msg = CStr::from_ptr(ptr).to_string_lossy().into_owned();
        ps_string_free(ptr);
        msg
    }
}

/// keys + store with two ingested docs, finalized.
unsafe fn fixture() -> (*mut PsKeys, *mut PsStore) {
    let mut keys: *mut PsKeys = ptr::null_mut();
    assert_eq!(ps_keys_generate(&mut keys), PsStatus::Ok);

    let mut store: *mut PsStore = ptr::null_mut();
    assert_eq!(ps_store_create(keys, ptr::null(), &mut store), PsStatus::Ok);

    let mut doc_id = u64::MAX;
    let text = c("invoices for a@b.com are overdue");
    assert_eq!(ps_store_ingest(store, keys, text.as_ptr(), &mut doc_id), PsStatus::Ok);
    assert_eq!(doc_id, 0);
    let text = c("gdpr compliance policy draft");
    assert_eq!(ps_store_ingest(store, keys, text.as_ptr(), &mut doc_id), PsStatus::Ok);
    assert_eq!(doc_id, 1);

    assert_eq!(ps_store_finalize(store, 1, 7), PsStatus::Ok);
    (keys, store)
}

#[test]
fn lifecycle_lookup_and_reveal() {
    unsafe {
        let (keys, store) = fixture();
        assert_eq!(ps_store_doc_count(store), 2);
        assert!(ps_store_is_finalized(store));

        let kind = c("EMAIL");
        let value = c("A@B.COM");
        let mut ids: *mut u64 = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(
            ps_store_lookup(store, keys, kind.as_ptr(), value.as_ptr(), &mut ids, &mut len),
            PsStatus::Ok
        );
        assert_eq!(len, 1);
        assert_eq!(*ids, 0);
        ps_ids_free(ids, len);

        let mut revealed: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(ps_store_reveal(store, keys, 0, 0, &mut revealed), PsStatus::Ok);
        assert_eq!(CStr::from_ptr(revealed).to_str().unwrap(), "a@b.com");
        ps_string_free(revealed);

        let mut text: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(ps_store_record_text(store, 0, &mut text), PsStatus::Ok);
        let redacted = CStr::from_ptr(text).to_str().unwrap().to_string();
        ps_string_free(text);
        assert!(redacted.contains("[[EMAIL#0]]"));
        assert!(!redacted.contains("a@b.com"));

        ps_store_free(store);
        ps_keys_free(keys);
    }
}

#[test]
fn search_and_query_routing() {
    unsafe {
        let (keys, store) = fixture();

        let query = c("gdpr compliance policy");
        let mut hits: *mut PsHit = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(
            ps_store_search(store, query.as_ptr(), 10, &mut hits, &mut len),
            PsStatus::Ok
        );
        assert!(len >= 1);
        assert_eq!((*hits).doc_id, 1);
        ps_hits_free(hits, len);

        // Hybrid routing through the full planner.
        let text = c("invoices for a@b.com");
        let mut mode = PsQueryMode::Ranked;
        let mut hits: *mut PsHit = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(
            ps_store_query(store, keys, text.as_ptr(), 10, &mut mode, &mut hits, &mut len),
            PsStatus::Ok
        );
        assert_eq!(mode, PsQueryMode::Hybrid);
        assert!(len >= 1);
        let first = *hits;
        assert_eq!(first.doc_id, 0);
        assert_eq!(first.exact, 1);
        ps_hits_free(hits, len);

        // Ranked queries need no keys.
        let text = c("compliance draft");
        let mut mode = PsQueryMode::Exact;
        let mut hits: *mut PsHit = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(
            ps_store_query(store, ptr::null(), text.as_ptr(), 10, &mut mode, &mut hits, &mut len),
            PsStatus::Ok
        );
        assert_eq!(mode, PsQueryMode::Ranked);
        ps_hits_free(hits, len);

        // Sensitive query without keys is refused.
        let text = c("a@b.com");
        let mut hits: *mut PsHit = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(
            ps_store_query(store, ptr::null(), text.as_ptr(), 10, ptr::null_mut(), &mut hits, &mut len),
            PsStatus::MissingKeys
        );
        assert!(last_error().contains("key bundle"));

        ps_store_free(store);
        ps_keys_free(keys);
    }
}

#[test]
fn save_open_roundtrip() {
    unsafe {
        let (keys, store) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let dir_c = c(dir.path().to_str().unwrap());
        assert_eq!(ps_store_save(store, dir_c.as_ptr()), PsStatus::Ok);
        ps_store_free(store);

        let mut reopened: *mut PsStore = ptr::null_mut();
        assert_eq!(ps_store_open(dir_c.as_ptr(), &mut reopened), PsStatus::Ok);
        assert_eq!(ps_store_doc_count(reopened), 2);
        assert!(ps_store_is_finalized(reopened));

        let kind = c("EMAIL");
        let value = c("a@b.com");
        let mut ids: *mut u64 = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(
            ps_store_lookup(reopened, keys, kind.as_ptr(), value.as_ptr(), &mut ids, &mut len),
            PsStatus::Ok
        );
        assert_eq!(len, 1);
        ps_ids_free(ids, len);

        ps_store_free(reopened);
        ps_keys_free(keys);
    }
}

#[test]
fn status_codes_for_error_paths() {
    unsafe {
        // Null arguments.
        assert_eq!(ps_keys_generate(ptr::null_mut()), PsStatus::NullArgument);
        let mut store: *mut PsStore = ptr::null_mut();
        assert_eq!(
            ps_store_create(ptr::null(), ptr::null(), &mut store),
            PsStatus::NullArgument
        );

        let (keys, store) = fixture();

        // Sealed store rejects inserts.
        let text = c("more");
        assert_eq!(
            ps_store_ingest(store, keys, text.as_ptr(), ptr::null_mut()),
            PsStatus::Sealed
        );

        // Wrong keys are an authorization error on lookup, an
        // authentication error on reveal.
        let mut other: *mut PsKeys = ptr::null_mut();
        assert_eq!(ps_keys_generate(&mut other), PsStatus::Ok);
        let kind = c("EMAIL");
        let value = c("a@b.com");
        let mut ids: *mut u64 = ptr::null_mut();
        let mut len = 0usize;
        assert_eq!(
            ps_store_lookup(store, other, kind.as_ptr(), value.as_ptr(), &mut ids, &mut len),
            PsStatus::KeyMismatch
        );
        let mut revealed: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            ps_store_reveal(store, other, 0, 0, &mut revealed),
            PsStatus::Authentication
        );

        // Unknown entities and kinds.
        assert_eq!(
            ps_store_reveal(store, keys, 0, 99, &mut revealed),
            PsStatus::NotFound
        );
        let bad_kind = c("NOT_A_KIND");
        assert_eq!(
            ps_store_lookup(store, keys, bad_kind.as_ptr(), value.as_ptr(), &mut ids, &mut len),
            PsStatus::Format
        );

        // Bad UTF-8 in a string argument.
        let bad = [0xFFu8, 0xFE, 0x00];
        assert_eq!(
            ps_store_ingest(store, keys, bad.as_ptr().cast(), ptr::null_mut()),
            PsStatus::InvalidUtf8
        );

        // Opening a missing directory.
        let missing = c("/no/such/dir");
        let mut opened: *mut PsStore = ptr::null_mut();
        assert_eq!(ps_store_open(missing.as_ptr(), &mut opened), PsStatus::NotFound);

        ps_keys_free(other);
        ps_store_free(store);
        ps_keys_free(keys);
    }
}

#[test]
fn fingerprint_is_stable_hex() {
    unsafe {
        let mut keys: *mut PsKeys = ptr::null_mut();
        assert_eq!(ps_keys_generate(&mut keys), PsStatus::Ok);
        let a = ps_keys_fingerprint(keys);
        let b = ps_keys_fingerprint(keys);
        let fa = CStr::from_ptr(a).to_str().unwrap().to_string();
        let fb = CStr::from_ptr(b).to_str().unwrap().to_string();
        ps_string_free(a);
        ps_string_free(b);
        assert_eq!(fa, fb);
        assert_eq!(fa.len(), 16);
        assert!(fa.chars().all(|c| c.is_ascii_hexdigit()));
        ps_keys_free(keys);
    }
}

#[test]
fn header_is_generated_with_the_public_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/privshard.h");
    let text = std::fs::read_to_string(&header).expect("header generated at build time");
    for symbol in [
        "PRIVSHARD_H",
        "typedef struct PsKeys PsKeys;",
        "typedef struct PsStore PsStore;",
        "PsStatus",
        "ps_keys_generate",
        "ps_store_ingest",
        "ps_store_finalize",
        "ps_store_lookup",
        "ps_store_search",
        "ps_store_query",
        "ps_store_reveal",
        "ps_hits_free",
        "ps_last_error",
    ] {
        assert!(text.contains(symbol), "header missing {symbol}");
    }
}
