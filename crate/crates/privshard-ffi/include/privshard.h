/* C interface for the privshard document store. Generated by cbindgen; do not edit. */

#ifndef PRIVSHARD_H
#define PRIVSHARD_H



#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code for every fallible call.
 */
typedef enum PsStatus {
  PsStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  PsStatus_NullArgument = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PsStatus_InvalidUtf8 = 2,
  /**
   * An argument violated a precondition (bad k, empty corpus, ...).
   */
  PsStatus_InvalidArgument = 3,
  /**
   * Decryption failed: wrong key or tampered data.
   */
  PsStatus_Authentication = 4,
  /**
   * The key bundle does not match the store fingerprint.
   */
  PsStatus_KeyMismatch = 5,
  /**
   * The query carries sensitive terms but no keys were supplied.
   */
  PsStatus_MissingKeys = 6,
  PsStatus_NotFound = 7,
  /**
   * The store is finalized; inserts are rejected.
   */
  PsStatus_Sealed = 8,
  /**
   * The operation requires a finalized store.
   */
  PsStatus_NotFinalized = 9,
  PsStatus_Io = 10,
  /**
   * A file or pattern failed to parse.
   */
  PsStatus_Format = 11,
  PsStatus_Internal = 12,
} PsStatus;

/**
 * Query routing mode, mirroring the planner's decision.
 */
typedef enum PsQueryMode {
  PsQueryMode_Exact = 0,
  PsQueryMode_Ranked = 1,
  PsQueryMode_Hybrid = 2,
} PsQueryMode;

/**
 * Opaque key bundle handle.
 */
typedef struct PsKeys PsKeys;

/**
 * Opaque store handle. Carries the detector catalog used for ingestion
 * and query planning.
 */
typedef struct PsStore PsStore;

/**
 * One search or query result.
 */
typedef struct PsHit {
  uint64_t doc_id;
  double score;
  /**
   * 1 when the document matched a sensitive term exactly.
   */
  uint8_t exact;
  /**
   * 1 when the document came from ranked similarity search.
   */
  uint8_t ranked;
} PsHit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the last error message raised on this thread, or null. The
 * caller frees it with `ps_string_free`.
 */
char *ps_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer previously returned by this library and
 * not yet freed.
 */
void ps_string_free(char *s);

/**
 * Generates a fresh random key bundle.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_keys_generate(struct PsKeys **out);

/**
 * Loads a 48-byte key file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be valid.
 */
enum PsStatus ps_keys_load(const char *path, struct PsKeys **out);

/**
 * Writes the 48-byte key file with owner-only permissions.
 *
 * # Safety
 * `keys` must be a live handle; `path` a valid NUL-terminated string.
 */
enum PsStatus ps_keys_save(const struct PsKeys *keys, const char *path);

/**
 * Returns the key fingerprint as lowercase hex. Caller frees.
 *
 * # Safety
 * `keys` must be a live handle.
 */
char *ps_keys_fingerprint(const struct PsKeys *keys);

/**
 * Destroys a key handle.
 *
 * # Safety
 * `keys` must be null or a handle from this library, not yet freed.
 */
void ps_keys_free(struct PsKeys *keys);

/**
 * Creates an empty store bound to the given keys. `catalog_path` may be
 * null for the built-in catalog, or point to a `KIND<TAB>regex` file.
 *
 * # Safety
 * Pointer arguments must be valid; `catalog_path` may be null.
 */
enum PsStatus ps_store_create(const struct PsKeys *keys,
                              const char *catalog_path,
                              struct PsStore **out);

/**
 * Loads a store directory written by `ps_store_save`.
 *
 * # Safety
 * `dir` must be a valid NUL-terminated string; `out` must be valid.
 */
enum PsStatus ps_store_open(const char *dir, struct PsStore **out);

/**
 * Writes `store.jsonl` and `manifest.json` into a directory.
 *
 * # Safety
 * `store` must be a live handle; `dir` a valid NUL-terminated string.
 */
enum PsStatus ps_store_save(const struct PsStore *store, const char *dir);

/**
 * Destroys a store handle.
 *
 * # Safety
 * `store` must be null or a handle from this library, not yet freed.
 */
void ps_store_free(struct PsStore *store);

/**
 * Ingests one document; writes the new doc id to `out_doc_id`.
 *
 * # Safety
 * All pointers must be valid; `text` NUL-terminated.
 */
enum PsStatus ps_store_ingest(struct PsStore *store,
                              const struct PsKeys *keys,
                              const char *text,
                              uint64_t *out_doc_id);

/**
 * Fits vectors and clusters; seals the store against inserts.
 *
 * # Safety
 * `store` must be a live handle.
 */
enum PsStatus ps_store_finalize(struct PsStore *store, uint64_t k, uint64_t seed);

/**
 * Number of stored documents.
 *
 * # Safety
 * `store` must be a live handle.
 */
uint64_t ps_store_doc_count(const struct PsStore *store);

/**
 * Whether the store has been finalized.
 *
 * # Safety
 * `store` must be a live handle.
 */
bool ps_store_is_finalized(const struct PsStore *store);

/**
 * Exact-match lookup over encrypted values. On success `*out_ids` holds
 * `*out_len` ascending doc ids; free with `ps_ids_free`.
 *
 * # Safety
 * All pointers must be valid; strings NUL-terminated.
 */
enum PsStatus ps_store_lookup(const struct PsStore *store,
                              const struct PsKeys *keys,
                              const char *kind,
                              const char *value,
                              uint64_t **out_ids,
                              uintptr_t *out_len);

/**
 * Frees an id array returned by `ps_store_lookup`.
 *
 * # Safety
 * `(ptr, len)` must come from this library and not be freed twice.
 */
void ps_ids_free(uint64_t *ptr, uintptr_t len);

/**
 * Clustered ranked search over redacted text. Free results with
 * `ps_hits_free`.
 *
 * # Safety
 * All pointers must be valid; `query` NUL-terminated.
 */
enum PsStatus ps_store_search(const struct PsStore *store,
                              const char *query,
                              uintptr_t top_n,
                              struct PsHit **out_hits,
                              uintptr_t *out_len);

/**
 * Routes a free-form query: sensitive terms to blind-index lookup, prose
 * to ranked search, mixed queries to both. `keys` may be null for queries
 * without sensitive terms. Free results with `ps_hits_free`.
 *
 * # Safety
 * Pointers must be valid; `keys` and `out_mode` may be null.
 */
enum PsStatus ps_store_query(const struct PsStore *store,
                             const struct PsKeys *keys,
                             const char *text,
                             uintptr_t top_n,
                             enum PsQueryMode *out_mode,
                             struct PsHit **out_hits,
                             uintptr_t *out_len);

/**
 * Frees a hit array.
 *
 * # Safety
 * `(ptr, len)` must come from this library and not be freed twice.
 */
void ps_hits_free(struct PsHit *ptr, uintptr_t len);

/**
 * Decrypts one stored entity back to its original text. Caller frees the
 * string.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PsStatus ps_store_reveal(const struct PsStore *store,
                              const struct PsKeys *keys,
                              uint64_t doc_id,
                              uint32_t ordinal,
                              char **out);

/**
 * Returns a document's redacted text. Caller frees the string.
 *
 * # Safety
 * `store` must be a live handle; `out` valid.
 */
enum PsStatus ps_store_record_text(const struct PsStore *store, uint64_t doc_id, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRIVSHARD_H */
