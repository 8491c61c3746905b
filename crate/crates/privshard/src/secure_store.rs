//! The secure document store: ingestion (detect → encrypt → blind-index →
//! redact), finalization (vectorize → cluster), persistence, and the two
//! lookup primitives.
//!
//! On disk a store is a directory holding `store.jsonl` (one record per
//! line, binary fields base64, digests lowercase hex) and `manifest.json`
//! (format version, key fingerprint, IDF formula tag, clustering parameters,
//! centroids, vocabulary, catalog hash). Serialization is canonical: saving
//! a loaded store reproduces the bytes exactly.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cluster_engine::{kmeans_fit, ranked_search_probe, ClusterModel};
use crate::crypto_vault::{
    blind_index, decrypt_value, encrypt_value, Ciphertext, KeyBundle, DIGEST_LEN, NONCE_LEN,
    TAG_LEN,
};
use crate::entity_catalog::{Detector, EntityKind};
use crate::error::{Error, Result};
use crate::vector_index::{TfIdfVector, VocabEntry, Vocabulary, IDF_FORMULA};

/// Store format version written to the manifest.
pub const FORMAT_VERSION: u32 = 1;
/// Records file name inside a store directory.
pub const STORE_FILE: &str = "store.jsonl";
/// Manifest file name inside a store directory.
pub const MANIFEST_FILE: &str = "manifest.json";

const MAX_KMEANS_ITER: usize = 100;

/// One encrypted entity of a stored document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredEntity {
    pub kind: EntityKind,
    pub ordinal: u32,
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
    pub blind_index: [u8; DIGEST_LEN],
}

/// A stored document: redacted text, encrypted entities, and (after
/// finalize) its TF-IDF vector and cluster id.
#[derive(Debug, Clone)]
pub struct SecureRecord {
    pub doc_id: u64,
    pub redacted_text: String,
    pub entities: Vec<StoredEntity>,
    pub vector: TfIdfVector,
    pub cluster: u32,
}

/// Cumulative per-phase build cost, separating cipher time from keyed-hash
/// time across all ingested entities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildTiming {
    pub enc_nanos: u64,
    pub mac_nanos: u64,
}

/// The `manifest.json` contents. Clustering fields are present only once the
/// store has been finalized.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StoreManifest {
    pub version: u32,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroids: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<VocabWire>>,
    pub catalog_hash: String,
    pub records: u64,
}

impl StoreManifest {
    pub fn is_finalized(&self) -> bool {
        self.centroids.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct VocabWire {
    pub term: String,
    pub id: u32,
    pub df: u32,
}

struct Finalized {
    vocabulary: Vocabulary,
    model: ClusterModel,
    vectors: Vec<TfIdfVector>,
    k: usize,
    seed: u64,
}

/// An in-memory store. Building is single-writer; a finalized store is
/// immutable and safe to share across threads.
pub struct SecureStore {
    fingerprint: String,
    catalog_hash: String,
    records: Vec<SecureRecord>,
    index: HashMap<[u8; DIGEST_LEN], Vec<(u64, u32)>>,
    finalized: Option<Finalized>,
    build_timing: BuildTiming,
    index_probes: AtomicU64,
}

impl fmt::Debug for SecureStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SecureStore")
            .field("records", &self.records.len())
            .field("finalized", &self.finalized.is_some())
            .field("fingerprint", &self.fingerprint)
            .finish()
    }
}

impl SecureStore {
    /// Opens an empty store bound to a key bundle and a detector catalog.
    pub fn new(keys: &KeyBundle, catalog_hash: String) -> SecureStore {
        SecureStore {
            fingerprint: keys.fingerprint_hex(),
            catalog_hash,
            records: Vec::new(),
            index: HashMap::new(),
            finalized: None,
            build_timing: BuildTiming::default(),
            index_probes: AtomicU64::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized.is_some()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn catalog_hash(&self) -> &str {
        &self.catalog_hash
    }

    pub fn record(&self, doc_id: u64) -> Option<&SecureRecord> {
        self.records.get(doc_id as usize)
    }

    pub fn records(&self) -> &[SecureRecord] {
        &self.records
    }

    pub fn build_timing(&self) -> BuildTiming {
        self.build_timing
    }

    /// Number of blind-index probes served; a query with no sensitive terms
    /// must leave this untouched.
    pub fn index_probes(&self) -> u64 {
        self.index_probes.load(Ordering::Relaxed)
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        self.finalized.as_ref().map(|f| &f.vocabulary)
    }

    pub fn model(&self) -> Option<&ClusterModel> {
        self.finalized.as_ref().map(|f| &f.model)
    }

    /// Rejects a key bundle whose fingerprint does not match the one the
    /// store was built with.
    pub fn verify_keys(&self, keys: &KeyBundle) -> Result<()> {
        let actual = keys.fingerprint_hex();
        if actual != self.fingerprint {
            return Err(Error::KeyMismatch {
                expected: self.fingerprint.clone(),
                actual,
            });
        }
        Ok(())
    }

    /// Ingests one document: detects entities, encrypts and blind-indexes
    /// each value, replaces each span with a `[[KIND#ordinal]]` placeholder,
    /// and appends the record. Any failure leaves the store unchanged.
    pub fn ingest_document(
        &mut self,
        text: &str,
        keys: &KeyBundle,
        detector: &dyn Detector,
    ) -> Result<u64> {
        if self.finalized.is_some() {
            return Err(Error::StoreSealed);
        }
        self.verify_keys(keys)?;

        let spans = detector.detect(text);
        let mut entities = Vec::with_capacity(spans.len());
        let mut enc_nanos = 0u64;
        let mut mac_nanos = 0u64;

        for (ordinal, span) in spans.iter().enumerate() {
            let t0 = Instant::now();
            let ct: Ciphertext = encrypt_value(&span.value, keys)?;
            enc_nanos += t0.elapsed().as_nanos() as u64;

            let t1 = Instant::now();
            let digest = blind_index(&span.value, span.kind, keys);
            mac_nanos += t1.elapsed().as_nanos() as u64;

            entities.push(StoredEntity {
                kind: span.kind,
                ordinal: ordinal as u32,
                nonce: ct.nonce,
                ciphertext: ct.body,
                tag: ct.tag,
                blind_index: digest.digest,
            });
        }

        let redacted_text = redact(text, &spans);
        let doc_id = self.records.len() as u64;

        // Commit point: nothing above mutated the store.
        for entity in &entities {
            self.index
                .entry(entity.blind_index)
                .or_default()
                .push((doc_id, entity.ordinal));
        }
        self.records.push(SecureRecord {
            doc_id,
            redacted_text,
            entities,
            vector: TfIdfVector::zero(),
            cluster: 0,
        });
        self.build_timing.enc_nanos += enc_nanos;
        self.build_timing.mac_nanos += mac_nanos;
        Ok(doc_id)
    }

    /// Fits the vocabulary over all redacted texts, vectorizes every record,
    /// clusters with k-means, and seals the store against further inserts.
    /// Re-finalizing with the same seed reproduces the same manifest.
    pub fn finalize(&mut self, k: usize, seed: u64) -> Result<StoreManifest> {
        if self.records.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot finalize an empty store".into(),
            ));
        }
        if k > self.records.len() {
            return Err(Error::InvalidArgument(format!(
                "k ({k}) exceeds the record count ({})",
                self.records.len()
            )));
        }

        let texts: Vec<&str> = self.records.iter().map(|r| r.redacted_text.as_str()).collect();
        let vocabulary = Vocabulary::fit(&texts)?;
        let vectors: Vec<TfIdfVector> = texts.iter().map(|t| vocabulary.vectorize(t)).collect();
        let model = kmeans_fit(&vectors, vocabulary.len(), k, MAX_KMEANS_ITER, seed)?;

        for (i, record) in self.records.iter_mut().enumerate() {
            record.vector = vectors[i].clone();
            record.cluster = model.assignment(i);
        }
        self.finalized = Some(Finalized {
            vocabulary,
            model,
            vectors,
            k,
            seed,
        });
        Ok(self.manifest())
    }

    /// Exact-match lookup over encrypted values: hashes the canonicalized
    /// query under the index key and reads the blind-index map. Performs no
    /// decryption; returns ascending, deduplicated doc ids.
    pub fn lookup_sensitive(
        &self,
        kind: EntityKind,
        value: &str,
        keys: &KeyBundle,
    ) -> Result<Vec<u64>> {
        if self.finalized.is_none() {
            return Err(Error::NotFinalized);
        }
        self.verify_keys(keys)?;
        self.index_probes.fetch_add(1, Ordering::Relaxed);

        let digest = blind_index(value, kind, keys);
        let mut ids: Vec<u64> = self
            .index
            .get(&digest.digest)
            .map(|hits| hits.iter().map(|(doc, _)| *doc).collect())
            .unwrap_or_default();
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }

    /// Ranked similarity search over the redacted text, restricted to the
    /// query's nearest cluster.
    pub fn search_nonsensitive(&self, query: &str, top_n: usize) -> Result<Vec<(u64, f64)>> {
        self.search_nonsensitive_probe(query, top_n, 1)
    }

    /// As [`Self::search_nonsensitive`], searching the `probe` nearest
    /// clusters.
    pub fn search_nonsensitive_probe(
        &self,
        query: &str,
        top_n: usize,
        probe: usize,
    ) -> Result<Vec<(u64, f64)>> {
        let fin = self.finalized.as_ref().ok_or(Error::NotFinalized)?;
        let q = fin.vocabulary.vectorize(query);
        let out = ranked_search_probe(&q, &fin.model, &fin.vectors, top_n, probe);
        Ok(out.hits.into_iter().map(|(doc, s)| (doc as u64, s)).collect())
    }

    /// Decrypts one stored entity back to its original token text.
    pub fn reveal(&self, doc_id: u64, ordinal: u32, keys: &KeyBundle) -> Result<String> {
        let record = self
            .record(doc_id)
            .ok_or_else(|| Error::NotFound(format!("doc {doc_id}")))?;
        let entity = record
            .entities
            .iter()
            .find(|e| e.ordinal == ordinal)
            .ok_or_else(|| Error::NotFound(format!("doc {doc_id} entity {ordinal}")))?;
        let ct = Ciphertext {
            nonce: entity.nonce,
            body: entity.ciphertext.clone(),
            tag: entity.tag,
        };
        decrypt_value(&ct, keys)
    }

    /// The manifest describing the current state.
    pub fn manifest(&self) -> StoreManifest {
        let fin = self.finalized.as_ref();
        StoreManifest {
            version: FORMAT_VERSION,
            fingerprint: self.fingerprint.clone(),
            idf: fin.map(|_| IDF_FORMULA.to_string()),
            k: fin.map(|f| f.k),
            seed: fin.map(|f| f.seed),
            centroids: fin.map(|f| f.model.centroids().to_vec()),
            vocabulary: fin.map(|f| {
                f.vocabulary
                    .entries()
                    .iter()
                    .enumerate()
                    .map(|(id, e)| VocabWire {
                        term: e.term.clone(),
                        id: id as u32,
                        df: e.df,
                    })
                    .collect()
            }),
            catalog_hash: self.catalog_hash.clone(),
            records: self.records.len() as u64,
        }
    }

    /// Writes `store.jsonl` and `manifest.json` into a directory, creating
    /// it if needed.
    pub fn save_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(STORE_FILE))?);
        for record in &self.records {
            let wire = RecordWire::from_record(record);
            serde_json::to_writer(&mut out, &wire)
                .map_err(|e| Error::Format(format!("record serialization: {e}")))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        let manifest = serde_json::to_string_pretty(&self.manifest())
            .map_err(|e| Error::Format(format!("manifest serialization: {e}")))?;
        std::fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
        Ok(())
    }

    /// Loads a store directory written by [`Self::save_to_dir`].
    pub fn load_from_dir(dir: &Path) -> Result<SecureStore> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest: StoreManifest = serde_json::from_str(
            &std::fs::read_to_string(&manifest_path)
                .map_err(|_| Error::NotFound(format!("manifest {}", manifest_path.display())))?,
        )
        .map_err(|e| Error::Format(format!("manifest parse: {e}")))?;
        if manifest.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported store format version {}",
                manifest.version
            )));
        }

        let file = std::fs::File::open(dir.join(STORE_FILE))?;
        let mut records = Vec::new();
        let mut index: HashMap<[u8; DIGEST_LEN], Vec<(u64, u32)>> = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let wire: RecordWire = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("record line {}: {e}", lineno + 1)))?;
            let record = wire.into_record()?;
            if record.doc_id != records.len() as u64 {
                return Err(Error::Format(format!(
                    "record line {}: doc id {} out of sequence",
                    lineno + 1,
                    record.doc_id
                )));
            }
            for entity in &record.entities {
                index
                    .entry(entity.blind_index)
                    .or_default()
                    .push((record.doc_id, entity.ordinal));
            }
            records.push(record);
        }
        if records.len() as u64 != manifest.records {
            return Err(Error::Format(format!(
                "manifest says {} records, store has {}",
                manifest.records,
                records.len()
            )));
        }

        let finalized = match (&manifest.centroids, &manifest.vocabulary) {
            (Some(centroids), Some(vocab)) => {
                if manifest.idf.as_deref() != Some(IDF_FORMULA) {
                    return Err(Error::Format(format!(
                        "unsupported idf formula {:?}",
                        manifest.idf
                    )));
                }
                for (pos, w) in vocab.iter().enumerate() {
                    if w.id != pos as u32 {
                        return Err(Error::Format(format!(
                            "vocabulary id {} out of sequence at position {pos}",
                            w.id
                        )));
                    }
                }
                let entries: Vec<VocabEntry> = vocab
                    .iter()
                    .map(|w| VocabEntry {
                        term: w.term.clone(),
                        df: w.df,
                    })
                    .collect();
                let vocabulary = Vocabulary::from_entries(entries, records.len() as u32);
                let assignments: Vec<u32> = records.iter().map(|r| r.cluster).collect();
                if let Some(&bad) = assignments.iter().find(|&&c| c as usize >= centroids.len()) {
                    return Err(Error::Format(format!(
                        "record cluster id {bad} exceeds centroid count {}",
                        centroids.len()
                    )));
                }
                let model = ClusterModel::from_parts(centroids.clone(), assignments);
                let vectors: Vec<TfIdfVector> =
                    records.iter().map(|r| r.vector.clone()).collect();
                Some(Finalized {
                    vocabulary,
                    model,
                    vectors,
                    k: manifest.k.unwrap_or(centroids.len()),
                    seed: manifest.seed.unwrap_or(0),
                })
            }
            (None, None) => None,
            _ => {
                return Err(Error::Format(
                    "manifest has partial clustering state".into(),
                ))
            }
        };

        Ok(SecureStore {
            fingerprint: manifest.fingerprint,
            catalog_hash: manifest.catalog_hash,
            records,
            index,
            finalized,
            build_timing: BuildTiming::default(),
            index_probes: AtomicU64::new(0),
        })
    }
}

/// Replaces each span's cleaned region with `[[KIND#ordinal]]`, ordinals
/// counted per document from 0, left to right.
fn redact(text: &str, spans: &[crate::entity_catalog::EntitySpan]) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0usize;
    for (ordinal, span) in spans.iter().enumerate() {
        out.extend(&chars[cursor..span.char_start]);
        out.push_str(&format!("[[{}#{}]]", span.kind.as_str(), ordinal));
        cursor = span.char_end;
    }
    out.extend(&chars[cursor..]);
    out
}

#[derive(Serialize, Deserialize)]
struct RecordWire {
    id: u64,
    text: String,
    ents: Vec<EntWire>,
    vec: SparseVecWire,
    cl: u32,
}

#[derive(Serialize, Deserialize)]
struct EntWire {
    kind: String,
    ord: u32,
    n64: String,
    c64: String,
    t64: String,
    ix: String,
}

impl RecordWire {
    fn from_record(record: &SecureRecord) -> RecordWire {
        RecordWire {
            id: record.doc_id,
            text: record.redacted_text.clone(),
            ents: record
                .entities
                .iter()
                .map(|e| EntWire {
                    kind: e.kind.as_str().to_string(),
                    ord: e.ordinal,
                    n64: BASE64.encode(e.nonce),
                    c64: BASE64.encode(&e.ciphertext),
                    t64: BASE64.encode(e.tag),
                    ix: hex::encode(e.blind_index),
                })
                .collect(),
            vec: SparseVecWire(record.vector.entries().to_vec()),
            cl: record.cluster,
        }
    }

    fn into_record(self) -> Result<SecureRecord> {
        let entities = self
            .ents
            .into_iter()
            .map(|e| {
                let nonce: [u8; NONCE_LEN] = decode_b64(&e.n64, "nonce")?
                    .try_into()
                    .map_err(|_| Error::Format("nonce must be 12 bytes".into()))?;
                let tag: [u8; TAG_LEN] = decode_b64(&e.t64, "tag")?
                    .try_into()
                    .map_err(|_| Error::Format("tag must be 16 bytes".into()))?;
                let digest = hex::decode(&e.ix)
                    .map_err(|err| Error::Format(format!("digest hex: {err}")))?;
                let blind_index: [u8; DIGEST_LEN] = digest
                    .try_into()
                    .map_err(|_| Error::Format("digest must be 32 bytes".into()))?;
                Ok(StoredEntity {
                    kind: EntityKind::parse(&e.kind)?,
                    ordinal: e.ord,
                    nonce,
                    ciphertext: decode_b64(&e.c64, "ciphertext")?,
                    tag,
                    blind_index,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SecureRecord {
            doc_id: self.id,
            redacted_text: self.text,
            entities,
            vector: TfIdfVector::from_entries(self.vec.0),
            cluster: self.cl,
        })
    }
}

fn decode_b64(s: &str, field: &str) -> Result<Vec<u8>> {
    BASE64
        .decode(s)
        .map_err(|e| Error::Format(format!("{field} base64: {e}")))
}

/// Sparse vector wire form: a JSON object mapping term id to weight, keys
/// emitted in ascending numeric order so serialization is canonical.
struct SparseVecWire(Vec<(u32, f64)>);

impl Serialize for SparseVecWire {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (id, w) in &self.0 {
            map.serialize_entry(&id.to_string(), w)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SparseVecWire {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: HashMap<String, f64> = HashMap::deserialize(deserializer)?;
        let mut entries = raw
            .into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|id| (id, v))
                    .map_err(serde::de::Error::custom)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        entries.sort_unstable_by_key(|(id, _)| *id);
        Ok(SparseVecWire(entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity_catalog::Catalog;

    fn store_with(keys: &KeyBundle, catalog: &Catalog, docs: &[&str]) -> SecureStore {
        let mut store = SecureStore::new(keys, catalog.hash());
        for doc in docs {
            store.ingest_document(doc, keys, catalog).unwrap();
        }
        store
    }

    #[test]
    fn ingest_redacts_with_placeholder() {
        let keys = KeyBundle::generate(Some(1));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["mail a@b.com now"]);
        let record = store.record(0).unwrap();
        assert_eq!(record.redacted_text, "mail [[EMAIL#0]] now");
        assert_eq!(record.entities.len(), 1);
        assert_eq!(record.entities[0].kind, EntityKind::Email);
    }

    #[test]
    fn ingest_without_entities_keeps_text() {
        let keys = KeyBundle::generate(Some(2));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["no secrets"]);
        let record = store.record(0).unwrap();
        assert_eq!(record.redacted_text, "no secrets");
        assert!(record.entities.is_empty());
    }

    #[test]
    fn duplicate_values_share_digest_not_ciphertext() {
        let keys = KeyBundle::generate(Some(3));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["a@b.com a@b.com"]);
        let record = store.record(0).unwrap();
        assert_eq!(record.entities.len(), 2);
        assert_eq!(record.entities[0].blind_index, record.entities[1].blind_index);
        assert_ne!(record.entities[0].ciphertext, record.entities[1].ciphertext);
        assert_eq!(record.redacted_text, "[[EMAIL#0]] [[EMAIL#1]]");
    }

    #[test]
    fn placeholder_keeps_surrounding_punctuation() {
        let keys = KeyBundle::generate(Some(4));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["mail (a@b.com), thanks"]);
        assert_eq!(
            store.record(0).unwrap().redacted_text,
            "mail ([[EMAIL#0]]), thanks"
        );
    }

    #[test]
    fn finalize_assigns_clusters() {
        let keys = KeyBundle::generate(Some(5));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(
            &keys,
            &catalog,
            &["alpha alpha beta", "alpha beta beta", "omega psi chi", "psi chi omega"],
        );
        let manifest = store.finalize(2, 42).unwrap();
        assert!(manifest.is_finalized());
        assert!(store.records().iter().all(|r| r.cluster < 2));
        assert_eq!(manifest.records, 4);
    }

    #[test]
    fn refinalize_same_seed_is_identical() {
        let keys = KeyBundle::generate(Some(6));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["a b c", "a b d", "x y z", "x y w"]);
        let m1 = store.finalize(2, 7).unwrap();
        let m2 = store.finalize(2, 7).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn finalize_rejects_empty_and_oversized_k() {
        let keys = KeyBundle::generate(Some(7));
        let catalog = Catalog::default_catalog();
        let mut empty = SecureStore::new(&keys, catalog.hash());
        assert!(empty.finalize(1, 0).is_err());

        let mut store = store_with(&keys, &catalog, &["one doc"]);
        assert!(store.finalize(2, 0).is_err());
    }

    #[test]
    fn ingest_after_finalize_is_rejected() {
        let keys = KeyBundle::generate(Some(8));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["alpha"]);
        store.finalize(1, 0).unwrap();
        assert!(matches!(
            store.ingest_document("more", &keys, &catalog),
            Err(Error::StoreSealed)
        ));
    }

    #[test]
    fn lookup_canonicalizes_and_finds() {
        let keys = KeyBundle::generate(Some(9));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["write a@b.com today", "nothing here"]);
        store.finalize(1, 0).unwrap();
        assert_eq!(
            store.lookup_sensitive(EntityKind::Email, "A@B.COM", &keys).unwrap(),
            vec![0]
        );
    }

    #[test]
    fn lookup_of_absent_value_is_empty() {
        let keys = KeyBundle::generate(Some(10));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["write a@b.com today"]);
        store.finalize(1, 0).unwrap();
        assert!(store
            .lookup_sensitive(EntityKind::Email, "z@z.org", &keys)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn lookup_with_wrong_keys_is_authorization_error() {
        let keys = KeyBundle::generate(Some(11));
        let other = KeyBundle::generate(Some(12));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["write a@b.com today"]);
        store.finalize(1, 0).unwrap();
        assert!(matches!(
            store.lookup_sensitive(EntityKind::Email, "a@b.com", &other),
            Err(Error::KeyMismatch { .. })
        ));
    }

    #[test]
    fn lookup_performs_zero_decryptions() {
        let keys = KeyBundle::generate(Some(13));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["ssn 123-45-6789 attached"]);
        store.finalize(1, 0).unwrap();
        let before = keys.decrypt_calls();
        store.lookup_sensitive(EntityKind::Ssn, "123-45-6789", &keys).unwrap();
        store.lookup_sensitive(EntityKind::Ssn, "999-99-9999", &keys).unwrap();
        assert_eq!(keys.decrypt_calls(), before);
        assert_eq!(store.index_probes(), 2);
    }

    #[test]
    fn lookup_requires_finalized_store() {
        let keys = KeyBundle::generate(Some(14));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["write a@b.com today"]);
        assert!(matches!(
            store.lookup_sensitive(EntityKind::Email, "a@b.com", &keys),
            Err(Error::NotFinalized)
        ));
    }

    #[test]
    fn reveal_returns_original_token_text() {
        let keys = KeyBundle::generate(Some(15));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["ssn 123-45-6789, attached"]);
        store.finalize(1, 0).unwrap();
        assert_eq!(store.reveal(0, 0, &keys).unwrap(), "123-45-6789");
    }

    #[test]
    fn reveal_with_wrong_key_fails_authentication() {
        let keys = KeyBundle::generate(Some(16));
        let other = KeyBundle::generate(Some(17));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["mail a@b.com"]);
        assert!(matches!(store.reveal(0, 0, &other), Err(Error::Authentication)));
    }

    #[test]
    fn reveal_unknown_ids_not_found() {
        let keys = KeyBundle::generate(Some(18));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["mail a@b.com"]);
        assert!(matches!(store.reveal(5, 0, &keys), Err(Error::NotFound(_))));
        assert!(matches!(store.reveal(0, 3, &keys), Err(Error::NotFound(_))));
    }

    #[test]
    fn search_returns_matching_doc_first() {
        let keys = KeyBundle::generate(Some(19));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(
            &keys,
            &catalog,
            &["gdpr compliance policy", "unrelated quarterly report"],
        );
        store.finalize(1, 0).unwrap();
        let hits = store.search_nonsensitive("gdpr compliance policy", 5).unwrap();
        assert_eq!(hits[0].0, 0);
        assert!((hits[0].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn search_all_oov_query_is_empty() {
        let keys = KeyBundle::generate(Some(20));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["alpha beta", "gamma delta"]);
        store.finalize(1, 0).unwrap();
        assert!(store.search_nonsensitive("zzz qqq", 5).unwrap().is_empty());
    }

    #[test]
    fn placeholder_bijection_holds() {
        let keys = KeyBundle::generate(Some(21));
        let catalog = Catalog::default_catalog();
        let store = store_with(
            &keys,
            &catalog,
            &[
                "a@b.com and 123-45-6789 and $1,234.56",
                "plain text",
                "+8801712345688 called twice +8801712345688",
            ],
        );
        let placeholder = regex::Regex::new(r"\[\[[A-Z_]+#\d+\]\]").unwrap();
        for record in store.records() {
            let count = placeholder.find_iter(&record.redacted_text).count();
            assert_eq!(count, record.entities.len(), "doc {}", record.doc_id);
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let keys = KeyBundle::generate(Some(22));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(
            &keys,
            &catalog,
            &["mail a@b.com about $1,234.56", "ssn 123-45-6789 filed", "nothing sensitive"],
        );
        store.finalize(2, 5).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("first");
        store.save_to_dir(&first).unwrap();

        let loaded = SecureStore::load_from_dir(&first).unwrap();
        let second = dir.path().join("second");
        loaded.save_to_dir(&second).unwrap();

        for file in [STORE_FILE, MANIFEST_FILE] {
            let a = std::fs::read(first.join(file)).unwrap();
            let b = std::fs::read(second.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs after roundtrip");
        }
    }

    #[test]
    fn loaded_store_serves_lookups_and_search() {
        let keys = KeyBundle::generate(Some(23));
        let catalog = Catalog::default_catalog();
        let mut store = store_with(&keys, &catalog, &["mail a@b.com now", "other things"]);
        store.finalize(1, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        store.save_to_dir(dir.path()).unwrap();

        let loaded = SecureStore::load_from_dir(dir.path()).unwrap();
        assert!(loaded.is_finalized());
        assert_eq!(
            loaded.lookup_sensitive(EntityKind::Email, "a@b.com", &keys).unwrap(),
            vec![0]
        );
        assert_eq!(loaded.reveal(0, 0, &keys).unwrap(), "a@b.com");
        let hits = loaded.search_nonsensitive("mail now", 5).unwrap();
        assert_eq!(hits[0].0, 0);
    }

    #[test]
    fn building_store_roundtrips_without_manifest_fields() {
        let keys = KeyBundle::generate(Some(24));
        let catalog = Catalog::default_catalog();
        let store = store_with(&keys, &catalog, &["mail a@b.com now"]);
        let dir = tempfile::tempdir().unwrap();
        store.save_to_dir(dir.path()).unwrap();
        let loaded = SecureStore::load_from_dir(dir.path()).unwrap();
        assert!(!loaded.is_finalized());
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded.fingerprint(), keys.fingerprint_hex());
    }

    #[test]
    fn serialized_bytes_leak_no_canonical_plaintext() {
        let keys = KeyBundle::generate(Some(25));
        let catalog = Catalog::default_catalog();
        let docs = [
            "contact sales.lead@example.com about the renewal",
            "card 4000123412341234 was charged $12,345.67",
            "ssn 987-65-4321 and phone +8801712345688 on file",
        ];
        let mut store = store_with(&keys, &catalog, &docs);
        store.finalize(1, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        store.save_to_dir(dir.path()).unwrap();

        let mut bytes = std::fs::read(dir.path().join(STORE_FILE)).unwrap();
        bytes.extend(std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap());
        let haystack = String::from_utf8_lossy(&bytes);

        for canonical in [
            "sales.lead@example.com",
            "4000123412341234",
            "12345.67",
            "987654321",
            "8801712345688",
        ] {
            assert!(
                !haystack.contains(canonical),
                "canonical value {canonical} leaked into serialized store"
            );
        }
    }

    #[test]
    fn ingest_with_wrong_keys_rejected() {
        let keys = KeyBundle::generate(Some(26));
        let other = KeyBundle::generate(Some(27));
        let catalog = Catalog::default_catalog();
        let mut store = SecureStore::new(&keys, catalog.hash());
        assert!(matches!(
            store.ingest_document("text", &other, &catalog),
            Err(Error::KeyMismatch { .. })
        ));
    }
}
