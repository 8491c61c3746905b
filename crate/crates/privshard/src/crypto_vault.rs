//! Field-level authenticated encryption and deterministic blind indexing.
//!
//! Values are sealed with AES-128-GCM under a fresh random nonce, so equal
//! plaintexts never produce equal ciphertexts. Exact-match search goes
//! through a separate deterministic HMAC-SHA256 digest of the canonicalized
//! value, keyed by a dedicated 32-byte index key.

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use aes_gcm::aead::{Aead, KeyInit, OsRng};
use aes_gcm::{Aes128Gcm, Key, Nonce};
use hmac::{Hmac, Mac};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::entity_catalog::EntityKind;
use crate::error::{Error, Result};

type HmacSha256 = Hmac<Sha256>;

pub const ENC_KEY_LEN: usize = 16;
pub const INDEX_KEY_LEN: usize = 32;
pub const KEY_FILE_LEN: usize = ENC_KEY_LEN + INDEX_KEY_LEN;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
pub const DIGEST_LEN: usize = 32;
pub const FINGERPRINT_LEN: usize = 8;

/// A 16-byte encryption key plus a 32-byte blind-index key.
///
/// The fingerprint is the first 8 bytes of SHA-256 over both keys; it binds a
/// store to the bundle that built it without revealing key material.
#[derive(Clone)]
pub struct KeyBundle {
    enc_key: [u8; ENC_KEY_LEN],
    index_key: [u8; INDEX_KEY_LEN],
    fingerprint: [u8; FINGERPRINT_LEN],
    cipher: Aes128Gcm,
    mac_template: HmacSha256,
    decrypt_calls: Arc<AtomicU64>,
}

impl fmt::Debug for KeyBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Key material stays out of debug output.
        write!(f, "KeyBundle(fingerprint={})", self.fingerprint_hex())
    }
}

impl PartialEq for KeyBundle {
    fn eq(&self, other: &Self) -> bool {
        self.enc_key == other.enc_key && self.index_key == other.index_key
    }
}

impl KeyBundle {
    /// Generates a fresh key bundle.
    ///
    /// Without a seed the keys come from the OS entropy source. A seed makes
    /// the output deterministic; it exists for tests and fixtures and is not
    /// reachable from the CLI.
    pub fn generate(seed: Option<u64>) -> KeyBundle {
        let mut enc = [0u8; ENC_KEY_LEN];
        let mut index = [0u8; INDEX_KEY_LEN];
        match seed {
            Some(seed) => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.fill_bytes(&mut enc);
                rng.fill_bytes(&mut index);
            }
            None => {
                OsRng.fill_bytes(&mut enc);
                OsRng.fill_bytes(&mut index);
            }
        }
        KeyBundle::from_bytes(enc, index)
    }

    /// Assembles a bundle from raw key bytes.
    pub fn from_bytes(enc_key: [u8; ENC_KEY_LEN], index_key: [u8; INDEX_KEY_LEN]) -> KeyBundle {
        let mut hasher = Sha256::new();
        hasher.update(enc_key);
        hasher.update(index_key);
        let digest = hasher.finalize();
        let mut fingerprint = [0u8; FINGERPRINT_LEN];
        fingerprint.copy_from_slice(&digest[..FINGERPRINT_LEN]);

        let cipher = Aes128Gcm::new(Key::<Aes128Gcm>::from_slice(&enc_key));
        let mac_template = <HmacSha256 as Mac>::new_from_slice(&index_key)
            .expect("HMAC accepts any key length");

        KeyBundle {
            enc_key,
            index_key,
            fingerprint,
            cipher,
            mac_template,
            decrypt_calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Reads a 48-byte key file (`enc_key || index_key`).
    pub fn from_file(path: &Path) -> Result<KeyBundle> {
        let bytes = std::fs::read(path)?;
        if bytes.len() != KEY_FILE_LEN {
            return Err(Error::Format(format!(
                "key file must be exactly {KEY_FILE_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let mut enc = [0u8; ENC_KEY_LEN];
        let mut index = [0u8; INDEX_KEY_LEN];
        enc.copy_from_slice(&bytes[..ENC_KEY_LEN]);
        index.copy_from_slice(&bytes[ENC_KEY_LEN..]);
        Ok(KeyBundle::from_bytes(enc, index))
    }

    /// Writes the 48 raw key bytes with owner-only permissions.
    pub fn to_file(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(KEY_FILE_LEN);
        bytes.extend_from_slice(&self.enc_key);
        bytes.extend_from_slice(&self.index_key);
        std::fs::write(path, &bytes)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o600))?;
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> [u8; FINGERPRINT_LEN] {
        self.fingerprint
    }

    pub fn fingerprint_hex(&self) -> String {
        hex::encode(self.fingerprint)
    }

    /// Number of decryption attempts made through this bundle. Blind-index
    /// lookups must leave this untouched.
    pub fn decrypt_calls(&self) -> u64 {
        self.decrypt_calls.load(Ordering::Relaxed)
    }
}

/// An authenticated ciphertext: random nonce, body, and GCM tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub nonce: [u8; NONCE_LEN],
    pub body: Vec<u8>,
    pub tag: [u8; TAG_LEN],
}

/// A deterministic 32-byte keyed digest of a canonicalized value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlindIndex {
    pub digest: [u8; DIGEST_LEN],
}

impl BlindIndex {
    pub fn hex(&self) -> String {
        hex::encode(self.digest)
    }

    pub fn from_hex(s: &str) -> Result<BlindIndex> {
        let bytes = hex::decode(s).map_err(|e| Error::Format(format!("bad digest hex: {e}")))?;
        let digest: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| Error::Format("digest must be 32 bytes".into()))?;
        Ok(BlindIndex { digest })
    }
}

/// Encrypts a value under a fresh random nonce.
///
/// Two encryptions of the same plaintext differ in nonce and body.
pub fn encrypt_value(plaintext: &str, keys: &KeyBundle) -> Result<Ciphertext> {
    if plaintext.is_empty() {
        return Err(Error::EmptyPlaintext);
    }
    let mut nonce = [0u8; NONCE_LEN];
    OsRng.fill_bytes(&mut nonce);
    let sealed = keys
        .cipher
        .encrypt(Nonce::from_slice(&nonce), plaintext.as_bytes())
        .map_err(|_| Error::Authentication)?;
    let (body, tag_bytes) = sealed.split_at(sealed.len() - TAG_LEN);
    let mut tag = [0u8; TAG_LEN];
    tag.copy_from_slice(tag_bytes);
    Ok(Ciphertext {
        nonce,
        body: body.to_vec(),
        tag,
    })
}

/// Decrypts a ciphertext back to the exact original plaintext.
///
/// Wrong key and tampered ciphertext are indistinguishable: both fail
/// authentication.
pub fn decrypt_value(ct: &Ciphertext, keys: &KeyBundle) -> Result<String> {
    keys.decrypt_calls.fetch_add(1, Ordering::Relaxed);
    let mut sealed = Vec::with_capacity(ct.body.len() + TAG_LEN);
    sealed.extend_from_slice(&ct.body);
    sealed.extend_from_slice(&ct.tag);
    let plain = keys
        .cipher
        .decrypt(Nonce::from_slice(&ct.nonce), sealed.as_ref())
        .map_err(|_| Error::Authentication)?;
    String::from_utf8(plain).map_err(|_| Error::Authentication)
}

/// Normalizes a value so semantically equal spellings share one blind index:
/// emails and URLs are case-folded, numeric kinds keep digits only (the
/// leading `+` of a phone goes with the separators), money drops `$` and
/// thousands separators while keeping any decimal part.
pub fn canonicalize(value: &str, kind: EntityKind) -> String {
    match kind {
        EntityKind::Email | EntityKind::Url => value.to_lowercase(),
        EntityKind::Phone | EntityKind::CreditCard | EntityKind::Ssn => {
            value.chars().filter(char::is_ascii_digit).collect()
        }
        EntityKind::Money => value.chars().filter(|c| *c != '$' && *c != ',').collect(),
        EntityKind::Passport => value.to_string(),
    }
}

/// Computes the deterministic blind index for a value:
/// `HMAC-SHA256(index_key, kind_tag || 0x00 || canonicalize(value, kind))`.
///
/// The kind tag prefix keeps equal strings of different kinds from colliding.
pub fn blind_index(value: &str, kind: EntityKind, keys: &KeyBundle) -> BlindIndex {
    let canonical = canonicalize(value, kind);
    let mut mac = keys.mac_template.clone();
    mac.update(kind.as_str().as_bytes());
    mac.update(&[0u8]);
    mac.update(canonical.as_bytes());
    let digest: [u8; DIGEST_LEN] = mac.finalize().into_bytes().into();
    BlindIndex { digest }
}
