//! Integrity checking: content digests and hash baselines.
//!
//! A baseline stores one SHA-256 digest per file. Re-checking an unchanged
//! file always comes back [`CheckResult::Unmodified`] — integrity checking
//! raises no false positives by construction. A path with no baseline is
//! [`CheckResult::Unknown`], not `Modified`: newly created files are an
//! evidence signal for the verdict layer, never a standalone alarm.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, Read};
use std::path::{Component, Path};

use serde::Serialize;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::sigdb::IntegrityRecord;

/// A 256-bit content digest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentDigest(pub [u8; 32]);

impl ContentDigest {
    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return None;
        }
        let raw = hex::decode(s).ok()?;
        Some(ContentDigest(raw.try_into().ok()?))
    }
}

impl fmt::Display for ContentDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ContentDigest {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_hex())
    }
}

/// SHA-256 of an in-memory buffer.
pub fn digest_file(data: &[u8]) -> ContentDigest {
    ContentDigest(Sha256::digest(data).into())
}

/// SHA-256 of a stream, without buffering the whole content.
pub fn digest_reader<R: Read>(mut reader: R) -> io::Result<ContentDigest> {
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(ContentDigest(hasher.finalize().into()))
}

/// Outcome of checking one path against a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckResult {
    Unmodified,
    Modified,
    /// No baseline record for this path.
    Unknown,
}

#[derive(Debug, Error)]
pub enum IntegrityError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("path `{path}` cannot be expressed as a normalized relative path")]
    BadPath { path: String },
}

/// Known-good digests keyed by normalized relative path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BaselineStore {
    records: BTreeMap<String, ContentDigest>,
}

impl BaselineStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, path_id: impl Into<String>, digest: ContentDigest) {
        self.records.insert(path_id.into(), digest);
    }

    pub fn get(&self, path_id: &str) -> Option<ContentDigest> {
        self.records.get(path_id).copied()
    }

    /// Paths in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, ContentDigest)> {
        self.records.iter().map(|(p, d)| (p.as_str(), *d))
    }

    /// Compare `data` against the stored digest for `path_id`.
    pub fn check(&self, path_id: &str, data: &[u8]) -> CheckResult {
        self.check_digest(path_id, digest_file(data))
    }

    pub fn check_digest(&self, path_id: &str, digest: ContentDigest) -> CheckResult {
        match self.records.get(path_id) {
            None => CheckResult::Unknown,
            Some(stored) if *stored == digest => CheckResult::Unmodified,
            Some(_) => CheckResult::Modified,
        }
    }

    /// Baseline records in database form (`HASH` lines of a `.avdb`).
    pub fn to_records(&self) -> Vec<IntegrityRecord> {
        self.records
            .iter()
            .map(|(p, d)| IntegrityRecord {
                path_id: p.clone(),
                digest: d.to_hex(),
            })
            .collect()
    }

    /// Build a store from database records. Records with a malformed digest
    /// are rejected upstream by the database parser.
    pub fn from_records(records: &[IntegrityRecord]) -> Self {
        let mut store = BaselineStore::new();
        for rec in records {
            if let Some(d) = ContentDigest::from_hex(&rec.digest) {
                store.insert(rec.path_id.clone(), d);
            }
        }
        store
    }
}

/// Normalize a relative path into a path id: forward slashes, no `.` or
/// `..` components.
pub fn normalize_path_id(rel: &Path) -> Option<String> {
    let mut parts = Vec::new();
    for comp in rel.components() {
        match comp {
            Component::Normal(s) => parts.push(s.to_str()?),
            Component::CurDir => {}
            _ => return None,
        }
    }
    if parts.is_empty() {
        None
    } else {
        Some(parts.join("/"))
    }
}

/// Hash every regular file under `root` into a fresh baseline. Traversal
/// order is deterministic (sorted paths), and so is the resulting store.
pub fn build_baseline(root: &Path) -> Result<BaselineStore, IntegrityError> {
    let mut store = BaselineStore::new();
    let walker = walkdir::WalkDir::new(root).sort_by_file_name().into_iter();
    for entry in walker {
        let entry = entry.map_err(|e| IntegrityError::Io {
            path: e
                .path()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .map_err(|_| IntegrityError::BadPath {
                path: entry.path().display().to_string(),
            })?;
        let path_id = normalize_path_id(rel).ok_or_else(|| IntegrityError::BadPath {
            path: rel.display().to_string(),
        })?;
        let file = File::open(entry.path()).map_err(|e| IntegrityError::Io {
            path: entry.path().display().to_string(),
            source: e,
        })?;
        let digest = digest_reader(file).map_err(|e| IntegrityError::Io {
            path: entry.path().display().to_string(),
            source: e,
        })?;
        store.insert(path_id, digest);
    }
    Ok(store)
}
