//! Persistent simplification ↔ pair ↔ sentence index.
//!
//! On disk an index is a directory holding `records.ndjson` (the append-only
//! record log) and `meta` (a JSON object with the schema version, entity-type
//! roles and corpus hash). The lookup maps are rebuilt from the log on load.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EntityPair, TypeRoles};

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.ndjson";
pub const META_FILE: &str = "meta";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Record {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("index schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("invalid record: {0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IndexError + '_ {
    move |source| IndexError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub doc_id: String,
    pub sent_id: String,
    pub pair: EntityPair,
    pub simplification_key: String,
    pub display: String,
    pub sentence_text: String,
}

impl IndexRecord {
    fn identity(&self) -> (String, String, String, EntityPair) {
        (self.doc_id.clone(), self.sent_id.clone(), self.simplification_key.clone(), self.pair.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub schema_version: u32,
    pub roles: TypeRoles,
    pub corpus_hash: String,
}

/// Maps a key or pair to the record positions that support it.
type RecordRefs = Vec<usize>;

impl IndexMeta {
    pub fn new(roles: TypeRoles, corpus_hash: String) -> Self {
        IndexMeta { schema_version: SCHEMA_VERSION, roles, corpus_hash }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairIndex {
    records: Vec<IndexRecord>,
    seen: HashSet<(String, String, String, EntityPair)>,
    by_simplification: BTreeMap<String, BTreeMap<EntityPair, RecordRefs>>,
    by_pair: BTreeMap<EntityPair, BTreeMap<String, RecordRefs>>,
}

impl PairIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<I: IntoIterator<Item = IndexRecord>>(records: I) -> Result<Self, IndexError> {
        let mut index = Self::new();
        for r in records {
            index.insert(r)?;
        }
        Ok(index)
    }

    /// Appends a record. Returns `false` (and changes nothing) when a record
    /// with the same (doc_id, sent_id, key, pair) is already present.
    pub fn insert(&mut self, record: IndexRecord) -> Result<bool, IndexError> {
        if record.simplification_key.trim().is_empty() {
            return Err(IndexError::Invalid(format!("empty simplification key for {}/{}", record.doc_id, record.sent_id)));
        }
        if !self.seen.insert(record.identity()) {
            return Ok(false);
        }
        let pos = self.records.len();
        self.by_simplification
            .entry(record.simplification_key.clone())
            .or_default()
            .entry(record.pair.clone())
            .or_default()
            .push(pos);
        self.by_pair.entry(record.pair.clone()).or_default().entry(record.simplification_key.clone()).or_default().push(pos);
        self.records.push(record);
        Ok(true)
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All keys in lexicographic order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.by_simplification.keys().map(String::as_str)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.by_simplification.contains_key(key)
    }

    /// Every distinct pair in the index.
    pub fn pairs(&self) -> BTreeSet<EntityPair> {
        self.by_pair.keys().cloned().collect()
    }

    pub fn pairs_for_simplification(&self, key: &str) -> BTreeSet<EntityPair> {
        self.by_simplification.get(key).map(|m| m.keys().cloned().collect()).unwrap_or_default()
    }

    /// Borrowing variant of [`Self::pairs_for_simplification`].
    pub fn pairs_for_simplification_iter<'a>(&'a self, key: &str) -> impl Iterator<Item = &'a EntityPair> + 'a {
        self.by_simplification.get(key).into_iter().flat_map(|m| m.keys())
    }

    pub fn simplifications_for_pair(&self, pair: &EntityPair) -> BTreeSet<String> {
        self.by_pair.get(pair).map(|m| m.keys().cloned().collect()).unwrap_or_default()
    }

    /// Number of distinct pairs under `key`.
    pub fn pair_count(&self, key: &str) -> usize {
        self.by_simplification.get(key).map_or(0, BTreeMap::len)
    }

    pub fn sentence_count(&self, key: &str) -> usize {
        self.by_simplification.get(key).map_or(0, |m| m.values().map(Vec::len).sum())
    }

    /// Record positions under `key`, in log order.
    pub fn records_for_simplification(&self, key: &str) -> Vec<&IndexRecord> {
        let mut refs: Vec<usize> =
            self.by_simplification.get(key).map(|m| m.values().flatten().copied().collect()).unwrap_or_default();
        refs.sort_unstable();
        refs.into_iter().map(|i| &self.records[i]).collect()
    }

    pub fn records_for_pair(&self, pair: &EntityPair) -> Vec<&IndexRecord> {
        let mut refs: Vec<usize> = self.by_pair.get(pair).map(|m| m.values().flatten().copied().collect()).unwrap_or_default();
        refs.sort_unstable();
        refs.into_iter().map(|i| &self.records[i]).collect()
    }

    /// Uniform sample of up to `n` records under `key`, without replacement.
    /// Returned in log order so the output does not depend on draw order.
    pub fn sample_sentences(&self, key: &str, n: usize, seed: u64) -> Vec<(String, String)> {
        let records = self.records_for_simplification(key);
        if records.len() <= n {
            return records.into_iter().map(|r| (r.sentence_text.clone(), r.display.clone())).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, records.len(), n).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| (records[i].sentence_text.clone(), records[i].display.clone())).collect()
    }

    /// Writes the record log and meta file into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path, meta: &IndexMeta) -> Result<(), IndexError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(RECORDS_FILE);
        let mut out = std::io::BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
        for r in &self.records {
            serde_json::to_writer(&mut out, r).expect("record serializes");
            out.write_all(b"\n").map_err(io_err(&path))?;
        }
        out.flush().map_err(io_err(&path))?;
        let meta_path = dir.join(META_FILE);
        let text = serde_json::to_string_pretty(meta).expect("meta serializes");
        fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<(Self, IndexMeta), IndexError> {
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: IndexMeta = serde_json::from_str(&text).map_err(|source| IndexError::Record {
            path: meta_path.display().to_string(),
            line: 1,
            source,
        })?;
        if meta.schema_version != SCHEMA_VERSION {
            return Err(IndexError::Version { found: meta.schema_version });
        }
        let path = dir.join(RECORDS_FILE);
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        let mut index = Self::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: IndexRecord = serde_json::from_str(&line).map_err(|source| IndexError::Record {
                path: path.display().to_string(),
                line: i + 1,
                source,
            })?;
            index.insert(record)?;
        }
        Ok((index, meta))
    }
}
