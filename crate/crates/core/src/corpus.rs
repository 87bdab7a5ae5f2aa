//! Indexed corpora, named record sets and the on-disk corpus directory.
//!
//! A corpus directory holds:
//!
//! ```text
//! corpus.json        records plus magic/format_version header
//! index.json         sidecar postings (informational; rebuilt on load)
//! sets/<name>.json   saved record sets
//! merges.json        curator merge decisions (see dedup)
//! .lock              advisory single-writer lock
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::CitingRecord;
use crate::text::{facet_key, tokenize};

pub const CORPUS_MAGIC: &str = "biblioscope-corpus";
pub const FORMAT_VERSION: u32 = 1;
pub const CORPUS_FILE: &str = "corpus.json";
pub const INDEX_FILE: &str = "index.json";
pub const SETS_DIR: &str = "sets";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate record id {0:?} in corpus")]
    DuplicateId(String),
    #[error("{path}: not a corpus file (bad magic or unreadable header)")]
    BadMagic { path: PathBuf },
    #[error("{path}: corpus format version {found} is not supported (expected {expected})")]
    VersionMismatch { path: PathBuf, found: u32, expected: u32 },
    #[error("record sets belong to different corpora")]
    CrossCorpus,
    #[error("set {name:?} references record {id:?} that is not in the corpus")]
    UnknownMember { name: String, id: String },
    #[error("invalid set name {0:?}")]
    InvalidSetName(String),
    #[error("corpus directory {path} is locked by another writer")]
    Locked { path: PathBuf },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Inverted indexes over record positions.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusIndex {
    /// title tokens
    pub title: BTreeMap<String, Vec<u32>>,
    /// title, abstract, author keyword and keywords-plus tokens
    pub topic: BTreeMap<String, Vec<u32>>,
    /// facet key of each subject category
    pub subject_categories: BTreeMap<String, Vec<u32>>,
    /// facet key of each document type
    pub doc_types: BTreeMap<String, Vec<u32>>,
    pub years: BTreeMap<i32, Vec<u32>>,
}

/// Token sequences of one record. A phrase must match inside a single segment.
#[derive(Debug, Clone, Default)]
pub(crate) struct Segments {
    pub title: Vec<String>,
    pub topic: Vec<Vec<String>>,
}

/// An immutable, indexed collection of citing records.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<CitingRecord>,
    index: CorpusIndex,
    segments: Vec<Segments>,
    positions: HashMap<String, u32>,
    fingerprint: String,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

fn push_posting<K: Ord>(map: &mut BTreeMap<K, Vec<u32>>, key: K, pos: u32) {
    let list = map.entry(key).or_default();
    if list.last() != Some(&pos) {
        list.push(pos);
    }
}

impl Corpus {
    pub fn new(records: Vec<CitingRecord>) -> Result<Self, StoreError> {
        let mut positions = HashMap::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            if positions.insert(rec.record_id.clone(), i as u32).is_some() {
                return Err(StoreError::DuplicateId(rec.record_id.clone()));
            }
        }

        let mut index = CorpusIndex::default();
        let mut segments = Vec::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            let pos = i as u32;
            let title = tokenize(&rec.title);
            let mut topic = vec![title.clone(), tokenize(&rec.abstract_text)];
            topic.extend(rec.keywords_author.iter().map(|k| tokenize(k)));
            topic.extend(rec.keywords_plus.iter().map(|k| tokenize(k)));

            for tok in &title {
                push_posting(&mut index.title, tok.clone(), pos);
            }
            for tok in topic.iter().flatten() {
                push_posting(&mut index.topic, tok.clone(), pos);
            }
            for cat in &rec.subject_categories {
                push_posting(&mut index.subject_categories, facet_key(cat), pos);
            }
            for dt in &rec.doc_types {
                push_posting(&mut index.doc_types, facet_key(dt), pos);
            }
            push_posting(&mut index.years, rec.pub_year, pos);
            segments.push(Segments { title, topic });
        }

        let mut hasher = Sha256::new();
        for rec in &records {
            hasher.update(serde_json::to_vec(rec).expect("records serialize"));
        }
        let fingerprint = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

        Ok(Corpus { records, index, segments, positions, fingerprint })
    }

    pub fn empty() -> Self {
        Corpus::new(Vec::new()).expect("empty corpus is valid")
    }

    pub fn records(&self) -> &[CitingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    pub(crate) fn segments(&self, pos: u32) -> &Segments {
        &self.segments[pos as usize]
    }

    /// Content hash identifying this corpus; record sets carry it.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn position(&self, record_id: &str) -> Option<u32> {
        self.positions.get(record_id).copied()
    }

    pub fn record(&self, record_id: &str) -> Option<&CitingRecord> {
        self.position(record_id).map(|p| &self.records[p as usize])
    }

    /// Inclusive range of publication years, if any records exist.
    pub fn year_range(&self) -> Option<(i32, i32)> {
        let first = *self.index.years.keys().next()?;
        let last = *self.index.years.keys().next_back()?;
        Some((first, last))
    }

    /// Set of every record, named `name`.
    pub fn all(&self, name: &str) -> RecordSet {
        RecordSet {
            name: name.to_string(),
            corpus_id: self.fingerprint.clone(),
            member_ids: self.records.iter().map(|r| r.record_id.clone()).collect(),
            provenance: name.to_string(),
        }
    }

    /// Builds a set from record positions.
    pub fn set_from_positions<I: IntoIterator<Item = u32>>(&self, positions: I, provenance: String) -> RecordSet {
        RecordSet {
            name: String::new(),
            corpus_id: self.fingerprint.clone(),
            member_ids: positions
                .into_iter()
                .map(|p| self.records[p as usize].record_id.clone())
                .collect(),
            provenance,
        }
    }

    /// Positions of a set's members. Fails if the set belongs elsewhere.
    pub fn positions_of(&self, set: &RecordSet) -> Result<BTreeSet<u32>, StoreError> {
        if set.corpus_id != self.fingerprint {
            return Err(StoreError::CrossCorpus);
        }
        set.member_ids
            .iter()
            .map(|id| {
                self.position(id).ok_or_else(|| StoreError::UnknownMember {
                    name: set.name.clone(),
                    id: id.clone(),
                })
            })
            .collect()
    }

    /// Records belonging to `set`, in corpus order.
    pub fn members<'a>(&'a self, set: &RecordSet) -> Result<Vec<&'a CitingRecord>, StoreError> {
        Ok(self
            .positions_of(set)?
            .into_iter()
            .map(|p| &self.records[p as usize])
            .collect())
    }
}

/// A named subset of a corpus together with the expression that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSet {
    pub name: String,
    pub corpus_id: String,
    pub member_ids: BTreeSet<String>,
    pub provenance: String,
}

impl RecordSet {
    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// How the set is referred to inside another set's provenance.
    fn operand(&self) -> String {
        if self.name.is_empty() {
            format!("({})", self.provenance)
        } else {
            self.name.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SetOp {
    And,
    Or,
    Not,
}

impl fmt::Display for SetOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetOp::And => "AND",
            SetOp::Or => "OR",
            SetOp::Not => "NOT",
        })
    }
}

/// Combines two sets of the same corpus. `NOT` is difference (`a` minus `b`).
/// The result is unnamed; its provenance is the query expression.
pub fn set_algebra(op: SetOp, a: &RecordSet, b: &RecordSet) -> Result<RecordSet, StoreError> {
    if a.corpus_id != b.corpus_id {
        return Err(StoreError::CrossCorpus);
    }
    let member_ids = match op {
        SetOp::And => a.member_ids.intersection(&b.member_ids).cloned().collect(),
        SetOp::Or => a.member_ids.union(&b.member_ids).cloned().collect(),
        SetOp::Not => a.member_ids.difference(&b.member_ids).cloned().collect(),
    };
    Ok(RecordSet {
        name: String::new(),
        corpus_id: a.corpus_id.clone(),
        member_ids,
        provenance: format!("{} {} {}", a.operand(), op, b.operand()),
    })
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    magic: String,
    format_version: u32,
    record_count: usize,
    records: Vec<CitingRecord>,
}

#[derive(Deserialize)]
struct CorpusHeader {
    magic: String,
    format_version: u32,
}

#[derive(Serialize)]
struct IndexFile<'a> {
    format_version: u32,
    corpus_fingerprint: &'a str,
    title: BTreeMap<&'a String, Vec<&'a str>>,
    topic: BTreeMap<&'a String, Vec<&'a str>>,
    subject_categories: BTreeMap<&'a String, Vec<&'a str>>,
    doc_types: BTreeMap<&'a String, Vec<&'a str>>,
    years: BTreeMap<&'a i32, Vec<&'a str>>,
}

fn postings_by_id<'a, K: Ord>(corpus: &'a Corpus, map: &'a BTreeMap<K, Vec<u32>>) -> BTreeMap<&'a K, Vec<&'a str>> {
    map.iter()
        .map(|(k, list)| {
            let ids = list.iter().map(|&p| corpus.records[p as usize].record_id.as_str()).collect();
            (k, ids)
        })
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes `corpus.json` and the `index.json` sidecar into `dir`.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let file = CorpusFile {
        magic: CORPUS_MAGIC.to_string(),
        format_version: FORMAT_VERSION,
        record_count: corpus.len(),
        records: corpus.records.clone(),
    };
    let path = dir.join(CORPUS_FILE);
    let mut bytes = serde_json::to_vec_pretty(&file).map_err(|source| StoreError::Json { path: path.clone(), source })?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;

    let sidecar = IndexFile {
        format_version: FORMAT_VERSION,
        corpus_fingerprint: corpus.fingerprint(),
        title: postings_by_id(corpus, &corpus.index.title),
        topic: postings_by_id(corpus, &corpus.index.topic),
        subject_categories: postings_by_id(corpus, &corpus.index.subject_categories),
        doc_types: postings_by_id(corpus, &corpus.index.doc_types),
        years: postings_by_id(corpus, &corpus.index.years),
    };
    let path = dir.join(INDEX_FILE);
    let mut bytes = serde_json::to_vec(&sidecar).map_err(|source| StoreError::Json { path: path.clone(), source })?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)
}

/// Reads `corpus.json` from `dir` and rebuilds the indexes.
pub fn load_corpus(dir: &Path) -> Result<Corpus, StoreError> {
    let path = dir.join(CORPUS_FILE);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let header: CorpusHeader = serde_json::from_slice(&bytes).map_err(|_| StoreError::BadMagic { path: path.clone() })?;
    if header.magic != CORPUS_MAGIC {
        return Err(StoreError::BadMagic { path });
    }
    if header.format_version != FORMAT_VERSION {
        return Err(StoreError::VersionMismatch {
            path,
            found: header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let file: CorpusFile = serde_json::from_slice(&bytes).map_err(|source| StoreError::Json { path: path.clone(), source })?;
    Corpus::new(file.records)
}

fn set_path(dir: &Path, name: &str) -> Result<PathBuf, StoreError> {
    if name.is_empty() || name.starts_with('.') || name.contains(['/', '\\']) {
        return Err(StoreError::InvalidSetName(name.to_string()));
    }
    Ok(dir.join(SETS_DIR).join(format!("{name}.json")))
}

pub fn save_set(dir: &Path, set: &RecordSet) -> Result<(), StoreError> {
    let path = set_path(dir, &set.name)?;
    let parent = dir.join(SETS_DIR);
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let mut bytes = serde_json::to_vec_pretty(set).map_err(|source| StoreError::Json { path: path.clone(), source })?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)
}

pub fn load_set(dir: &Path, name: &str) -> Result<RecordSet, StoreError> {
    let path = set_path(dir, name)?;
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Json { path, source })
}

/// Every saved set in `dir`, keyed by name.
pub fn load_sets(dir: &Path) -> Result<BTreeMap<String, RecordSet>, StoreError> {
    let sets_dir = dir.join(SETS_DIR);
    let mut out = BTreeMap::new();
    let entries = match fs::read_dir(&sets_dir) {
        Ok(e) => e,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(io_err(&sets_dir)(e)),
    };
    for entry in entries {
        let path = entry.map_err(io_err(&sets_dir))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let set: RecordSet = serde_json::from_slice(&bytes).map_err(|source| StoreError::Json { path, source })?;
        out.insert(set.name.clone(), set);
    }
    Ok(out)
}

/// Exclusive writer access to a corpus directory, released on drop.
#[derive(Debug)]
pub struct WriterLock {
    path: PathBuf,
}

impl WriterLock {
    pub fn acquire(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WriterLock { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(StoreError::Locked { path: dir.to_path_buf() }),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for WriterLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
