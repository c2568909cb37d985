//! The staging index and working-tree status.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objstore::{hash_object, ObjectId, ObjectKind, ObjectStore};
use crate::repo::Repository;

/// Validates a repository-relative, `/`-separated path and returns it unchanged.
pub fn normalize_path(path: &str) -> Result<String> {
    let invalid = |reason| Error::InvalidPath {
        path: path.to_owned(),
        reason,
    };
    if path.is_empty() {
        return Err(invalid("empty path"));
    }
    if path.starts_with('/') {
        return Err(invalid("absolute path"));
    }
    if path.contains('\\') {
        return Err(invalid("backslash in path"));
    }
    if path.bytes().any(|b| b == 0 || b == b'\n') {
        return Err(invalid("control character in path"));
    }
    for seg in path.split('/') {
        match seg {
            "" => return Err(invalid("empty path segment")),
            "." | ".." => return Err(invalid("relative segment")),
            _ => {}
        }
    }
    if path == ".mgit" || path.starts_with(".mgit/") {
        return Err(invalid("inside the repository metadata directory"));
    }
    Ok(path.to_owned())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub path: String,
    pub blob_id: ObjectId,
    pub size: u64,
    pub mtime: i64,
}

/// Path → entry map. No entry's path is a directory prefix of another's.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Index {
    entries: BTreeMap<String, IndexEntry>,
}

impl Index {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, path: &str) -> Option<&IndexEntry> {
        self.entries.get(path)
    }

    pub fn entries(&self) -> impl Iterator<Item = &IndexEntry> {
        self.entries.values()
    }

    /// `path → blob id`, the shape trees flatten to.
    pub fn flat(&self) -> BTreeMap<String, ObjectId> {
        self.entries.iter().map(|(p, e)| (p.clone(), e.blob_id)).collect()
    }

    fn conflict_for(&self, path: &str) -> Option<String> {
        let dir_prefix = format!("{path}/");
        if let Some((existing, _)) = self.entries.range(dir_prefix.clone()..).next() {
            if existing.starts_with(&dir_prefix) {
                return Some(existing.clone());
            }
        }
        path.match_indices('/')
            .map(|(i, _)| &path[..i])
            .find(|ancestor| self.entries.contains_key(*ancestor))
            .map(str::to_owned)
    }

    /// Inserts or replaces an entry; rejects file/directory clashes.
    pub fn insert(&mut self, entry: IndexEntry) -> Result<()> {
        let path = normalize_path(&entry.path)?;
        if let Some(existing) = self.conflict_for(&path) {
            return Err(Error::PathConflict { path, existing });
        }
        self.entries.insert(path, entry);
        Ok(())
    }

    pub fn remove(&mut self, path: &str) -> Option<IndexEntry> {
        self.entries.remove(path)
    }

    pub fn from_entries(entries: impl IntoIterator<Item = IndexEntry>) -> Result<Self> {
        let mut index = Index::new();
        for e in entries {
            index.insert(e)?;
        }
        Ok(index)
    }

    /// JSON array sorted by path: the `.mgit/index` file format.
    pub fn to_json(&self) -> String {
        let list: Vec<&IndexEntry> = self.entries.values().collect();
        serde_json::to_string_pretty(&list).expect("index entries serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let list: Vec<IndexEntry> = serde_json::from_str(text).map_err(|e| Error::Format {
            what: "index".into(),
            reason: e.to_string(),
        })?;
        Self::from_entries(list)
    }
}

/// A working-tree file as seen by `status`: either its bytes or a precomputed blob id.
#[derive(Clone, Debug)]
pub enum WorkFile {
    Bytes(Vec<u8>),
    Hash(ObjectId),
}

impl WorkFile {
    pub fn blob_id(&self) -> Result<ObjectId> {
        match self {
            WorkFile::Bytes(b) => hash_object(ObjectKind::Blob, b),
            WorkFile::Hash(h) => Ok(*h),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusReport {
    pub staged: BTreeSet<String>,
    pub modified: BTreeSet<String>,
    pub untracked: BTreeSet<String>,
    pub deleted: BTreeSet<String>,
    pub ahead_count: usize,
}

impl StatusReport {
    pub fn is_clean(&self) -> bool {
        self.staged.is_empty() && self.modified.is_empty() && self.untracked.is_empty() && self.deleted.is_empty()
    }
}

/// Whether unstage applies to one path or to the whole index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector {
    Path(String),
    All,
}

impl Repository {
    /// Stores `content` as a blob and points the index entry for `path` at it.
    pub fn stage_file<S: ObjectStore + ?Sized>(
        &mut self,
        store: &S,
        path: &str,
        content: &[u8],
        mtime: i64,
    ) -> Result<IndexEntry> {
        let path = normalize_path(path)?;
        if let Some(existing) = self.index.conflict_for(&path) {
            return Err(Error::PathConflict { path, existing });
        }
        let blob_id = store.put_blob(content)?;
        let entry = IndexEntry {
            path,
            blob_id,
            size: content.len() as u64,
            mtime,
        };
        self.index.insert(entry.clone())?;
        Ok(entry)
    }

    /// Stages the removal of a tracked path.
    pub fn stage_removal(&mut self, path: &str) -> Result<()> {
        let path = normalize_path(path)?;
        self.index.remove(&path).map(drop).ok_or(Error::PathUnknown(path))
    }

    /// Resets index entries to HEAD's version. Blobs are never removed from the store.
    pub fn unstage<S: ObjectStore + ?Sized>(&mut self, store: &S, selector: &Selector) -> Result<&Index> {
        let head = self.head_entries(store)?;
        match selector {
            Selector::All => self.index = head,
            Selector::Path(path) => {
                let path = normalize_path(path)?;
                match (self.index.get(&path).is_some(), head.get(&path)) {
                    (_, Some(committed)) => {
                        self.index.remove(&path);
                        self.index.insert(committed.clone())?;
                    }
                    (true, None) => {
                        self.index.remove(&path);
                    }
                    (false, None) => return Err(Error::PathNotStaged(path)),
                }
            }
        }
        Ok(&self.index)
    }

    /// Content to write back for `path`: the staged blob, else HEAD's.
    pub fn restore_file<S: ObjectStore + ?Sized>(&self, store: &S, path: &str) -> Result<Vec<u8>> {
        let path = normalize_path(path)?;
        if let Some(entry) = self.index.get(&path) {
            return store.read_blob(&entry.blob_id);
        }
        match self.head_flat(store)?.get(&path) {
            Some(id) => store.read_blob(id),
            None => Err(Error::PathUnknown(path)),
        }
    }

    /// Compares HEAD, the index and a working-tree snapshot by blob hash.
    pub fn status<S: ObjectStore + ?Sized>(
        &self,
        store: &S,
        worktree: &HashMap<String, WorkFile>,
    ) -> Result<StatusReport> {
        let head = self.head_flat(store)?;
        let index = self.index.flat();
        let mut work = BTreeMap::new();
        for (path, file) in worktree {
            work.insert(path.as_str(), file.blob_id()?);
        }

        let mut report = StatusReport::default();
        for (path, id) in &index {
            if head.get(path) != Some(id) {
                report.staged.insert(path.clone());
            }
            match work.get(path.as_str()) {
                Some(w) if w != id => {
                    report.modified.insert(path.clone());
                }
                None => {
                    report.deleted.insert(path.clone());
                }
                _ => {}
            }
        }
        for path in head.keys() {
            if !index.contains_key(path) {
                report.staged.insert(path.clone());
            }
            if !work.contains_key(path.as_str()) {
                report.deleted.insert(path.clone());
            }
        }
        for path in work.keys() {
            if !index.contains_key(*path) && !head.contains_key(*path) {
                report.untracked.insert((*path).to_owned());
            }
        }
        report.ahead_count = self.ahead_count(store)?;
        Ok(report)
    }
}
