use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{flatten_tree, MergeEvent};
use crate::objstore::{ObjectId, ObjectStore};
use crate::stage::{Index, IndexEntry};

pub const DEFAULT_BRANCH: &str = "main";
/// Prefix naming the last-known server position of a branch, e.g. `origin/main`.
pub const REMOTE_PREFIX: &str = "origin/";

pub fn valid_branch_name(name: &str) -> bool {
    !name.is_empty()
        && name != "HEAD"
        && name != "."
        && name != ".."
        && !name.contains('/')
        && !name.chars().any(|c| c.is_control() || c.is_whitespace())
}

/// A repository: branch refs, the symbolic HEAD, the staging index, and the
/// bookkeeping the client and server attach to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Repository {
    pub id: String,
    pub owners: Vec<String>,
    pub assignment_id: Option<String>,
    pub(crate) refs: BTreeMap<String, ObjectId>,
    pub(crate) head: String,
    pub index: Index,
    /// Last target each branch was known to have on the server.
    pub(crate) remote_marks: BTreeMap<String, ObjectId>,
    pub(crate) merge_log: Vec<MergeEvent>,
}

/// Serializable ref state, shared by the wire protocol and server persistence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefSnapshot {
    pub head: String,
    pub refs: BTreeMap<String, ObjectId>,
}

impl Repository {
    pub fn new<I, S>(id: impl Into<String>, owners: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Repository {
            id: id.into(),
            owners: owners.into_iter().map(Into::into).collect(),
            assignment_id: None,
            refs: BTreeMap::new(),
            head: DEFAULT_BRANCH.to_owned(),
            index: Index::new(),
            remote_marks: BTreeMap::new(),
            merge_log: Vec::new(),
        }
    }

    pub fn from_parts(
        id: impl Into<String>,
        owners: Vec<String>,
        head: String,
        refs: BTreeMap<String, ObjectId>,
    ) -> Result<Self> {
        if !valid_branch_name(&head) {
            return Err(Error::InvalidName(head));
        }
        if let Some(bad) = refs.keys().find(|n| !valid_branch_name(n)) {
            return Err(Error::InvalidName(bad.clone()));
        }
        let mut repo = Repository::new(id, owners);
        repo.head = head;
        repo.refs = refs;
        Ok(repo)
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn refs(&self) -> &BTreeMap<String, ObjectId> {
        &self.refs
    }

    pub fn ref_snapshot(&self) -> RefSnapshot {
        RefSnapshot {
            head: self.head.clone(),
            refs: self.refs.clone(),
        }
    }

    pub fn branch(&self, name: &str) -> Option<ObjectId> {
        self.refs.get(name).copied()
    }

    /// Commit HEAD points at, or `None` while the head branch is unborn.
    pub fn head_commit(&self) -> Option<ObjectId> {
        self.branch(&self.head)
    }

    /// Resolves a branch name, `origin/<branch>`, or a full commit id.
    pub fn resolve(&self, spec: &str) -> Option<ObjectId> {
        if let Some(id) = self.refs.get(spec) {
            return Some(*id);
        }
        if let Some(branch) = spec.strip_prefix(REMOTE_PREFIX) {
            if let Some(id) = self.remote_marks.get(branch) {
                return Some(*id);
            }
        }
        ObjectId::from_hex(spec).ok()
    }

    /// Moves `branch` to `target` only if it currently points at `expected`
    /// (`None` meaning unborn). Returns the previous value on mismatch.
    pub fn compare_and_swap(
        &mut self,
        branch: &str,
        expected: Option<ObjectId>,
        target: ObjectId,
    ) -> std::result::Result<(), Option<ObjectId>> {
        let current = self.refs.get(branch).copied();
        if current != expected {
            return Err(current);
        }
        self.refs.insert(branch.to_owned(), target);
        Ok(())
    }

    /// Unconditionally sets a ref. Used when loading client state from disk.
    pub fn set_ref(&mut self, branch: &str, target: ObjectId) -> Result<()> {
        if !valid_branch_name(branch) {
            return Err(Error::InvalidName(branch.to_owned()));
        }
        self.refs.insert(branch.to_owned(), target);
        Ok(())
    }

    pub fn set_head(&mut self, branch: &str) -> Result<()> {
        if !valid_branch_name(branch) {
            return Err(Error::InvalidName(branch.to_owned()));
        }
        self.head = branch.to_owned();
        Ok(())
    }

    pub fn remote_marks(&self) -> &BTreeMap<String, ObjectId> {
        &self.remote_marks
    }

    pub fn mark_pushed(&mut self, branch: &str, target: ObjectId) {
        self.remote_marks.insert(branch.to_owned(), target);
    }

    /// Server position of the head branch: the `last_pushed` mark.
    pub fn last_pushed(&self) -> Option<ObjectId> {
        self.remote_marks.get(&self.head).copied()
    }

    pub fn merge_log(&self) -> &[MergeEvent] {
        &self.merge_log
    }

    pub fn record_merge(&mut self, event: MergeEvent) {
        self.merge_log.push(event);
    }

    pub fn is_owner(&self, user: &str) -> bool {
        self.owners.is_empty() || self.owners.iter().any(|o| o == user)
    }

    pub(crate) fn head_flat<S: ObjectStore + ?Sized>(&self, store: &S) -> Result<BTreeMap<String, ObjectId>> {
        match self.head_commit() {
            Some(c) => flatten_tree(store, &store.read_commit(&c)?.tree),
            None => Ok(BTreeMap::new()),
        }
    }

    /// HEAD's tree as index entries (mtime 0, size from the blob).
    pub fn head_entries<S: ObjectStore + ?Sized>(&self, store: &S) -> Result<Index> {
        entries_for(store, &self.head_flat(store)?)
    }

    /// True when the index differs from HEAD's tree.
    pub fn is_index_dirty<S: ObjectStore + ?Sized>(&self, store: &S) -> Result<bool> {
        Ok(self.index.flat() != self.head_flat(store)?)
    }
}

pub(crate) fn entries_for<S: ObjectStore + ?Sized>(store: &S, flat: &BTreeMap<String, ObjectId>) -> Result<Index> {
    let mut entries = Vec::with_capacity(flat.len());
    for (path, id) in flat {
        entries.push(IndexEntry {
            path: path.clone(),
            blob_id: *id,
            size: store.read_blob(id)?.len() as u64,
            mtime: 0,
        });
    }
    Index::from_entries(entries)
}
