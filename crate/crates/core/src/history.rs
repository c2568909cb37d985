//! Trees from the index, commits, branches, history traversal, merging and cloning.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::diff3;
use crate::error::{Error, Result};
use crate::objstore::{valid_author, Commit, EntryKind, ObjectId, ObjectStore, Tree, TreeEntry};
use crate::repo::{entries_for, valid_branch_name, Repository};
use crate::stage::Index;

/// Builds and stores the tree hierarchy for a flat `path → blob` map; returns the root id.
///
/// Paths arrive sorted by bytes, so every directory's members are contiguous and the
/// hierarchy is produced in a single pass.
pub fn build_tree_from_flat<S: ObjectStore + ?Sized>(store: &S, flat: &BTreeMap<String, ObjectId>) -> Result<ObjectId> {
    let items: Vec<(&str, ObjectId)> = flat.iter().map(|(p, id)| (p.as_str(), *id)).collect();
    build_level(store, &items)
}

fn build_level<S: ObjectStore + ?Sized>(store: &S, items: &[(&str, ObjectId)]) -> Result<ObjectId> {
    let mut entries = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let (path, id) = items[i];
        match path.split_once('/') {
            None => {
                entries.push(TreeEntry::blob(path, id));
                i += 1;
            }
            Some((dir, _)) => {
                let prefix_len = dir.len() + 1;
                let mut children = Vec::new();
                while i < items.len() && items[i].0.len() > prefix_len && items[i].0.starts_with(dir) && items[i].0.as_bytes()[dir.len()] == b'/' {
                    children.push((&items[i].0[prefix_len..], items[i].1));
                    i += 1;
                }
                entries.push(TreeEntry::tree(dir, build_level(store, &children)?));
            }
        }
    }
    store.put_tree(&Tree::from_entries(entries)?)
}

/// Builds the tree hierarchy for the index and returns the root tree id.
pub fn build_trees<S: ObjectStore + ?Sized>(store: &S, index: &Index) -> Result<ObjectId> {
    build_tree_from_flat(store, &index.flat())
}

/// Flattens a stored tree into `path → blob id`.
pub fn flatten_tree<S: ObjectStore + ?Sized>(store: &S, tree: &ObjectId) -> Result<BTreeMap<String, ObjectId>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![(String::new(), *tree)];
    while let Some((prefix, id)) = stack.pop() {
        for entry in store.read_tree(&id)?.entries() {
            let path = format!("{prefix}{}", entry.name);
            match entry.kind {
                EntryKind::Blob => {
                    out.insert(path, entry.id);
                }
                EntryKind::Tree => stack.push((format!("{path}/"), entry.id)),
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Added,
    Removed,
    Modified,
}

/// Path-level difference between two trees.
pub fn diff_trees<S: ObjectStore + ?Sized>(store: &S, a: &ObjectId, b: &ObjectId) -> Result<Vec<(String, Change)>> {
    Ok(diff_flat(&flatten_tree(store, a)?, &flatten_tree(store, b)?))
}

pub fn diff_flat(a: &BTreeMap<String, ObjectId>, b: &BTreeMap<String, ObjectId>) -> Vec<(String, Change)> {
    let paths: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    paths
        .into_iter()
        .filter_map(|p| match (a.get(p), b.get(p)) {
            (None, Some(_)) => Some((p.clone(), Change::Added)),
            (Some(_), None) => Some((p.clone(), Change::Removed)),
            (Some(x), Some(y)) if x != y => Some((p.clone(), Change::Modified)),
            _ => None,
        })
        .collect()
}

/// Every commit reachable from `tips`, including the tips.
pub fn ancestors<S: ObjectStore + ?Sized>(store: &S, tips: &[ObjectId]) -> Result<HashMap<ObjectId, Commit>> {
    let mut seen = HashMap::new();
    let mut queue: VecDeque<ObjectId> = tips.iter().copied().collect();
    while let Some(id) = queue.pop_front() {
        if seen.contains_key(&id) {
            continue;
        }
        let commit = store.read_commit(&id)?;
        queue.extend(commit.parents.iter().copied());
        seen.insert(id, commit);
    }
    Ok(seen)
}

pub fn is_ancestor<S: ObjectStore + ?Sized>(store: &S, ancestor: &ObjectId, descendant: &ObjectId) -> Result<bool> {
    Ok(ancestors(store, &[*descendant])?.contains_key(ancestor))
}

/// Commits reachable from `tips`, children before parents; among commits whose
/// children have all been emitted, newer `authored_at` first, then lower id.
pub fn walk_commits<S: ObjectStore + ?Sized>(store: &S, tips: &[ObjectId]) -> Result<Vec<(ObjectId, Commit)>> {
    let mut commits = ancestors(store, tips)?;
    let mut pending_children: HashMap<ObjectId, usize> = commits.keys().map(|id| (*id, 0)).collect();
    for commit in commits.values() {
        for p in &commit.parents {
            *pending_children.get_mut(p).expect("parent reachable") += 1;
        }
    }
    let mut ready: BinaryHeap<(i64, Reverse<ObjectId>)> = pending_children
        .iter()
        .filter(|(_, n)| **n == 0)
        .map(|(id, _)| (commits[id].authored_at, Reverse(*id)))
        .collect();
    let mut out = Vec::with_capacity(commits.len());
    while let Some((_, Reverse(id))) = ready.pop() {
        let commit = commits.remove(&id).expect("commit present");
        for p in &commit.parents {
            let n = pending_children.get_mut(p).expect("parent reachable");
            *n -= 1;
            if *n == 0 {
                let parent = &commits[p];
                ready.push((parent.authored_at, Reverse(*p)));
            }
        }
        out.push((id, commit));
    }
    Ok(out)
}

/// Lowest common ancestor of `a` and `b`; among several, the newest, then lowest id.
pub fn merge_base<S: ObjectStore + ?Sized>(store: &S, a: &ObjectId, b: &ObjectId) -> Result<ObjectId> {
    let from_a = ancestors(store, &[*a])?;
    let from_b = ancestors(store, &[*b])?;
    let common: HashMap<&ObjectId, &Commit> = from_a.iter().filter(|(id, _)| from_b.contains_key(*id)).collect();
    // The common set is closed under parents, so a common commit is lowest exactly
    // when none of its children is common.
    let mut has_common_child = HashSet::new();
    for commit in common.values() {
        has_common_child.extend(commit.parents.iter().copied());
    }
    common
        .iter()
        .filter(|(id, _)| !has_common_child.contains(**id))
        .max_by_key(|(id, c)| (c.authored_at, Reverse(**id)))
        .map(|(id, _)| **id)
        .ok_or(Error::NoCommonAncestor(*a, *b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeKind {
    FastForward,
    Clean,
    Conflicted,
}

/// A merge attempt, kept for branch-activity analytics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub branch: String,
    pub theirs: ObjectId,
    pub kind: MergeKind,
    pub conflicts: usize,
    pub at: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub path: String,
    pub ours: Vec<u8>,
    pub theirs: Vec<u8>,
    pub base: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeOutcome {
    /// `advanced` is false when theirs was already contained in ours.
    FastForward { target: ObjectId, advanced: bool },
    CleanMerge(ObjectId),
    /// No ref moved. `draft` is the full merged file set with conflict markers
    /// written into conflicting files, for the client to put in the working tree.
    Conflicts {
        conflicts: Vec<Conflict>,
        draft: BTreeMap<String, Vec<u8>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeResult {
    pub outcome: MergeOutcome,
}

impl MergeResult {
    pub fn conflicts(&self) -> &[Conflict] {
        match &self.outcome {
            MergeOutcome::Conflicts { conflicts, .. } => conflicts,
            _ => &[],
        }
    }
}

/// Result of merging two flattened trees against a base.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeMerge {
    /// Cleanly merged `path → blob`; stored blobs for text merges are already written.
    pub merged: BTreeMap<String, ObjectId>,
    pub conflicts: Vec<Conflict>,
    /// Paths (with content) the client should materialize, markers included.
    pub draft: BTreeMap<String, Vec<u8>>,
}

pub fn merge_flat<S: ObjectStore + ?Sized>(
    store: &S,
    base: &BTreeMap<String, ObjectId>,
    ours: &BTreeMap<String, ObjectId>,
    theirs: &BTreeMap<String, ObjectId>,
) -> Result<TreeMerge> {
    let read = |id: Option<&ObjectId>| -> Result<Vec<u8>> { id.map_or(Ok(Vec::new()), |id| store.read_blob(id)) };
    let paths: BTreeSet<&String> = base.keys().chain(ours.keys()).chain(theirs.keys()).collect();
    let mut result = TreeMerge::default();
    for path in paths {
        let (b, o, t) = (base.get(path), ours.get(path), theirs.get(path));
        let pick = if o == t || t == b {
            Some(o)
        } else if o == b {
            Some(t)
        } else {
            None
        };
        if let Some(choice) = pick {
            if let Some(id) = choice {
                result.merged.insert(path.clone(), *id);
                result.draft.insert(path.clone(), store.read_blob(id)?);
            }
            continue;
        }
        let (bb, ob, tb) = (read(b)?, read(o)?, read(t)?);
        if o.is_none() || t.is_none() {
            // Modified on one side, deleted on the other.
            result.conflicts.push(Conflict {
                path: path.clone(),
                ours: ob.clone(),
                theirs: tb.clone(),
                base: bb,
            });
            result.draft.insert(path.clone(), if o.is_some() { ob } else { tb });
            continue;
        }
        let text = diff3::merge(&bb, &ob, &tb);
        match text.merged() {
            Some(bytes) => {
                result.merged.insert(path.clone(), store.put_blob(&bytes)?);
                result.draft.insert(path.clone(), bytes);
            }
            None => {
                for hunk in text.conflicts() {
                    result.conflicts.push(Conflict {
                        path: path.clone(),
                        ours: hunk.ours,
                        theirs: hunk.theirs,
                        base: hunk.base,
                    });
                }
                result.draft.insert(path.clone(), text.render());
            }
        }
    }
    // A file on one side where the other side created a directory.
    let clashes: Vec<String> = result
        .merged
        .keys()
        .filter(|p| {
            let dir = format!("{p}/");
            result.merged.range(dir.clone()..).next().is_some_and(|(q, _)| q.starts_with(&dir))
        })
        .cloned()
        .collect();
    for path in clashes {
        let content = store.read_blob(&result.merged[&path])?;
        result.merged.remove(&path);
        result.draft.remove(&path);
        result.conflicts.push(Conflict {
            path,
            ours: content,
            theirs: Vec::new(),
            base: Vec::new(),
        });
    }
    Ok(result)
}

impl Repository {
    /// Snapshots the index as a commit on the head branch.
    pub fn create_commit<S: ObjectStore + ?Sized>(
        &mut self,
        store: &S,
        author: &str,
        message: &str,
        authored_at: i64,
    ) -> Result<ObjectId> {
        self.commit_with_parent(store, author, message, authored_at, None)
    }

    /// Like [`create_commit`](Self::create_commit), optionally recording a second
    /// parent (the resolution of a conflicted merge). A merge commit may keep ours' tree.
    pub fn commit_with_parent<S: ObjectStore + ?Sized>(
        &mut self,
        store: &S,
        author: &str,
        message: &str,
        authored_at: i64,
        merge_parent: Option<ObjectId>,
    ) -> Result<ObjectId> {
        if !self.is_owner(author) {
            return Err(Error::Unauthorized(author.to_owned()));
        }
        if !valid_author(author) {
            return Err(Error::InvalidAuthor(author.to_owned()));
        }
        if message.is_empty() {
            return Err(Error::EmptyMessage);
        }
        let tree = build_trees(store, &self.index)?;
        let parent = self.head_commit();
        match parent {
            Some(p) if merge_parent.is_none() && store.read_commit(&p)?.tree == tree => return Err(Error::NothingToCommit),
            None if self.index.is_empty() => return Err(Error::NothingToCommit),
            _ => {}
        }
        let parents: Vec<ObjectId> = parent.into_iter().chain(merge_parent).collect();
        let commit = Commit {
            tree,
            parents,
            author: author.to_owned(),
            authored_at,
            message: message.to_owned(),
        };
        let id = store.put_commit(&commit)?;
        // Only now, with every object stored, does the branch move.
        self.refs.insert(self.head.clone(), id);
        Ok(id)
    }

    pub fn create_branch<S: ObjectStore + ?Sized>(&mut self, store: &S, name: &str, from: &str) -> Result<ObjectId> {
        if !valid_branch_name(name) {
            return Err(Error::InvalidName(name.to_owned()));
        }
        if self.refs.contains_key(name) {
            return Err(Error::BranchExists(name.to_owned()));
        }
        let target = self.resolve(from).ok_or_else(|| Error::UnknownSource(from.to_owned()))?;
        match store.read_commit(&target) {
            Ok(_) => {}
            Err(Error::ObjectNotFound(_)) | Err(Error::WrongKind { .. }) => {
                return Err(Error::UnknownSource(from.to_owned()))
            }
            Err(e) => return Err(e),
        }
        self.refs.insert(name.to_owned(), target);
        Ok(target)
    }

    /// Points HEAD at `name` and replaces the index with that branch's tree.
    pub fn switch_branch<S: ObjectStore + ?Sized>(&mut self, store: &S, name: &str) -> Result<()> {
        let target = self.branch(name).ok_or_else(|| Error::UnknownBranch(name.to_owned()))?;
        if self.is_index_dirty(store)? {
            return Err(Error::DirtyIndex);
        }
        let index = entries_for(store, &flatten_tree(store, &store.read_commit(&target)?.tree)?)?;
        self.head = name.to_owned();
        self.index = index;
        Ok(())
    }

    pub fn history_walk<S: ObjectStore + ?Sized>(&self, store: &S, from: &str) -> Result<Vec<(ObjectId, Commit)>> {
        let tip = self.resolve(from).ok_or_else(|| Error::UnknownBranch(from.to_owned()))?;
        walk_commits(store, &[tip])
    }

    /// Commits on HEAD not reachable from the head branch's last pushed position.
    pub fn ahead_count<S: ObjectStore + ?Sized>(&self, store: &S) -> Result<usize> {
        let Some(head) = self.head_commit() else {
            return Ok(0);
        };
        let local = ancestors(store, &[head])?;
        let pushed = match self.last_pushed() {
            Some(p) if store.contains(&p) => ancestors(store, &[p])?,
            _ => HashMap::new(),
        };
        Ok(local.keys().filter(|id| !pushed.contains_key(*id)).count())
    }

    /// Merges `theirs` into branch `ours`.
    pub fn merge<S: ObjectStore + ?Sized>(
        &mut self,
        store: &S,
        ours: &str,
        theirs: &str,
        author: &str,
        message: &str,
        authored_at: i64,
    ) -> Result<MergeResult> {
        let ours_tip = self.branch(ours).ok_or_else(|| Error::UnknownBranch(ours.to_owned()))?;
        let theirs_tip = self.resolve(theirs).ok_or_else(|| Error::UnknownSource(theirs.to_owned()))?;
        if self.is_index_dirty(store)? {
            return Err(Error::DirtyIndex);
        }
        if !self.is_owner(author) {
            return Err(Error::Unauthorized(author.to_owned()));
        }
        let on_head = ours == self.head;
        let mut event = MergeEvent {
            branch: ours.to_owned(),
            theirs: theirs_tip,
            kind: MergeKind::FastForward,
            conflicts: 0,
            at: authored_at,
        };

        if is_ancestor(store, &theirs_tip, &ours_tip)? {
            return Ok(MergeResult {
                outcome: MergeOutcome::FastForward {
                    target: ours_tip,
                    advanced: false,
                },
            });
        }
        if is_ancestor(store, &ours_tip, &theirs_tip)? {
            let index = entries_for(store, &flatten_tree(store, &store.read_commit(&theirs_tip)?.tree)?)?;
            self.refs.insert(ours.to_owned(), theirs_tip);
            if on_head {
                self.index = index;
            }
            self.merge_log.push(event);
            return Ok(MergeResult {
                outcome: MergeOutcome::FastForward {
                    target: theirs_tip,
                    advanced: true,
                },
            });
        }

        let base = merge_base(store, &ours_tip, &theirs_tip)?;
        let flat = |c: &ObjectId| -> Result<BTreeMap<String, ObjectId>> { flatten_tree(store, &store.read_commit(c)?.tree) };
        let tm = merge_flat(store, &flat(&base)?, &flat(&ours_tip)?, &flat(&theirs_tip)?)?;
        if !tm.conflicts.is_empty() {
            event.kind = MergeKind::Conflicted;
            event.conflicts = tm.conflicts.len();
            self.merge_log.push(event);
            return Ok(MergeResult {
                outcome: MergeOutcome::Conflicts {
                    conflicts: tm.conflicts,
                    draft: tm.draft,
                },
            });
        }
        if !valid_author(author) {
            return Err(Error::InvalidAuthor(author.to_owned()));
        }
        if message.is_empty() {
            return Err(Error::EmptyMessage);
        }
        let tree = build_tree_from_flat(store, &tm.merged)?;
        let commit = Commit {
            tree,
            parents: vec![ours_tip, theirs_tip],
            author: author.to_owned(),
            authored_at,
            message: message.to_owned(),
        };
        let id = store.put_commit(&commit)?;
        let index = entries_for(store, &tm.merged)?;
        self.refs.insert(ours.to_owned(), id);
        if on_head {
            self.index = index;
        }
        event.kind = MergeKind::Clean;
        self.merge_log.push(event);
        Ok(MergeResult {
            outcome: MergeOutcome::CleanMerge(id),
        })
    }
}

/// Copies refs and HEAD under a new id and owner. Objects are shared through the
/// content-addressed store, so nothing is copied.
pub fn clone_repository<S: ObjectStore + ?Sized>(
    store: &S,
    source: &Repository,
    new_id: impl Into<String>,
    new_owner: &str,
) -> Result<Repository> {
    let mut clone = Repository::new(new_id, [new_owner]);
    clone.refs = source.refs.clone();
    clone.head = source.head.clone();
    clone.index = clone.head_entries(store)?;
    Ok(clone)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objstore::{hash_object, MemoryStore, ObjectKind};

    fn repo() -> Repository {
        Repository::new("r", ["alice", "bob"])
    }

    fn commit_files(r: &mut Repository, s: &MemoryStore, files: &[(&str, &str)], msg: &str, at: i64) -> ObjectId {
        for (p, c) in files {
            r.stage_file(s, p, c.as_bytes(), at).unwrap();
        }
        r.create_commit(s, "alice", msg, at).unwrap()
    }

    #[test]
    fn tree_structure_forced_by_paths() {
        let s = MemoryStore::new();
        let mut r = repo();
        r.stage_file(&s, "a.txt", b"1", 0).unwrap();
        r.stage_file(&s, "dir/b.txt", b"2", 0).unwrap();
        let root = build_trees(&s, &r.index).unwrap();
        let tree = s.read_tree(&root).unwrap();
        let names: Vec<_> = tree.entries().iter().map(|e| (e.kind, e.name.as_str())).collect();
        assert_eq!(names, [(EntryKind::Blob, "a.txt"), (EntryKind::Tree, "dir")]);
        let sub = s.read_tree(&tree.get("dir").unwrap().id).unwrap();
        assert_eq!(sub.entries(), [TreeEntry::blob("b.txt", hash_object(ObjectKind::Blob, b"2").unwrap())]);
    }

    #[test]
    fn empty_index_builds_empty_tree() {
        let s = MemoryStore::new();
        let root = build_trees(&s, &Index::new()).unwrap();
        // SHA-1 of "tree 0\0", checked with sha1sum.
        assert_eq!(root.to_hex(), "4b825dc642cb6eb9a060e54bf8d69288fbee4904");
    }

    #[test]
    fn sibling_name_prefixes_group_correctly() {
        let s = MemoryStore::new();
        let mut flat = BTreeMap::new();
        for p in ["a-x", "a.txt", "a/b", "a/c/d", "ab", "a/c.e"] {
            flat.insert(p.to_owned(), s.put_blob(p.as_bytes()).unwrap());
        }
        let root = build_tree_from_flat(&s, &flat).unwrap();
        assert_eq!(flatten_tree(&s, &root).unwrap(), flat);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let s = MemoryStore::new();
        let paths = ["z", "m/n", "a", "m/a/b"];
        let mut fwd = repo();
        let mut rev = repo();
        for p in paths {
            fwd.stage_file(&s, p, p.as_bytes(), 0).unwrap();
        }
        for p in paths.iter().rev() {
            rev.stage_file(&s, p, p.as_bytes(), 0).unwrap();
        }
        assert_eq!(build_trees(&s, &fwd.index).unwrap(), build_trees(&s, &rev.index).unwrap());
    }

    #[test]
    fn first_and_second_commit() {
        let s = MemoryStore::new();
        let mut r = repo();
        let c1 = commit_files(&mut r, &s, &[("f", "1")], "one", 10);
        assert!(s.read_commit(&c1).unwrap().parents.is_empty());
        assert_eq!(r.branch("main"), Some(c1));
        assert_eq!(r.head(), "main");
        let c2 = commit_files(&mut r, &s, &[("f", "2")], "two", 20);
        assert_eq!(s.read_commit(&c2).unwrap().parents, vec![c1]);
        let walk: Vec<_> = r.history_walk(&s, "main").unwrap().into_iter().map(|(id, _)| id).collect();
        assert_eq!(walk, vec![c2, c1]);
    }

    #[test]
    fn commit_errors() {
        let s = MemoryStore::new();
        let mut r = repo();
        assert!(matches!(r.create_commit(&s, "alice", "m", 0), Err(Error::NothingToCommit)));
        r.stage_file(&s, "f", b"1", 0).unwrap();
        assert!(matches!(r.create_commit(&s, "alice", "", 0), Err(Error::EmptyMessage)));
        assert!(matches!(r.create_commit(&s, "mallory", "m", 0), Err(Error::Unauthorized(_))));
        let c1 = r.create_commit(&s, "alice", "m", 0).unwrap();
        let refs = r.refs().clone();
        assert!(matches!(r.create_commit(&s, "alice", "again", 1), Err(Error::NothingToCommit)));
        assert_eq!(r.refs(), &refs);
        assert_eq!(r.branch("main"), Some(c1));
    }

    #[test]
    fn branches_are_independent() {
        let s = MemoryStore::new();
        let mut r = repo();
        let c1 = commit_files(&mut r, &s, &[("f", "1")], "one", 1);
        r.create_branch(&s, "feat", "main").unwrap();
        assert_eq!(r.branch("feat"), Some(c1));
        assert!(matches!(r.create_branch(&s, "feat", "main"), Err(Error::BranchExists(_))));
        assert!(matches!(r.create_branch(&s, "bad/name", "main"), Err(Error::InvalidName(_))));
        assert!(matches!(r.create_branch(&s, "x", "nowhere"), Err(Error::UnknownSource(_))));
        let blob = s.put_blob(b"not a commit").unwrap();
        assert!(matches!(r.create_branch(&s, "y", &blob.to_hex()), Err(Error::UnknownSource(_))));

        r.switch_branch(&s, "feat").unwrap();
        let c2 = commit_files(&mut r, &s, &[("f", "2")], "two", 2);
        assert_eq!(r.branch("feat"), Some(c2));
        assert_eq!(r.branch("main"), Some(c1));
    }

    #[test]
    fn switch_rules() {
        let s = MemoryStore::new();
        let mut r = repo();
        commit_files(&mut r, &s, &[("f", "1")], "one", 1);
        r.create_branch(&s, "feat", "main").unwrap();
        r.switch_branch(&s, "feat").unwrap();
        commit_files(&mut r, &s, &[("g", "feat only")], "g", 2);
        r.switch_branch(&s, "main").unwrap();
        assert_eq!(r.head(), "main");
        assert!(r.index.get("g").is_none());
        assert!(!r.is_index_dirty(&s).unwrap());
        assert!(matches!(r.switch_branch(&s, "nope"), Err(Error::UnknownBranch(_))));
        r.stage_file(&s, "f", b"dirty", 0).unwrap();
        assert!(matches!(r.switch_branch(&s, "feat"), Err(Error::DirtyIndex)));
        assert_eq!(r.head(), "main");
    }

    #[test]
    fn merge_base_cases() {
        let s = MemoryStore::new();
        let mut r = repo();
        let c = commit_files(&mut r, &s, &[("f", "1")], "c", 1);
        let d = commit_files(&mut r, &s, &[("f", "2")], "d", 2);
        assert_eq!(merge_base(&s, &c, &d).unwrap(), c);
        assert_eq!(merge_base(&s, &d, &d).unwrap(), d);
        r.create_branch(&s, "side", &c.to_hex()).unwrap();
        r.switch_branch(&s, "side").unwrap();
        let e = commit_files(&mut r, &s, &[("g", "x")], "e", 3);
        assert_eq!(merge_base(&s, &d, &e).unwrap(), c);

        let mut other = Repository::new("o", ["alice"]);
        let lone = commit_files(&mut other, &s, &[("h", "unrelated")], "root", 1);
        assert!(matches!(merge_base(&s, &d, &lone), Err(Error::NoCommonAncestor(..))));
    }

    #[test]
    fn criss_cross_base_picks_newest() {
        let s = MemoryStore::new();
        let mk = |tree_seed: &str, parents: Vec<ObjectId>, at: i64| {
            let blob = s.put_blob(tree_seed.as_bytes()).unwrap();
            let tree = s.put_tree(&Tree::from_entries(vec![TreeEntry::blob("f", blob)]).unwrap()).unwrap();
            s.put_commit(&Commit {
                tree,
                parents,
                author: "a".into(),
                authored_at: at,
                message: "m".into(),
            })
            .unwrap()
        };
        let root = mk("r", vec![], 0);
        let x = mk("x", vec![root], 5);
        let y = mk("y", vec![root], 7);
        let m1 = mk("m1", vec![x, y], 10);
        let m2 = mk("m2", vec![y, x], 11);
        assert_eq!(merge_base(&s, &m1, &m2).unwrap(), y);
    }

    #[test]
    fn fast_forward_merges() {
        let s = MemoryStore::new();
        let mut r = repo();
        let c1 = commit_files(&mut r, &s, &[("f", "1")], "one", 1);
        r.create_branch(&s, "feat", "main").unwrap();
        r.switch_branch(&s, "feat").unwrap();
        let c2 = commit_files(&mut r, &s, &[("f", "2")], "two", 2);
        r.switch_branch(&s, "main").unwrap();

        let res = r.merge(&s, "main", "feat", "alice", "merge", 3).unwrap();
        assert_eq!(res.outcome, MergeOutcome::FastForward { target: c2, advanced: true });
        assert_eq!(r.branch("main"), Some(c2));
        assert_eq!(r.index.get("f").unwrap().blob_id, hash_object(ObjectKind::Blob, b"2").unwrap());

        let res = r.merge(&s, "main", &c1.to_hex(), "alice", "merge", 4).unwrap();
        assert_eq!(res.outcome, MergeOutcome::FastForward { target: c2, advanced: false });
        assert_eq!(r.merge_log().len(), 1);
    }

    #[test]
    fn different_files_merge_cleanly() {
        let s = MemoryStore::new();
        let mut r = repo();
        commit_files(&mut r, &s, &[("a", "a0\n"), ("b", "b0\n")], "base", 1);
        r.create_branch(&s, "feat", "main").unwrap();
        let ours = commit_files(&mut r, &s, &[("a", "a1\n")], "ours", 2);
        r.switch_branch(&s, "feat").unwrap();
        let theirs = commit_files(&mut r, &s, &[("b", "b1\n")], "theirs", 3);
        r.switch_branch(&s, "main").unwrap();

        let res = r.merge(&s, "main", "feat", "bob", "merge feat", 4).unwrap();
        let MergeOutcome::CleanMerge(m) = res.outcome else { panic!("{res:?}") };
        let commit = s.read_commit(&m).unwrap();
        assert_eq!(commit.parents, vec![ours, theirs]);
        let flat = flatten_tree(&s, &commit.tree).unwrap();
        assert_eq!(s.read_blob(&flat["a"]).unwrap(), b"a1\n");
        assert_eq!(s.read_blob(&flat["b"]).unwrap(), b"b1\n");
        assert_eq!(r.branch("main"), Some(m));
        assert!(!r.is_index_dirty(&s).unwrap());
    }

    #[test]
    fn same_line_edits_conflict_without_moving_refs() {
        let s = MemoryStore::new();
        let mut r = repo();
        commit_files(&mut r, &s, &[("f", "1\n2\n3\n4\n")], "base", 1);
        r.create_branch(&s, "feat", "main").unwrap();
        let ours = commit_files(&mut r, &s, &[("f", "1\n2\nours\n4\n")], "ours", 2);
        r.switch_branch(&s, "feat").unwrap();
        commit_files(&mut r, &s, &[("f", "1\n2\ntheirs\n4\n")], "theirs", 3);
        r.switch_branch(&s, "main").unwrap();

        let res = r.merge(&s, "main", "feat", "alice", "merge", 4).unwrap();
        assert_eq!(
            res.conflicts(),
            [Conflict {
                path: "f".into(),
                ours: b"ours\n".to_vec(),
                theirs: b"theirs\n".to_vec(),
                base: b"3\n".to_vec()
            }]
        );
        let MergeOutcome::Conflicts { draft, .. } = &res.outcome else { unreachable!() };
        assert_eq!(draft["f"], b"1\n2\n<<<<<<< ours\nours\n=======\ntheirs\n>>>>>>> theirs\n4\n");
        assert_eq!(r.branch("main"), Some(ours));
        assert_eq!(r.merge_log().last().unwrap().kind, MergeKind::Conflicted);
    }

    #[test]
    fn modify_delete_conflicts() {
        let s = MemoryStore::new();
        let base = BTreeMap::from([("f".to_owned(), s.put_blob(b"0").unwrap())]);
        let ours = BTreeMap::from([("f".to_owned(), s.put_blob(b"1").unwrap())]);
        let theirs = BTreeMap::new();
        let tm = merge_flat(&s, &base, &ours, &theirs).unwrap();
        assert_eq!(tm.conflicts.len(), 1);
        assert_eq!(tm.draft["f"], b"1");
        let tm = merge_flat(&s, &base, &base, &theirs).unwrap();
        assert!(tm.conflicts.is_empty() && tm.merged.is_empty());
    }

    #[test]
    fn file_directory_clash_is_a_conflict() {
        let s = MemoryStore::new();
        let base = BTreeMap::new();
        let ours = BTreeMap::from([("a".to_owned(), s.put_blob(b"file").unwrap())]);
        let theirs = BTreeMap::from([("a/b".to_owned(), s.put_blob(b"nested").unwrap())]);
        let tm = merge_flat(&s, &base, &ours, &theirs).unwrap();
        assert_eq!(tm.conflicts.len(), 1);
        assert_eq!(tm.conflicts[0].path, "a");
    }

    #[test]
    fn merge_requires_clean_index() {
        let s = MemoryStore::new();
        let mut r = repo();
        commit_files(&mut r, &s, &[("f", "1")], "one", 1);
        r.create_branch(&s, "feat", "main").unwrap();
        r.stage_file(&s, "f", b"dirty", 0).unwrap();
        assert!(matches!(r.merge(&s, "main", "feat", "alice", "m", 2), Err(Error::DirtyIndex)));
    }

    #[test]
    fn diff_tree_cases() {
        let s = MemoryStore::new();
        let mut r = repo();
        let c1 = commit_files(&mut r, &s, &[("f", "1")], "one", 1);
        let t1 = s.read_commit(&c1).unwrap().tree;
        assert!(diff_trees(&s, &t1, &t1).unwrap().is_empty());
        let c2 = commit_files(&mut r, &s, &[("g", "new")], "two", 2);
        let t2 = s.read_commit(&c2).unwrap().tree;
        assert_eq!(diff_trees(&s, &t1, &t2).unwrap(), [("g".to_owned(), Change::Added)]);
        let c3 = commit_files(&mut r, &s, &[("f", "changed")], "three", 3);
        let t3 = s.read_commit(&c3).unwrap().tree;
        assert_eq!(diff_trees(&s, &t2, &t3).unwrap(), [("f".to_owned(), Change::Modified)]);
        assert_eq!(diff_trees(&s, &t3, &t1).unwrap(), [("f".to_owned(), Change::Modified), ("g".to_owned(), Change::Removed)]);
        let missing = hash_object(ObjectKind::Tree, b"gone").unwrap();
        assert!(matches!(diff_trees(&s, &missing, &t1), Err(Error::ObjectNotFound(_))));
    }

    #[test]
    fn clone_preserves_refs_and_shares_objects() {
        let s = MemoryStore::new();
        let mut r = repo();
        commit_files(&mut r, &s, &[("f", "1")], "one", 1);
        r.create_branch(&s, "feat", "main").unwrap();
        commit_files(&mut r, &s, &[("f", "2")], "two", 2);
        commit_files(&mut r, &s, &[("f", "3")], "three", 3);
        let before = s.stats().physical_bytes;
        let c = clone_repository(&s, &r, "r2", "carol").unwrap();
        assert_eq!(c.refs(), r.refs());
        assert_eq!(c.head(), r.head());
        assert_ne!(c.id, r.id);
        assert_eq!(c.owners, vec!["carol".to_owned()]);
        assert_eq!(s.stats().physical_bytes, before);
        assert!(!c.is_index_dirty(&s).unwrap());

        let empty = clone_repository(&s, &Repository::new("t", ["prof"]), "r3", "dave").unwrap();
        assert!(empty.refs().is_empty());
    }

    #[test]
    fn ahead_count_tracks_pushes() {
        let s = MemoryStore::new();
        let mut r = repo();
        let c1 = commit_files(&mut r, &s, &[("f", "1")], "one", 1);
        assert_eq!(r.ahead_count(&s).unwrap(), 1);
        r.mark_pushed("main", c1);
        commit_files(&mut r, &s, &[("f", "2")], "two", 2);
        commit_files(&mut r, &s, &[("f", "3")], "three", 3);
        assert_eq!(r.ahead_count(&s).unwrap(), 2);
    }
}
