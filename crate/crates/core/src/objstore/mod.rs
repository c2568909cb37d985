//! Content-addressed storage of immutable blob, tree and commit objects.
//!
//! Every object is identified by the SHA-1 of `<kind> <len>\0<payload>`. Putting the
//! same content twice stores it once; [`StorageStats`] tracks both the bytes callers
//! asked to store and the bytes actually kept, which is what the dedup ratio reports.

mod file;
mod id;
mod memory;
mod object;

pub use file::FileStore;
pub use id::ObjectId;
pub use memory::MemoryStore;
pub use object::{
    canonical_decode, canonical_encode, check_size, hash_object, valid_author, valid_entry_name, validate_payload,
    Commit, EntryKind, ObjectKind, RawObject, Tree, TreeEntry, MAX_PAYLOAD,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StorageStats {
    pub object_count: u64,
    /// Payload bytes summed over every put, duplicates included.
    pub logical_bytes: u64,
    /// Payload bytes summed over distinct stored objects.
    pub physical_bytes: u64,
    pub dedup_saving_ratio: f64,
}

impl StorageStats {
    pub fn new(object_count: u64, logical_bytes: u64, physical_bytes: u64) -> Self {
        let dedup_saving_ratio = if logical_bytes == 0 {
            0.0
        } else {
            1.0 - physical_bytes as f64 / logical_bytes as f64
        };
        StorageStats {
            object_count,
            logical_bytes,
            physical_bytes,
            dedup_saving_ratio,
        }
    }
}

/// A deduplicating object store. Implementations must be safe for concurrent use:
/// puts of identical content are idempotent and report `was_new = true` exactly once.
pub trait ObjectStore: Send + Sync {
    /// Stores `payload` under its content id, returning `(id, was_new)`.
    fn put(&self, kind: ObjectKind, payload: &[u8]) -> Result<(ObjectId, bool)>;

    fn get(&self, id: &ObjectId) -> Result<RawObject>;

    fn contains(&self, id: &ObjectId) -> bool;

    fn stats(&self) -> StorageStats;

    /// Ids of every stored object, in ascending order.
    fn ids(&self) -> Vec<ObjectId>;

    fn put_blob(&self, content: &[u8]) -> Result<ObjectId> {
        self.put(ObjectKind::Blob, content).map(|(id, _)| id)
    }

    fn put_tree(&self, tree: &Tree) -> Result<ObjectId> {
        self.put(ObjectKind::Tree, &tree.encode()).map(|(id, _)| id)
    }

    fn put_commit(&self, commit: &Commit) -> Result<ObjectId> {
        self.put(ObjectKind::Commit, &commit.encode()).map(|(id, _)| id)
    }

    fn get_kind(&self, id: &ObjectId, expected: ObjectKind) -> Result<Vec<u8>> {
        let raw = self.get(id)?;
        if raw.kind != expected {
            return Err(Error::WrongKind {
                id: *id,
                expected,
                actual: raw.kind,
            });
        }
        Ok(raw.payload)
    }

    fn read_blob(&self, id: &ObjectId) -> Result<Vec<u8>> {
        self.get_kind(id, ObjectKind::Blob)
    }

    fn read_tree(&self, id: &ObjectId) -> Result<Tree> {
        Tree::parse(&self.get_kind(id, ObjectKind::Tree)?)
    }

    fn read_commit(&self, id: &ObjectId) -> Result<Commit> {
        Commit::parse(&self.get_kind(id, ObjectKind::Commit)?)
    }

    /// Re-hashes every stored object; returns the ids whose content no longer matches.
    fn verify(&self) -> Vec<ObjectId> {
        self.ids()
            .into_iter()
            .filter(|id| match self.get(id) {
                Ok(raw) => hash_object(raw.kind, &raw.payload).ok() != Some(*id),
                Err(_) => true,
            })
            .collect()
    }
}

impl<S: ObjectStore + ?Sized> ObjectStore for std::sync::Arc<S> {
    fn put(&self, kind: ObjectKind, payload: &[u8]) -> Result<(ObjectId, bool)> {
        (**self).put(kind, payload)
    }
    fn get(&self, id: &ObjectId) -> Result<RawObject> {
        (**self).get(id)
    }
    fn contains(&self, id: &ObjectId) -> bool {
        (**self).contains(id)
    }
    fn stats(&self) -> StorageStats {
        (**self).stats()
    }
    fn ids(&self) -> Vec<ObjectId> {
        (**self).ids()
    }
}

impl<S: ObjectStore + ?Sized> ObjectStore for &S {
    fn put(&self, kind: ObjectKind, payload: &[u8]) -> Result<(ObjectId, bool)> {
        (**self).put(kind, payload)
    }
    fn get(&self, id: &ObjectId) -> Result<RawObject> {
        (**self).get(id)
    }
    fn contains(&self, id: &ObjectId) -> bool {
        (**self).contains(id)
    }
    fn stats(&self) -> StorageStats {
        (**self).stats()
    }
    fn ids(&self) -> Vec<ObjectId> {
        (**self).ids()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stores() -> (tempfile::TempDir, Vec<Box<dyn ObjectStore>>) {
        let dir = tempfile::tempdir().unwrap();
        let file = FileStore::open(dir.path()).unwrap();
        (dir, vec![Box::new(MemoryStore::new()), Box::new(file)])
    }

    #[test]
    fn empty_store_stats() {
        let (_d, stores) = stores();
        for s in &stores {
            assert_eq!(s.stats(), StorageStats::new(0, 0, 0));
            assert_eq!(s.stats().dedup_saving_ratio, 0.0);
        }
    }

    #[test]
    fn put_is_idempotent() {
        let (_d, stores) = stores();
        for s in &stores {
            let (a, new_a) = s.put(ObjectKind::Blob, b"x").unwrap();
            let phys = s.stats().physical_bytes;
            let (b, new_b) = s.put(ObjectKind::Blob, b"x").unwrap();
            assert_eq!(a, b);
            assert!(new_a && !new_b);
            assert_eq!(s.stats().physical_bytes, phys);
            assert_eq!(s.stats().logical_bytes, 2);
            assert_eq!(s.stats().object_count, 1);

            let (c, _) = s.put(ObjectKind::Blob, b"a").unwrap();
            let (d, _) = s.put(ObjectKind::Blob, b"b").unwrap();
            assert_ne!(c, d);
        }
    }

    #[test]
    fn get_round_trip_and_missing() {
        let (_d, stores) = stores();
        for s in &stores {
            let id = s.put_blob(b"hi").unwrap();
            assert_eq!(
                s.get(&id).unwrap(),
                RawObject {
                    kind: ObjectKind::Blob,
                    payload: b"hi".to_vec()
                }
            );
            let missing = hash_object(ObjectKind::Blob, b"never stored").unwrap();
            assert!(matches!(s.get(&missing), Err(Error::ObjectNotFound(m)) if m == missing));
            assert!(s.verify().is_empty());
        }
    }

    #[test]
    fn ten_submissions_of_one_blob_dedup_to_ninety_percent() {
        let (_d, stores) = stores();
        let content = vec![7u8; 10 * 1024];
        for s in &stores {
            for _ in 0..10 {
                s.put_blob(&content).unwrap();
            }
            let st = s.stats();
            assert_eq!(st.physical_bytes, 10 * 1024);
            assert_eq!(st.logical_bytes, 100 * 1024);
            assert!((st.dedup_saving_ratio - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn single_blob_has_zero_ratio() {
        let s = MemoryStore::new();
        s.put_blob(b"once").unwrap();
        let st = s.stats();
        assert_eq!(st.logical_bytes, st.physical_bytes);
        assert_eq!(st.dedup_saving_ratio, 0.0);
    }

    #[test]
    fn malformed_bodies_rejected() {
        let (_d, stores) = stores();
        for s in &stores {
            assert!(matches!(
                s.put(ObjectKind::Tree, b"not a tree"),
                Err(Error::MalformedBody { .. })
            ));
            assert!(matches!(
                s.put(ObjectKind::Commit, b"tree x\n\nmsg"),
                Err(Error::MalformedBody { .. })
            ));
            assert_eq!(s.stats().object_count, 0);
        }
    }

    #[test]
    fn typed_reads_check_kind() {
        let s = MemoryStore::new();
        let id = s.put_blob(b"data").unwrap();
        assert!(matches!(s.read_tree(&id), Err(Error::WrongKind { .. })));
    }
}
