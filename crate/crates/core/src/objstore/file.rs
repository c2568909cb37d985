use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use super::{
    canonical_decode, canonical_encode, hash_object, validate_payload, ObjectId, ObjectKind, ObjectStore, RawObject,
    StorageStats,
};
use crate::error::{Error, Result};

/// Loose-object store on disk: `<root>/objects/<2 hex>/<38 hex>` holding the canonical
/// encoding verbatim, so any file can be re-hashed with an external SHA-1 tool.
pub struct FileStore {
    objects_dir: PathBuf,
    known: Mutex<HashSet<ObjectId>>,
    physical_bytes: AtomicU64,
    logical_bytes: AtomicU64,
    tmp_counter: AtomicU64,
}

impl FileStore {
    /// Opens (creating if needed) the store rooted at `root`. Existing objects are
    /// indexed; their bytes seed both the logical and physical counters.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let objects_dir = root.as_ref().join("objects");
        fs::create_dir_all(&objects_dir).map_err(|e| Error::io(&objects_dir, e))?;
        let mut known = HashSet::new();
        let mut physical = 0u64;
        for fan in fs::read_dir(&objects_dir).map_err(|e| Error::io(&objects_dir, e))? {
            let fan = fan.map_err(|e| Error::io(&objects_dir, e))?;
            let prefix = fan.file_name().to_string_lossy().into_owned();
            if prefix.len() != 2 || !fan.path().is_dir() {
                continue;
            }
            for entry in fs::read_dir(fan.path()).map_err(|e| Error::io(fan.path(), e))? {
                let entry = entry.map_err(|e| Error::io(fan.path(), e))?;
                let rest = entry.file_name().to_string_lossy().into_owned();
                let Ok(id) = ObjectId::from_hex(&format!("{prefix}{rest}")) else {
                    continue;
                };
                let bytes = fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
                if let Ok((_, payload)) = canonical_decode(&bytes) {
                    physical += payload.len() as u64;
                }
                known.insert(id);
            }
        }
        Ok(FileStore {
            objects_dir,
            known: Mutex::new(known),
            physical_bytes: AtomicU64::new(physical),
            logical_bytes: AtomicU64::new(physical),
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub fn object_path(&self, id: &ObjectId) -> PathBuf {
        let (dir, file) = id.fanout();
        self.objects_dir.join(dir).join(file)
    }

    fn write_atomically(&self, id: &ObjectId, bytes: &[u8]) -> Result<()> {
        let path = self.object_path(id);
        let dir = path.parent().expect("fan-out dir");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            self.tmp_counter.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

impl ObjectStore for FileStore {
    fn put(&self, kind: ObjectKind, payload: &[u8]) -> Result<(ObjectId, bool)> {
        validate_payload(kind, payload)?;
        let id = hash_object(kind, payload)?;
        self.logical_bytes.fetch_add(payload.len() as u64, Ordering::Relaxed);
        if self.known.lock().expect("store lock").contains(&id) {
            return Ok((id, false));
        }
        // Concurrent writers of the same id write identical bytes; rename is atomic.
        self.write_atomically(&id, &canonical_encode(kind, payload))?;
        let fresh = self.known.lock().expect("store lock").insert(id);
        if fresh {
            self.physical_bytes.fetch_add(payload.len() as u64, Ordering::Relaxed);
        }
        Ok((id, fresh))
    }

    fn get(&self, id: &ObjectId) -> Result<RawObject> {
        let path = self.object_path(id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::ObjectNotFound(*id)),
            Err(e) => return Err(Error::io(path, e)),
        };
        let (kind, payload) = canonical_decode(&bytes).map_err(|e| Error::CorruptObject {
            id: *id,
            reason: e.to_string(),
        })?;
        if hash_object(kind, payload)? != *id {
            return Err(Error::CorruptObject {
                id: *id,
                reason: "content does not hash to its id".into(),
            });
        }
        Ok(RawObject {
            kind,
            payload: payload.to_vec(),
        })
    }

    fn contains(&self, id: &ObjectId) -> bool {
        self.known.lock().expect("store lock").contains(id) || self.object_path(id).exists()
    }

    fn stats(&self) -> StorageStats {
        let count = self.known.lock().expect("store lock").len() as u64;
        StorageStats::new(
            count,
            self.logical_bytes.load(Ordering::Relaxed),
            self.physical_bytes.load(Ordering::Relaxed),
        )
    }

    fn ids(&self) -> Vec<ObjectId> {
        let mut ids: Vec<_> = self.known.lock().expect("store lock").iter().copied().collect();
        ids.sort();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_fanned_out_canonical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let id = store.put_blob(b"hello").unwrap();
        let path = dir.path().join("objects/b6/fc4c620b67d95f953a5c1c1230aaab5db5a1b0");
        assert_eq!(store.object_path(&id), path);
        assert_eq!(fs::read(path).unwrap(), b"blob 5\0hello");
    }

    #[test]
    fn reopen_sees_existing_objects() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let store = FileStore::open(dir.path()).unwrap();
            store.put_blob(b"persist me").unwrap()
        };
        let store = FileStore::open(dir.path()).unwrap();
        assert!(store.contains(&id));
        assert_eq!(store.stats().object_count, 1);
        assert_eq!(store.stats().physical_bytes, 10);
        let (_, fresh) = store.put(ObjectKind::Blob, b"persist me").unwrap();
        assert!(!fresh);
    }

    #[test]
    fn detects_on_disk_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let id = store.put_blob(b"original").unwrap();
        fs::write(store.object_path(&id), b"blob 8\0tampered").unwrap();
        assert!(matches!(store.get(&id), Err(Error::CorruptObject { .. })));
        assert_eq!(store.verify(), vec![id]);
    }

    #[test]
    fn concurrent_identical_puts_count_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let fresh: usize = std::thread::scope(|s| {
            let handles: Vec<_> = (0..8)
                .map(|_| s.spawn(|| store.put(ObjectKind::Blob, b"same").unwrap().1 as usize))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        });
        assert_eq!(fresh, 1);
        assert_eq!(store.stats().physical_bytes, 4);
        assert_eq!(store.stats().logical_bytes, 32);
    }
}
