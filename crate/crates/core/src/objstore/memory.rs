use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use super::{hash_object, validate_payload, ObjectId, ObjectKind, ObjectStore, RawObject, StorageStats};
use crate::error::{Error, Result};

#[derive(Default)]
struct Inner {
    objects: HashMap<ObjectId, (ObjectKind, Arc<[u8]>)>,
    physical_bytes: u64,
}

/// In-process store, used by tests and the storage benchmark.
#[derive(Default)]
pub struct MemoryStore {
    inner: RwLock<Inner>,
    logical_bytes: AtomicU64,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ObjectStore for MemoryStore {
    fn put(&self, kind: ObjectKind, payload: &[u8]) -> Result<(ObjectId, bool)> {
        validate_payload(kind, payload)?;
        let id = hash_object(kind, payload)?;
        self.logical_bytes.fetch_add(payload.len() as u64, Ordering::Relaxed);
        if self.inner.read().expect("store lock").objects.contains_key(&id) {
            return Ok((id, false));
        }
        let mut inner = self.inner.write().expect("store lock");
        if inner.objects.contains_key(&id) {
            return Ok((id, false));
        }
        inner.objects.insert(id, (kind, Arc::from(payload)));
        inner.physical_bytes += payload.len() as u64;
        Ok((id, true))
    }

    fn get(&self, id: &ObjectId) -> Result<RawObject> {
        let inner = self.inner.read().expect("store lock");
        let (kind, payload) = inner.objects.get(id).ok_or(Error::ObjectNotFound(*id))?;
        Ok(RawObject {
            kind: *kind,
            payload: payload.to_vec(),
        })
    }

    fn contains(&self, id: &ObjectId) -> bool {
        self.inner.read().expect("store lock").objects.contains_key(id)
    }

    fn stats(&self) -> StorageStats {
        let inner = self.inner.read().expect("store lock");
        StorageStats::new(
            inner.objects.len() as u64,
            self.logical_bytes.load(Ordering::Relaxed),
            inner.physical_bytes,
        )
    }

    fn ids(&self) -> Vec<ObjectId> {
        let mut ids: Vec<_> = self.inner.read().expect("store lock").objects.keys().copied().collect();
        ids.sort();
        ids
    }
}
