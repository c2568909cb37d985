//! Server metadata: everything except object contents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use classgit_core::history::MergeEvent;
use classgit_core::wire::{PushRecord, Role};
use classgit_core::ObjectId;
use serde::{Deserialize, Serialize};

use crate::auth::Credential;
use crate::error::{Result, ServiceError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub user_id: String,
    pub username: String,
    pub role: Role,
    pub credential: Credential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub username: String,
    pub expires_at: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub assignment_id: String,
    pub title: String,
    pub instructor: String,
    pub deadline: i64,
    pub template_repo: Option<String>,
    pub invite_code: String,
    #[serde(default)]
    pub hard_cutoff: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enrollment {
    pub assignment_id: String,
    pub student: String,
    pub repo_id: String,
    pub joined_at: i64,
}

/// Refs of one hosted repository plus who may touch it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub repo_id: String,
    /// Usernames allowed to fetch and push.
    pub owners: Vec<String>,
    pub assignment_id: Option<String>,
    pub head: String,
    pub refs: BTreeMap<String, ObjectId>,
    #[serde(default)]
    pub merge_log: Vec<MergeEvent>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub next_id: u64,
    /// Keyed by username.
    pub users: BTreeMap<String, User>,
    /// Keyed by the SHA-256 of the token.
    pub sessions: BTreeMap<String, Session>,
    pub assignments: BTreeMap<String, Assignment>,
    pub enrollments: Vec<Enrollment>,
    pub repos: BTreeMap<String, RepoRecord>,
    pub pushes: Vec<PushRecord>,
}

impl State {
    pub fn fresh_id(&mut self, prefix: &str) -> String {
        self.next_id += 1;
        format!("{prefix}{}", self.next_id)
    }
}

/// Durable home of [`State`]. `save` is the commit point of every mutation:
/// the in-memory state only changes once it returns `Ok`.
pub trait Persistence: Send + Sync {
    fn load(&self) -> Result<Option<State>>;
    fn save(&self, state: &State) -> Result<()>;
}

/// Keeps the last saved snapshot in memory.
#[derive(Debug, Default)]
pub struct MemoryPersistence(Mutex<Option<State>>);

impl MemoryPersistence {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Persistence for MemoryPersistence {
    fn load(&self) -> Result<Option<State>> {
        Ok(self.0.lock().unwrap().clone())
    }

    fn save(&self, state: &State) -> Result<()> {
        *self.0.lock().unwrap() = Some(state.clone());
        Ok(())
    }
}

/// One JSON document, replaced atomically on every save.
#[derive(Debug)]
pub struct FilePersistence {
    path: PathBuf,
}

impl FilePersistence {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        FilePersistence { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn storage(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Storage(format!("{}: {e}", path.display()))
}

impl Persistence for FilePersistence {
    fn load(&self) -> Result<Option<State>> {
        match std::fs::read(&self.path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| storage(&self.path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(storage(&self.path, e)),
        }
    }

    fn save(&self, state: &State) -> Result<()> {
        let bytes = serde_json::to_vec(state).map_err(|e| storage(&self.path, e))?;
        let tmp = self.path.with_extension("json.tmp");
        std::fs::write(&tmp, bytes).map_err(|e| storage(&tmp, e))?;
        std::fs::rename(&tmp, &self.path).map_err(|e| storage(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = FilePersistence::new(dir.path().join("state.json"));
        assert_eq!(p.load().unwrap(), None);
        let mut s = State::default();
        let id = s.fresh_id("r");
        s.repos.insert(
            id.clone(),
            RepoRecord {
                repo_id: id,
                owners: vec!["ana".into()],
                assignment_id: None,
                head: "main".into(),
                refs: BTreeMap::from([("main".into(), ObjectId::from_bytes([7; 20]))]),
                merge_log: vec![],
            },
        );
        p.save(&s).unwrap();
        assert_eq!(p.load().unwrap(), Some(s));
    }
}
