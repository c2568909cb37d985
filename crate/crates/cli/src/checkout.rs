//! A working directory plus its `.mgit/` state.
//!
//! ```text
//! .mgit/HEAD               ref: refs/heads/<branch>
//! .mgit/refs/heads/<b>     commit id + LF
//! .mgit/refs/remote/<b>    last id the server confirmed for <b>
//! .mgit/objects/           content-addressed store
//! .mgit/index              staging index (JSON)
//! .mgit/config             {"repo_id", "server_url"}
//! .mgit/MERGE_HEAD         second parent while a conflicted merge is pending
//! .mgit/merge_log          merge events not yet reported to the server
//! .mgit/lock               held by mutating commands
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Component, Path, PathBuf};

use classgit_core::history::MergeEvent;
use classgit_core::objstore::{FileStore, ObjectKind, RawObject};
use classgit_core::stage::{normalize_path, Index, WorkFile};
use classgit_core::{ObjectId, ObjectStore, Repository};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DIR: &str = ".mgit";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CheckoutConfig {
    pub repo_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server_url: Option<String>,
}

pub struct Checkout {
    pub root: PathBuf,
    pub store: FileStore,
    pub repo: Repository,
    pub config: CheckoutConfig,
    pub merge_head: Option<ObjectId>,
    pub pending_merges: Vec<MergeEvent>,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_file_name(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("file")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
    }
    fs::rename(&tmp, path)
}

fn read_id(path: &Path) -> Result<ObjectId> {
    let text = fs::read_to_string(path)?;
    ObjectId::from_hex(text.trim()).map_err(|_| CliError::fatal(format!("{}: not an object id", path.display())))
}

fn read_ref_dir(dir: &Path) -> Result<BTreeMap<String, ObjectId>> {
    let mut refs = BTreeMap::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(refs),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let entry = entry?;
        let Some(name) = entry.file_name().to_str().map(str::to_owned) else {
            continue;
        };
        if name.starts_with('.') {
            continue;
        }
        refs.insert(name, read_id(&entry.path())?);
    }
    Ok(refs)
}

/// Finds the checkout containing `start`.
pub fn find_root(start: &Path) -> Result<PathBuf> {
    let start = start.canonicalize()?;
    start
        .ancestors()
        .find(|d| d.join(DIR).is_dir())
        .map(Path::to_path_buf)
        .ok_or_else(|| CliError::user("not inside an mgit checkout (no .mgit directory found)"))
}

impl Checkout {
    fn git(&self) -> PathBuf {
        self.root.join(DIR)
    }

    /// Writes a fresh `.mgit/` for `repo_id` under `root`.
    pub fn init(root: &Path, config: CheckoutConfig) -> Result<Checkout> {
        let git = root.join(DIR);
        fs::create_dir_all(git.join("refs").join("heads"))?;
        fs::create_dir_all(git.join("refs").join("remote"))?;
        let store = FileStore::open(git.join("objects"))?;
        let repo = Repository::new(config.repo_id.clone(), Vec::<String>::new());
        let co = Checkout {
            root: root.canonicalize()?,
            store,
            repo,
            config,
            merge_head: None,
            pending_merges: Vec::new(),
        };
        co.save()?;
        Ok(co)
    }

    pub fn open(root: &Path) -> Result<Checkout> {
        let git = root.join(DIR);
        let config: CheckoutConfig = serde_json::from_slice(&fs::read(git.join("config"))?)
            .map_err(|e| CliError::fatal(format!(".mgit/config: {e}")))?;
        let head = fs::read_to_string(git.join("HEAD"))?;
        let head = head
            .trim()
            .strip_prefix("ref: refs/heads/")
            .ok_or_else(|| CliError::fatal(".mgit/HEAD: expected `ref: refs/heads/<branch>`"))?
            .to_owned();
        let refs = read_ref_dir(&git.join("refs").join("heads"))?;
        let mut repo = Repository::from_parts(config.repo_id.clone(), Vec::new(), head, refs)?;
        for (branch, id) in read_ref_dir(&git.join("refs").join("remote"))? {
            repo.mark_pushed(&branch, id);
        }
        repo.index = match fs::read_to_string(git.join("index")) {
            Ok(text) => Index::from_json(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Index::new(),
            Err(e) => return Err(e.into()),
        };
        let merge_head = match git.join("MERGE_HEAD").exists() {
            true => Some(read_id(&git.join("MERGE_HEAD"))?),
            false => None,
        };
        let pending_merges = match fs::read(git.join("merge_log")) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| CliError::fatal(format!(".mgit/merge_log: {e}")))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Checkout {
            root: root.to_path_buf(),
            store: FileStore::open(git.join("objects"))?,
            repo,
            config,
            merge_head,
            pending_merges,
        })
    }

    pub fn save(&self) -> Result<()> {
        let git = self.git();
        write_atomic(
            &git.join("config"),
            serde_json::to_string_pretty(&self.config).expect("serializes").as_bytes(),
        )?;
        write_atomic(&git.join("HEAD"), format!("ref: refs/heads/{}\n", self.repo.head()).as_bytes())?;
        for (name, id) in self.repo.refs() {
            write_atomic(&git.join("refs").join("heads").join(name), format!("{id}\n").as_bytes())?;
        }
        for (name, id) in self.repo.remote_marks() {
            write_atomic(&git.join("refs").join("remote").join(name), format!("{id}\n").as_bytes())?;
        }
        write_atomic(&git.join("index"), self.repo.index.to_json().as_bytes())?;
        match self.merge_head {
            Some(id) => write_atomic(&git.join("MERGE_HEAD"), format!("{id}\n").as_bytes())?,
            None => remove_if_exists(&git.join("MERGE_HEAD"))?,
        }
        if self.pending_merges.is_empty() {
            remove_if_exists(&git.join("merge_log"))?;
        } else {
            write_atomic(
                &git.join("merge_log"),
                serde_json::to_string(&self.pending_merges).expect("serializes").as_bytes(),
            )?;
        }
        Ok(())
    }

    /// Takes the checkout lock; released when the guard drops.
    pub fn lock(&self) -> Result<LockGuard> {
        let path = self.git().join("lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::user(format!(
                "another mgit command holds {}; remove it if no command is running",
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }

    /// Path of `arg` (relative to `cwd`) inside the checkout, `/`-separated.
    /// Returns `""` for the root itself.
    pub fn relative(&self, cwd: &Path, arg: &str) -> Result<String> {
        let joined = cwd.canonicalize()?.join(arg);
        let mut parts: Vec<String> = Vec::new();
        for c in joined.components() {
            match c {
                Component::Prefix(_) | Component::RootDir => parts.clear(),
                Component::CurDir => {}
                Component::ParentDir => {
                    parts.pop();
                }
                Component::Normal(s) => parts.push(s.to_string_lossy().into_owned()),
            }
        }
        let root: Vec<String> = self
            .root
            .components()
            .filter_map(|c| match c {
                Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
                _ => None,
            })
            .collect();
        if parts.len() < root.len() || parts[..root.len()] != root[..] {
            return Err(CliError::user(format!("{arg}: outside the checkout")));
        }
        Ok(parts[root.len()..].join("/"))
    }

    pub fn abs(&self, rel: &str) -> PathBuf {
        rel.split('/').fold(self.root.clone(), |p, s| p.join(s))
    }

    /// Every regular file in the working tree, keyed by checkout-relative path.
    /// Files whose names cannot be tracked are skipped.
    pub fn scan(&self) -> Result<BTreeMap<String, PathBuf>> {
        let mut files = BTreeMap::new();
        let walker = walkdir::WalkDir::new(&self.root)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || e.file_name() != DIR);
        for entry in walker {
            let entry = entry.map_err(|e| CliError::fatal(e.to_string()))?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry.path().strip_prefix(&self.root).expect("walk stays under root");
            let Some(rel) = rel.to_str() else { continue };
            let rel = rel.replace(std::path::MAIN_SEPARATOR, "/");
            if normalize_path(&rel).is_ok() {
                files.insert(rel, entry.into_path());
            }
        }
        Ok(files)
    }

    pub fn worktree(&self) -> Result<HashMap<String, WorkFile>> {
        let mut out = HashMap::new();
        for (rel, path) in self.scan()? {
            out.insert(rel, WorkFile::Bytes(fs::read(path)?));
        }
        Ok(out)
    }

    pub fn stage_path(&mut self, rel: &str) -> Result<()> {
        let path = self.abs(rel);
        let content = fs::read(&path)?;
        let mtime = fs::metadata(&path)?
            .modified()
            .ok()
            .and_then(|m| m.duration_since(std::time::UNIX_EPOCH).ok())
            .map_or(0, |d| d.as_secs() as i64);
        self.repo.stage_file(&self.store, rel, &content, mtime)?;
        Ok(())
    }

    pub fn head_flat(&self) -> Result<BTreeMap<String, ObjectId>> {
        Ok(self.repo.head_entries(&self.store)?.flat())
    }

    pub fn write_file(&self, rel: &str, content: &[u8]) -> Result<()> {
        let path = self.abs(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, content)?;
        Ok(())
    }

    /// Deletes a working file and any directories it leaves empty.
    pub fn remove_file(&self, rel: &str) -> Result<()> {
        let path = self.abs(rel);
        remove_if_exists(&path)?;
        let mut dir = path.parent();
        while let Some(d) = dir {
            if d == self.root || fs::remove_dir(d).is_err() {
                break;
            }
            dir = d.parent();
        }
        Ok(())
    }

    /// Rewrites tracked working files from `from` to `to`.
    pub fn checkout_tree(&self, from: &BTreeMap<String, ObjectId>, to: &BTreeMap<String, ObjectId>) -> Result<()> {
        for path in from.keys().filter(|p| !to.contains_key(*p)) {
            self.remove_file(path)?;
        }
        for (path, id) in to {
            if from.get(path) != Some(id) || !self.abs(path).is_file() {
                self.write_file(path, &self.store.read_blob(id)?)?;
            }
        }
        Ok(())
    }

    /// Stores objects received from the server after checking each one's id.
    /// Nothing is written unless all of them verify.
    pub fn receive(&self, objects: &[(ObjectId, RawObject)]) -> Result<usize> {
        verify_objects(objects)?;
        let mut new = 0;
        for (_, raw) in objects {
            if self.store.put(raw.kind, &raw.payload)?.1 {
                new += 1;
            }
        }
        Ok(new)
    }
}

/// Checks that every object hashes to its claimed id.
pub fn verify_objects(objects: &[(ObjectId, RawObject)]) -> Result<()> {
    for (id, raw) in objects {
        let actual = classgit_core::objstore::hash_object(raw.kind, &raw.payload)?;
        if actual != *id {
            return Err(CliError::fatal(format!(
                "corrupt object from server: {id} hashes to {actual}"
            )));
        }
    }
    Ok(())
}

/// Objects reachable from `tips`, stopping at ids in `known`.
pub fn reachable<S: ObjectStore + ?Sized>(
    store: &S,
    tips: &[ObjectId],
    known: &BTreeSet<ObjectId>,
) -> Result<BTreeMap<ObjectId, RawObject>> {
    let mut out = BTreeMap::new();
    let mut stack = tips.to_vec();
    while let Some(id) = stack.pop() {
        if known.contains(&id) || out.contains_key(&id) {
            continue;
        }
        let raw = store.get(&id)?;
        match raw.kind {
            ObjectKind::Commit => {
                let c = classgit_core::objstore::Commit::parse(&raw.payload)?;
                stack.push(c.tree);
                stack.extend(c.parents);
            }
            ObjectKind::Tree => {
                let t = classgit_core::objstore::Tree::parse(&raw.payload)?;
                stack.extend(t.entries().iter().map(|e| e.id));
            }
            ObjectKind::Blob => {}
        }
        out.insert(id, raw);
    }
    Ok(out)
}

fn remove_if_exists(path: &Path) -> std::io::Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

pub struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}
