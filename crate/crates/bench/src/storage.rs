//! Storage comparison: the workload pushed through the service versus one
//! ZIP archive of the whole tree per submission.

use std::collections::{BTreeSet, HashSet};
use std::io::{Cursor, Write};
use std::sync::Arc;
use std::time::Instant;

use classgit_core::objstore::{hash_object, MemoryStore};
use classgit_core::wire::{
    CreateAssignmentRequest, CreateRepoRequest, LoginRequest, PushRequest, RegisterRequest, Role, WireObject,
};
use classgit_core::{ObjectId, ObjectKind, ObjectStore, Repository};
use classgit_service::auth::Pbkdf2Verifier;
use classgit_service::{Caller, Service, ServiceOptions};
use zip::write::SimpleFileOptions;

use crate::report::{BenchReport, StorageFigures};
use crate::workload::{Snapshot, Workload};
use crate::{BenchError, Result};

/// Size of a DEFLATE ZIP holding `files`.
pub fn zip_size(files: &Snapshot) -> u64 {
    let mut zip = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default().compression_method(zip::CompressionMethod::Deflated);
    for (path, bytes) in files {
        zip.start_file(path.as_str(), opts).expect("in-memory zip");
        zip.write_all(bytes).expect("in-memory zip");
    }
    zip.finish().expect("in-memory zip").into_inner().len() as u64
}

/// A client working directly against an in-process service.
struct Client {
    store: MemoryStore,
    repo: Repository,
    known: BTreeSet<ObjectId>,
    caller: Caller,
    repo_id: String,
}

impl Client {
    fn clone_from(svc: &Service, caller: Caller, repo_id: String) -> Result<Client> {
        let f = svc.fetch(&caller, &repo_id)?;
        let store = MemoryStore::new();
        let mut known = BTreeSet::new();
        for o in &f.objects {
            let payload = o.payload().map_err(|e| BenchError::Failed(e.to_string()))?;
            store.put(o.kind, &payload)?;
            known.insert(o.id);
        }
        let refs = f.refs.iter().map(|r| (r.name.clone(), r.target)).collect();
        let mut repo = Repository::from_parts(repo_id.clone(), vec![caller.username.clone()], f.head, refs)?;
        for r in &f.refs {
            repo.mark_pushed(&r.name, r.target);
        }
        repo.index = repo.head_entries(&store)?;
        Ok(Client {
            store,
            repo,
            known,
            caller,
            repo_id,
        })
    }

    fn commit_and_push(&mut self, svc: &Service, files: &Snapshot, msg: &str) -> Result<()> {
        let now = svc.now();
        for (path, bytes) in files {
            self.repo.stage_file(&self.store, path, bytes, now)?;
        }
        let head = self.repo.create_commit(&self.store, &self.caller.username, msg, now)?;
        let objects: Vec<WireObject> = self
            .store
            .ids()
            .into_iter()
            .filter(|id| !self.known.contains(id))
            .map(|id| Ok(WireObject::new(id, &self.store.get(&id)?)))
            .collect::<Result<_>>()?;
        let branch = self.repo.head().to_owned();
        svc.push(
            &self.caller,
            &self.repo_id,
            PushRequest {
                branch: branch.clone(),
                expected_old: self.repo.last_pushed(),
                new_target: head,
                objects,
                merge_events: vec![],
            },
        )?;
        self.known.extend(self.store.ids());
        self.repo.mark_pushed(&branch, head);
        Ok(())
    }
}

fn account(svc: &Service, name: &str, role: Role) -> Result<Caller> {
    let password = "bench-password".to_owned();
    svc.register(&RegisterRequest {
        username: name.into(),
        password: password.clone(),
        role,
    })?;
    let token = svc.login(&LoginRequest {
        username: name.into(),
        password,
    })?;
    Ok(svc.authenticate(&token.token)?)
}

/// Pushes the template and every student snapshot through a fresh in-memory
/// service; each student commit is one submission.
pub fn run_storage_bench(workload: &Workload) -> Result<BenchReport> {
    let started = Instant::now();
    let svc = Service::in_memory(ServiceOptions {
        verifier: Arc::new(Pbkdf2Verifier { rounds: 1_000 }),
        ..ServiceOptions::default()
    });
    let prof = account(&svc, "instructor", Role::Instructor)?;
    let template_id = svc.create_repo(&prof, &CreateRepoRequest { members: vec![] })?.repo_id;
    let mut template = Client::clone_from(&svc, prof.clone(), template_id.clone())?;
    template.commit_and_push(&svc, &workload.template(), "starter code")?;
    let assignment = svc.create_assignment(
        &prof,
        &CreateAssignmentRequest {
            title: "storage bench".into(),
            deadline: svc.now() + 30 * 86_400,
            template_repo: Some(template_id),
            hard_cutoff: false,
        },
    )?;

    let mut figures = StorageFigures::default();
    let mut unique = HashSet::new();
    let mut attempted = 0;
    for s in 0..workload.students {
        let student = account(&svc, &format!("student{s:03}"), Role::Student)?;
        let repo_id = svc.join(&student, &assignment.invite_code)?.repo_id;
        let mut client = Client::clone_from(&svc, student, repo_id)?;
        for (n, snapshot) in workload.student_snapshots(s).iter().enumerate() {
            attempted += 1;
            client.commit_and_push(&svc, snapshot, &format!("work {n}"))?;
            figures.baseline_bytes += zip_size(snapshot);
            for (_, bytes) in snapshot {
                figures.snapshot_blob_bytes += bytes.len() as u64;
                if unique.insert(hash_object(ObjectKind::Blob, bytes)?) {
                    figures.unique_blob_bytes += bytes.len() as u64;
                }
            }
        }
    }
    figures.stored_bytes = svc.storage_stats().physical_bytes;
    figures.savings_ratio = ratio_saved(figures.stored_bytes, figures.baseline_bytes);
    figures.redundancy_reduction = ratio_saved(figures.unique_blob_bytes, figures.snapshot_blob_bytes);
    Ok(BenchReport {
        kind: "storage".into(),
        pushes_attempted: attempted,
        pushes_succeeded: svc.push_log().len() - 1,
        storage: Some(figures),
        crawl_clean: Some(svc.crawl().is_clean()),
        elapsed_secs: started.elapsed().as_secs_f64(),
        ..BenchReport::default()
    })
}

/// `1 - part/whole`, clamped to [0, 1].
fn ratio_saved(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        return 0.0;
    }
    (1.0 - part as f64 / whole as f64).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zip_of_random_bytes_is_not_smaller() {
        use rand::{RngCore, SeedableRng};
        let mut noise = vec![0u8; 4096];
        rand_chacha::ChaCha8Rng::seed_from_u64(9).fill_bytes(&mut noise);
        assert!(zip_size(&vec![("a".to_owned(), noise)]) >= 4096);
        let zeros = vec![("z".to_owned(), vec![0u8; 4096])];
        assert!(zip_size(&zeros) < 200);
    }

    #[test]
    fn ratios() {
        assert_eq!(ratio_saved(25, 100), 0.75);
        assert_eq!(ratio_saved(120, 100), 0.0);
        assert_eq!(ratio_saved(0, 0), 0.0);
    }
}
