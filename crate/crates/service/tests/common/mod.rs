#![allow(dead_code)]

use std::sync::Arc;

use classgit_core::objstore::MemoryStore;
use classgit_core::wire::{
    CreateAssignmentRequest, LoginRequest, PushRequest, PushResponse, RegisterRequest, Role, WireObject,
};
use classgit_core::{ObjectId, ObjectStore, Repository};
use classgit_service::auth::Pbkdf2Verifier;
use classgit_service::clock::ManualClock;
use classgit_service::{Caller, Result, Service, ServiceOptions};

pub const T0: i64 = 1_700_000_000;
pub const DAY: i64 = 24 * 3600;

pub fn options(clock: Arc<ManualClock>) -> ServiceOptions {
    ServiceOptions {
        verifier: Arc::new(Pbkdf2Verifier { rounds: 16 }),
        clock,
        token_lifetime: DAY,
    }
}

pub fn service() -> (Arc<Service>, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(T0));
    (Arc::new(Service::in_memory(options(clock.clone()))), clock)
}

pub fn user(svc: &Service, name: &str, role: Role) -> (Caller, String) {
    svc.register(&RegisterRequest {
        username: name.into(),
        password: "password123".into(),
        role,
    })
    .unwrap();
    let token = svc
        .login(&LoginRequest {
            username: name.into(),
            password: "password123".into(),
        })
        .unwrap()
        .token;
    (svc.authenticate(&token).unwrap(), token)
}

/// An instructor with one assignment due in a week.
pub fn assignment(svc: &Service, template: Option<String>) -> (Caller, String, String) {
    let (prof, _) = user(svc, "prof", Role::Instructor);
    let a = svc
        .create_assignment(
            &prof,
            &CreateAssignmentRequest {
                title: "lab 1".into(),
                deadline: svc.now() + 7 * DAY,
                template_repo: template,
                hard_cutoff: false,
            },
        )
        .unwrap();
    (prof, a.assignment_id, a.invite_code)
}

/// A local clone: its own object store and repository state.
pub struct Local {
    pub store: MemoryStore,
    pub repo: Repository,
    pub author: String,
}

impl Local {
    pub fn new(author: &str) -> Self {
        Local {
            store: MemoryStore::new(),
            repo: Repository::new("local", [author]),
            author: author.into(),
        }
    }

    pub fn from_fetch(svc: &Service, caller: &Caller, repo_id: &str) -> Self {
        let f = svc.fetch(caller, repo_id).unwrap();
        let local = Local::new(&caller.username);
        for o in &f.objects {
            let (id, _) = local.store.put(o.kind, &o.payload().unwrap()).unwrap();
            assert_eq!(id, o.id);
        }
        let mut local = local;
        let refs = f.refs.iter().map(|r| (r.name.clone(), r.target)).collect();
        local.repo = Repository::from_parts("local", vec![caller.username.clone()], f.head, refs).unwrap();
        for r in &f.refs {
            local.repo.mark_pushed(&r.name, r.target);
        }
        local.repo.index = local.repo.head_entries(&local.store).unwrap();
        local
    }

    pub fn commit(&mut self, files: &[(&str, &str)], msg: &str, at: i64) -> ObjectId {
        for (p, c) in files {
            self.repo.stage_file(&self.store, p, c.as_bytes(), at).unwrap();
        }
        self.repo.create_commit(&self.store, &self.author, msg, at).unwrap()
    }

    /// Every local object; the server ignores what it already has.
    pub fn objects(&self) -> Vec<WireObject> {
        self.store
            .ids()
            .into_iter()
            .map(|id| WireObject::new(id, &self.store.get(&id).unwrap()))
            .collect()
    }

    pub fn push_request(&self) -> PushRequest {
        PushRequest {
            branch: self.repo.head().into(),
            expected_old: self.repo.last_pushed(),
            new_target: self.repo.head_commit().unwrap(),
            objects: self.objects(),
            merge_events: vec![],
        }
    }

    pub fn push(&mut self, svc: &Service, caller: &Caller, repo_id: &str) -> Result<PushResponse> {
        let req = self.push_request();
        let target = req.new_target;
        let out = svc.push(caller, repo_id, req)?;
        let head = self.repo.head().to_owned();
        self.repo.mark_pushed(&head, target);
        Ok(out)
    }
}
