use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex, MutexGuard};

use classgit_core::analytics::{self, BranchActivityReport, ContributionReport, SimilarityReport, Submission, TimingReport};
use classgit_core::history::{flatten_tree, is_ancestor};
use classgit_core::objstore::{hash_object, valid_author, validate_payload, ObjectKind, RawObject, StorageStats};
use classgit_core::stage::normalize_path;
use classgit_core::wire::{
    CreateAssignmentRequest, CreateAssignmentResponse, CreateRepoRequest, FetchResponse, LoginRequest, LoginResponse,
    PushRecord, PushRequest, PushResponse, RegisterRequest, RegisterResponse, RepoIdResponse, Role, SubmissionRow,
    WireObject, WireRef,
};
use classgit_core::{valid_branch_name, ObjectId, ObjectStore, Repository, DEFAULT_BRANCH};

use crate::auth::{
    new_invite_code, new_token, normalize_invite_code, token_key, Credential, CredentialVerifier, Pbkdf2Verifier,
    MIN_PASSWORD_LEN,
};
use crate::clock::{Clock, SystemClock};
use crate::error::{Result, ServiceError};
use crate::state::{Assignment, Enrollment, Persistence, RepoRecord, Session, State, User};

pub const DEFAULT_TOKEN_LIFETIME: i64 = 24 * 3600;

/// Points inside push handling where a failure can be injected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PushStep {
    /// Re-hashing the request objects.
    Validate,
    /// Resolving ancestry and tree closure of the new target.
    Closure,
    /// Writing objects; the fault fires after half of them are stored.
    WriteObjects,
    /// The ref compare-and-swap.
    CompareAndSwap,
    /// Appending the push record.
    AppendRecord,
    /// Saving metadata.
    Persist,
}

impl PushStep {
    pub const ALL: [PushStep; 6] = [
        PushStep::Validate,
        PushStep::Closure,
        PushStep::WriteObjects,
        PushStep::CompareAndSwap,
        PushStep::AppendRecord,
        PushStep::Persist,
    ];
}

pub struct ServiceOptions {
    pub verifier: Arc<dyn CredentialVerifier>,
    pub clock: Arc<dyn Clock>,
    pub token_lifetime: i64,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            verifier: Arc::new(Pbkdf2Verifier::default()),
            clock: Arc::new(SystemClock),
            token_lifetime: DEFAULT_TOKEN_LIFETIME,
        }
    }
}

/// An authenticated user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Caller {
    pub user_id: String,
    pub username: String,
    pub role: Role,
}

/// Result of [`Service::crawl`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrawlReport {
    pub repos: usize,
    pub refs: usize,
    pub objects: usize,
    pub problems: Vec<String>,
}

impl CrawlReport {
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty()
    }
}

pub struct Service {
    store: Arc<dyn ObjectStore>,
    persistence: Box<dyn Persistence>,
    verifier: Arc<dyn CredentialVerifier>,
    clock: Arc<dyn Clock>,
    token_lifetime: i64,
    state: Mutex<State>,
    decoy: Credential,
    fault: Mutex<Option<PushStep>>,
}

fn injected(step: PushStep) -> ServiceError {
    ServiceError::Storage(format!("injected failure at {step:?}"))
}

impl Service {
    pub fn new(
        store: Arc<dyn ObjectStore>,
        persistence: Box<dyn Persistence>,
        options: ServiceOptions,
    ) -> Result<Self> {
        let state = persistence.load()?.unwrap_or_default();
        let decoy = options.verifier.enroll("decoy password");
        Ok(Service {
            store,
            persistence,
            verifier: options.verifier,
            clock: options.clock,
            token_lifetime: options.token_lifetime,
            state: Mutex::new(state),
            decoy,
            fault: Mutex::new(None),
        })
    }

    pub fn store(&self) -> &Arc<dyn ObjectStore> {
        &self.store
    }

    pub fn storage_stats(&self) -> StorageStats {
        self.store.stats()
    }

    pub fn now(&self) -> i64 {
        self.clock.now()
    }

    /// Makes the next push fail at `step`. Test hook.
    pub fn inject_push_fault(&self, step: PushStep) {
        *self.fault.lock().unwrap() = Some(step);
    }

    fn check_fault(&self, step: PushStep) -> Result<()> {
        let mut fault = self.fault.lock().unwrap();
        if *fault == Some(step) {
            *fault = None;
            return Err(injected(step));
        }
        Ok(())
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Applies `f` to a copy of the state, saves it, then publishes it. Nothing
    /// changes if `f` or the save fails.
    fn mutate<T>(&self, f: impl FnOnce(&mut State) -> Result<T>) -> Result<T> {
        let mut guard = self.lock();
        let mut next = guard.clone();
        let out = f(&mut next)?;
        self.persistence.save(&next)?;
        *guard = next;
        Ok(out)
    }

    pub fn register(&self, req: &RegisterRequest) -> Result<RegisterResponse> {
        if !valid_author(&req.username) {
            return Err(ServiceError::Invalid(
                "username must be non-empty and free of whitespace".into(),
            ));
        }
        if req.password.chars().count() < MIN_PASSWORD_LEN {
            return Err(ServiceError::WeakPassword(MIN_PASSWORD_LEN));
        }
        if self.lock().users.contains_key(&req.username) {
            return Err(ServiceError::UsernameTaken(req.username.clone()));
        }
        let credential = self.verifier.enroll(&req.password);
        self.mutate(|s| {
            if s.users.contains_key(&req.username) {
                return Err(ServiceError::UsernameTaken(req.username.clone()));
            }
            let user_id = s.fresh_id("u");
            s.users.insert(
                req.username.clone(),
                User {
                    user_id: user_id.clone(),
                    username: req.username.clone(),
                    role: req.role,
                    credential,
                },
            );
            Ok(RegisterResponse { user_id })
        })
    }

    pub fn login(&self, req: &LoginRequest) -> Result<LoginResponse> {
        let credential = self.lock().users.get(&req.username).map(|u| u.credential.clone());
        // Unknown users pay for a hash too, so timing does not reveal which names exist.
        let ok = match &credential {
            Some(c) => self.verifier.verify(c, &req.password),
            None => {
                self.verifier.verify(&self.decoy, &req.password);
                false
            }
        };
        if !ok {
            return Err(ServiceError::AuthFailed);
        }
        let token = new_token();
        let now = self.clock.now();
        let expires_at = now + self.token_lifetime;
        self.mutate(|s| {
            s.sessions.retain(|_, sess| sess.expires_at > now);
            s.sessions.insert(
                token_key(&token),
                Session {
                    username: req.username.clone(),
                    expires_at,
                },
            );
            Ok(())
        })?;
        Ok(LoginResponse { token, expires_at })
    }

    /// Revokes `token`. Unknown tokens are acknowledged as well.
    pub fn logout(&self, token: &str) -> Result<()> {
        let key = token_key(token);
        if !self.lock().sessions.contains_key(&key) {
            return Ok(());
        }
        self.mutate(|s| {
            s.sessions.remove(&key);
            Ok(())
        })
    }

    pub fn authenticate(&self, token: &str) -> Result<Caller> {
        let state = self.lock();
        let session = state.sessions.get(&token_key(token)).ok_or(ServiceError::Unauthorized)?;
        if session.expires_at <= self.clock.now() {
            return Err(ServiceError::Unauthorized);
        }
        let user = state.users.get(&session.username).ok_or(ServiceError::Unauthorized)?;
        Ok(Caller {
            user_id: user.user_id.clone(),
            username: user.username.clone(),
            role: user.role,
        })
    }

    pub fn create_assignment(&self, caller: &Caller, req: &CreateAssignmentRequest) -> Result<CreateAssignmentResponse> {
        if caller.role != Role::Instructor {
            return Err(ServiceError::Forbidden("only instructors create assignments".into()));
        }
        if req.title.trim().is_empty() {
            return Err(ServiceError::Invalid("title must not be empty".into()));
        }
        if req.deadline <= self.clock.now() {
            return Err(ServiceError::InvalidDeadline);
        }
        self.mutate(|s| {
            if let Some(t) = &req.template_repo {
                let repo = s.repos.get(t).ok_or_else(|| ServiceError::UnknownRepo(t.clone()))?;
                if !repo.owners.contains(&caller.username) {
                    return Err(ServiceError::Forbidden(format!("{} cannot use repository {t} as a template", caller.username)));
                }
            }
            let mut invite_code = new_invite_code();
            while s.assignments.values().any(|a| a.invite_code == invite_code) {
                invite_code = new_invite_code();
            }
            let assignment_id = s.fresh_id("a");
            s.assignments.insert(
                assignment_id.clone(),
                Assignment {
                    assignment_id: assignment_id.clone(),
                    title: req.title.clone(),
                    instructor: caller.username.clone(),
                    deadline: req.deadline,
                    template_repo: req.template_repo.clone(),
                    invite_code: invite_code.clone(),
                    hard_cutoff: req.hard_cutoff,
                },
            );
            Ok(CreateAssignmentResponse {
                assignment_id,
                invite_code,
            })
        })
    }

    /// Enrolls the caller, cloning the template into a fresh repository.
    /// Joining again returns the existing repository.
    pub fn join(&self, caller: &Caller, invite_code: &str) -> Result<RepoIdResponse> {
        let code = normalize_invite_code(invite_code);
        let existing = {
            let s = self.lock();
            let a = s
                .assignments
                .values()
                .find(|a| a.invite_code == code)
                .ok_or_else(|| ServiceError::UnknownCode(invite_code.to_owned()))?;
            if a.instructor == caller.username {
                return Err(ServiceError::Forbidden("instructors cannot join their own assignment".into()));
            }
            s.enrollments
                .iter()
                .find(|e| e.assignment_id == a.assignment_id && e.student == caller.username)
                .map(|e| e.repo_id.clone())
        };
        if let Some(repo_id) = existing {
            return Ok(RepoIdResponse { repo_id });
        }
        let now = self.clock.now();
        self.mutate(|s| {
            let a = s
                .assignments
                .values()
                .find(|a| a.invite_code == code)
                .cloned()
                .ok_or_else(|| ServiceError::UnknownCode(invite_code.to_owned()))?;
            if let Some(e) = s
                .enrollments
                .iter()
                .find(|e| e.assignment_id == a.assignment_id && e.student == caller.username)
            {
                return Ok(RepoIdResponse {
                    repo_id: e.repo_id.clone(),
                });
            }
            let (head, refs) = match a.template_repo.as_ref().and_then(|t| s.repos.get(t)) {
                Some(t) => (t.head.clone(), t.refs.clone()),
                None => (DEFAULT_BRANCH.to_owned(), BTreeMap::new()),
            };
            let repo_id = s.fresh_id("r");
            s.repos.insert(
                repo_id.clone(),
                RepoRecord {
                    repo_id: repo_id.clone(),
                    owners: vec![caller.username.clone()],
                    assignment_id: Some(a.assignment_id.clone()),
                    head,
                    refs,
                    merge_log: Vec::new(),
                },
            );
            s.enrollments.push(Enrollment {
                assignment_id: a.assignment_id,
                student: caller.username.clone(),
                repo_id: repo_id.clone(),
                joined_at: now,
            });
            Ok(RepoIdResponse { repo_id })
        })
    }

    /// Creates an empty repository owned by the caller and `members`, for
    /// templates and team projects.
    pub fn create_repo(&self, caller: &Caller, req: &CreateRepoRequest) -> Result<RepoIdResponse> {
        self.mutate(|s| {
            let mut owners = vec![caller.username.clone()];
            for m in &req.members {
                if !s.users.contains_key(m) {
                    return Err(ServiceError::Invalid(format!("unknown member {m:?}")));
                }
                if !owners.contains(m) {
                    owners.push(m.clone());
                }
            }
            let repo_id = s.fresh_id("r");
            s.repos.insert(
                repo_id.clone(),
                RepoRecord {
                    repo_id: repo_id.clone(),
                    owners,
                    assignment_id: None,
                    head: DEFAULT_BRANCH.to_owned(),
                    refs: BTreeMap::new(),
                    merge_log: Vec::new(),
                },
            );
            Ok(RepoIdResponse { repo_id })
        })
    }

    fn readable_repo(&self, caller: &Caller, repo_id: &str) -> Result<(RepoRecord, Option<Assignment>)> {
        let s = self.lock();
        let repo = s
            .repos
            .get(repo_id)
            .ok_or_else(|| ServiceError::UnknownRepo(repo_id.to_owned()))?;
        let assignment = repo.assignment_id.as_ref().and_then(|a| s.assignments.get(a));
        let instructs = assignment.is_some_and(|a| a.instructor == caller.username);
        if !instructs && !repo.owners.contains(&caller.username) {
            return Err(ServiceError::Forbidden(format!("{} has no access to {repo_id}", caller.username)));
        }
        Ok((repo.clone(), assignment.cloned()))
    }

    fn owned_assignment(&self, s: &State, caller: &Caller, assignment_id: &str) -> Result<Assignment> {
        let a = s
            .assignments
            .get(assignment_id)
            .ok_or_else(|| ServiceError::UnknownAssignment(assignment_id.to_owned()))?;
        if a.instructor != caller.username {
            return Err(ServiceError::Forbidden(format!("{} is not the instructor of {assignment_id}", caller.username)));
        }
        Ok(a.clone())
    }

    /// Refs, HEAD, and every object reachable from a ref.
    pub fn fetch(&self, caller: &Caller, repo_id: &str) -> Result<FetchResponse> {
        let (repo, _) = self.readable_repo(caller, repo_id)?;
        let mut objects = BTreeMap::new();
        for tip in repo.refs.values() {
            collect_reachable(&*self.store, *tip, &mut objects)?;
        }
        Ok(FetchResponse {
            refs: repo
                .refs
                .iter()
                .map(|(name, target)| WireRef {
                    name: name.clone(),
                    target: *target,
                })
                .collect(),
            head: repo.head,
            objects: objects.iter().map(|(id, raw)| WireObject::new(*id, raw)).collect(),
        })
    }

    /// Validates and applies a push. Objects are stored before the ref moves; the
    /// metadata save is the commit point, so a failed push leaves refs and the
    /// push log untouched and any stored objects unreachable.
    pub fn push(&self, caller: &Caller, repo_id: &str, req: PushRequest) -> Result<PushResponse> {
        let received_at = self.clock.now();
        let (_, assignment) = self.readable_repo(caller, repo_id)?;
        if !valid_branch_name(&req.branch) {
            return Err(ServiceError::Invalid(format!("invalid branch name {:?}", req.branch)));
        }
        let late = assignment.as_ref().is_some_and(|a| received_at > a.deadline);
        if late && assignment.as_ref().is_some_and(|a| a.hard_cutoff) {
            return Err(ServiceError::DeadlinePassed);
        }

        self.check_fault(PushStep::Validate)?;
        let mut incoming = HashMap::with_capacity(req.objects.len());
        for o in &req.objects {
            let payload = o
                .payload()
                .map_err(|e| ServiceError::CorruptObject(e.to_string()))?;
            let actual = hash_object(o.kind, &payload)?;
            if actual != o.id {
                return Err(ServiceError::CorruptObject(format!(
                    "object claimed as {} hashes to {actual}",
                    o.id
                )));
            }
            validate_payload(o.kind, &payload)?;
            incoming.insert(o.id, RawObject { kind: o.kind, payload });
        }

        self.check_fault(PushStep::Closure)?;
        let view = Overlay {
            incoming: &incoming,
            store: &*self.store,
        };
        check_closure(&view, req.new_target, req.expected_old)?;
        let fast_forward = match req.expected_old {
            Some(old) => is_ancestor(&view, &old, &req.new_target)?,
            None => true,
        };

        let mut order: Vec<_> = incoming.iter().collect();
        order.sort_by_key(|(id, raw)| (kind_rank(raw.kind), **id));
        let half = order.len() / 2;
        for (i, (_, raw)) in order.iter().enumerate() {
            if i == half {
                self.check_fault(PushStep::WriteObjects)?;
            }
            self.store.put(raw.kind, &raw.payload)?;
        }
        if order.is_empty() {
            self.check_fault(PushStep::WriteObjects)?;
        }

        let mut guard = self.lock();
        let mut next = guard.clone();
        self.check_fault(PushStep::CompareAndSwap)?;
        let repo = next
            .repos
            .get_mut(repo_id)
            .ok_or_else(|| ServiceError::UnknownRepo(repo_id.to_owned()))?;
        let current = repo.refs.get(&req.branch).copied();
        if current != req.expected_old {
            return Err(ServiceError::RefConflict {
                branch: req.branch,
                expected: req.expected_old,
                current,
            });
        }
        if !fast_forward {
            return Err(ServiceError::NonFastForward {
                old: req.expected_old.expect("unborn branches always fast-forward"),
                new_target: req.new_target,
            });
        }
        repo.refs.insert(req.branch.clone(), req.new_target);
        repo.merge_log.extend(req.merge_events);
        self.check_fault(PushStep::AppendRecord)?;
        next.pushes.push(PushRecord {
            repo_id: repo_id.to_owned(),
            pusher: caller.username.clone(),
            branch: req.branch,
            new_target: req.new_target,
            received_at,
            late,
        });
        self.check_fault(PushStep::Persist)?;
        self.persistence.save(&next)?;
        *guard = next;
        Ok(PushResponse { received_at, late })
    }

    /// One row per enrolled student, sorted by username.
    pub fn list_submissions(&self, caller: &Caller, assignment_id: &str) -> Result<Vec<SubmissionRow>> {
        let s = self.lock();
        self.owned_assignment(&s, caller, assignment_id)?;
        let mut rows: Vec<SubmissionRow> = s
            .enrollments
            .iter()
            .filter(|e| e.assignment_id == assignment_id)
            .map(|e| {
                let latest = s.pushes.iter().rev().find(|p| p.repo_id == e.repo_id);
                let repo = s.repos.get(&e.repo_id);
                SubmissionRow {
                    username: e.student.clone(),
                    student_id: s.users.get(&e.student).map(|u| u.user_id.clone()).unwrap_or_default(),
                    repo_id: e.repo_id.clone(),
                    submitted: latest.is_some(),
                    latest_push_at: latest.map(|p| p.received_at),
                    late: latest.is_some_and(|p| p.late),
                    head_commit: repo.and_then(|r| r.refs.get(&r.head).copied()),
                }
            })
            .collect();
        rows.sort_by(|a, b| a.username.cmp(&b.username));
        Ok(rows)
    }

    /// Compares `file` across the head commits of every student who has pushed.
    pub fn similarity(&self, caller: &Caller, assignment_id: &str, file: &str) -> Result<SimilarityReport> {
        let path = normalize_path(file).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        let heads: Vec<(String, Option<ObjectId>)> = {
            let s = self.lock();
            self.owned_assignment(&s, caller, assignment_id)?;
            s.enrollments
                .iter()
                .filter(|e| e.assignment_id == assignment_id && s.pushes.iter().any(|p| p.repo_id == e.repo_id))
                .map(|e| {
                    let head = s.repos.get(&e.repo_id).and_then(|r| r.refs.get(&r.head).copied());
                    (e.student.clone(), head)
                })
                .collect()
        };
        let mut submissions = Vec::with_capacity(heads.len());
        for (student, head) in heads {
            let blob = match head {
                Some(c) => {
                    let tree = self.store.read_commit(&c)?.tree;
                    match flatten_tree(&*self.store, &tree)?.get(&path) {
                        Some(id) => Some((*id, self.store.read_blob(id)?)),
                        None => None,
                    }
                }
                None => None,
            };
            submissions.push(Submission { student, blob });
        }
        Ok(analytics::similarity_report(assignment_id, &path, &submissions))
    }

    /// Commit shares on the repository's head branch; `members` defaults to the owners.
    pub fn contributions(
        &self,
        caller: &Caller,
        repo_id: &str,
        members: Option<Vec<String>>,
    ) -> Result<ContributionReport> {
        let (record, _) = self.readable_repo(caller, repo_id)?;
        let members = members.unwrap_or_else(|| record.owners.clone());
        let head = record.head.clone();
        let repo = Repository::from_parts(record.repo_id, record.owners, record.head, record.refs)?;
        Ok(analytics::contribution_distribution(&*self.store, &repo, &head, &members)?)
    }

    pub fn timing(&self, caller: &Caller, assignment_id: &str) -> Result<TimingReport> {
        let s = self.lock();
        let a = self.owned_assignment(&s, caller, assignment_id)?;
        let repos: HashSet<&str> = s
            .enrollments
            .iter()
            .filter(|e| e.assignment_id == assignment_id)
            .map(|e| e.repo_id.as_str())
            .collect();
        let pushes: Vec<PushRecord> = s
            .pushes
            .iter()
            .filter(|p| repos.contains(p.repo_id.as_str()))
            .cloned()
            .collect();
        Ok(analytics::deadline_timing(assignment_id, a.deadline, &pushes))
    }

    pub fn branch_activity(&self, caller: &Caller, repo_id: &str) -> Result<BranchActivityReport> {
        let (repo, _) = self.readable_repo(caller, repo_id)?;
        Ok(analytics::branch_activity(repo_id, repo.refs.len(), &repo.merge_log))
    }

    pub fn push_log(&self) -> Vec<PushRecord> {
        self.lock().pushes.clone()
    }

    pub fn repo(&self, repo_id: &str) -> Option<RepoRecord> {
        self.lock().repos.get(repo_id).cloned()
    }

    /// Walks every ref of every repository, re-hashing each reachable object.
    pub fn crawl(&self) -> CrawlReport {
        let repos: Vec<RepoRecord> = self.lock().repos.values().cloned().collect();
        let mut report = CrawlReport {
            repos: repos.len(),
            ..CrawlReport::default()
        };
        let mut checked = HashSet::new();
        for repo in &repos {
            for (name, tip) in &repo.refs {
                report.refs += 1;
                let mut objects = BTreeMap::new();
                if let Err(e) = collect_reachable(&*self.store, *tip, &mut objects) {
                    report.problems.push(format!("{}/{name}: {e}", repo.repo_id));
                    continue;
                }
                for (id, raw) in objects {
                    if !checked.insert(id) {
                        continue;
                    }
                    if hash_object(raw.kind, &raw.payload).ok() != Some(id) {
                        report.problems.push(format!("{}/{name}: {id} does not match its content", repo.repo_id));
                    }
                }
            }
        }
        report.objects = checked.len();
        report
    }
}

fn kind_rank(kind: ObjectKind) -> u8 {
    match kind {
        ObjectKind::Blob => 0,
        ObjectKind::Tree => 1,
        ObjectKind::Commit => 2,
    }
}

/// Every commit, tree, and blob reachable from `tip`.
fn collect_reachable(
    store: &dyn ObjectStore,
    tip: ObjectId,
    out: &mut BTreeMap<ObjectId, RawObject>,
) -> Result<(), classgit_core::Error> {
    let mut stack = vec![tip];
    while let Some(id) = stack.pop() {
        if out.contains_key(&id) {
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
    Ok(())
}

/// Confirms that `target`'s ancestry and trees resolve. The walk stops at
/// `known`, the branch's current tip, whose closure the server already holds
/// (the later compare-and-swap rejects the push if it is not the tip).
fn check_closure(view: &Overlay<'_>, target: ObjectId, known: Option<ObjectId>) -> Result<()> {
    let missing = |id: ObjectId, what: &str| ServiceError::MissingObject(format!("{what} {id} is not on the server or in the push"));
    let mut commits = vec![target];
    let mut seen_commits = HashSet::new();
    let mut seen_trees = HashSet::new();
    while let Some(id) = commits.pop() {
        if Some(id) == known || !seen_commits.insert(id) {
            continue;
        }
        if !view.contains(&id) {
            return Err(missing(id, "commit"));
        }
        let commit = view.read_commit(&id)?;
        commits.extend(commit.parents.iter().copied());
        let mut trees = vec![commit.tree];
        while let Some(t) = trees.pop() {
            if !seen_trees.insert(t) {
                continue;
            }
            if !view.contains(&t) {
                return Err(missing(t, "tree"));
            }
            for entry in view.read_tree(&t)?.entries() {
                match entry.kind.object_kind() {
                    ObjectKind::Tree => trees.push(entry.id),
                    _ if !view.contains(&entry.id) => return Err(missing(entry.id, "blob")),
                    _ => {}
                }
            }
        }
    }
    Ok(())
}

/// Read-only union of the push's objects and the server store.
struct Overlay<'a> {
    incoming: &'a HashMap<ObjectId, RawObject>,
    store: &'a dyn ObjectStore,
}

impl ObjectStore for Overlay<'_> {
    fn put(&self, _kind: ObjectKind, _payload: &[u8]) -> classgit_core::Result<(ObjectId, bool)> {
        Err(classgit_core::Error::Format {
            what: "push overlay".into(),
            reason: "read-only".into(),
        })
    }

    fn get(&self, id: &ObjectId) -> classgit_core::Result<RawObject> {
        match self.incoming.get(id) {
            Some(raw) => Ok(raw.clone()),
            None => self.store.get(id),
        }
    }

    fn contains(&self, id: &ObjectId) -> bool {
        self.incoming.contains_key(id) || self.store.contains(id)
    }

    fn stats(&self) -> StorageStats {
        self.store.stats()
    }

    fn ids(&self) -> Vec<ObjectId> {
        let mut ids: Vec<ObjectId> = self.incoming.keys().copied().chain(self.store.ids()).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}
