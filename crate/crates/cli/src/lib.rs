//! `mgit`, the student client. Everything runs through [`run`] so the binary
//! and in-process tests share one code path.
//!
//! Exit status: 0 on success, 1 for errors the user can act on (bad input,
//! rejected credentials, conflicts, refused pushes), 2 for network, server,
//! and local storage failures.

mod checkout;
mod client;
mod config;
mod error;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use classgit_core::history::MergeOutcome;
use classgit_core::objstore::RawObject;
use classgit_core::stage::{normalize_path, Selector};
use classgit_core::wire::{
    CreateAssignmentRequest, CreateAssignmentResponse, CreateRepoRequest, FetchResponse, JoinRequest, LoginRequest,
    LoginResponse, PushRequest, PushResponse, RegisterRequest, RegisterResponse, RepoIdResponse, Role, SubmissionRow,
    WireObject,
};
use classgit_core::{ObjectId, ObjectStore};
use serde::Serialize;
use serde_json::Value;

pub use checkout::{Checkout, CheckoutConfig};
pub use config::{UserConfig, DEFAULT_SERVER};
pub use error::CliError;
use error::Result;

#[derive(Parser, Debug)]
#[command(name = "mgit", version, about = "Submit assignments to a classgit server")]
struct Cli {
    /// Server base URL.
    #[arg(long, global = true, env = "CLASSGIT_SERVER")]
    server: Option<String>,
    /// User config file (default ~/.classgit/config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run as if started in this directory.
    #[arg(short = 'C', global = true, value_name = "DIR")]
    dir: Option<PathBuf>,
    /// Machine-readable output where supported.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create an account.
    Register {
        username: String,
        #[arg(long, value_enum, default_value = "student")]
        role: RoleArg,
        #[arg(long)]
        password_stdin: bool,
    },
    /// Log in and remember the session token.
    Login {
        username: String,
        /// Read the password from the first line of stdin.
        #[arg(long)]
        password_stdin: bool,
    },
    /// End the session here and on the server.
    Logout,
    /// Enroll in an assignment with its invite code.
    Join { invite_code: String },
    /// Copy a repository from the server into a new directory.
    Clone {
        repo_id: String,
        #[arg(value_name = "DIR")]
        directory: Option<PathBuf>,
    },
    /// Download new objects and update origin/<branch> marks.
    Fetch,
    /// Stage files (directories recursively; missing tracked files as removals).
    Add {
        #[arg(required = true)]
        paths: Vec<String>,
    },
    /// Show staged, modified, deleted, and untracked files.
    Status,
    /// Record the index as a new commit.
    Commit {
        #[arg(short, long)]
        message: String,
    },
    /// Unstage (index back to HEAD); --hard also rewrites working files.
    Reset {
        #[arg(long)]
        hard: bool,
        path: Option<String>,
    },
    /// Show history of the current branch.
    Log,
    /// List branches, or create one at HEAD.
    Branch { name: Option<String> },
    /// Move HEAD to another branch.
    Switch { name: String },
    /// Merge a branch (or origin/<branch>) into the current branch.
    Merge { branch: String },
    /// Send new commits on the current branch to the server.
    Push,
    /// Re-hash every local object and check that refs resolve.
    Verify,
    /// Manage server repositories.
    #[command(subcommand)]
    Repo(RepoCmd),
    /// Instructor commands for assignments.
    #[command(subcommand)]
    Assignment(AssignmentCmd),
    /// Instructor view of who has submitted.
    Submissions { assignment_id: String },
    /// Analytics reports (printed as JSON).
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum RoleArg {
    Student,
    Instructor,
}

#[derive(Subcommand, Debug)]
enum RepoCmd {
    /// Create an empty repository (a template, or a team repository).
    Create {
        #[arg(long = "member")]
        members: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum AssignmentCmd {
    Create(CreateAssignment),
}

#[derive(Args, Debug)]
struct CreateAssignment {
    #[arg(long)]
    title: String,
    /// Unix seconds, RFC 3339 (2025-05-01T23:59:00Z), or +<n>[smhd] from now.
    #[arg(long)]
    deadline: String,
    #[arg(long)]
    template: Option<String>,
    /// Refuse pushes after the deadline instead of flagging them late.
    #[arg(long)]
    hard_cutoff: bool,
}

#[derive(Subcommand, Debug)]
enum ReportCmd {
    Similarity {
        assignment_id: String,
        #[arg(long)]
        file: String,
    },
    Timing {
        assignment_id: String,
    },
    Contributions {
        repo_id: String,
        #[arg(long, value_delimiter = ',')]
        members: Vec<String>,
    },
    Branches {
        repo_id: String,
    },
}

/// Process environment for one invocation.
pub struct Env<'a> {
    pub cwd: PathBuf,
    /// Used when `--config` is absent.
    pub config_path: Option<PathBuf>,
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
    /// Whether password prompts may read the terminal directly.
    pub interactive: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, env: &mut Env<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(env.stdout, "{text}")
            } else {
                write!(env.stderr, "{text}")
            };
            return code;
        }
    };
    match Session::new(&cli, env).and_then(|mut s| s.dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(env.stderr, "mgit: {e}");
            if let CliError::Rejected { code, .. } = &e {
                if let Some(hint) = hint_for(code) {
                    let _ = writeln!(env.stderr, "hint: {hint}");
                }
            }
            e.exit_code()
        }
    }
}

fn hint_for(code: &str) -> Option<&'static str> {
    match code {
        "ref_conflict" | "non_fast_forward" => {
            Some("the server branch moved; run `mgit fetch` and `mgit merge origin/<branch>`, then push again")
        }
        "unauthorized" => Some("run `mgit login <username>`"),
        _ => None,
    }
}

struct Session<'e, 'a> {
    env: &'e mut Env<'a>,
    config_path: PathBuf,
    config: UserConfig,
    server_flag: Option<String>,
    json: bool,
    cwd: PathBuf,
}

fn now() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64)
}

fn format_time(ts: i64) -> String {
    time::OffsetDateTime::from_unix_timestamp(ts)
        .ok()
        .and_then(|t| t.format(&time::format_description::well_known::Rfc3339).ok())
        .unwrap_or_else(|| ts.to_string())
}

fn short(id: &ObjectId) -> String {
    id.to_hex()[..10].to_owned()
}

fn parse_deadline(text: &str, now: i64) -> Result<i64> {
    if let Some(rel) = text.strip_prefix('+') {
        let (num, unit) = rel.split_at(rel.len().saturating_sub(1));
        let mult = match unit {
            "s" => 1,
            "m" => 60,
            "h" => 3600,
            "d" => 86400,
            _ => return Err(CliError::user(format!("bad relative deadline {text:?}; use +<n>[smhd]"))),
        };
        let n: i64 = num
            .parse()
            .map_err(|_| CliError::user(format!("bad relative deadline {text:?}")))?;
        return Ok(now + n * mult);
    }
    if let Ok(secs) = text.parse::<i64>() {
        return Ok(secs);
    }
    time::OffsetDateTime::parse(text, &time::format_description::well_known::Rfc3339)
        .map(|t| t.unix_timestamp())
        .map_err(|_| CliError::user(format!("cannot read deadline {text:?}")))
}

impl<'e, 'a> Session<'e, 'a> {
    fn new(cli: &Cli, env: &'e mut Env<'a>) -> Result<Self> {
        let config_path = cli
            .config
            .clone()
            .or_else(|| env.config_path.clone())
            .or_else(config::default_path)
            .ok_or_else(|| CliError::user("cannot locate a home directory; pass --config"))?;
        let config = UserConfig::load(&config_path)?;
        let cwd = match &cli.dir {
            Some(d) => env.cwd.join(d),
            None => env.cwd.clone(),
        };
        Ok(Session {
            env,
            config_path,
            config,
            server_flag: cli.server.clone(),
            json: cli.json,
            cwd,
        })
    }

    fn out(&mut self, text: impl AsRef<str>) -> Result<()> {
        writeln!(self.env.stdout, "{}", text.as_ref())?;
        Ok(())
    }

    fn print_json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("serializable");
        self.out(text)
    }

    fn server(&self, checkout: Option<&Checkout>) -> String {
        self.server_flag
            .clone()
            .or_else(|| checkout.and_then(|c| c.config.server_url.clone()))
            .or_else(|| self.config.server_url.clone())
            .unwrap_or_else(|| DEFAULT_SERVER.to_owned())
    }

    fn token(&self) -> Result<String> {
        self.config
            .token
            .clone()
            .ok_or_else(|| CliError::user("not logged in; run `mgit login <username>`"))
    }

    fn username(&self) -> Result<String> {
        self.token()?;
        self.config
            .username
            .clone()
            .ok_or_else(|| CliError::user("no username on record; run `mgit login <username>`"))
    }

    fn api(&self, checkout: Option<&Checkout>) -> Result<client::Api> {
        Ok(client::Api::new(&self.server(checkout), Some(self.token()?)))
    }

    fn checkout(&self) -> Result<Checkout> {
        self.token()?;
        Checkout::open(&checkout::find_root(&self.cwd)?)
    }

    fn read_password(&mut self, from_stdin: bool) -> Result<String> {
        if !from_stdin && self.env.interactive {
            return rpassword::prompt_password("Password: ").map_err(CliError::from);
        }
        let mut line = String::new();
        self.env.stdin.read_line(&mut line)?;
        let pw = line.trim_end_matches(['\r', '\n']).to_owned();
        if pw.is_empty() {
            return Err(CliError::user("no password given"));
        }
        Ok(pw)
    }

    fn dispatch(&mut self, command: Command) -> Result<()> {
        match command {
            Command::Register {
                username,
                role,
                password_stdin,
            } => self.register(username, role, password_stdin),
            Command::Login {
                username,
                password_stdin,
            } => self.login(username, password_stdin),
            Command::Logout => self.logout(),
            Command::Join { invite_code } => self.join(invite_code),
            Command::Clone { repo_id, directory } => self.clone_repo(repo_id, directory),
            Command::Fetch => self.fetch(),
            Command::Add { paths } => self.add(paths),
            Command::Status => self.status(),
            Command::Commit { message } => self.commit(message),
            Command::Reset { hard, path } => self.reset(hard, path),
            Command::Log => self.log(),
            Command::Branch { name } => self.branch(name),
            Command::Switch { name } => self.switch(name),
            Command::Merge { branch } => self.merge(branch),
            Command::Push => self.push(),
            Command::Verify => self.verify(),
            Command::Repo(RepoCmd::Create { members }) => {
                let r: RepoIdResponse = self.api(None)?.post("/api/repos", &CreateRepoRequest { members })?;
                self.out(format!("created repository {}", r.repo_id))
            }
            Command::Assignment(AssignmentCmd::Create(a)) => self.create_assignment(a),
            Command::Submissions { assignment_id } => self.submissions(assignment_id),
            Command::Report(r) => self.report(r),
        }
    }

    fn register(&mut self, username: String, role: RoleArg, password_stdin: bool) -> Result<()> {
        let password = self.read_password(password_stdin)?;
        let api = client::Api::new(&self.server(None), None);
        let role = match role {
            RoleArg::Student => Role::Student,
            RoleArg::Instructor => Role::Instructor,
        };
        let r: RegisterResponse = api.post(
            "/api/register",
            &RegisterRequest {
                username: username.clone(),
                password,
                role,
            },
        )?;
        self.out(format!("registered {username} ({})", r.user_id))
    }

    fn login(&mut self, username: String, password_stdin: bool) -> Result<()> {
        let password = self.read_password(password_stdin)?;
        let server = self.server(None);
        let api = client::Api::new(&server, None);
        let r: LoginResponse = api.post(
            "/api/login",
            &LoginRequest {
                username: username.clone(),
                password,
            },
        )?;
        self.config.token = Some(r.token);
        self.config.username = Some(username.clone());
        self.config.server_url = Some(server);
        self.config.save(&self.config_path)?;
        self.out(format!("logged in as {username}"))
    }

    fn logout(&mut self) -> Result<()> {
        let Some(token) = self.config.token.take() else {
            return self.out("not logged in");
        };
        self.config.save(&self.config_path)?;
        let api = client::Api::new(&self.server(None), Some(token));
        let _: Value = api.post("/api/logout", &serde_json::json!({}))?;
        self.out("logged out")
    }

    fn join(&mut self, code: String) -> Result<()> {
        let r: RepoIdResponse = self.api(None)?.post("/api/assignments/join", &JoinRequest { invite_code: code })?;
        self.out(format!("enrolled; repository {}", r.repo_id))?;
        self.out(format!("next: mgit clone {}", r.repo_id))
    }

    fn clone_repo(&mut self, repo_id: String, dir: Option<PathBuf>) -> Result<()> {
        let target = self.cwd.join(dir.unwrap_or_else(|| PathBuf::from(&repo_id)));
        let existed = target.exists();
        if existed && std::fs::read_dir(&target)?.next().is_some() {
            return Err(CliError::user(format!("{}: directory not empty", target.display())));
        }
        let server = self.server(None);
        let f: FetchResponse = self.api(None)?.get(&format!("/api/repos/{repo_id}/fetch"))?;
        let objects = decode(&f.objects)?;
        checkout::verify_objects(&objects)?;
        std::fs::create_dir_all(&target)?;
        let result = (|| -> Result<Checkout> {
            let mut co = Checkout::init(
                &target,
                CheckoutConfig {
                    repo_id: repo_id.clone(),
                    server_url: Some(server),
                },
            )?;
            co.receive(&objects)?;
            co.repo.set_head(&f.head)?;
            for r in &f.refs {
                co.repo.set_ref(&r.name, r.target)?;
                co.repo.mark_pushed(&r.name, r.target);
            }
            let flat = co.head_flat()?;
            co.checkout_tree(&BTreeMap::new(), &flat)?;
            for path in flat.keys() {
                co.stage_path(path)?;
            }
            co.save()?;
            Ok(co)
        })();
        match result {
            Ok(co) => {
                let files = co.repo.index.len();
                self.out(format!(
                    "cloned {repo_id} into {} ({} objects, {files} files)",
                    target.display(),
                    objects.len()
                ))
            }
            Err(e) => {
                if existed {
                    let _ = std::fs::remove_dir_all(target.join(checkout::DIR));
                    if let Ok(entries) = std::fs::read_dir(&target) {
                        for entry in entries.flatten() {
                            let _ = std::fs::remove_dir_all(entry.path()).or_else(|_| std::fs::remove_file(entry.path()));
                        }
                    }
                } else {
                    let _ = std::fs::remove_dir_all(&target);
                }
                Err(e)
            }
        }
    }

    fn fetch(&mut self) -> Result<()> {
        let mut co = self.checkout()?;
        let _lock = co.lock()?;
        let f: FetchResponse = self.api(Some(&co))?.get(&format!("/api/repos/{}/fetch", co.config.repo_id))?;
        let objects = decode(&f.objects)?;
        let new = co.receive(&objects)?;
        for r in &f.refs {
            co.repo.mark_pushed(&r.name, r.target);
        }
        co.save()?;
        self.out(format!("fetched {new} new objects"))?;
        for r in &f.refs {
            let local = co.repo.branch(&r.name);
            let note = match local {
                Some(l) if l == r.target => "up to date".to_owned(),
                Some(_) => format!("run `mgit merge origin/{}` to integrate", r.name),
                None => format!("run `mgit merge origin/{}` to create it locally", r.name),
            };
            self.out(format!("  origin/{} -> {} ({note})", r.name, short(&r.target)))?;
        }
        Ok(())
    }

    fn add(&mut self, paths: Vec<String>) -> Result<()> {
        let mut co = self.checkout()?;
        let _lock = co.lock()?;
        let files = co.scan()?;
        let mut staged = 0;
        for arg in &paths {
            let rel = co.relative(&self.cwd, arg)?;
            let prefix = if rel.is_empty() { String::new() } else { format!("{rel}/") };
            let abs = co.abs(&rel);
            if rel.is_empty() || abs.is_dir() {
                let under: Vec<String> = files.keys().filter(|p| p.starts_with(&prefix)).cloned().collect();
                for p in &under {
                    co.stage_path(p)?;
                    staged += 1;
                }
                let gone: Vec<String> = co
                    .repo
                    .index
                    .entries()
                    .map(|e| e.path.clone())
                    .filter(|p| p.starts_with(&prefix) && !files.contains_key(p))
                    .collect();
                for p in gone {
                    co.repo.stage_removal(&p)?;
                    staged += 1;
                }
            } else if abs.is_file() {
                normalize_path(&rel)?;
                co.stage_path(&rel)?;
                staged += 1;
            } else if co.repo.index.get(&rel).is_some() {
                co.repo.stage_removal(&rel)?;
                staged += 1;
            } else {
                return Err(CliError::user(format!("{arg}: no such file")));
            }
        }
        co.save()?;
        if self.json {
            return self.print_json(&serde_json::json!({ "staged": staged }));
        }
        Ok(())
    }

    fn status(&mut self) -> Result<()> {
        let co = self.checkout()?;
        let report = co.repo.status(&co.store, &co.worktree()?)?;
        if self.json {
            let mut v = serde_json::to_value(&report).expect("serializable");
            v["branch"] = Value::from(co.repo.head());
            v["merging"] = Value::from(co.merge_head.is_some());
            return self.print_json(&v);
        }
        self.out(format!("On branch {}", co.repo.head()))?;
        if co.merge_head.is_some() {
            self.out("You are in the middle of a merge; resolve conflicts, `mgit add` them, and commit.")?;
        }
        if report.ahead_count > 0 {
            self.out(format!(
                "Your branch is ahead of 'origin/{}' by {} commit(s).",
                co.repo.head(),
                report.ahead_count
            ))?;
        }
        let head = co.head_flat()?;
        let index = co.repo.index.flat();
        if !report.staged.is_empty() {
            self.out("Changes to be committed:")?;
            for p in &report.staged {
                let what = match (head.contains_key(p), index.contains_key(p)) {
                    (false, _) => "new file",
                    (true, false) => "deleted",
                    (true, true) => "modified",
                };
                self.out(format!("  {what}: {p}"))?;
            }
        }
        let tracked_deleted: BTreeSet<&String> = report.deleted.iter().filter(|p| index.contains_key(*p)).collect();
        if !report.modified.is_empty() || !tracked_deleted.is_empty() {
            self.out("Changes not staged for commit:")?;
            for p in &report.modified {
                self.out(format!("  modified: {p}"))?;
            }
            for p in tracked_deleted {
                self.out(format!("  deleted: {p}"))?;
            }
        }
        if !report.untracked.is_empty() {
            self.out("Untracked files:")?;
            for p in &report.untracked {
                self.out(format!("  {p}"))?;
            }
        }
        if report.is_clean() {
            self.out("nothing to commit, working tree clean")?;
        }
        Ok(())
    }

    fn commit(&mut self, message: String) -> Result<()> {
        if message.trim().is_empty() {
            return Err(CliError::user("empty commit message"));
        }
        let author = self.username()?;
        let mut co = self.checkout()?;
        let _lock = co.lock()?;
        if let Some(theirs) = co.merge_head {
            let unresolved = co.repo.status(&co.store, &co.worktree()?)?;
            let markers = unresolved
                .modified
                .iter()
                .filter(|p| has_conflict_markers(&co.abs(p)))
                .count();
            if markers > 0 {
                return Err(CliError::user(format!(
                    "{markers} file(s) still differ from the index with conflict markers; edit and `mgit add` them first"
                )));
            }
            let id = co.repo.commit_with_parent(&co.store, &author, &message, now(), Some(theirs))?;
            co.merge_head = None;
            co.save()?;
            return self.out(format!("[{} {}] {message} (merge)", co.repo.head(), short(&id)));
        }
        let id = co.repo.create_commit(&co.store, &author, &message, now())?;
        co.save()?;
        self.out(format!("[{} {}] {message}", co.repo.head(), short(&id)))
    }

    fn reset(&mut self, hard: bool, path: Option<String>) -> Result<()> {
        let mut co = self.checkout()?;
        let _lock = co.lock()?;
        let before = co.repo.index.flat();
        match &path {
            Some(p) => {
                let rel = co.relative(&self.cwd, p)?;
                co.repo.unstage(&co.store, &Selector::Path(rel.clone()))?;
                if hard {
                    match co.repo.index.get(&rel) {
                        Some(e) => {
                            let content = co.store.read_blob(&e.blob_id)?;
                            co.write_file(&rel, &content)?;
                        }
                        None => co.remove_file(&rel)?,
                    }
                }
            }
            None => {
                co.repo.unstage(&co.store, &Selector::All)?;
                if hard {
                    let head = co.head_flat()?;
                    co.checkout_tree(&before, &head)?;
                    for (p, id) in &head {
                        if before.get(p) == Some(id) {
                            co.write_file(p, &co.store.read_blob(id)?)?;
                        }
                    }
                    co.merge_head = None;
                }
            }
        }
        co.save()?;
        Ok(())
    }

    fn log(&mut self) -> Result<()> {
        let co = self.checkout()?;
        let head = co.repo.head().to_owned();
        let walk = match co.repo.head_commit() {
            Some(_) => co.repo.history_walk(&co.store, &head)?,
            None => Vec::new(),
        };
        if self.json {
            let items: Vec<Value> = walk
                .iter()
                .map(|(id, c)| {
                    serde_json::json!({
                        "id": id,
                        "parents": c.parents,
                        "author": c.author,
                        "authored_at": c.authored_at,
                        "message": c.message,
                    })
                })
                .collect();
            return self.print_json(&items);
        }
        for (id, c) in walk {
            self.out(format!("commit {id}"))?;
            if c.parents.len() > 1 {
                let ps: Vec<String> = c.parents.iter().map(short).collect();
                self.out(format!("Merge: {}", ps.join(" ")))?;
            }
            self.out(format!("Author: {}", c.author))?;
            self.out(format!("Date:   {}", format_time(c.authored_at)))?;
            self.out("")?;
            for line in c.message.lines() {
                self.out(format!("    {line}"))?;
            }
            self.out("")?;
        }
        Ok(())
    }

    fn branch(&mut self, name: Option<String>) -> Result<()> {
        let mut co = self.checkout()?;
        let Some(name) = name else {
            let head = co.repo.head().to_owned();
            let mut names: BTreeSet<String> = co.repo.refs().keys().cloned().collect();
            names.insert(head.clone());
            for n in names {
                let mark = if n == head { "*" } else { " " };
                self.out(format!("{mark} {n}"))?;
            }
            return Ok(());
        };
        let _lock = co.lock()?;
        let head = co.repo.head().to_owned();
        let at = co.repo.create_branch(&co.store, &name, &head)?;
        co.save()?;
        self.out(format!("created branch {name} at {}", short(&at)))
    }

    /// Fails unless index and tracked files match HEAD.
    fn require_clean(&self, co: &Checkout) -> Result<classgit_core::stage::StatusReport> {
        let report = co.repo.status(&co.store, &co.worktree()?)?;
        if !report.staged.is_empty() || !report.modified.is_empty() || report.deleted.iter().any(|p| co.repo.index.get(p).is_some()) {
            return Err(CliError::user("you have uncommitted changes; commit them or `mgit reset --hard` first"));
        }
        if co.merge_head.is_some() {
            return Err(CliError::user("a merge is in progress; commit it or `mgit reset --hard`"));
        }
        Ok(report)
    }

    fn switch(&mut self, name: String) -> Result<()> {
        let mut co = self.checkout()?;
        let _lock = co.lock()?;
        let report = self.require_clean(&co)?;
        let from = co.head_flat()?;
        if co.repo.branch(&name).is_none() {
            return Err(CliError::user(format!("no branch named {name}")));
        }
        co.repo.switch_branch(&co.store, &name)?;
        let to = co.repo.index.flat();
        if let Some(p) = report.untracked.iter().find(|p| to.contains_key(*p)) {
            return Err(CliError::user(format!("untracked file {p} would be overwritten by {name}")));
        }
        co.checkout_tree(&from, &to)?;
        co.save()?;
        self.out(format!("switched to branch {name}"))
    }

    fn merge(&mut self, spec: String) -> Result<()> {
        let author = self.username()?;
        let mut co = self.checkout()?;
        let _lock = co.lock()?;
        let report = self.require_clean(&co)?;
        let theirs = co
            .repo
            .resolve(&spec)
            .ok_or_else(|| CliError::user(format!("nothing named {spec} to merge")))?;
        let head = co.repo.head().to_owned();
        let from = co.head_flat()?;
        if co.repo.head_commit().is_none() {
            // Unborn branch: adopt theirs outright.
            co.repo.set_ref(&head, theirs)?;
            co.repo.index = co.repo.head_entries(&co.store)?;
            let to = co.repo.index.flat();
            if let Some(p) = report.untracked.iter().find(|p| to.contains_key(*p)) {
                return Err(CliError::user(format!("untracked file {p} would be overwritten")));
            }
            co.checkout_tree(&from, &to)?;
            co.save()?;
            return self.out(format!("Fast-forward to {}", short(&theirs)));
        }
        let logged = co.repo.merge_log().len();
        let theirs_hex = theirs.to_hex();
        let result = co.repo.merge(&co.store, &head, &theirs_hex, &author, &format!("Merge {spec} into {head}"), now())?;
        let events: Vec<_> = co.repo.merge_log()[logged..].to_vec();
        let adopted_remote = match &result.outcome {
            MergeOutcome::FastForward { target, .. } => co.repo.remote_marks().values().any(|m| m == target),
            _ => false,
        };
        // Moving onto a commit the server already has is not an integration
        // the student performed; only report merges made here.
        if !adopted_remote {
            co.pending_merges.extend(events);
        }
        match result.outcome {
            MergeOutcome::FastForward { advanced: false, .. } => {
                co.save()?;
                self.out("Already up to date.")
            }
            MergeOutcome::FastForward { target, .. } => {
                let to = co.repo.index.flat();
                co.checkout_tree(&from, &to)?;
                co.save()?;
                self.out(format!("Fast-forward to {}", short(&target)))
            }
            MergeOutcome::CleanMerge(id) => {
                let to = co.repo.index.flat();
                co.checkout_tree(&from, &to)?;
                co.save()?;
                self.out(format!("Merge made commit {}", short(&id)))
            }
            MergeOutcome::Conflicts { conflicts, draft } => {
                let conflicted: BTreeSet<&str> = conflicts.iter().map(|c| c.path.as_str()).collect();
                for path in from.keys() {
                    if !draft.contains_key(path) && !conflicted.contains(path.as_str()) {
                        co.remove_file(path)?;
                        co.repo.stage_removal(path)?;
                    }
                }
                for (path, content) in &draft {
                    co.write_file(path, content)?;
                    if !conflicted.contains(path.as_str()) {
                        co.stage_path(path)?;
                    }
                }
                co.merge_head = Some(theirs);
                co.save()?;
                for c in &conflicts {
                    writeln!(self.env.stdout, "CONFLICT (content): Merge conflict in {}", c.path)?;
                }
                Err(CliError::user(format!(
                    "automatic merge failed with {} conflict(s); fix them, `mgit add` the files, then `mgit commit`",
                    conflicts.len()
                )))
            }
        }
    }

    fn push(&mut self) -> Result<()> {
        let mut co = self.checkout()?;
        let _lock = co.lock()?;
        let branch = co.repo.head().to_owned();
        let head = co
            .repo
            .head_commit()
            .ok_or_else(|| CliError::user("nothing to push: the current branch has no commits"))?;
        let expected_old = co.repo.last_pushed();
        if expected_old == Some(head) && co.pending_merges.is_empty() {
            return self.out("Everything up-to-date");
        }
        let marks: Vec<ObjectId> = co
            .repo
            .remote_marks()
            .values()
            .copied()
            .filter(|id| co.store.contains(id))
            .collect();
        let known: BTreeSet<ObjectId> = checkout::reachable(&co.store, &marks, &BTreeSet::new())?
            .into_keys()
            .collect();
        let objects: Vec<WireObject> = checkout::reachable(&co.store, &[head], &known)?
            .iter()
            .map(|(id, raw)| WireObject::new(*id, raw))
            .collect();
        let sent = objects.len();
        let req = PushRequest {
            branch: branch.clone(),
            expected_old,
            new_target: head,
            objects,
            merge_events: co.pending_merges.clone(),
        };
        let r: PushResponse = self
            .api(Some(&co))?
            .post(&format!("/api/repos/{}/push", co.config.repo_id), &req)?;
        co.repo.mark_pushed(&branch, head);
        co.pending_merges.clear();
        co.save()?;
        if self.json {
            return self.print_json(&serde_json::json!({
                "branch": branch,
                "new_target": head,
                "objects_sent": sent,
                "received_at": r.received_at,
                "late": r.late,
            }));
        }
        self.out(format!("pushed {} to {branch} ({sent} objects)", short(&head)))?;
        if r.late {
            self.out(format!("note: received at {}, after the deadline", format_time(r.received_at)))?;
        }
        Ok(())
    }

    fn verify(&mut self) -> Result<()> {
        let co = self.checkout()?;
        let bad = co.store.verify();
        let mut problems: Vec<String> = bad.iter().map(|id| format!("object {id} does not match its content")).collect();
        let tips: Vec<(String, ObjectId)> = co
            .repo
            .refs()
            .iter()
            .map(|(n, id)| (n.clone(), *id))
            .chain(co.repo.remote_marks().iter().map(|(n, id)| (format!("origin/{n}"), *id)))
            .collect();
        for (name, id) in tips {
            if let Err(e) = checkout::reachable(&co.store, &[id], &BTreeSet::new()) {
                problems.push(format!("{name}: {e}"));
            }
        }
        for e in co.repo.index.entries() {
            if !co.store.contains(&e.blob_id) {
                problems.push(format!("index entry {} points at missing blob {}", e.path, e.blob_id));
            }
        }
        if problems.is_empty() {
            return self.out(format!("verified {} objects", co.store.ids().len()));
        }
        for p in &problems {
            writeln!(self.env.stderr, "{p}")?;
        }
        Err(CliError::fatal(format!("{} integrity problem(s)", problems.len())))
    }

    fn create_assignment(&mut self, a: CreateAssignment) -> Result<()> {
        let deadline = parse_deadline(&a.deadline, now())?;
        let r: CreateAssignmentResponse = self.api(None)?.post(
            "/api/assignments",
            &CreateAssignmentRequest {
                title: a.title,
                deadline,
                template_repo: a.template,
                hard_cutoff: a.hard_cutoff,
            },
        )?;
        if self.json {
            return self.print_json(&r);
        }
        self.out(format!("assignment {}", r.assignment_id))?;
        self.out(format!("invite code: {}", r.invite_code))
    }

    fn submissions(&mut self, assignment_id: String) -> Result<()> {
        let rows: Vec<SubmissionRow> = self
            .api(None)?
            .get(&format!("/api/assignments/{assignment_id}/submissions"))?;
        if self.json {
            return self.print_json(&rows);
        }
        self.out(format!("{:<16} {:<8} {:<10} {:<26} {}", "student", "repo", "submitted", "latest push", "head"))?;
        for r in rows {
            let when = r.latest_push_at.map(format_time).unwrap_or_else(|| "-".into());
            let late = if r.late { " LATE" } else { "" };
            let head = r.head_commit.as_ref().map(short).unwrap_or_else(|| "-".into());
            let submitted = if r.submitted { "yes" } else { "no" };
            self.out(format!("{:<16} {:<8} {:<10} {:<26} {head}{late}", r.username, r.repo_id, submitted, when))?;
        }
        Ok(())
    }

    fn report(&mut self, r: ReportCmd) -> Result<()> {
        let api = self.api(None)?;
        let v: Value = match r {
            ReportCmd::Similarity { assignment_id, file } => {
                let file = url_encode(&file);
                api.get(&format!("/api/assignments/{assignment_id}/similarity?file={file}"))?
            }
            ReportCmd::Timing { assignment_id } => api.get(&format!("/api/assignments/{assignment_id}/timing"))?,
            ReportCmd::Contributions { repo_id, members } => {
                let q = if members.is_empty() {
                    String::new()
                } else {
                    format!("?members={}", url_encode(&members.join(",")))
                };
                api.get(&format!("/api/repos/{repo_id}/analytics/contributions{q}"))?
            }
            ReportCmd::Branches { repo_id } => api.get(&format!("/api/repos/{repo_id}/analytics/branches"))?,
        };
        self.print_json(&v)
    }
}

fn url_encode(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' | b'/' | b',' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

fn decode(objects: &[WireObject]) -> Result<Vec<(ObjectId, RawObject)>> {
    objects
        .iter()
        .map(|o| {
            let payload = o
                .payload()
                .map_err(|e| CliError::fatal(format!("corrupt object from server: {e}")))?;
            Ok((o.id, RawObject { kind: o.kind, payload }))
        })
        .collect()
}

fn has_conflict_markers(path: &Path) -> bool {
    std::fs::read(path).is_ok_and(|b| {
        b.split(|c| *c == b'\n')
            .any(|l| l.starts_with(classgit_core::diff3::MARKER_OURS.as_bytes()))
    })
}
