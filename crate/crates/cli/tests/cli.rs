use std::path::{Path, PathBuf};
use std::sync::Arc;

use classgit_cli::{run, Env};
use classgit_service::auth::Pbkdf2Verifier;
use classgit_service::clock::ManualClock;
use classgit_service::{BackgroundServer, Service, ServiceOptions};

const T0: i64 = 1_700_000_000;

struct World {
    server: BackgroundServer,
    clock: Arc<ManualClock>,
    dir: tempfile::TempDir,
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

impl World {
    fn new() -> World {
        let clock = Arc::new(ManualClock::new(T0));
        let svc = Service::in_memory(ServiceOptions {
            verifier: Arc::new(Pbkdf2Verifier { rounds: 16 }),
            clock: clock.clone(),
            token_lifetime: 24 * 3600,
        });
        World {
            server: BackgroundServer::start_local(Arc::new(svc)).unwrap(),
            clock,
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    /// Runs mgit as `user` (each user has its own config file) from `cwd`.
    fn mgit_in(&self, user: &str, cwd: &Path, args: &[&str], stdin: &str) -> Out {
        let mut input = stdin.as_bytes();
        let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
        let mut env = Env {
            cwd: cwd.to_path_buf(),
            config_path: Some(self.path(&format!("{user}.config"))),
            stdin: &mut input,
            stdout: &mut stdout,
            stderr: &mut stderr,
            interactive: false,
        };
        let url = self.server.url();
        let argv = ["mgit", "--server", &url].into_iter().chain(args.iter().copied());
        let code = run(argv, &mut env);
        Out {
            code,
            stdout: String::from_utf8(stdout).unwrap(),
            stderr: String::from_utf8(stderr).unwrap(),
        }
    }

    fn mgit(&self, user: &str, args: &[&str]) -> Out {
        self.mgit_in(user, self.dir.path(), args, "")
    }

    /// Runs in `<root>/<dir>` and insists on success.
    fn ok(&self, user: &str, dir: &str, args: &[&str]) -> String {
        let out = self.mgit_in(user, &self.path(dir), args, "");
        assert_eq!(out.code, 0, "mgit {args:?} failed: {}{}", out.stdout, out.stderr);
        out.stdout
    }

    fn account(&self, user: &str, role: &str) {
        let r = self.mgit_in(user, self.dir.path(), &["register", user, "--role", role, "--password-stdin"], "password123\n");
        assert_eq!(r.code, 0, "{}", r.stderr);
        let r = self.mgit_in(user, self.dir.path(), &["login", user, "--password-stdin"], "password123\n");
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(r.stdout.trim(), format!("logged in as {user}"));
    }

    fn write(&self, rel: &str, text: &str) {
        let p = self.path(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, text).unwrap();
    }

    fn read(&self, rel: &str) -> String {
        std::fs::read_to_string(self.path(rel)).unwrap()
    }

    /// Creates a repository owned by `members` and returns its id.
    fn team(&self, members: &[&str]) -> String {
        let mut args = vec!["repo", "create"];
        for m in members {
            args.extend(["--member", m]);
        }
        let out = self.ok(members[0], "", &args);
        let repo = out.trim().rsplit(' ').next().unwrap().to_owned();
        repo
    }
}

fn field<'a>(text: &'a str, prefix: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or_else(|| panic!("no line starting {prefix:?} in {text}"))
        .trim()
}

fn push_json(w: &World, user: &str, dir: &str) -> serde_json::Value {
    serde_json::from_str(&w.ok(user, dir, &["--json", "push"])).unwrap()
}

#[test]
fn assignment_round_trip() {
    let w = World::new();
    w.account("prof", "instructor");
    w.account("ana", "student");

    let template = w.team(&["prof"]);
    w.ok("prof", "", &["clone", &template, "tpl"]);
    assert!(w.path("tpl/.mgit").is_dir());
    w.write("tpl/README.md", "# lab 1\n");
    w.write("tpl/src/main.c", "int main(void) { return 0; }\n");
    w.ok("prof", "tpl", &["add", "."]);
    w.ok("prof", "tpl", &["commit", "-m", "starter code"]);
    w.ok("prof", "tpl", &["push"]);

    let deadline = (T0 + 7 * 86400).to_string();
    let out = w.ok(
        "prof",
        "",
        &["assignment", "create", "--title", "lab 1", "--deadline", &deadline, "--template", &template],
    );
    let aid = field(&out, "assignment ").to_owned();
    let code = field(&out, "invite code: ").to_owned();

    let out = w.ok("ana", "", &["join", &code.to_lowercase()]);
    let repo = field(&out, "enrolled; repository ").to_owned();
    let again = w.ok("ana", "", &["join", &code]);
    assert_eq!(field(&again, "enrolled; repository "), repo);

    w.ok("ana", "", &["clone", &repo, "lab"]);
    assert_eq!(w.read("lab/README.md"), "# lab 1\n");
    assert!(w.ok("ana", "lab", &["status"]).contains("working tree clean"));
    assert_eq!(w.ok("ana", "lab", &["fetch"]).lines().next().unwrap(), "fetched 0 new objects");

    w.write("lab/src/main.c", "int main(void) { return 42; }\n");
    w.write("lab/notes.txt", "done\n");
    let status: serde_json::Value = serde_json::from_str(&w.ok("ana", "lab", &["--json", "status"])).unwrap();
    assert_eq!(status["modified"], serde_json::json!(["src/main.c"]));
    assert_eq!(status["untracked"], serde_json::json!(["notes.txt"]));

    w.clock.advance(3600);
    w.ok("ana", "lab/src", &["add", "main.c", "../notes.txt"]);
    w.ok("ana", "lab", &["commit", "-m", "answer"]);
    let pushed = push_json(&w, "ana", "lab");
    // New blob for main.c, new blob for notes.txt, src tree, root tree, commit.
    assert_eq!(pushed["objects_sent"], 5);
    assert_eq!(pushed["late"], false);
    assert_eq!(w.ok("ana", "lab", &["push"]).trim(), "Everything up-to-date");

    let log: serde_json::Value = serde_json::from_str(&w.ok("ana", "lab", &["--json", "log"])).unwrap();
    let head = log[0]["id"].as_str().unwrap().to_owned();
    assert_eq!(log[0]["author"], "ana");
    assert_eq!(log.as_array().unwrap().len(), 2);
    assert_eq!(pushed["new_target"], head.as_str());

    let rows: serde_json::Value = serde_json::from_str(&w.ok("prof", "", &["--json", "submissions", &aid])).unwrap();
    assert_eq!(rows[0]["username"], "ana");
    assert_eq!(rows[0]["submitted"], true);
    assert_eq!(rows[0]["head_commit"], head.as_str());
    let svc = w.server.service();
    assert_eq!(svc.repo(&repo).unwrap().refs["main"].to_hex(), head);

    assert!(w.ok("ana", "lab", &["verify"]).starts_with("verified"));
}

#[test]
fn exit_codes() {
    let w = World::new();
    let r = w.mgit("nobody", &["status"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("not logged in"));
    assert_eq!(w.mgit("nobody", &["--help"]).code, 0);
    assert_eq!(w.mgit("nobody", &["frobnicate"]).code, 1);

    w.account("ana", "student");
    let r = w.mgit_in("ana", w.dir.path(), &["login", "ana", "--password-stdin"], "wrong-password\n");
    assert_eq!(r.code, 1);
    assert_eq!(w.mgit_in("ana", w.dir.path(), &["register", "ana", "--password-stdin"], "password123\n").code, 1);
    let r = w.mgit("ana", &["join", "ZZZZZZZZ"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("unknown_code"), "{}", r.stderr);

    // Nothing listening on the port any more.
    let dead = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}", l.local_addr().unwrap())
    };
    let mut input: &[u8] = b"";
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let mut env = Env {
        cwd: w.dir.path().to_path_buf(),
        config_path: Some(w.path("ana.config")),
        stdin: &mut input,
        stdout: &mut o,
        stderr: &mut e,
        interactive: false,
    };
    assert_eq!(run(["mgit", "--server", &dead, "join", "ABCDEFGH"], &mut env), 2);

    let repo = w.team(&["ana"]);
    w.ok("ana", "", &["clone", &repo, "wd"]);
    assert!(w.path("wd/.mgit").is_dir());
    assert_eq!(std::fs::read_dir(w.path("wd")).unwrap().count(), 1);
    let r = w.mgit("ana", &["clone", &repo, "wd"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("directory not empty"));

    let r = w.mgit_in("ana", &w.path("wd"), &["commit", "-m", "x"], "");
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("nothing to commit"));
    assert_eq!(w.mgit_in("ana", &w.path("wd"), &["add", "missing.txt"], "").code, 1);
    assert_eq!(w.mgit_in("ana", &w.path("wd"), &["push"], "").code, 1);
    let r = w.mgit_in("ana", w.dir.path(), &["status"], "");
    assert_eq!(r.code, 1);

    w.ok("ana", "", &["logout"]);
    w.ok("ana", "", &["logout"]);
    assert_eq!(w.mgit_in("ana", &w.path("wd"), &["status"], "").code, 1);
}

#[test]
fn conflicting_pushes_merge_and_resubmit() {
    let w = World::new();
    w.account("ana", "student");
    w.account("ben", "student");
    let repo = w.team(&["ana", "ben"]);

    w.ok("ana", "", &["clone", &repo, "a"]);
    w.write("a/report.txt", "title\nintro\nbody\nend\n");
    w.ok("ana", "a", &["add", "report.txt"]);
    w.ok("ana", "a", &["commit", "-m", "outline"]);
    w.ok("ana", "a", &["push"]);

    w.ok("ben", "", &["clone", &repo, "b"]);
    w.write("a/report.txt", "title\nintro by ana\nbody\nend\n");
    w.ok("ana", "a", &["add", "report.txt"]);
    w.ok("ana", "a", &["commit", "-m", "ana intro"]);
    w.ok("ana", "a", &["push"]);

    w.write("b/report.txt", "title\nintro by ben\nbody\nend\n");
    w.write("b/refs.txt", "[1] a textbook\n");
    w.ok("ben", "b", &["add", "."]);
    w.ok("ben", "b", &["commit", "-m", "ben intro"]);
    let r = w.mgit_in("ben", &w.path("b"), &["push"], "");
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("ref_conflict"), "{}", r.stderr);
    assert!(r.stderr.contains("mgit fetch"));

    assert!(w.ok("ben", "b", &["fetch"]).starts_with("fetched 3 new objects"));
    let r = w.mgit_in("ben", &w.path("b"), &["merge", "origin/main"], "");
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("CONFLICT (content): Merge conflict in report.txt"));
    assert_eq!(
        w.read("b/report.txt"),
        "title\n<<<<<<< ours\nintro by ben\n=======\nintro by ana\n>>>>>>> theirs\nbody\nend\n"
    );
    let r = w.mgit_in("ben", &w.path("b"), &["commit", "-m", "merge"], "");
    assert_eq!(r.code, 1, "commit with markers still present must be refused");

    w.write("b/report.txt", "title\nintro by ana and ben\nbody\nend\n");
    w.ok("ben", "b", &["add", "report.txt"]);
    w.ok("ben", "b", &["commit", "-m", "merge origin/main"]);
    let pushed = push_json(&w, "ben", "b");
    // ben's commit, tree and two blobs, plus the merge commit, its tree and blob.
    assert_eq!(pushed["objects_sent"], 7);

    let log: serde_json::Value = serde_json::from_str(&w.ok("ben", "b", &["--json", "log"])).unwrap();
    assert_eq!(log[0]["parents"].as_array().unwrap().len(), 2);
    assert_eq!(log.as_array().unwrap().len(), 4);

    let events = &w.server.service().repo(&repo).unwrap().merge_log;
    assert_eq!(events.len(), 1);

    w.ok("ana", "a", &["fetch"]);
    assert!(w.ok("ana", "a", &["merge", "origin/main"]).starts_with("Fast-forward"));
    assert_eq!(w.read("a/refs.txt"), "[1] a textbook\n");
    assert_eq!(w.read("a/report.txt"), "title\nintro by ana and ben\nbody\nend\n");
    assert_eq!(w.ok("ana", "a", &["push"]).trim(), "Everything up-to-date");
    w.ok("ana", "a", &["verify"]);
    w.ok("ben", "b", &["verify"]);
}

#[test]
fn branches_and_reset() {
    let w = World::new();
    w.account("ana", "student");
    let repo = w.team(&["ana"]);
    w.ok("ana", "", &["clone", &repo, "wd"]);
    w.write("wd/a.txt", "one\n");
    w.ok("ana", "wd", &["add", "a.txt"]);
    w.ok("ana", "wd", &["commit", "-m", "first"]);

    w.ok("ana", "wd", &["branch", "draft"]);
    assert_eq!(w.ok("ana", "wd", &["branch"]), "  draft\n* main\n");
    w.ok("ana", "wd", &["switch", "draft"]);
    w.write("wd/b.txt", "draft only\n");
    w.ok("ana", "wd", &["add", "b.txt"]);
    w.ok("ana", "wd", &["commit", "-m", "draft work"]);
    w.ok("ana", "wd", &["switch", "main"]);
    assert!(!w.path("wd/b.txt").exists());

    w.write("wd/a.txt", "scribble\n");
    let r = w.mgit_in("ana", &w.path("wd"), &["switch", "draft"], "");
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("uncommitted"));

    w.ok("ana", "wd", &["add", "a.txt"]);
    w.ok("ana", "wd", &["reset"]);
    assert_eq!(w.read("wd/a.txt"), "scribble\n");
    let status: serde_json::Value = serde_json::from_str(&w.ok("ana", "wd", &["--json", "status"])).unwrap();
    assert_eq!(status["staged"], serde_json::json!([]));
    assert_eq!(status["modified"], serde_json::json!(["a.txt"]));

    w.ok("ana", "wd", &["reset", "--hard"]);
    assert_eq!(w.read("wd/a.txt"), "one\n");
    assert!(w.ok("ana", "wd", &["status"]).contains("working tree clean"));

    assert!(w.ok("ana", "wd", &["merge", "draft"]).starts_with("Fast-forward"));
    assert_eq!(w.read("wd/b.txt"), "draft only\n");

    std::fs::remove_file(w.path("wd/a.txt")).unwrap();
    w.ok("ana", "wd", &["add", "."]);
    w.ok("ana", "wd", &["commit", "-m", "drop a"]);
    assert!(!w.ok("ana", "wd", &["--json", "status"]).contains("a.txt"));
}

#[test]
fn verify_detects_a_damaged_object() {
    let w = World::new();
    w.account("ana", "student");
    let repo = w.team(&["ana"]);
    w.ok("ana", "", &["clone", &repo, "wd"]);
    w.write("wd/a.txt", "payload\n");
    w.ok("ana", "wd", &["add", "a.txt"]);
    w.ok("ana", "wd", &["commit", "-m", "c"]);
    w.ok("ana", "wd", &["verify"]);

    let objects = w.path("wd/.mgit/objects");
    let victim = walkdir::WalkDir::new(&objects)
        .into_iter()
        .filter_map(|e| e.ok())
        .find(|e| e.file_type().is_file())
        .unwrap()
        .into_path();
    let mut bytes = std::fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&victim, bytes).unwrap();

    let r = w.mgit_in("ana", &w.path("wd"), &["verify"], "");
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("integrity problem"), "{}", r.stderr);
}
