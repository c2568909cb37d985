//! Many `mgit` clients against one server at once.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use classgit_service::{BackgroundServer, Service, ServiceOptions};
use serde_json::Value;

use crate::report::{BenchReport, Latency, RaceFigures};
use crate::workload::{Snapshot, Workload};
use crate::{BenchError, Result};

const PASSWORD: &str = "bench-password";

/// Where the clients send their requests.
pub enum Target {
    /// A server started for this run on a loopback port, backed by a temp dir.
    Embedded {
        server: BackgroundServer,
        _dir: tempfile::TempDir,
    },
    Remote(String),
}

impl Target {
    pub fn embedded() -> Result<Target> {
        Target::embedded_with(ServiceOptions::default())
    }

    pub fn embedded_with(options: ServiceOptions) -> Result<Target> {
        let dir = tempfile::tempdir()?;
        let service = Service::open_dir(dir.path(), options)?;
        let server = BackgroundServer::start_local(Arc::new(service))?;
        Ok(Target::Embedded { server, _dir: dir })
    }

    pub fn url(&self) -> String {
        match self {
            Target::Embedded { server, .. } => server.url(),
            Target::Remote(url) => url.clone(),
        }
    }

    pub fn service(&self) -> Option<&Arc<Service>> {
        match self {
            Target::Embedded { server, .. } => Some(server.service()),
            Target::Remote(_) => None,
        }
    }

    fn crawl_clean(&self) -> Option<bool> {
        self.service().map(|s| s.crawl().is_clean())
    }
}

/// Result of one in-process `mgit` invocation.
pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// One simulated user: a config file and a working area of their own.
pub struct Client {
    pub name: String,
    home: PathBuf,
    server: String,
}

impl Client {
    pub fn new(name: &str, root: &Path, server: &str) -> Result<Client> {
        let home = root.join(name);
        std::fs::create_dir_all(&home)?;
        Ok(Client {
            name: name.into(),
            home,
            server: server.into(),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.home.join(rel)
    }

    pub fn invoke(&self, dir: &str, args: &[&str], stdin: &str) -> Invocation {
        let mut input = stdin.as_bytes();
        let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
        let mut env = classgit_cli::Env {
            cwd: self.path(dir),
            config_path: Some(self.home.join("config.json")),
            stdin: &mut input,
            stdout: &mut stdout,
            stderr: &mut stderr,
            interactive: false,
        };
        let argv = ["mgit", "--server", &self.server].into_iter().chain(args.iter().copied());
        let code = classgit_cli::run(argv, &mut env);
        Invocation {
            code,
            stdout: String::from_utf8_lossy(&stdout).into_owned(),
            stderr: String::from_utf8_lossy(&stderr).into_owned(),
        }
    }

    /// Runs and requires exit 0.
    pub fn mgit(&self, dir: &str, args: &[&str]) -> Result<String> {
        let out = self.invoke(dir, args, "");
        if out.code != 0 {
            return Err(BenchError::Client {
                user: self.name.clone(),
                command: args.join(" "),
                code: out.code,
                stderr: out.stderr.trim().to_owned(),
            });
        }
        Ok(out.stdout)
    }

    pub fn sign_up(&self, role: &str) -> Result<()> {
        for args in [
            vec!["register", &self.name, "--role", role, "--password-stdin"],
            vec!["login", &self.name, "--password-stdin"],
        ] {
            let out = self.invoke("", &args, &format!("{PASSWORD}\n"));
            if out.code != 0 {
                let err = BenchError::Client {
                    user: self.name.clone(),
                    command: args.join(" "),
                    code: out.code,
                    stderr: out.stderr.trim().to_owned(),
                };
                return Err(if out.code == 2 { BenchError::SetupFailed(err.to_string()) } else { err });
            }
        }
        Ok(())
    }

    pub fn write_snapshot(&self, dir: &str, files: &Snapshot) -> Result<()> {
        for (path, bytes) in files {
            let p = self.path(dir).join(path);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, bytes)?;
        }
        Ok(())
    }
}

fn run_tag() -> String {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.subsec_nanos());
    format!("{:x}{:05x}", std::process::id() & 0xfff, nanos & 0xfffff)
}

fn json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| BenchError::Failed(format!("unexpected client output: {e}")))
}

fn last_word(text: &str) -> String {
    text.lines().next().unwrap_or("").rsplit(' ').next().unwrap_or("").to_owned()
}

struct Outcome {
    ok: bool,
    push: Option<Duration>,
    clone_to_push: Option<Duration>,
}

/// Each of `n_clients` students clones their own assignment repository, makes
/// the workload's commits, and pushes, all released at the same instant.
pub fn run_concurrency_bench(target: &Target, n_clients: usize, workload: &Workload) -> Result<BenchReport> {
    let started = Instant::now();
    let work = tempfile::tempdir()?;
    let url = target.url();
    let tag = run_tag();

    let prof = Client::new(&format!("prof-{tag}"), work.path(), &url)?;
    prof.sign_up("instructor")?;
    let template = last_word(&prof.mgit("", &["repo", "create"])?);
    prof.mgit("", &["clone", &template, "template"])?;
    prof.write_snapshot("template", &workload.template())?;
    prof.mgit("template", &["add", "."])?;
    prof.mgit("template", &["commit", "-m", "starter code"])?;
    prof.mgit("template", &["push"])?;
    let created = json(&prof.mgit(
        "",
        &["--json", "assignment", "create", "--title", "load test", "--deadline", "+7d", "--template", &template],
    )?)?;
    let code = created["invite_code"].as_str().unwrap_or_default().to_owned();

    let mut clients = Vec::new();
    for i in 0..n_clients {
        let c = Client::new(&format!("s{i:03}-{tag}"), work.path(), &url)?;
        c.sign_up("student")?;
        let repo = last_word(&c.mgit("", &["join", &code])?);
        let snapshots = workload.student_snapshots(i % workload.students.max(1));
        clients.push((c, repo, snapshots));
    }

    let barrier = Barrier::new(n_clients);
    let in_flight = AtomicUsize::new(0);
    let peak = AtomicUsize::new(0);
    let outcomes: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = clients
            .iter()
            .map(|(client, repo, snapshots)| {
                let (barrier, in_flight, peak) = (&barrier, &in_flight, &peak);
                scope.spawn(move || {
                    barrier.wait();
                    let t0 = Instant::now();
                    let prepared = (|| -> Result<()> {
                        client.mgit("", &["clone", repo, "work"])?;
                        for (n, snap) in snapshots.iter().enumerate() {
                            client.write_snapshot("work", snap)?;
                            client.mgit("work", &["add", "."])?;
                            client.mgit("work", &["commit", "-m", &format!("step {n}")])?;
                        }
                        Ok(())
                    })();
                    if prepared.is_err() {
                        return Outcome {
                            ok: false,
                            push: None,
                            clone_to_push: None,
                        };
                    }
                    let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    let p0 = Instant::now();
                    let ok = client.invoke("work", &["push"], "").code == 0;
                    let push = p0.elapsed();
                    in_flight.fetch_sub(1, Ordering::SeqCst);
                    Outcome {
                        ok,
                        push: Some(push),
                        clone_to_push: Some(t0.elapsed()),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("client thread")).collect()
    });

    let pushes: Vec<Duration> = outcomes.iter().filter(|o| o.ok).filter_map(|o| o.push).collect();
    let spans: Vec<Duration> = outcomes.iter().filter(|o| o.ok).filter_map(|o| o.clone_to_push).collect();
    Ok(BenchReport {
        kind: "concurrency".into(),
        pushes_attempted: n_clients,
        pushes_succeeded: outcomes.iter().filter(|o| o.ok).count(),
        push_latency: Latency::from_samples(&pushes),
        clone_to_push: Latency::from_samples(&spans),
        peak_in_flight: peak.load(Ordering::SeqCst),
        crawl_clean: target.crawl_clean(),
        elapsed_secs: started.elapsed().as_secs_f64(),
        ..BenchReport::default()
    })
}

/// `n_clients` teammates share one branch. Each round every client still
/// holding an unpushed commit pushes at once; losers fetch, merge, and retry.
pub fn run_race_bench(target: &Target, n_clients: usize) -> Result<BenchReport> {
    let started = Instant::now();
    let work = tempfile::tempdir()?;
    let url = target.url();
    let tag = run_tag();
    let clients: Vec<Client> = (0..n_clients)
        .map(|i| Client::new(&format!("m{i:02}-{tag}"), work.path(), &url))
        .collect::<Result<_>>()?;
    for c in &clients {
        c.sign_up("student")?;
    }
    let mut create = vec!["repo", "create"];
    for c in &clients[1..] {
        create.extend(["--member", c.name.as_str()]);
    }
    let repo = last_word(&clients[0].mgit("", &create)?);
    let lead = &clients[0];
    lead.mgit("", &["clone", &repo, "base"])?;
    lead.write_snapshot("base", &vec![("README.md".to_owned(), b"team project\n".to_vec())])?;
    lead.mgit("base", &["add", "."])?;
    lead.mgit("base", &["commit", "-m", "shared base"])?;
    lead.mgit("base", &["push"])?;
    for (i, c) in clients.iter().enumerate() {
        c.mgit("", &["clone", &repo, "work"])?;
        c.write_snapshot("work", &vec![(format!("notes/{}.txt", c.name), format!("work from client {i}\n").into_bytes())])?;
        c.mgit("work", &["add", "."])?;
        c.mgit("work", &["commit", "-m", &format!("work from client {i}")])?;
    }

    let mut pending: Vec<usize> = (0..n_clients).collect();
    let mut winners_per_round = Vec::new();
    let mut latencies = Vec::new();
    let mut attempted = 0;
    while !pending.is_empty() && winners_per_round.len() < 2 * n_clients {
        let barrier = Barrier::new(pending.len());
        let results: Vec<(usize, Invocation, Duration)> = std::thread::scope(|scope| {
            let handles: Vec<_> = pending
                .iter()
                .map(|&i| {
                    let (c, barrier) = (&clients[i], &barrier);
                    scope.spawn(move || {
                        barrier.wait();
                        let t = Instant::now();
                        let out = c.invoke("work", &["push"], "");
                        (i, out, t.elapsed())
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("client thread")).collect()
        });
        attempted += results.len();
        let mut losers = Vec::new();
        let mut winners = 0;
        for (i, out, took) in results {
            if out.code == 0 {
                winners += 1;
                latencies.push(took);
            } else if out.stderr.contains("ref_conflict") {
                losers.push(i);
            } else {
                return Err(BenchError::Failed(format!("client {i} push failed: {}", out.stderr.trim())));
            }
        }
        winners_per_round.push(winners);
        for &i in &losers {
            clients[i].mgit("work", &["fetch"])?;
            clients[i].mgit("work", &["merge", "origin/main"])?;
        }
        pending = losers;
    }

    let auditor = &clients[0];
    auditor.mgit("", &["clone", &repo, "final"])?;
    let log = json(&auditor.mgit("final", &["--json", "log"])?)?;
    let on_branch = log
        .as_array()
        .map(|a| {
            a.iter()
                .filter(|c| c["message"].as_str().is_some_and(|m| m.starts_with("work from client ")))
                .count()
        })
        .unwrap_or(0);
    Ok(BenchReport {
        kind: "race".into(),
        pushes_attempted: attempted,
        pushes_succeeded: latencies.len(),
        push_latency: Latency::from_samples(&latencies),
        race: Some(RaceFigures {
            rounds: winners_per_round.len(),
            winners_per_round,
            client_commits_on_branch: on_branch,
        }),
        crawl_clean: target.crawl_clean(),
        elapsed_secs: started.elapsed().as_secs_f64(),
        ..BenchReport::default()
    })
}
