use std::fmt;
use std::time::Duration;

use serde::Serialize;

/// Latency distribution in seconds.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Latency {
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl Latency {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[Duration]) -> Latency {
        if samples.is_empty() {
            return Latency::default();
        }
        let mut s: Vec<f64> = samples.iter().map(Duration::as_secs_f64).collect();
        s.sort_by(f64::total_cmp);
        let rank = |p: f64| s[((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        Latency {
            p50: rank(0.50),
            p95: rank(0.95),
            max: s[s.len() - 1],
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StorageFigures {
    /// Distinct object payload bytes held by the server.
    pub stored_bytes: u64,
    /// One DEFLATE ZIP of the full tree per submission.
    pub baseline_bytes: u64,
    /// Blob bytes across every submitted snapshot, repeats included.
    pub snapshot_blob_bytes: u64,
    pub unique_blob_bytes: u64,
    pub savings_ratio: f64,
    pub redundancy_reduction: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RaceFigures {
    pub rounds: usize,
    pub winners_per_round: Vec<usize>,
    /// Client commits found on the final branch.
    pub client_commits_on_branch: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BenchReport {
    pub kind: String,
    pub pushes_attempted: usize,
    pub pushes_succeeded: usize,
    /// The push call alone.
    pub push_latency: Latency,
    /// Clone through push acknowledgement, excluding file generation.
    pub clone_to_push: Latency,
    pub peak_in_flight: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageFigures>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub race: Option<RaceFigures>,
    /// None when the server is not embedded and cannot be inspected.
    pub crawl_clean: Option<bool>,
    pub elapsed_secs: f64,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, k: &str, v: String| writeln!(f, "  {k:<26} {v}");
        writeln!(f, "{} benchmark", self.kind)?;
        row(f, "pushes", format!("{}/{} succeeded", self.pushes_succeeded, self.pushes_attempted))?;
        if self.push_latency.max > 0.0 {
            let l = &self.push_latency;
            row(f, "push latency p50/p95/max", format!("{:.3}s / {:.3}s / {:.3}s", l.p50, l.p95, l.max))?;
            let l = &self.clone_to_push;
            row(f, "clone-to-push p50/p95/max", format!("{:.3}s / {:.3}s / {:.3}s", l.p50, l.p95, l.max))?;
            row(f, "peak pushes in flight", self.peak_in_flight.to_string())?;
        }
        if let Some(s) = &self.storage {
            row(f, "stored bytes", s.stored_bytes.to_string())?;
            row(f, "zip baseline bytes", s.baseline_bytes.to_string())?;
            row(f, "savings", format!("{:.1}%", 100.0 * s.savings_ratio))?;
            row(f, "redundancy reduction", format!("{:.1}%", 100.0 * s.redundancy_reduction))?;
        }
        if let Some(r) = &self.race {
            row(f, "rounds", r.rounds.to_string())?;
            row(f, "winners per round", format!("{:?}", r.winners_per_round))?;
            row(f, "client commits on branch", r.client_commits_on_branch.to_string())?;
        }
        if let Some(c) = self.crawl_clean {
            row(f, "post-run crawl", if c { "clean".into() } else { "PROBLEMS".into() })?;
        }
        row(f, "elapsed", format!("{:.2}s", self.elapsed_secs))
    }
}
