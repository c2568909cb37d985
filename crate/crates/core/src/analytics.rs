//! Instructor analytics: pairwise similarity and bands, contribution shares,
//! deadline timing and branch activity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::history::{walk_commits, MergeEvent, MergeKind};
use crate::lcs::lcs_len;
use crate::objstore::{hash_object, ObjectId, ObjectKind, ObjectStore};
use crate::repo::Repository;
use crate::wire::PushRecord;

pub const HIGH_THRESHOLD: f64 = 0.98;
pub const MEDIUM_THRESHOLD: f64 = 0.80;
pub const RUSH_WINDOW_SECS: i64 = 48 * 3600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityBand {
    Distinct,
    Medium,
    High,
}

impl SimilarityBand {
    pub fn classify(score: f64) -> Self {
        if score >= HIGH_THRESHOLD {
            SimilarityBand::High
        } else if score >= MEDIUM_THRESHOLD {
            SimilarityBand::Medium
        } else {
            SimilarityBand::Distinct
        }
    }
}

/// Lines split on LF with trailing whitespace trimmed; a final LF does not start a new line.
pub fn normalized_lines(text: &str) -> Vec<&str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Vec::new();
    }
    body.split('\n').map(str::trim_end).collect()
}

/// `2·LCS / (n + m)` over normalized lines; 1.0 for identical blobs. Non-UTF-8 pairs
/// score 1.0 when identical and 0.0 otherwise.
pub fn pairwise_similarity(a: &[u8], b: &[u8]) -> f64 {
    let same = match (hash_object(ObjectKind::Blob, a), hash_object(ObjectKind::Blob, b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    };
    if same {
        return 1.0;
    }
    let (Ok(ta), Ok(tb)) = (std::str::from_utf8(a), std::str::from_utf8(b)) else {
        return 0.0;
    };
    let (la, lb) = (normalized_lines(ta), normalized_lines(tb));
    if la.is_empty() && lb.is_empty() {
        return 1.0;
    }
    2.0 * lcs_len(&la, &lb) as f64 / (la.len() + lb.len()) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub a: String,
    pub b: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentBand {
    pub student: String,
    pub max_score: f64,
    pub band: SimilarityBand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub assignment_id: String,
    pub filename: String,
    /// One entry per unordered pair of students who submitted the file, `a < b`.
    pub matrix: Vec<PairScore>,
    pub bands: Vec<StudentBand>,
    /// Submitters whose latest pushed commit lacks the file.
    pub missing: Vec<String>,
}

/// A student's submitted copy of the analyzed file, if any.
pub struct Submission {
    pub student: String,
    pub blob: Option<(ObjectId, Vec<u8>)>,
}

pub fn similarity_report(assignment_id: &str, filename: &str, submissions: &[Submission]) -> SimilarityReport {
    let mut present: Vec<(&str, &ObjectId, &[u8])> = submissions
        .iter()
        .filter_map(|s| s.blob.as_ref().map(|(id, b)| (s.student.as_str(), id, b.as_slice())))
        .collect();
    present.sort_by(|x, y| x.0.cmp(y.0));
    let mut missing: Vec<String> = submissions
        .iter()
        .filter(|s| s.blob.is_none())
        .map(|s| s.student.clone())
        .collect();
    missing.sort();

    let mut matrix = Vec::new();
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for (i, (sa, ida, ba)) in present.iter().enumerate() {
        for (sb, idb, bb) in &present[i + 1..] {
            let score = if ida == idb { 1.0 } else { pairwise_similarity(ba, bb) };
            matrix.push(PairScore {
                a: sa.to_string(),
                b: sb.to_string(),
                score,
            });
            for s in [*sa, *sb] {
                let e = best.entry(s).or_insert(score);
                *e = e.max(score);
            }
        }
    }
    let bands = best
        .into_iter()
        .map(|(student, max_score)| StudentBand {
            student: student.to_owned(),
            max_score,
            band: SimilarityBand::classify(max_score),
        })
        .collect();
    SimilarityReport {
        assignment_id: assignment_id.to_owned(),
        filename: filename.to_owned(),
        matrix,
        bands,
        missing,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberShare {
    pub member: String,
    pub commits: usize,
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    pub repo_id: String,
    pub total_commits: usize,
    /// Empty when there are no member commits.
    pub members: Vec<MemberShare>,
    pub dominant: Option<String>,
    /// Reachable commits authored by someone outside `members` (e.g. template commits).
    pub other_commits: usize,
}

/// Commit counts per member over everything reachable from `branch`.
pub fn contribution_distribution<S: ObjectStore + ?Sized>(
    store: &S,
    repo: &Repository,
    branch: &str,
    members: &[String],
) -> Result<ContributionReport> {
    let mut counts: BTreeMap<&str, usize> = members.iter().map(|m| (m.as_str(), 0)).collect();
    let mut other = 0;
    if let Some(tip) = repo.branch(branch) {
        for (_, commit) in walk_commits(store, &[tip])? {
            match counts.get_mut(commit.author.as_str()) {
                Some(n) => *n += 1,
                None => other += 1,
            }
        }
    }
    let total: usize = counts.values().sum();
    let mut shares = Vec::new();
    let mut dominant = None;
    if total > 0 {
        for m in members {
            let n = counts[m.as_str()];
            let share = n as f64 / total as f64;
            if members.len() >= 2 && share > 0.5 {
                dominant = Some(m.clone());
            }
            shares.push(MemberShare {
                member: m.clone(),
                commits: n,
                share,
            });
        }
    }
    Ok(ContributionReport {
        repo_id: repo.id.clone(),
        total_commits: total,
        members: shares,
        dominant,
        other_commits: other,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub assignment_id: String,
    pub deadline: i64,
    pub total_pushes: usize,
    pub pushes_last_48h: usize,
    pub fraction_last_48h: f64,
    pub late: Vec<PushRecord>,
}

/// Classifies pushes by server receive time against `[deadline − 48 h, deadline]`.
pub fn deadline_timing(assignment_id: &str, deadline: i64, pushes: &[PushRecord]) -> TimingReport {
    let in_window = pushes
        .iter()
        .filter(|p| p.received_at >= deadline - RUSH_WINDOW_SECS && p.received_at <= deadline)
        .count();
    let late: Vec<PushRecord> = pushes.iter().filter(|p| p.received_at > deadline).cloned().collect();
    TimingReport {
        assignment_id: assignment_id.to_owned(),
        deadline,
        total_pushes: pushes.len(),
        pushes_last_48h: in_window,
        fraction_last_48h: if pushes.is_empty() { 0.0 } else { in_window as f64 / pushes.len() as f64 },
        late,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchActivityReport {
    pub repo_id: String,
    pub branch_count: usize,
    pub merges: usize,
    pub conflicted_merges: usize,
    pub mean_conflicts_per_merge: f64,
}

pub fn branch_activity(repo_id: &str, branch_count: usize, events: &[MergeEvent]) -> BranchActivityReport {
    let conflicted = events.iter().filter(|e| e.kind == MergeKind::Conflicted).count();
    let conflicts: usize = events.iter().map(|e| e.conflicts).sum();
    BranchActivityReport {
        repo_id: repo_id.to_owned(),
        branch_count,
        merges: events.len(),
        conflicted_merges: conflicted,
        mean_conflicts_per_merge: if events.is_empty() { 0.0 } else { conflicts as f64 / events.len() as f64 },
    }
}
