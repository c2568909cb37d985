//! Seeded synthetic coursework: a starter template plus each student's
//! sequence of snapshots.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What file bodies look like.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Content {
    /// Source-like text; a changed file has a few lines rewritten.
    Text,
    /// Uniform random bytes; a changed file is rewritten entirely.
    Random,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Workload {
    pub students: usize,
    pub files: usize,
    pub file_size: usize,
    pub commits: usize,
    /// Fraction of files changed by each commit (at least one file).
    pub change_rate: f64,
    pub seed: u64,
    pub content: Content,
}

/// Files as (path, bytes), sorted by path.
pub type Snapshot = Vec<(String, Vec<u8>)>;

impl Workload {
    /// 20 students, 10 files of 10 KiB, 5 commits each, 10% of files per commit.
    pub fn canonical(seed: u64) -> Workload {
        Workload {
            students: 20,
            files: 10,
            file_size: 10 * 1024,
            commits: 5,
            change_rate: 0.1,
            seed,
            content: Content::Text,
        }
    }

    pub fn repo_bytes(&self) -> usize {
        self.files * self.file_size
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn vocabulary(&self) -> Vec<String> {
        let mut rng = self.rng(0);
        (0..400)
            .map(|_| {
                let len = rng.random_range(2..10);
                (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
            })
            .collect()
    }

    fn path(i: usize) -> String {
        format!("src/part{i:02}.txt")
    }

    /// The instructor's starter files.
    pub fn template(&self) -> Snapshot {
        let vocab = self.vocabulary();
        let mut rng = self.rng(1);
        (0..self.files)
            .map(|i| (Self::path(i), self.body(&mut rng, &vocab)))
            .collect()
    }

    /// Student `s`'s working tree after each of their commits, starting from the template.
    pub fn student_snapshots(&self, s: usize) -> Vec<Snapshot> {
        let vocab = self.vocabulary();
        let mut rng = self.rng(2 + s as u64);
        let mut files = self.template();
        let per_commit = ((self.files as f64 * self.change_rate).round() as usize).clamp(1, self.files.max(1));
        let indices: Vec<usize> = (0..self.files).collect();
        (0..self.commits)
            .map(|_| {
                for &i in indices.choose_multiple(&mut rng, per_commit) {
                    files[i].1 = match self.content {
                        Content::Random => self.body(&mut rng, &vocab),
                        Content::Text => edit_lines(&files[i].1, &mut rng, &vocab),
                    };
                }
                files.clone()
            })
            .collect()
    }

    fn body(&self, rng: &mut ChaCha8Rng, vocab: &[String]) -> Vec<u8> {
        match self.content {
            Content::Random => {
                let mut b = vec![0; self.file_size];
                rng.fill_bytes(&mut b);
                b
            }
            Content::Text => {
                let mut out = Vec::with_capacity(self.file_size + 80);
                while out.len() < self.file_size {
                    out.extend_from_slice(&code_line(rng, vocab));
                }
                out.truncate(self.file_size.saturating_sub(1));
                out.push(b'\n');
                out
            }
        }
    }
}

fn code_line(rng: &mut ChaCha8Rng, vocab: &[String]) -> Vec<u8> {
    let indent = 4 * rng.random_range(0..4);
    let words = rng.random_range(2..9);
    let mut line = " ".repeat(indent);
    for w in 0..words {
        if w > 0 {
            line.push_str([" ", " = ", "(", ", ", ".", " + "][rng.random_range(0..6)]);
        }
        line.push_str(vocab.choose(rng).expect("nonempty vocabulary"));
    }
    line.push_str(";\n");
    line.into_bytes()
}

/// Rewrites a handful of lines in place, keeping the size roughly stable.
fn edit_lines(body: &[u8], rng: &mut ChaCha8Rng, vocab: &[String]) -> Vec<u8> {
    let mut lines: Vec<Vec<u8>> = body.split_inclusive(|b| *b == b'\n').map(<[u8]>::to_vec).collect();
    if lines.is_empty() {
        return code_line(rng, vocab);
    }
    for _ in 0..rng.random_range(1..6) {
        let i = rng.random_range(0..lines.len());
        lines[i] = code_line(rng, vocab);
    }
    lines.concat()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let w = Workload::canonical(42);
        assert_eq!(w.template(), w.template());
        assert_eq!(w.student_snapshots(3), w.student_snapshots(3));
        assert_ne!(w.student_snapshots(3), w.student_snapshots(4));
        assert_ne!(Workload::canonical(43).template(), w.template());
    }

    #[test]
    fn one_file_changes_per_commit() {
        let w = Workload::canonical(7);
        let mut prev = w.template();
        for snap in w.student_snapshots(0) {
            let changed = prev.iter().zip(&snap).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 1);
            assert!(snap.iter().all(|(_, b)| b.len() > 8 * 1024 && b.len() < 12 * 1024));
            prev = snap;
        }
    }

    #[test]
    fn random_content_rewrites_everything() {
        let w = Workload {
            change_rate: 1.0,
            content: Content::Random,
            ..Workload::canonical(1)
        };
        let t = w.template();
        let snaps = w.student_snapshots(0);
        assert!(t.iter().zip(&snaps[0]).all(|(a, b)| a.1 != b.1 && b.1.len() == w.file_size));
    }
}
