//! Line-based three-way merge.
//!
//! Lines keep their `\n` terminator so merged output is byte-exact. Each side is
//! aligned against the base with a canonical longest-common-subsequence matching:
//! common prefix and suffix are matched first, and the middle is matched by walking
//! the suffix LCS table front to back, taking a match whenever the lines are equal
//! and otherwise skipping the base line when that keeps the LCS length. Base lines
//! matched on both sides split the files into stable and unstable chunks; an
//! unstable chunk changed on only one side takes that side, otherwise it conflicts
//! unless both sides made the same change.

use std::collections::HashMap;

pub const MARKER_OURS: &str = "<<<<<<< ours";
pub const MARKER_SEP: &str = "=======";
pub const MARKER_THEIRS: &str = ">>>>>>> theirs";

/// Middle sections larger than this many table cells are treated as entirely
/// changed instead of aligned.
const MAX_TABLE_CELLS: usize = 64 * 1024 * 1024;

pub fn split_lines(text: &[u8]) -> Vec<&[u8]> {
    text.split_inclusive(|&b| b == b'\n').collect()
}

/// Canonical matching between `a` and `b`: strictly increasing `(i, j)` pairs with `a[i] == b[j]`.
pub fn match_lines<T: Eq + std::hash::Hash>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let mut interner: HashMap<&T, u32> = HashMap::new();
    let mut intern = |x| {
        let next = interner.len() as u32;
        *interner.entry(x).or_insert(next)
    };
    let a: Vec<u32> = a.iter().map(&mut intern).collect();
    let b: Vec<u32> = b.iter().map(&mut intern).collect();

    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (am, bm) = (&a[prefix..a.len() - suffix], &b[prefix..b.len() - suffix]);

    let mut pairs: Vec<(usize, usize)> = (0..prefix).map(|i| (i, i)).collect();
    for (i, j) in middle_matching(am, bm) {
        pairs.push((prefix + i, prefix + j));
    }
    let (a_tail, b_tail) = (a.len() - suffix, b.len() - suffix);
    pairs.extend((0..suffix).map(|k| (a_tail + k, b_tail + k)));
    pairs
}

fn middle_matching(a: &[u32], b: &[u32]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 || (n + 1).saturating_mul(m + 1) > MAX_TABLE_CELLS {
        return Vec::new();
    }
    let width = m + 1;
    // table[i * width + j] = LCS(a[i..], b[j..])
    let mut table = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i * width + j] = if a[i] == b[j] {
                table[(i + 1) * width + j + 1] + 1
            } else {
                table[(i + 1) * width + j].max(table[i * width + j + 1])
            };
        }
    }
    let mut pairs = Vec::with_capacity(table[0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if table[(i + 1) * width + j] >= table[i * width + j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region<'a> {
    Resolved(Vec<&'a [u8]>),
    Conflict {
        base: Vec<&'a [u8]>,
        ours: Vec<&'a [u8]>,
        theirs: Vec<&'a [u8]>,
    },
}

/// Outcome of merging one file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextMerge<'a> {
    pub regions: Vec<Region<'a>>,
}

/// One conflicting hunk, as concatenated bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictHunk {
    pub ours: Vec<u8>,
    pub theirs: Vec<u8>,
    pub base: Vec<u8>,
}

impl TextMerge<'_> {
    pub fn is_clean(&self) -> bool {
        self.regions.iter().all(|r| matches!(r, Region::Resolved(_)))
    }

    /// Merged bytes when there are no conflicts.
    pub fn merged(&self) -> Option<Vec<u8>> {
        if !self.is_clean() {
            return None;
        }
        Some(self.render())
    }

    pub fn conflicts(&self) -> Vec<ConflictHunk> {
        self.regions
            .iter()
            .filter_map(|r| match r {
                Region::Conflict { base, ours, theirs } => Some(ConflictHunk {
                    ours: ours.concat(),
                    theirs: theirs.concat(),
                    base: base.concat(),
                }),
                Region::Resolved(_) => None,
            })
            .collect()
    }

    /// The merge with `<<<<<<< ours` / `=======` / `>>>>>>> theirs` around each conflict.
    pub fn render(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for region in &self.regions {
            match region {
                Region::Resolved(lines) => lines.iter().for_each(|l| out.extend_from_slice(l)),
                Region::Conflict { ours, theirs, .. } => {
                    push_line(&mut out, MARKER_OURS.as_bytes());
                    push_block(&mut out, ours);
                    push_line(&mut out, MARKER_SEP.as_bytes());
                    push_block(&mut out, theirs);
                    push_line(&mut out, MARKER_THEIRS.as_bytes());
                }
            }
        }
        out
    }
}

fn push_line(out: &mut Vec<u8>, line: &[u8]) {
    out.extend_from_slice(line);
    out.push(b'\n');
}

fn push_block(out: &mut Vec<u8>, lines: &[&[u8]]) {
    lines.iter().for_each(|l| out.extend_from_slice(l));
    if out.last().is_some_and(|&b| b != b'\n') {
        out.push(b'\n');
    }
}

/// Merges `ours` and `theirs` against their common ancestor `base`.
pub fn merge<'a>(base: &'a [u8], ours: &'a [u8], theirs: &'a [u8]) -> TextMerge<'a> {
    merge_lines(&split_lines(base), &split_lines(ours), &split_lines(theirs))
}

pub fn merge_lines<'a>(base: &[&'a [u8]], ours: &[&'a [u8]], theirs: &[&'a [u8]]) -> TextMerge<'a> {
    let mut ours_of = vec![None; base.len()];
    for (o, a) in match_lines(base, ours) {
        ours_of[o] = Some(a);
    }
    let mut theirs_of = vec![None; base.len()];
    for (o, b) in match_lines(base, theirs) {
        theirs_of[o] = Some(b);
    }

    let mut regions: Vec<Region<'a>> = Vec::new();
    let (mut o, mut a, mut b) = (0usize, 0usize, 0usize);
    let mut j = 0;
    while j < base.len() {
        let (Some(k), Some(l)) = (ours_of[j], theirs_of[j]) else {
            j += 1;
            continue;
        };
        // Base line j is a sync point; everything since the last one is unstable.
        resolve_unstable(&mut regions, &base[o..j], &ours[a..k], &theirs[b..l]);
        let mut len = 0;
        while j + len < base.len()
            && ours_of[j + len] == Some(k + len)
            && theirs_of[j + len] == Some(l + len)
        {
            len += 1;
        }
        push_resolved(&mut regions, &base[j..j + len]);
        (o, a, b) = (j + len, k + len, l + len);
        j += len;
    }
    resolve_unstable(&mut regions, &base[o..], &ours[a..], &theirs[b..]);
    TextMerge { regions }
}

fn push_resolved<'a>(regions: &mut Vec<Region<'a>>, lines: &[&'a [u8]]) {
    if lines.is_empty() {
        return;
    }
    if let Some(Region::Resolved(prev)) = regions.last_mut() {
        prev.extend_from_slice(lines);
    } else {
        regions.push(Region::Resolved(lines.to_vec()));
    }
}

fn resolve_unstable<'a>(regions: &mut Vec<Region<'a>>, base: &[&'a [u8]], ours: &[&'a [u8]], theirs: &[&'a [u8]]) {
    if base.is_empty() && ours.is_empty() && theirs.is_empty() {
        return;
    }
    if ours == base {
        push_resolved(regions, theirs);
    } else if theirs == base || ours == theirs {
        push_resolved(regions, ours);
    } else {
        regions.push(Region::Conflict {
            base: base.to_vec(),
            ours: ours.to_vec(),
            theirs: theirs.to_vec(),
        });
    }
}
