//! Brute-force reference implementations used to check the core. Deliberately
//! naive and written without reference to the optimized code paths.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;

/// SHA-1 of `<kind> <len>\0<payload>` via an unrelated SHA-1 implementation.
pub fn sha1_hex(kind: &str, payload: &[u8]) -> String {
    let mut preimage = Vec::new();
    preimage.extend_from_slice(kind.as_bytes());
    preimage.push(b' ');
    preimage.extend_from_slice(payload.len().to_string().as_bytes());
    preimage.push(0);
    preimage.extend_from_slice(payload);
    sha1_smol::Sha1::from(preimage).digest().to_string()
}

/// Textbook LCS length, full table.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

/// `2·LCS/(n+m)` over LF-split, right-trimmed lines.
pub fn similarity(a: &str, b: &str) -> f64 {
    let split = |s: &str| -> Vec<String> {
        if s.is_empty() {
            return vec![];
        }
        let mut v: Vec<String> = s.split('\n').map(|l| l.trim_end().to_owned()).collect();
        if s.ends_with('\n') {
            v.pop();
        }
        v
    };
    if a == b {
        return 1.0;
    }
    let (la, lb) = (split(a), split(b));
    if la.len() + lb.len() == 0 {
        return 1.0;
    }
    2.0 * lcs_len(&la, &lb) as f64 / (la.len() + lb.len()) as f64
}

fn lines(text: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for &b in text {
        cur.push(b);
        if b == b'\n' {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Canonical matching: common prefix, common suffix, then on the middle a
/// front-to-back walk that matches equal lines and otherwise drops from `a`
/// whenever that does not shorten the LCS. LCS values come from memoized recursion.
fn matching(a: &[Vec<u8>], b: &[Vec<u8>]) -> HashMap<usize, usize> {
    let mut m = HashMap::new();
    let mut p = 0;
    while p < a.len() && p < b.len() && a[p] == b[p] {
        m.insert(p, p);
        p += 1;
    }
    let mut s = 0;
    while s < a.len() - p && s < b.len() - p && a[a.len() - 1 - s] == b[b.len() - 1 - s] {
        m.insert(a.len() - 1 - s, b.len() - 1 - s);
        s += 1;
    }
    let (a_mid, b_mid) = (&a[p..a.len() - s], &b[p..b.len() - s]);
    let mut memo = HashMap::new();
    fn lcs(a: &[Vec<u8>], b: &[Vec<u8>], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + lcs(a, b, i + 1, j + 1, memo)
        } else {
            lcs(a, b, i + 1, j, memo).max(lcs(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    let (mut i, mut j) = (0, 0);
    while i < a_mid.len() && j < b_mid.len() {
        if a_mid[i] == b_mid[j] {
            m.insert(p + i, p + j);
            i += 1;
            j += 1;
        } else if lcs(a_mid, b_mid, i + 1, j, &mut memo) >= lcs(a_mid, b_mid, i, j + 1, &mut memo) {
            i += 1;
        } else {
            j += 1;
        }
    }
    m
}

#[derive(Debug, PartialEq, Eq)]
pub struct Diff3Outcome {
    pub clean: bool,
    /// Merged bytes, with `<<<<<<< ours` / `=======` / `>>>>>>> theirs` around conflicts.
    pub output: Vec<u8>,
    pub conflicts: usize,
}

/// diff3 as a sequence of maximal stable / unstable chunks: scan forward while the
/// next base line is matched to the next line of both sides (stable); otherwise
/// jump to the next base line matched in both and emit everything skipped as one
/// unstable chunk.
pub fn diff3(base: &[u8], ours: &[u8], theirs: &[u8]) -> Diff3Outcome {
    let (o, a, b) = (lines(base), lines(ours), lines(theirs));
    let ma = matching(&o, &a);
    let mb = matching(&o, &b);
    let (mut lo, mut la, mut lb) = (0usize, 0usize, 0usize);
    let mut out = Vec::new();
    let mut conflicts = 0;
    let mut emit_unstable = |ob: &[Vec<u8>], ab: &[Vec<u8>], bb: &[Vec<u8>], out: &mut Vec<u8>| {
        if ob.is_empty() && ab.is_empty() && bb.is_empty() {
            return;
        }
        let chosen = if ab == ob {
            Some(bb)
        } else if bb == ob || ab == bb {
            Some(ab)
        } else {
            None
        };
        match chosen {
            Some(side) => side.iter().for_each(|l| out.extend_from_slice(l)),
            None => {
                conflicts += 1;
                out.extend_from_slice(b"<<<<<<< ours\n");
                let mut block = ab.concat();
                if !block.is_empty() && !block.ends_with(b"\n") {
                    block.push(b'\n');
                }
                out.extend_from_slice(&block);
                out.extend_from_slice(b"=======\n");
                let mut block = bb.concat();
                if !block.is_empty() && !block.ends_with(b"\n") {
                    block.push(b'\n');
                }
                out.extend_from_slice(&block);
                out.extend_from_slice(b">>>>>>> theirs\n");
            }
        }
    };
    loop {
        let mut i = 0;
        while lo + i < o.len()
            && ma.get(&(lo + i)) == Some(&(la + i))
            && mb.get(&(lo + i)) == Some(&(lb + i))
        {
            i += 1;
        }
        if i > 0 {
            for l in &o[lo..lo + i] {
                out.extend_from_slice(l);
            }
            lo += i;
            la += i;
            lb += i;
            continue;
        }
        let next = (lo..o.len()).find(|j| ma.contains_key(j) && mb.contains_key(j));
        match next {
            None => {
                emit_unstable(&o[lo..], &a[la..], &b[lb..], &mut out);
                break;
            }
            Some(j) => {
                let (k, l) = (ma[&j], mb[&j]);
                emit_unstable(&o[lo..j], &a[la..k], &b[lb..l], &mut out);
                lo = j;
                la = k;
                lb = l;
            }
        }
    }
    Diff3Outcome {
        clean: conflicts == 0,
        output: out,
        conflicts,
    }
}

/// A base text plus two independently edited versions of it.
pub fn random_merge_case(rng: &mut impl Rng) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let alphabet = rng.random_range(3..12);
    let n = rng.random_range(0..=50);
    let base: Vec<String> = (0..n).map(|_| format!("l{}\n", rng.random_range(0..alphabet))).collect();
    let edit = |rng: &mut dyn rand::RngCore| -> Vec<String> {
        let mut v = base.clone();
        let edits = rng.random_range(0..5);
        for _ in 0..edits {
            let pos = if v.is_empty() { 0 } else { rng.random_range(0..=v.len()) };
            match rng.random_range(0..3) {
                0 if pos < v.len() => {
                    v.remove(pos);
                }
                1 if pos < v.len() => v[pos] = format!("e{}\n", rng.random_range(0..alphabet)),
                _ => v.insert(pos, format!("n{}\n", rng.random_range(0..alphabet))),
            }
        }
        v
    };
    let ours = edit(rng);
    let theirs = edit(rng);
    let finish = |v: Vec<String>, strip: bool| {
        let mut s = v.concat().into_bytes();
        if strip && s.last() == Some(&b'\n') {
            s.pop();
        }
        s
    };
    let strip = rng.random_bool(0.2);
    (finish(base, strip), finish(ours, strip && rng.random_bool(0.5)), finish(theirs, strip))
}

/// Reverse-topological order by repeatedly scanning for commits none of whose
/// remaining children are unemitted, preferring newer time then lower id.
pub fn walk_order(graph: &BTreeMap<String, (i64, Vec<String>)>, tip: &str) -> Vec<String> {
    let mut reach = BTreeSet::new();
    let mut queue = vec![tip.to_owned()];
    while let Some(c) = queue.pop() {
        if reach.insert(c.clone()) {
            queue.extend(graph[&c].1.iter().cloned());
        }
    }
    let mut remaining = reach.clone();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let ready = remaining
            .iter()
            .filter(|c| !remaining.iter().any(|d| graph[d.as_str()].1.contains(*c)))
            .max_by(|x, y| graph[x.as_str()].0.cmp(&graph[y.as_str()].0).then_with(|| y.cmp(x)))
            .unwrap()
            .clone();
        remaining.remove(&ready);
        out.push(ready);
    }
    out
}
