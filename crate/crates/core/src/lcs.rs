//! Length of the longest common subsequence of two token sequences, computed
//! bit-parallel over 64-bit words (Allison–Dix / Hyyrö), O(⌈n/64⌉·m).

use std::collections::HashMap;
use std::hash::Hash;

pub fn lcs_len<T: Eq + Hash>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let words = a.len().div_ceil(64);
    let mut masks: HashMap<&T, Vec<u64>> = HashMap::new();
    for (i, tok) in a.iter().enumerate() {
        masks.entry(tok).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }
    // Zero bits of `v` mark positions of `a` that end a match in the current LCS.
    let mut v = vec![u64::MAX; words];
    for tok in b {
        let Some(m) = masks.get(tok) else { continue };
        let mut carry = false;
        for (vw, &mw) in v.iter_mut().zip(m) {
            let u = *vw & mw;
            let (s1, c1) = vw.overflowing_add(u);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            carry = c1 || c2;
            *vw = s2 | (*vw & !mw);
        }
    }
    let tail = a.len() % 64;
    v.iter()
        .enumerate()
        .map(|(k, w)| {
            let valid = if k == words - 1 && tail != 0 { (1u64 << tail) - 1 } else { u64::MAX };
            (!w & valid).count_ones() as usize
        })
        .sum()
}
