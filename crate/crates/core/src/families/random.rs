//! Random simple graphs with prescribed degrees.
//!
//! Stubs are paired one edge at a time: two random stubs are drawn and the
//! pair is kept only if it creates neither a loop nor a parallel edge. When
//! the remaining stubs admit no valid pair the attempt is abandoned and the
//! caller restarts from scratch. Plain whole-graph rejection of the
//! configuration model only works for tiny degrees, since the chance of a
//! simple pairing decays like `exp(-(d^2 - 1) / 4)`.

use std::collections::HashSet;

use rand::Rng;

const FAILURES_BEFORE_STUCK_CHECK: usize = 64;

fn key(u: u32, v: u32) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    (a as u64) << 32 | b as u64
}

fn stubs_for(degrees: &[usize], offset: usize) -> Vec<u32> {
    degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n((v + offset) as u32, d))
        .collect()
}

/// One attempt at a simple graph with the given degree sequence.
pub(crate) fn try_pair_degree_sequence<R: Rng + ?Sized>(
    degrees: &[usize],
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let mut stubs = stubs_for(degrees, 0);
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    let mut present = HashSet::with_capacity(stubs.len() / 2);
    let mut failures = 0;
    while stubs.len() >= 2 {
        let i = rng.random_range(0..stubs.len());
        let j = rng.random_range(0..stubs.len());
        let (u, v) = (stubs[i], stubs[j]);
        if i != j && u != v && !present.contains(&key(u, v)) {
            present.insert(key(u, v));
            edges.push((u as usize, v as usize));
            stubs.swap_remove(i.max(j));
            stubs.swap_remove(i.min(j));
            failures = 0;
            continue;
        }
        failures += 1;
        if failures >= FAILURES_BEFORE_STUCK_CHECK {
            let mut distinct: Vec<u32> = stubs.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let open = distinct.iter().enumerate().any(|(a, &u)| {
                distinct[a + 1..].iter().any(|&v| !present.contains(&key(u, v)))
            });
            if !open {
                return None;
            }
            failures = 0;
        }
    }
    stubs.is_empty().then_some(edges)
}

/// One attempt at a simple bipartite graph; left vertex `i` is returned as
/// `i`, right vertex `j` as `j` (callers relabel).
pub(crate) fn try_pair_bipartite<R: Rng + ?Sized>(
    left: &[usize],
    right: &[usize],
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let mut ls = stubs_for(left, 0);
    let mut rs = stubs_for(right, 0);
    if ls.len() != rs.len() {
        return None;
    }
    let mut edges = Vec::with_capacity(ls.len());
    let mut present = HashSet::with_capacity(ls.len());
    let mut failures = 0;
    while !ls.is_empty() {
        let i = rng.random_range(0..ls.len());
        let j = rng.random_range(0..rs.len());
        let k = (ls[i] as u64) << 32 | rs[j] as u64;
        if present.insert(k) {
            edges.push((ls[i] as usize, rs[j] as usize));
            ls.swap_remove(i);
            rs.swap_remove(j);
            failures = 0;
            continue;
        }
        failures += 1;
        if failures >= FAILURES_BEFORE_STUCK_CHECK {
            let mut a = ls.clone();
            a.sort_unstable();
            a.dedup();
            let mut b = rs.clone();
            b.sort_unstable();
            b.dedup();
            let open = a.iter().any(|&u| b.iter().any(|&v| !present.contains(&((u as u64) << 32 | v as u64))));
            if !open {
                return None;
            }
            failures = 0;
        }
    }
    Some(edges)
}
