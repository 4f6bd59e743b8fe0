//! Small-graph corpora for exhaustive checks against exact solvers.

use std::collections::BTreeSet;

use rand::Rng;

use crate::graph::Graph;
use crate::rng::stream_rng;

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                go(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn connected_mask(n: usize, adj: &[u32]) -> bool {
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0;
        for v in 0..n {
            if frontier >> v & 1 == 1 {
                next |= adj[v];
            }
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen == (1 << n) - 1
}

/// All connected graphs on exactly `n` vertices, one per isomorphism class
/// (`2 <= n <= 6`). Classes are identified by the minimal edge mask over
/// all vertex relabellings.
pub fn connected_graphs(n: usize) -> Vec<Graph> {
    assert!((2..=6).contains(&n), "exhaustive enumeration supports 2..=6 vertices");
    let pairs = pairs(n);
    let mut index = vec![vec![0usize; n]; n];
    for (i, &(u, v)) in pairs.iter().enumerate() {
        index[u][v] = i;
        index[v][u] = i;
    }
    let perms = permutations(n);
    let mut classes = BTreeSet::new();
    for mask in 0u32..(1 << pairs.len()) {
        let mut adj = vec![0u32; n];
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
        if !connected_mask(n, &adj) {
            continue;
        }
        let canonical = perms
            .iter()
            .map(|p| {
                pairs.iter().enumerate().fold(0u32, |acc, (i, &(u, v))| {
                    if mask >> i & 1 == 1 {
                        acc | 1 << index[p[u]][p[v]]
                    } else {
                        acc
                    }
                })
            })
            .min()
            .expect("at least one permutation");
        classes.insert(canonical);
    }
    classes
        .into_iter()
        .map(|mask| {
            let edges = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e);
            Graph::from_edges(n, edges.collect::<Vec<_>>()).expect("valid edges")
        })
        .collect()
}

/// Every connected graph on `2..=max_n` vertices, up to isomorphism.
pub fn all_connected_graphs_up_to(max_n: usize) -> Vec<Graph> {
    (2..=max_n).flat_map(connected_graphs).collect()
}

/// `count` connected graphs drawn from `G(n, p)` (rejecting disconnected
/// draws), with `n` cycling through `sizes`.
pub fn random_connected_graphs(count: usize, sizes: &[usize], p: f64, seed: u64) -> Vec<Graph> {
    let mut rng = stream_rng(seed, 0xC0_4905);
    (0..count)
        .map(|i| {
            let n = sizes[i % sizes.len()];
            loop {
                let edges: Vec<_> = pairs(n).into_iter().filter(|_| rng.random_bool(p)).collect();
                let g = Graph::from_edges(n, edges).expect("valid edges");
                if g.is_connected() {
                    break g;
                }
            }
        })
        .collect()
}

/// The standard corpus: all connected graphs on at most 6 vertices plus 200
/// random connected graphs on 7 or 8 vertices.
pub fn standard_corpus() -> Vec<Graph> {
    let mut graphs = all_connected_graphs_up_to(6);
    graphs.extend(random_connected_graphs(200, &[7, 8], 0.45, 2024));
    graphs
}
