//! Exact sampler over the boundary of the mutant set.
//!
//! A state change picks an ordered pair `u -> v` of adjacent vertices of
//! opposite type with probability proportional to `fit(u) / deg(u)`. Summed
//! over `v`, vertex `u` carries weight `fit(u) * opp(u) / deg(u)` where
//! `opp(u)` counts its opposite-type neighbours. Those weights live in a
//! Fenwick tree; after choosing `u`, the target is a uniform opposite-type
//! neighbour.

use rand::Rng;

use crate::graph::{Graph, VertexSet};

const REBUILD_INTERVAL: u64 = 1 << 20;

#[derive(Clone, Debug)]
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn from_weights(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self { tree }
    }

    fn add(&mut self, index: usize, delta: f64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut i = self.tree.len() - 1;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Boundary {
    opposite: Vec<u32>,
    weights: Vec<f64>,
    tree: Fenwick,
    updates: u64,
}

impl Boundary {
    pub(crate) fn build(g: &Graph, mutants: &VertexSet, fitness: f64) -> Self {
        let n = g.vertex_count();
        let opposite: Vec<u32> = (0..n)
            .map(|u| {
                let m = mutants.contains(u);
                g.neighbors(u).iter().filter(|&&v| mutants.contains(v as usize) != m).count() as u32
            })
            .collect();
        let weights: Vec<f64> = (0..n)
            .map(|u| Self::weight(g, mutants.contains(u), opposite[u], fitness, u))
            .collect();
        let tree = Fenwick::from_weights(&weights);
        Self { opposite, weights, tree, updates: 0 }
    }

    #[inline]
    fn weight(g: &Graph, mutant: bool, opposite: u32, fitness: f64, u: usize) -> f64 {
        let fit = if mutant { fitness } else { 1.0 };
        fit * opposite as f64 / g.degree(u) as f64
    }

    /// Sum over boundary pairs of `fit(u) / deg(u)`.
    pub(crate) fn total_weight(&self) -> f64 {
        self.tree.total()
    }

    /// Draws an ordered boundary pair `(u, v)`.
    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        g: &Graph,
        mutants: &VertexSet,
        rng: &mut R,
    ) -> (usize, usize) {
        let total = self.tree.total();
        loop {
            let u = self.tree.find(rng.random::<f64>() * total);
            let opp = self.opposite[u];
            if opp == 0 {
                // Only reachable through rounding at a bucket edge.
                continue;
            }
            let m = mutants.contains(u);
            let pick = rng.random_range(0..opp);
            let v = g
                .neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(|&v| mutants.contains(v) != m)
                .nth(pick as usize)
                .expect("opposite count matches adjacency");
            return (u, v);
        }
    }

    /// Updates counts after `v` has switched type; `mutants` is the new set.
    pub(crate) fn on_flip(&mut self, g: &Graph, mutants: &VertexSet, fitness: f64, v: usize) {
        let deg = g.degree(v) as u32;
        self.opposite[v] = deg - self.opposite[v];
        let now_mutant = mutants.contains(v);
        self.set_weight(v, Self::weight(g, now_mutant, self.opposite[v], fitness, v));
        for &y in g.neighbors(v) {
            let y = y as usize;
            let y_mutant = mutants.contains(y);
            if y_mutant == now_mutant {
                self.opposite[y] -= 1;
            } else {
                self.opposite[y] += 1;
            }
            self.set_weight(y, Self::weight(g, y_mutant, self.opposite[y], fitness, y));
        }
        self.updates += 1;
        if self.updates % REBUILD_INTERVAL == 0 {
            self.tree = Fenwick::from_weights(&self.weights);
        }
    }

    fn set_weight(&mut self, u: usize, w: f64) {
        let delta = w - self.weights[u];
        if delta != 0.0 {
            self.weights[u] = w;
            self.tree.add(u, delta);
        }
    }

    #[cfg(test)]
    pub(crate) fn opposite_count(&self, u: usize) -> u32 {
        self.opposite[u]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenwick_prefix_search() {
        let f = Fenwick::from_weights(&[1.0, 0.0, 2.0, 3.0, 0.5]);
        assert_eq!(f.total(), 6.5);
        assert_eq!(f.find(0.5), 0);
        assert_eq!(f.find(1.0), 2);
        assert_eq!(f.find(2.99), 2);
        assert_eq!(f.find(3.0), 3);
        assert_eq!(f.find(6.4), 4);
        assert_eq!(f.find(100.0), 4);
    }

    #[test]
    fn fenwick_updates() {
        let mut f = Fenwick::from_weights(&[0.0; 6]);
        f.add(3, 2.0);
        f.add(5, 1.0);
        assert_eq!(f.total(), 3.0);
        assert_eq!(f.find(1.5), 3);
        assert_eq!(f.find(2.5), 5);
    }
}
