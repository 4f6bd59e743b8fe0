//! Immutable undirected graphs in compressed adjacency form, plus the graph
//! functionals used throughout the crate: volume, harmonic volume and
//! conductance.

mod conductance;
mod io;
mod vertex_set;

pub use conductance::{conductance_exact, conductance_exact_ratio, conductance_spectral_lower, SpectralCertificate, MAX_EXACT_CONDUCTANCE_VERTICES};
pub use io::{load_edge_list, parse_edge_list, save_edge_list, write_edge_list};
pub use vertex_set::VertexSet;

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {vertex}")]
    SelfLoop { vertex: usize },
    #[error("duplicate edge {u} {v}")]
    DuplicateEdge { u: usize, v: usize },
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("vertex {vertex} is isolated (degree zero)")]
    IsolatedVertex { vertex: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has {n} vertices; exhaustive conductance supports at most {max} (use conductance_spectral_lower)")]
    TooLargeForExact { n: usize, max: usize },
    #[error("graph is not regular")]
    NotRegular,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected simple graph on vertices `0..n`.
///
/// Neighbor lists are sorted and stored back to back in one `targets`
/// array; `offsets[u]..offsets[u + 1]` delimits the neighbors of `u`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph")
            .field("vertices", &self.vertex_count())
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl Graph {
    /// Builds a graph from an undirected edge list. Each edge must appear
    /// once (in either orientation); self-loops are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        assert!(n <= u32::MAX as usize, "vertex ids are stored as u32");
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { vertex: u });
            }
            lists[u].push(v as u32);
            lists[v].push(u as u32);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        offsets.push(0);
        for (u, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let v = w[0] as usize;
                return Err(GraphError::DuplicateEdge { u: u.min(v), v: u.max(v) });
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Ok(Self { offsets, targets })
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn min_degree(&self) -> usize {
        self.degrees().min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    /// The common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        self.degrees().all(|x| x == d).then_some(d)
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Subgraph induced by `vertices`; vertex `vertices[i]` becomes `i`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        let mut index = vec![u32::MAX; self.vertex_count()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i as u32;
        }
        let edges = vertices.iter().enumerate().flat_map(|(i, &u)| {
            let index = &index;
            self.neighbors(u).iter().filter_map(move |&v| {
                let j = index[v as usize];
                (j != u32::MAX && (i as u32) < j).then_some((i, j as usize))
            })
        });
        Graph::from_edges(vertices.len(), edges.collect::<Vec<_>>())
            .expect("induced subgraph of a simple graph is simple")
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    pub fn require_connected(&self) -> Result<(), GraphError> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(GraphError::Disconnected)
        }
    }
}

/// Sum of degrees over `s`.
pub fn volume(g: &Graph, s: &VertexSet) -> u64 {
    s.iter().map(|u| g.degree(u) as u64).sum()
}

/// Harmonic volume: the sum of `1 / deg(u)` over `s`.
///
/// Vertices are bucketed by degree and each bucket contributes
/// `count / d` in ascending-degree order, so the only rounding is one
/// division and one addition per distinct degree.
pub fn hvol(g: &Graph, s: &VertexSet) -> Result<f64, GraphError> {
    hvol_of(g, s.iter())
}

pub fn hvol_of<I: IntoIterator<Item = usize>>(g: &Graph, vertices: I) -> Result<f64, GraphError> {
    let mut counts = vec![0u64; g.max_degree() + 1];
    for u in vertices {
        let d = g.degree(u);
        if d == 0 {
            return Err(GraphError::IsolatedVertex { vertex: u });
        }
        counts[d] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0)
        .map(|(d, &c)| c as f64 / d as f64)
        .sum())
}
