//! Graph families: the layered strong suppressor and strong amplifier
//! constructions, the usual baselines, and random regular graphs.

pub mod corpus;
mod random;
mod validate;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::graph::{conductance_spectral_lower, Graph, GraphError};
use crate::rng::{derive_indexed_seed, derive_seed, stream_rng};

pub use validate::{validate_layered, ValidationError};

pub const RANDOM_REGULAR_MAX_ATTEMPTS: usize = 1000;
pub const EXPANDER_MAX_ATTEMPTS: usize = 100;
/// Required conductance certificate for the amplifier's W layer.
pub const EXPANDER_CONDUCTANCE: f64 = 1.0 / 3.0;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("{family} needs n >= {min}, got {n}")]
    TooSmall { family: Family, n: usize, min: usize },
    #[error("suppressor needs n = m^4 with m >= 2; {n} is not (nearest admissible: {below:?}, {above})")]
    NotFourthPower { n: usize, below: Option<usize>, above: usize },
    #[error("amplifier needs n = m^3 with m >= 2; {n} is not (nearest admissible: {below:?}, {above})")]
    NotCube { n: usize, below: Option<usize>, above: usize },
    #[error("epsilon must satisfy 0 < epsilon <= 1, got {0}")]
    BadEpsilon(f64),
    #[error("amplifier with n = {n} needs alpha <= n^(2/3) = {limit} so every W vertex has a V neighbour; alpha = {alpha}")]
    AlphaTooLarge { n: usize, alpha: usize, limit: usize },
    #[error("alpha must be at least 3, got {0}")]
    AlphaTooSmall(usize),
    #[error("no simple {d}-regular graph on {n} vertices (needs n*d even and d < n)")]
    RegularParity { n: usize, d: usize },
    #[error("random graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("W-layer expansion certificate stayed below 1/3 after {attempts} attempts (best {best:.4})")]
    CertificationFailed { attempts: usize, best: f64 },
    #[error("family {0} needs parameter {1}")]
    MissingParameter(Family, &'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Suppressor,
    Amplifier,
    Star,
    Complete,
    Cycle,
    Path,
    RandomRegular,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Suppressor,
        Family::Amplifier,
        Family::Star,
        Family::Complete,
        Family::Cycle,
        Family::Path,
        Family::RandomRegular,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Suppressor => "suppressor",
            Family::Amplifier => "amplifier",
            Family::Star => "star",
            Family::Complete => "complete",
            Family::Cycle => "cycle",
            Family::Path => "path",
            Family::RandomRegular => "random_regular",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| format!("unknown family {s:?}; expected one of suppressor, amplifier, star, complete, cycle, path, random_regular"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    U,
    V,
    W,
    None,
}

impl Layer {
    pub fn tag(self) -> &'static str {
        match self {
            Layer::U => "U",
            Layer::V => "V",
            Layer::W => "W",
            Layer::None => "-",
        }
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "U" => Ok(Layer::U),
            "V" => Ok(Layer::V),
            "W" => Ok(Layer::W),
            "-" => Ok(Layer::None),
            _ => Err(format!("unknown layer {s:?}")),
        }
    }
}

/// Parameters a caller asks for.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyParams {
    pub family: Family,
    pub n: usize,
    pub epsilon: Option<f64>,
    pub degree: Option<usize>,
    pub seed: u64,
}

impl FamilyParams {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self { family, n, epsilon: None, degree: None, seed }
    }
}

/// Parameters the construction actually resolved to.
#[derive(Clone, Debug, PartialEq)]
pub enum Construction {
    Suppressor {
        n: usize,
        /// `n^{1/4}`.
        root: usize,
    },
    Amplifier {
        n: usize,
        /// `n^{1/3}`.
        root: usize,
        epsilon: Option<f64>,
        alpha: usize,
        /// V-degree of W vertices: `base` or `base + 1`.
        w_to_v_base: usize,
        w_to_v_extra: usize,
        certificate: f64,
    },
    Plain(Family),
}

#[derive(Clone, Debug)]
pub struct LayeredGraph {
    pub graph: Graph,
    pub layers: Vec<Layer>,
    pub construction: Construction,
}

impl LayeredGraph {
    fn plain(graph: Graph, family: Family) -> Self {
        let layers = vec![Layer::None; graph.vertex_count()];
        Self { graph, layers, construction: Construction::Plain(family) }
    }

    pub fn layer_members(&self, layer: Layer) -> Vec<usize> {
        (0..self.layers.len()).filter(|&v| self.layers[v] == layer).collect()
    }

    /// "vertex layer" lines for the sidecar file.
    pub fn layer_file(&self) -> String {
        self.layers
            .iter()
            .enumerate()
            .map(|(v, l)| format!("{v} {}\n", l.tag()))
            .collect()
    }
}

/// Dispatches on `params.family`.
pub fn build_family(params: &FamilyParams) -> Result<LayeredGraph, FamilyError> {
    let n = params.n;
    match params.family {
        Family::Suppressor => build_suppressor(n, params.seed),
        Family::Amplifier => {
            let eps = params.epsilon.ok_or(FamilyError::MissingParameter(Family::Amplifier, "epsilon"))?;
            build_amplifier(n, eps, params.seed)
        }
        Family::Star => Ok(LayeredGraph::plain(build_star(n)?, Family::Star)),
        Family::Complete => Ok(LayeredGraph::plain(build_complete(n)?, Family::Complete)),
        Family::Cycle => Ok(LayeredGraph::plain(build_cycle(n)?, Family::Cycle)),
        Family::Path => Ok(LayeredGraph::plain(build_path(n)?, Family::Path)),
        Family::RandomRegular => {
            let d = params.degree.ok_or(FamilyError::MissingParameter(Family::RandomRegular, "degree"))?;
            Ok(LayeredGraph::plain(build_random_regular(n, d, params.seed)?, Family::RandomRegular))
        }
    }
}

fn require_at_least(family: Family, n: usize, min: usize) -> Result<(), FamilyError> {
    if n < min {
        Err(FamilyError::TooSmall { family, n, min })
    } else {
        Ok(())
    }
}

/// Star `K_{1,n-1}`: vertex 0 is the centre.
pub fn build_star(n: usize) -> Result<Graph, FamilyError> {
    require_at_least(Family::Star, n, 2)?;
    Ok(Graph::from_edges(n, (1..n).map(|v| (0, v)))?)
}

pub fn build_complete(n: usize) -> Result<Graph, FamilyError> {
    require_at_least(Family::Complete, n, 2)?;
    Ok(Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))?)
}

/// Cycle `C_n`; for `n = 2` this is the single edge `K_2`.
pub fn build_cycle(n: usize) -> Result<Graph, FamilyError> {
    require_at_least(Family::Cycle, n, 2)?;
    if n == 2 {
        return build_path(2);
    }
    Ok(Graph::from_edges(n, (0..n).map(|u| (u, (u + 1) % n)))?)
}

pub fn build_path(n: usize) -> Result<Graph, FamilyError> {
    require_at_least(Family::Path, n, 2)?;
    Ok(Graph::from_edges(n, (1..n).map(|v| (v - 1, v)))?)
}

/// Simple `d`-regular graph on `n` vertices, reproducible from `seed`.
pub fn build_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph, FamilyError> {
    if (n * d) % 2 == 1 || d >= n {
        return Err(FamilyError::RegularParity { n, d });
    }
    let mut rng = stream_rng(derive_seed(seed, "random_regular"), 0);
    let degrees = vec![d; n];
    for _ in 0..RANDOM_REGULAR_MAX_ATTEMPTS {
        if let Some(edges) = random::try_pair_degree_sequence(&degrees, &mut rng) {
            return Ok(Graph::from_edges(n, edges)?);
        }
    }
    Err(FamilyError::GenerationFailed { attempts: RANDOM_REGULAR_MAX_ATTEMPTS })
}

fn integer_root(n: usize, k: u32) -> (usize, bool) {
    let mut m = (n as f64).powf(1.0 / k as f64).round() as usize;
    while m.pow(k) > n {
        m -= 1;
    }
    while (m + 1).pow(k) <= n {
        m += 1;
    }
    (m, m.pow(k) == n)
}

fn admissible_neighbours(m: usize, k: u32) -> (Option<usize>, usize) {
    let below = (m >= 2).then(|| m.pow(k));
    (below, (m + 1).max(2).pow(k))
}

/// Strong suppressor on `n = m^4` "V" vertices.
///
/// Layers: `U` (`m^3` vertices, ids first), `V` (`n`), `W` (`m^2`). A
/// seeded permutation of V is cut into consecutive blocks of `m`; block
/// `i` is the neighbourhood of the `i`-th U vertex. Every V vertex is
/// joined to every W vertex.
pub fn build_suppressor(n: usize, seed: u64) -> Result<LayeredGraph, FamilyError> {
    let (m, exact) = integer_root(n, 4);
    if !exact || m < 2 {
        let (below, above) = admissible_neighbours(m, 4);
        let below = below.filter(|&b| b != n);
        return Err(FamilyError::NotFourthPower { n, below, above });
    }
    let (u_count, v_count, w_count) = (m * m * m, n, m * m);
    let (u0, v0, w0) = (0, u_count, u_count + v_count);
    let total = u_count + v_count + w_count;

    let mut rng = stream_rng(derive_seed(seed, "suppressor"), 0);
    let mut order: Vec<usize> = (0..v_count).collect();
    order.shuffle(&mut rng);

    let mut edges = Vec::with_capacity(v_count + v_count * w_count);
    for (i, block) in order.chunks(m).enumerate() {
        edges.extend(block.iter().map(|&v| (u0 + i, v0 + v)));
    }
    for v in 0..v_count {
        edges.extend((0..w_count).map(|w| (v0 + v, w0 + w)));
    }
    let graph = Graph::from_edges(total, edges)?;
    let mut layers = vec![Layer::U; u_count];
    layers.extend(std::iter::repeat_n(Layer::V, v_count));
    layers.extend(std::iter::repeat_n(Layer::W, w_count));
    Ok(LayeredGraph { graph, layers, construction: Construction::Suppressor { n, root: m } })
}

/// `alpha = max(3, round(3 ln n / ln(1 + epsilon)))`.
pub fn amplifier_alpha(n: usize, epsilon: f64) -> usize {
    let raw = 3.0 * (n as f64).ln() / epsilon.ln_1p();
    (raw.round() as usize).max(3)
}

/// Strong amplifier for `n = m^3` and `0 < epsilon <= 1`.
pub fn build_amplifier(n: usize, epsilon: f64, seed: u64) -> Result<LayeredGraph, FamilyError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(FamilyError::BadEpsilon(epsilon));
    }
    let (_, exact) = integer_root(n, 3);
    if !exact {
        let (m, _) = integer_root(n, 3);
        let (below, above) = admissible_neighbours(m, 3);
        return Err(FamilyError::NotCube { n, below: below.filter(|&b| b != n), above });
    }
    build_amplifier_inner(n, amplifier_alpha(n, epsilon), Some(epsilon), seed)
}

/// Amplifier layout with an explicit `alpha` instead of one derived from
/// epsilon. Useful for reduced instances whose natural alpha would exceed
/// `n^{2/3}`.
pub fn build_amplifier_with_alpha(n: usize, alpha: usize, seed: u64) -> Result<LayeredGraph, FamilyError> {
    build_amplifier_inner(n, alpha, None, seed)
}

fn build_amplifier_inner(
    n: usize,
    alpha: usize,
    epsilon: Option<f64>,
    seed: u64,
) -> Result<LayeredGraph, FamilyError> {
    let (m, exact) = integer_root(n, 3);
    if !exact || m < 2 {
        let (below, above) = admissible_neighbours(m, 3);
        return Err(FamilyError::NotCube { n, below: below.filter(|&b| b != n), above });
    }
    if alpha < 3 {
        return Err(FamilyError::AlphaTooSmall(alpha));
    }
    let m2 = m * m;
    if alpha > m2 {
        return Err(FamilyError::AlphaTooLarge { n, alpha, limit: m2 });
    }
    let (u_count, v_count, w_count) = (n, m2, alpha * m2);
    if (w_count * m2) % 2 == 1 {
        return Err(FamilyError::RegularParity { n: w_count, d: m2 });
    }
    let (u0, v0, w0) = (0, u_count, u_count + v_count);
    let total = u_count + v_count + w_count;
    let mut edges = Vec::new();

    // U-V: each v owns a block of m leaves.
    let mut rng = stream_rng(derive_seed(seed, "amplifier-uv"), 0);
    let mut order: Vec<usize> = (0..u_count).collect();
    order.shuffle(&mut rng);
    for (i, block) in order.chunks(m).enumerate() {
        edges.extend(block.iter().map(|&u| (u0 + u, v0 + i)));
    }

    // V-W: each v has m^2 W neighbours; the m^4 stubs on the W side are
    // spread as evenly as possible, a random subset getting one extra.
    let bipartite_total = v_count * m2;
    let base = bipartite_total / w_count;
    let extra = bipartite_total % w_count;
    let mut rng = stream_rng(derive_seed(seed, "amplifier-vw"), 0);
    let mut w_order: Vec<usize> = (0..w_count).collect();
    w_order.shuffle(&mut rng);
    let mut w_degree = vec![base; w_count];
    for &w in &w_order[..extra] {
        w_degree[w] += 1;
    }
    let left = vec![m2; v_count];
    let vw = (0..RANDOM_REGULAR_MAX_ATTEMPTS)
        .find_map(|_| random::try_pair_bipartite(&left, &w_degree, &mut rng))
        .ok_or(FamilyError::GenerationFailed { attempts: RANDOM_REGULAR_MAX_ATTEMPTS })?;
    edges.extend(vw.into_iter().map(|(v, w)| (v0 + v, w0 + w)));

    // W-W: random m^2-regular graph, regenerated until its spectral
    // certificate reaches the required conductance.
    let mut best = 0.0f64;
    let mut ww = None;
    for attempt in 0..EXPANDER_MAX_ATTEMPTS {
        let sub_seed = derive_indexed_seed(seed, "amplifier-ww", attempt as u64);
        let g = build_random_regular(w_count, m2, sub_seed)?;
        if !g.is_connected() {
            continue;
        }
        let cert = conductance_spectral_lower(&g)?;
        best = best.max(cert.lower_bound);
        if cert.lower_bound >= EXPANDER_CONDUCTANCE {
            ww = Some((g, cert.lower_bound));
            break;
        }
    }
    let (ww, certificate) =
        ww.ok_or(FamilyError::CertificationFailed { attempts: EXPANDER_MAX_ATTEMPTS, best })?;
    edges.extend(ww.edges().map(|(a, b)| (w0 + a, w0 + b)));

    let graph = Graph::from_edges(total, edges)?;
    let mut layers = vec![Layer::U; u_count];
    layers.extend(std::iter::repeat_n(Layer::V, v_count));
    layers.extend(std::iter::repeat_n(Layer::W, w_count));
    Ok(LayeredGraph {
        graph,
        layers,
        construction: Construction::Amplifier {
            n,
            root: m,
            epsilon,
            alpha,
            w_to_v_base: base,
            w_to_v_extra: extra,
            certificate,
        },
    })
}
