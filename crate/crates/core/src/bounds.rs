//! Graph-level bounds on fixation and extinction, as checkable functions.
//!
//! Every bound reports the raw expression alongside the value clamped to
//! `[0, 1]`, so soundness checks can look at the unclamped number.

use thiserror::Error;

use crate::graph::{hvol, GraphError};
use crate::{Graph, VertexSet};

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("initial set is empty")]
    EmptySet,
    #[error("fitness must be positive and finite, got {0}")]
    InvalidFitness(f64),
    #[error("early stopping needs r > 1, got {0}")]
    FitnessNotAboveOne(f64),
    #[error("early stopping needs c > 0, got {0}")]
    InvalidConstant(f64),
    #[error("need at least 2 vertices, got {0}")]
    TooSmall(usize),
    #[error("vertex {vertex} outside 0..{n}")]
    BadVertex { vertex: usize, n: usize },
    #[error("set over {found} vertices used with a graph on {expected}")]
    UniverseMismatch { found: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub raw: f64,
    pub value: f64,
}

impl BoundValue {
    fn new(raw: f64) -> Self {
        Self { raw, value: raw.clamp(0.0, 1.0) }
    }
}

/// `(1 - r^{-a}) / (1 - r^{-b})` for `0 <= a <= b`, `b > 0`, without
/// cancellation; `a / b` at `r = 1`.
fn ratio_of_powers(a: f64, b: f64, r: f64) -> f64 {
    let lr = r.ln();
    if lr == 0.0 {
        a / b
    } else if lr > 0.0 {
        (-a * lr).exp_m1() / (-b * lr).exp_m1()
    } else {
        // Multiply through by r^b to keep the exponentials small.
        ((b - a) * lr).exp() * (a * lr).exp_m1() / (b * lr).exp_m1()
    }
}

/// Lower bound `(1 - r^{-delta hvol(S)}) / (1 - r^{-delta hvol(V)})` on
/// the fixation probability from `s`.
pub fn key_lower_bound(g: &Graph, s: &VertexSet, r: f64) -> Result<BoundValue, BoundError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(BoundError::InvalidFitness(r));
    }
    if s.universe() != g.vertex_count() {
        return Err(BoundError::UniverseMismatch { found: s.universe(), expected: g.vertex_count() });
    }
    if s.is_empty() {
        return Err(BoundError::EmptySet);
    }
    g.require_connected()?;
    let delta = g.min_degree() as f64;
    let hs = hvol(g, s)?;
    let hv = hvol(g, &VertexSet::full(g.vertex_count()))?;
    Ok(BoundValue::new(ratio_of_powers(delta * hs, delta * hv, r)))
}

/// Harmonic volume `c ln n / (delta ln r)` beyond which fixation has
/// probability at least `1 - n^{-c}`.
pub fn early_stop_threshold(g: &Graph, r: f64, c: f64) -> Result<f64, BoundError> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(BoundError::FitnessNotAboveOne(r));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(BoundError::InvalidConstant(c));
    }
    let delta = g.min_degree();
    if delta == 0 {
        return Err(GraphError::IsolatedVertex { vertex: g.degrees().position(|d| d == 0).unwrap_or(0) }.into());
    }
    Ok(threshold_from_parts(g.vertex_count() as f64, delta as f64, r, c))
}

fn threshold_from_parts(n: f64, delta: f64, r: f64, c: f64) -> f64 {
    c * n.ln() / (delta * r.ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Claim1Bound {
    /// Harmonic volume of the neighbours of `u`.
    pub t_u: f64,
    pub full: BoundValue,
    /// `T_u / (T_u + r)`.
    pub weak: BoundValue,
}

/// Local lower bound on the probability that a single mutant at `u` goes
/// extinct.
pub fn extinction_lb_claim1(g: &Graph, u: usize, r: f64) -> Result<Claim1Bound, BoundError> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(BoundError::TooSmall(n));
    }
    if u >= n {
        return Err(BoundError::BadVertex { vertex: u, n });
    }
    if !(r > 0.0) {
        return Err(BoundError::InvalidFitness(r));
    }
    g.require_connected()?;
    let inv = |v: usize| 1.0 / g.degree(v) as f64;
    let t = |v: usize| g.neighbors(v).iter().map(|&w| inv(w as usize)).sum::<f64>();
    let t_u = t(u);
    let du = g.degree(u) as f64;
    let sum: f64 = g
        .neighbors(u)
        .iter()
        .map(|&v| {
            let t_uv = t(v as usize) - 1.0 / du;
            2.0 * r / (2.0 * r + t_uv)
        })
        .sum();
    // As r grows 2r/(2r + T) tends to 1 and the bound to T_u/(T_u + r).
    let full = if r.is_finite() { t_u / (t_u + r / du * sum) } else { 0.0 };
    let weak = if r.is_finite() { t_u / (t_u + r) } else { 0.0 };
    Ok(Claim1Bound { t_u, full: BoundValue::new(full), weak: BoundValue::new(weak) })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeStats {
    /// `histogram[d]` is the number of vertices of degree exactly `d`.
    pub histogram: Vec<usize>,
    /// `tail[d]` is the number of vertices of degree at least `d`.
    pub tail: Vec<usize>,
    pub theta: usize,
}

impl DegreeStats {
    pub fn n_d(&self, d: usize) -> usize {
        self.histogram.get(d).copied().unwrap_or(0)
    }

    pub fn big_n_d(&self, d: usize) -> usize {
        self.tail.get(d).copied().unwrap_or(0)
    }
}

/// Degree histogram, tail counts and `theta = max{d : N_d >= d/2}`.
pub fn degree_stats(g: &Graph) -> DegreeStats {
    let max = g.max_degree();
    let mut histogram = vec![0usize; max + 1];
    for d in g.degrees() {
        histogram[d] += 1;
    }
    let mut tail = vec![0usize; max + 2];
    for d in (0..=max).rev() {
        tail[d] = tail[d + 1] + histogram[d];
    }
    tail.pop();
    // d = 1 always qualifies on a non-empty graph with no isolated vertex.
    let theta = (1..=max).rev().find(|&d| 2 * tail[d] >= d).unwrap_or(0);
    DegreeStats { histogram, tail, theta }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClauseCheck {
    pub holds: bool,
    /// Smallest `rhs - lhs` over the clause's instances; nonnegative iff
    /// the clause holds. Infinite when the clause has no instances.
    pub slack: f64,
}

impl ClauseCheck {
    fn from_slacks<I: IntoIterator<Item = f64>>(slacks: I) -> Self {
        let slack = slacks.into_iter().fold(f64::INFINITY, f64::min);
        Self { holds: slack >= 0.0, slack }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claim2Report {
    pub stats: DegreeStats,
    pub zeta: f64,
    /// `theta <= 6 r n zeta`.
    pub a: ClauseCheck,
    /// `N_d <= 4 r^2 theta n zeta / d` for `d <= theta`.
    pub b: ClauseCheck,
    /// `N_d <= 8 r^2 theta n zeta log(2 theta) / d` for `d > theta`.
    pub c: ClauseCheck,
}

impl Claim2Report {
    pub fn holds(&self) -> bool {
        self.a.holds && self.b.holds && self.c.holds
    }
}

/// Evaluates the three degree-count inequalities given the exact
/// extinction probability `zeta` of `g` at fitness `r`.
pub fn claim2_check(g: &Graph, r: f64, zeta: f64) -> Claim2Report {
    let stats = degree_stats(g);
    let n = g.vertex_count() as f64;
    let theta = stats.theta as f64;
    let base = r * r * theta * n * zeta;
    let a = ClauseCheck::from_slacks([6.0 * r * n * zeta - theta]);
    let b = ClauseCheck::from_slacks((1..=stats.theta).map(|d| 4.0 * base / d as f64 - stats.big_n_d(d) as f64));
    let log = (2.0 * theta).log2();
    let c = ClauseCheck::from_slacks(
        (stats.theta + 1..stats.tail.len()).map(|d| 8.0 * base * log / d as f64 - stats.big_n_d(d) as f64),
    );
    Claim2Report { stats, zeta, a, b, c }
}

fn check_n_r(n: usize, r: f64) -> Result<(), BoundError> {
    if n < 2 {
        return Err(BoundError::TooSmall(n));
    }
    if !(r > 1.0 && r.is_finite()) {
        return Err(BoundError::FitnessNotAboveOne(r));
    }
    Ok(())
}

/// `1 / (19 r^{5/3} n^{1/3} log2(2n)^{4/3})`, a lower bound on the
/// extinction probability of any graph on `n` vertices.
pub fn theorem2_extinction_lb(n: usize, r: f64) -> Result<BoundValue, BoundError> {
    check_n_r(n, r)?;
    let n = n as f64;
    Ok(BoundValue::new(1.0 / (19.0 * r.powf(5.0 / 3.0) * n.cbrt() * (2.0 * n).log2().powf(4.0 / 3.0))))
}

/// `1 - 1 / (5 sqrt(r^3 n))`, an upper bound on the fixation probability of
/// any graph on `n` vertices.
pub fn sqrt_corollary_bound(n: usize, r: f64) -> Result<BoundValue, BoundError> {
    check_n_r(n, r)?;
    Ok(BoundValue::new(1.0 - 1.0 / (5.0 * (r.powi(3) * n as f64).sqrt())))
}
