//! Step-by-step coupling of the Moran process on an amplifier with chain C.
//!
//! The Moran process runs in jump form: a jump consuming `L` full steps
//! stands for `L - 1` steps with no change followed by one changing step.
//! C advances one step per full Moran step while the two are in sync, plus
//! extra steps from the coin tosses and catch-up phases.
//!
//! Rules while `C = |W| = k` with `0 < k < kappa`:
//! * a Moran step that leaves `|W|` unchanged: C stays at `k` for one step;
//! * a step that moves `|W|`: toss coins until heads, the first with heads
//!   probability `(b_k + d_k) / (p_T + q_T)` and the rest `b_k + d_k`, one C
//!   step per toss. On heads C moves up with probability
//!   `x_k = b_k (p_T + q_T) / (p_T (b_k + d_k))` when `|W|` rose and always
//!   down when it fell.
//!
//! When C ends below `|W|` it catches up on its own until it reaches `|W|`
//! or 0.

use rand::Rng;
use thiserror::Error;

use super::chain_c::{holding_steps, make_chain_c, ChainC, ChainCError};
use crate::engine::{EngineError, MoranProcess, SamplerMode};
use crate::families::{Construction, Layer, LayeredGraph};
use crate::graph::VertexSet;
use crate::rng::stream_rng;
use crate::stats::{chi_square_gof, ChiSquareTest};

const RESYNC_INTERVAL: u64 = 1 << 14;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("coupling needs an amplifier instance")]
    NotAmplifier,
    #[error("initial set has no mutant in W")]
    NoMutantInW,
    #[error("initial W-mutant count {k0} is not below kappa = {kappa}")]
    AlreadyHalf { k0: usize, kappa: usize },
    #[error(transparent)]
    Chain(#[from] ChainCError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingEnd {
    /// C was absorbed at 0.
    ChainExtinct,
    /// `|W|` reached kappa.
    HalfOfW,
    /// The Moran jump budget ran out first.
    StepCap,
    /// The comparison inequalities failed badly enough that the coin
    /// probabilities left `[0, 1]`; the run stops.
    RegimeBroken,
}

/// One entry per Moran jump.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub jump: u64,
    /// Full Moran steps so far.
    pub moran_steps: u64,
    /// C steps so far.
    pub chain_steps: u64,
    pub w_count: usize,
    pub max_w: usize,
    pub c: usize,
}

/// C above the running maximum of `|W|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InvariantViolation {
    pub jump: u64,
    pub c: usize,
    pub max_w: usize,
}

/// A W-changing step at which `b_k <= p_T / 2` or `d_k / b_k >= q_T / p_T`
/// failed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeViolation {
    pub jump: u64,
    pub k: usize,
    pub b_k: f64,
    pub d_k: f64,
    pub p_t: f64,
    pub q_t: f64,
}

/// A maximal stay of C in one state, ended by a move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sojourn {
    pub state: usize,
    /// Steps spent, counting the step that moved.
    pub steps: u64,
    pub up: bool,
}

#[derive(Clone, Debug)]
pub struct CouplingTrace {
    pub chain: ChainC,
    pub k0: usize,
    pub end: CouplingEnd,
    pub entries: Vec<TraceEntry>,
    pub violations: Vec<InvariantViolation>,
    pub regime_violations: Vec<RegimeViolation>,
    pub sojourns: Vec<Sojourn>,
}

impl CouplingTrace {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact `p_T` and `q_T` numerators: weights of steps raising and lowering
/// the number of mutants in W, before division by total fitness.
struct WFlow {
    in_w: Vec<bool>,
    inv_deg: Vec<f64>,
    /// Sum of `1/deg(u)` over mutant neighbours `u`, for each vertex of W.
    mutant_in: Vec<f64>,
    /// Sum of `1/deg(u)` over all neighbours.
    all_in: Vec<f64>,
    up: f64,
    down: f64,
    r: f64,
    updates: u64,
}

impl WFlow {
    fn new(lg: &LayeredGraph, mutants: &VertexSet, r: f64) -> Self {
        let g = &lg.graph;
        let n = g.vertex_count();
        let in_w: Vec<bool> = lg.layers.iter().map(|&l| l == Layer::W).collect();
        let inv_deg: Vec<f64> = g.degrees().map(|d| 1.0 / d as f64).collect();
        let mut f = Self {
            in_w,
            inv_deg,
            mutant_in: vec![0.0; n],
            all_in: vec![0.0; n],
            up: 0.0,
            down: 0.0,
            r,
            updates: 0,
        };
        f.resync(lg, mutants);
        f
    }

    fn resync(&mut self, lg: &LayeredGraph, mutants: &VertexSet) {
        let g = &lg.graph;
        self.up = 0.0;
        self.down = 0.0;
        for w in (0..g.vertex_count()).filter(|&w| self.in_w[w]) {
            let (mut m, mut a) = (0.0, 0.0);
            for &u in g.neighbors(w) {
                let u = u as usize;
                a += self.inv_deg[u];
                if mutants.contains(u) {
                    m += self.inv_deg[u];
                }
            }
            self.mutant_in[w] = m;
            self.all_in[w] = a;
            if mutants.contains(w) {
                self.down += a - m;
            } else {
                self.up += self.r * m;
            }
        }
    }

    /// Updates after `x` changed type; `mutants` is the new set.
    fn on_flip(&mut self, lg: &LayeredGraph, mutants: &VertexSet, x: usize) {
        let now = mutants.contains(x);
        let sign = if now { 1.0 } else { -1.0 };
        if self.in_w[x] {
            let (m, a) = (self.mutant_in[x], self.all_in[x]);
            if now {
                self.up -= self.r * m;
                self.down += a - m;
            } else {
                self.down -= a - m;
                self.up += self.r * m;
            }
        }
        let dx = self.inv_deg[x];
        for &w in lg.graph.neighbors(x) {
            let w = w as usize;
            if !self.in_w[w] {
                continue;
            }
            self.mutant_in[w] += sign * dx;
            if mutants.contains(w) {
                self.down -= sign * dx;
            } else {
                self.up += sign * self.r * dx;
            }
        }
        self.updates += 1;
        if self.updates % RESYNC_INTERVAL == 0 {
            self.resync(lg, mutants);
        }
    }
}

/// Tracks C's position, clock and sojourns.
struct ChainState {
    c: usize,
    steps: u64,
    held: u64,
    sojourns: Vec<Sojourn>,
}

impl ChainState {
    fn stay(&mut self, steps: u64) {
        self.steps += steps;
        self.held += steps;
    }

    fn moved(&mut self, up: bool) {
        self.steps += 1;
        self.sojourns.push(Sojourn { state: self.c, steps: self.held + 1, up });
        self.held = 0;
        if up {
            self.c += 1;
        } else {
            self.c -= 1;
        }
    }
}

/// Runs the coupled pair from `s0` for at most `max_jumps` Moran jumps.
pub fn coupling_run(
    lg: &LayeredGraph,
    s0: &VertexSet,
    r: f64,
    max_jumps: u64,
    seed: u64,
) -> Result<CouplingTrace, CouplingError> {
    let Construction::Amplifier { alpha, .. } = lg.construction else {
        return Err(CouplingError::NotAmplifier);
    };
    let g = &lg.graph;
    let w_total = lg.layers.iter().filter(|&&l| l == Layer::W).count();
    let kappa = w_total / 2;
    let w_count_of = |s: &VertexSet| s.iter().filter(|&v| lg.layers[v] == Layer::W).count();
    let k0 = w_count_of(s0);
    if k0 == 0 {
        return Err(CouplingError::NoMutantInW);
    }
    if k0 >= kappa {
        return Err(CouplingError::AlreadyHalf { k0, kappa });
    }
    let chain = make_chain_c(g.vertex_count(), kappa, alpha as f64, r)?;
    let mut moran_rng = stream_rng(seed, 0);
    let mut chain_rng = stream_rng(seed, 1);

    let mut process = MoranProcess::new(g, s0, r, SamplerMode::Auto)?;
    let mut flow = WFlow::new(lg, s0, r);
    let mut w = k0;
    let mut max_w = k0;
    let mut cs = ChainState { c: k0, steps: 0, held: 0, sojourns: Vec::new() };
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    let mut regime_violations = Vec::new();
    let mut jump = 0u64;

    let end = loop {
        if cs.c == 0 {
            break CouplingEnd::ChainExtinct;
        }
        if w >= kappa {
            break CouplingEnd::HalfOfW;
        }
        if jump >= max_jumps {
            break CouplingEnd::StepCap;
        }
        debug_assert_eq!(cs.c, w);
        let k = w;
        let z = process.total_fitness();
        let (p_t, q_t) = (flow.up / z, flow.down / z);
        let flip = process.step_jump(&mut moran_rng)?;
        jump += 1;
        let w_changed = lg.layers[flip.vertex] == Layer::W;
        flow.on_flip(lg, process.state().mutants(), flip.vertex);

        if !w_changed {
            cs.stay(flip.real_steps);
        } else {
            cs.stay(flip.real_steps - 1);
            let (b, d) = (chain.birth(k), chain.death(k));
            if b > p_t / 2.0 || d * p_t < q_t * b {
                regime_violations.push(RegimeViolation { jump, k, b_k: b, d_k: d, p_t, q_t });
            }
            let first = (b + d) / (p_t + q_t);
            let x = b * (p_t + q_t) / (p_t * (b + d));
            if !(first <= 1.0 && x <= 1.0) {
                break CouplingEnd::RegimeBroken;
            }
            if chain_rng.random::<f64>() >= first {
                cs.stay(1);
                cs.stay(holding_steps(b + d, &mut chain_rng) - 1);
            }
            let up = flip.became_mutant && chain_rng.random::<f64>() < x;
            cs.moved(up);
            w = if flip.became_mutant { w + 1 } else { w - 1 };
            max_w = max_w.max(w);
            if cs.c > max_w {
                violations.push(InvariantViolation { jump, c: cs.c, max_w });
            }
            // Catch-up.
            while cs.c > 0 && cs.c < w {
                let (b, d) = (chain.birth(cs.c), chain.death(cs.c));
                cs.stay(holding_steps(b + d, &mut chain_rng) - 1);
                let up = chain_rng.random::<f64>() * (b + d) < b;
                cs.moved(up);
                if cs.c > max_w {
                    violations.push(InvariantViolation { jump, c: cs.c, max_w });
                }
            }
        }
        entries.push(TraceEntry {
            jump,
            moran_steps: process.state().real_steps(),
            chain_steps: cs.steps,
            w_count: w,
            max_w,
            c: cs.c,
        });
    };
    Ok(CouplingTrace { chain, k0, end, entries, violations, regime_violations, sojourns: cs.sojourns })
}

/// Goodness of fit of the coupled C trajectory against the chain's own law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalTests {
    /// Up versus down moves, expected split `1 : gamma`.
    pub direction: ChiSquareTest,
    /// Randomised probability-integral transform of each holding time under
    /// its geometric law, in ten equal bins.
    pub holding: ChiSquareTest,
    pub sojourns: usize,
}

pub fn marginal_tests(sojourns: &[Sojourn], chain: &ChainC, seed: u64) -> MarginalTests {
    let mut rng = stream_rng(seed, 0x50_7045);
    let mut dir = [0u64; 2];
    let mut bins = [0u64; 10];
    for s in sojourns {
        dir[s.up as usize] += 1;
        let p = chain.birth(s.state) + chain.death(s.state);
        let log_stay = (-p).ln_1p();
        let cdf = |h: u64| -(h as f64 * log_stay).exp_m1();
        let (lo, hi) = (cdf(s.steps - 1), cdf(s.steps));
        let u = lo + rng.random::<f64>() * (hi - lo);
        bins[((u * 10.0) as usize).min(9)] += 1;
    }
    let p_up = 1.0 / (1.0 + chain.gamma);
    MarginalTests {
        direction: chi_square_gof(&[dir[0], dir[1]], &[1.0 - p_up, p_up]),
        holding: chi_square_gof(&bins, &[0.1; 10]),
        sojourns: sojourns.len(),
    }
}
