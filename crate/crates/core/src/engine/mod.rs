//! Exact-distribution simulation of the Moran birth-death process.
//!
//! One full step: pick a reproducer with probability proportional to
//! fitness (`r` for mutants, 1 otherwise), pick one of its neighbours
//! uniformly, and overwrite that neighbour with the reproducer's type.
//! Most full steps leave the mutant set unchanged, so runs default to the
//! jump chain, which only visits state-changing steps. Fixation
//! probabilities are identical under both; the number of full steps is
//! recovered by geometric sampling when the weighted sampler is active.

mod boundary;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::graph::{hvol, Graph, GraphError, VertexSet};
use crate::rng::{stream_rng, SimRng};

use boundary::Boundary;

const HVOL_RESYNC_INTERVAL: u64 = 1 << 20;
const SWITCH_WINDOW: u32 = 4096;
/// Switch to the weighted sampler when fewer than 1% of attempts change
/// the state over a window.
const SWITCH_TO_WEIGHTED_BELOW: f64 = 0.01;
/// Drop back to rejection once a full step changes the state at least
/// this often.
const SWITCH_TO_REJECTION_ABOVE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("state is absorbing (fixation or extinction)")]
    Absorbing,
    #[error("fitness must be positive and finite, got {0}")]
    InvalidFitness(f64),
    #[error("early stopping needs fitness > 1 (log base r of n), got {0}")]
    EarlyStopFitness(f64),
    #[error("early stopping constant must be positive, got {0}")]
    EarlyStopConstant(f64),
    #[error("initial set covers {found} vertices, graph has {expected}")]
    UniverseMismatch { found: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepCap {
    /// `ceil(4 r n^4 / max(r - 1, 1/n))` full steps.
    Default,
    Unlimited,
    Steps(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerMode {
    /// Rejection sampling, switching to the weighted boundary sampler when
    /// the rejection rate is very high.
    Auto,
    Rejection,
    Weighted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoranConfig {
    pub fitness: f64,
    pub seed: u64,
    pub step_cap: StepCap,
    pub early_stop_c: Option<f64>,
    pub sampler: SamplerMode,
}

impl MoranConfig {
    pub fn new(fitness: f64) -> Self {
        Self { fitness, seed: 0, step_cap: StepCap::Default, early_stop_c: None, sampler: SamplerMode::Auto }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_early_stop(mut self, c: f64) -> Self {
        self.early_stop_c = Some(c);
        self
    }

    pub fn with_step_cap(mut self, cap: StepCap) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn with_sampler(mut self, sampler: SamplerMode) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.fitness > 0.0 && self.fitness.is_finite()) {
            return Err(EngineError::InvalidFitness(self.fitness));
        }
        if let Some(c) = self.early_stop_c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(EngineError::EarlyStopConstant(c));
            }
            if self.fitness <= 1.0 {
                return Err(EngineError::EarlyStopFitness(self.fitness));
            }
        }
        Ok(())
    }

    /// Cap on full steps for a graph on `n` vertices, if any.
    pub fn step_limit(&self, n: usize) -> Option<u64> {
        match self.step_cap {
            StepCap::Default => Some(default_step_cap(n, self.fitness)),
            StepCap::Unlimited => None,
            StepCap::Steps(s) => Some(s),
        }
    }
}

/// `ceil(4 r n^4 / max(r - 1, 1/n))`, saturating at `u64::MAX`.
pub fn default_step_cap(n: usize, r: f64) -> u64 {
    let n = n as f64;
    let cap = (4.0 * r * n.powi(4) / (r - 1.0).max(1.0 / n)).ceil();
    if cap >= u64::MAX as f64 {
        u64::MAX
    } else {
        cap as u64
    }
}

/// Harmonic-volume threshold `c * ln n / (delta * ln r)` above which a run
/// is declared fixed.
pub fn early_stop_hvol_threshold(n: usize, min_degree: usize, r: f64, c: f64) -> f64 {
    c * (n as f64).ln() / r.ln() / min_degree as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Fixation,
    Extinction,
    EarlyStopFixation,
    StepCapExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub real_steps: u64,
    pub jump_steps: u64,
}

/// Mutant and non-mutant sets, kept jointly, with cached harmonic volume.
#[derive(Clone, Debug)]
pub struct ProcessState {
    mutants: VertexSet,
    non_mutants: VertexSet,
    mutant_hvol: f64,
    hvol_updates: u64,
    real_steps: u64,
    jump_steps: u64,
}

impl ProcessState {
    pub fn new(g: &Graph, initial: &VertexSet) -> Result<Self, EngineError> {
        let n = g.vertex_count();
        if initial.universe() != n {
            return Err(EngineError::UniverseMismatch { found: initial.universe(), expected: n });
        }
        let mutants = initial.clone();
        let non_mutants = initial.complement();
        let mutant_hvol = hvol(g, &mutants)?;
        Ok(Self { mutants, non_mutants, mutant_hvol, hvol_updates: 0, real_steps: 0, jump_steps: 0 })
    }

    pub fn mutants(&self) -> &VertexSet {
        &self.mutants
    }

    pub fn non_mutants(&self) -> &VertexSet {
        &self.non_mutants
    }

    #[inline]
    pub fn is_mutant(&self, v: usize) -> bool {
        self.mutants.contains(v)
    }

    pub fn mutant_count(&self) -> usize {
        self.mutants.len()
    }

    pub fn mutant_hvol(&self) -> f64 {
        self.mutant_hvol
    }

    pub fn real_steps(&self) -> u64 {
        self.real_steps
    }

    pub fn jump_steps(&self) -> u64 {
        self.jump_steps
    }

    pub fn is_fixation(&self) -> bool {
        self.non_mutants.is_empty()
    }

    pub fn is_extinction(&self) -> bool {
        self.mutants.is_empty()
    }

    pub fn is_absorbing(&self) -> bool {
        self.is_fixation() || self.is_extinction()
    }

    fn set_type(&mut self, g: &Graph, v: usize, mutant: bool) {
        let inv_deg = 1.0 / g.degree(v) as f64;
        if mutant {
            self.non_mutants.remove(v);
            self.mutants.insert(v);
            self.mutant_hvol += inv_deg;
        } else {
            self.mutants.remove(v);
            self.non_mutants.insert(v);
            self.mutant_hvol -= inv_deg;
        }
        self.hvol_updates += 1;
        if self.hvol_updates % HVOL_RESYNC_INTERVAL == 0 {
            self.mutant_hvol = hvol(g, &self.mutants).expect("degrees checked at construction");
        }
    }
}

/// One state change of the process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flip {
    pub reproducer: usize,
    pub vertex: usize,
    pub became_mutant: bool,
    /// Full steps consumed, including the changing one.
    pub real_steps: u64,
}

/// A running Moran process on a borrowed graph.
pub struct MoranProcess<'g> {
    graph: &'g Graph,
    fitness: f64,
    state: ProcessState,
    mode: SamplerMode,
    boundary: Option<Boundary>,
    window_attempts: u32,
    window_changes: u32,
}

impl<'g> MoranProcess<'g> {
    pub fn new(
        graph: &'g Graph,
        initial: &VertexSet,
        fitness: f64,
        mode: SamplerMode,
    ) -> Result<Self, EngineError> {
        if !(fitness > 0.0 && fitness.is_finite()) {
            return Err(EngineError::InvalidFitness(fitness));
        }
        let state = ProcessState::new(graph, initial)?;
        let mut p = Self { graph, fitness, state, mode, boundary: None, window_attempts: 0, window_changes: 0 };
        if mode == SamplerMode::Weighted {
            p.boundary = Some(Boundary::build(graph, &p.state.mutants, fitness));
        }
        Ok(p)
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    pub fn state(&self) -> &ProcessState {
        &self.state
    }

    pub fn uses_weighted_sampler(&self) -> bool {
        self.boundary.is_some()
    }

    /// `r |S| + (n - |S|)`.
    pub fn total_fitness(&self) -> f64 {
        let k = self.state.mutants.len() as f64;
        self.fitness * k + (self.graph.vertex_count() as f64 - k)
    }

    /// Probability that the next full step changes the mutant set.
    pub fn change_probability(&self) -> f64 {
        let weight = match &self.boundary {
            Some(b) => b.total_weight(),
            None => self.boundary_weight_scan(),
        };
        (weight / self.total_fitness()).min(1.0)
    }

    fn boundary_weight_scan(&self) -> f64 {
        let g = self.graph;
        (0..g.vertex_count())
            .map(|u| {
                let m = self.state.is_mutant(u);
                let opp = g.neighbors(u).iter().filter(|&&v| self.state.is_mutant(v as usize) != m).count();
                let fit = if m { self.fitness } else { 1.0 };
                fit * opp as f64 / g.degree(u) as f64
            })
            .sum()
    }

    fn apply(&mut self, v: usize, mutant: bool) {
        self.state.set_type(self.graph, v, mutant);
        if let Some(b) = self.boundary.as_mut() {
            b.on_flip(self.graph, &self.state.mutants, self.fitness, v);
        }
    }

    /// One full Moran step; returns whether the mutant set changed.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool, EngineError> {
        if self.state.is_absorbing() {
            return Err(EngineError::Absorbing);
        }
        let changed = self.raw_step(rng).is_some();
        self.state.real_steps += 1;
        if changed {
            self.state.jump_steps += 1;
        }
        Ok(changed)
    }

    #[inline]
    fn raw_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(usize, usize, bool)> {
        let k = self.state.mutants.len() as f64;
        let mutant_mass = self.fitness * k;
        let z = mutant_mass + (self.graph.vertex_count() as f64 - k);
        let from_mutant = rng.random::<f64>() * z < mutant_mass;
        let u = if from_mutant {
            self.state.mutants.sample(rng)
        } else {
            self.state.non_mutants.sample(rng)
        }
        .expect("non-absorbing state has both types");
        let nbrs = self.graph.neighbors(u);
        let v = nbrs[rng.random_range(0..nbrs.len())] as usize;
        if self.state.is_mutant(v) == from_mutant {
            return None;
        }
        self.apply(v, from_mutant);
        Some((u, v, from_mutant))
    }

    /// Advances to the next state change, drawn from the exact conditional
    /// law of the full process given that a change occurs.
    pub fn step_jump<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Flip, EngineError> {
        if self.state.is_absorbing() {
            return Err(EngineError::Absorbing);
        }
        let flip = if self.boundary.is_some() {
            let p = self.change_probability();
            let flip = self.weighted_jump(rng);
            if self.mode == SamplerMode::Auto && p > SWITCH_TO_REJECTION_ABOVE {
                self.boundary = None;
            }
            flip
        } else {
            self.rejection_jump(rng)
        };
        self.state.real_steps += flip.real_steps;
        self.state.jump_steps += 1;
        Ok(flip)
    }

    fn rejection_jump<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Flip {
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            let result = self.raw_step(rng);
            if self.mode == SamplerMode::Auto {
                self.window_attempts += 1;
                self.window_changes += result.is_some() as u32;
                if self.window_attempts == SWITCH_WINDOW {
                    let rate = self.window_changes as f64 / SWITCH_WINDOW as f64;
                    self.window_attempts = 0;
                    self.window_changes = 0;
                    if rate < SWITCH_TO_WEIGHTED_BELOW && result.is_none() {
                        self.boundary = Some(Boundary::build(self.graph, &self.state.mutants, self.fitness));
                        let mut flip = self.weighted_jump(rng);
                        flip.real_steps += attempts;
                        return flip;
                    }
                }
            }
            if let Some((u, v, mutant)) = result {
                return Flip { reproducer: u, vertex: v, became_mutant: mutant, real_steps: attempts };
            }
        }
    }

    fn weighted_jump<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Flip {
        let p = self.change_probability();
        let real_steps = if p >= 1.0 {
            1
        } else {
            1 + Geometric::new(p).expect("0 < p < 1").sample(rng)
        };
        let boundary = self.boundary.as_ref().expect("weighted mode");
        let (u, v) = boundary.sample(self.graph, &self.state.mutants, rng);
        let mutant = self.state.is_mutant(u);
        self.apply(v, mutant);
        Flip { reproducer: u, vertex: v, became_mutant: mutant, real_steps }
    }

    /// Full-step count, jump count and harmonic volume bookkeeping as an
    /// `Outcome` of the given kind.
    fn outcome(&self, kind: OutcomeKind) -> Outcome {
        Outcome { kind, real_steps: self.state.real_steps, jump_steps: self.state.jump_steps }
    }
}

/// Runs from `initial` until absorption, early stop or the step cap, using
/// stream 0 of `cfg.seed`.
pub fn run_to_absorption(g: &Graph, initial: &VertexSet, cfg: &MoranConfig) -> Result<Outcome, EngineError> {
    let mut rng = stream_rng(cfg.seed, 0);
    run_with_rng(g, initial, cfg, &mut rng)
}

/// As [`run_to_absorption`] with a caller-supplied generator.
pub fn run_with_rng<R: Rng + ?Sized>(
    g: &Graph,
    initial: &VertexSet,
    cfg: &MoranConfig,
    rng: &mut R,
) -> Result<Outcome, EngineError> {
    cfg.validate()?;
    g.require_connected()?;
    let n = g.vertex_count();
    let threshold = cfg
        .early_stop_c
        .map(|c| early_stop_hvol_threshold(n, g.min_degree(), cfg.fitness, c));
    let limit = cfg.step_limit(n);
    let mut process = MoranProcess::new(g, initial, cfg.fitness, cfg.sampler)?;
    loop {
        let s = process.state();
        if s.is_fixation() {
            return Ok(process.outcome(OutcomeKind::Fixation));
        }
        if s.is_extinction() {
            return Ok(process.outcome(OutcomeKind::Extinction));
        }
        if threshold.is_some_and(|t| s.mutant_hvol() >= t) {
            return Ok(process.outcome(OutcomeKind::EarlyStopFixation));
        }
        if limit.is_some_and(|l| s.real_steps() >= l) {
            return Ok(process.outcome(OutcomeKind::StepCapExceeded));
        }
        process.step_jump(rng)?;
    }
}

/// Generator used for trial `index` of an experiment seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> SimRng {
    stream_rng(seed, index)
}

#[cfg(test)]
mod tests;
