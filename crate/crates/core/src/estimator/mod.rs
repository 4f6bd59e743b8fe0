//! Monte Carlo estimation of fixation probabilities.
//!
//! Trial `i` draws everything, including its initial mutant, from stream
//! `i` of the base seed, and tallies are merged by trial index, so the
//! result does not depend on the number of workers.

mod sweep;

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run_with_rng, trial_rng, EngineError, MoranConfig, OutcomeKind, SamplerMode, StepCap};
use crate::graph::GraphError;
use crate::stats::wilson_interval;
use crate::{Graph, VertexSet};

pub use sweep::{parse_sweep_spec, rows_to_csv, run_sweep, SweepCell, SweepError, SweepRow, SweepSpec, CSV_HEADER};

pub const DEFAULT_LEVEL: f64 = 0.99;
pub const DEFAULT_EARLY_STOP_C: f64 = 2.0;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("need at least one trial")]
    ZeroTrials,
    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),
    #[error("could not start a pool of {workers} workers: {message}")]
    Pool { workers: usize, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateConfig {
    pub trials: u64,
    pub fitness: f64,
    pub early_stop_c: Option<f64>,
    pub step_cap: StepCap,
    pub seed: u64,
    /// Zero means one worker per available core.
    pub workers: usize,
    pub level: f64,
    pub sampler: SamplerMode,
}

impl EstimateConfig {
    pub fn new(fitness: f64, trials: u64) -> Self {
        Self {
            trials,
            fitness,
            early_stop_c: None,
            step_cap: StepCap::Default,
            seed: 0,
            workers: 0,
            level: DEFAULT_LEVEL,
            sampler: SamplerMode::Auto,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_early_stop(mut self, c: f64) -> Self {
        self.early_stop_c = Some(c);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_step_cap(mut self, cap: StepCap) -> Self {
        self.step_cap = cap;
        self
    }

    fn moran(&self) -> MoranConfig {
        MoranConfig {
            fitness: self.fitness,
            seed: self.seed,
            step_cap: self.step_cap,
            early_stop_c: self.early_stop_c,
            sampler: self.sampler,
        }
    }

    fn validate(&self) -> Result<(), EstimateError> {
        if self.trials == 0 {
            return Err(EstimateError::ZeroTrials);
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(EstimateError::BadLevel(self.level));
        }
        self.moran().validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixationEstimate {
    /// `(fixations + early_stops) / (trials - capped)`.
    pub p_hat: f64,
    pub level: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub fixations: u64,
    pub extinctions: u64,
    pub early_stops: u64,
    pub capped: u64,
    pub jump_steps: u64,
    pub real_steps: u64,
    /// Upper bound `n^{-c}` on the per-trial bias from counting early stops
    /// as fixations, when early stopping is on.
    pub early_stop_bias: Option<f64>,
    pub wall_time: Duration,
}

impl FixationEstimate {
    /// Some trials hit the step cap and were left out of `p_hat`.
    pub fn has_capped_trials(&self) -> bool {
        self.capped > 0
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    fixations: u64,
    extinctions: u64,
    early_stops: u64,
    capped: u64,
    jump_steps: u64,
    real_steps: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.fixations += o.fixations;
        self.extinctions += o.extinctions;
        self.early_stops += o.early_stops;
        self.capped += o.capped;
        self.jump_steps += o.jump_steps;
        self.real_steps += o.real_steps;
        self
    }
}

/// Estimates the fixation probability from a single uniformly placed
/// mutant.
pub fn estimate_fixation(g: &Graph, cfg: &EstimateConfig) -> Result<FixationEstimate, EstimateError> {
    run_trials(g, cfg, None)
}

/// Estimates the fixation probability from the fixed initial set `s`.
pub fn estimate_fixation_from(g: &Graph, s: &VertexSet, cfg: &EstimateConfig) -> Result<FixationEstimate, EstimateError> {
    if s.universe() != g.vertex_count() {
        return Err(EngineError::UniverseMismatch { found: s.universe(), expected: g.vertex_count() }.into());
    }
    run_trials(g, cfg, Some(s))
}

fn run_trials(g: &Graph, cfg: &EstimateConfig, initial: Option<&VertexSet>) -> Result<FixationEstimate, EstimateError> {
    cfg.validate()?;
    g.require_connected()?;
    let start = Instant::now();
    let n = g.vertex_count();
    let moran = cfg.moran();
    let trial = |i: u64| -> Result<Tally, EngineError> {
        let mut t = Tally::default();
        if initial.is_some_and(|s| s.is_empty()) {
            t.extinctions = 1;
            return Ok(t);
        }
        let mut rng = trial_rng(cfg.seed, i);
        let single;
        let s = match initial {
            Some(s) => s,
            None => {
                single = VertexSet::from_vertices(n, [rng.random_range(0..n)]);
                &single
            }
        };
        let out = run_with_rng(g, s, &moran, &mut rng)?;
        match out.kind {
            OutcomeKind::Fixation => t.fixations = 1,
            OutcomeKind::Extinction => t.extinctions = 1,
            OutcomeKind::EarlyStopFixation => t.early_stops = 1,
            OutcomeKind::StepCapExceeded => t.capped = 1,
        }
        t.jump_steps = out.jump_steps;
        t.real_steps = out.real_steps;
        Ok(t)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| EstimateError::Pool { workers: cfg.workers, message: e.to_string() })?;
    let tallies: Vec<Tally> = pool.install(|| (0..cfg.trials).into_par_iter().map(trial).collect::<Result<_, _>>())?;
    let tally = tallies.into_iter().fold(Tally::default(), Tally::merge);
    Ok(summarize(tally, cfg, n, initial.is_some_and(|s| s.is_empty()), start.elapsed()))
}

fn summarize(t: Tally, cfg: &EstimateConfig, n: usize, certain_extinction: bool, wall_time: Duration) -> FixationEstimate {
    let decided = cfg.trials - t.capped;
    let successes = t.fixations + t.early_stops;
    let p_hat = if decided == 0 { 0.0 } else { successes as f64 / decided as f64 };
    let (lo, hi) = if certain_extinction { (0.0, 0.0) } else { wilson_interval(successes, decided, cfg.level) };
    FixationEstimate {
        p_hat,
        level: cfg.level,
        ci_lo: lo.min(p_hat),
        ci_hi: hi.max(p_hat),
        trials: cfg.trials,
        fixations: t.fixations,
        extinctions: t.extinctions,
        early_stops: t.early_stops,
        capped: t.capped,
        jump_steps: t.jump_steps,
        real_steps: t.real_steps,
        early_stop_bias: cfg.early_stop_c.map(|c| (n as f64).powf(-c)),
        wall_time,
    }
}
