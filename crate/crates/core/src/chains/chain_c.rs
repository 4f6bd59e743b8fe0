use rand::Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::exact::{solve_birth_death, BirthDeathChain, ChainError};

#[derive(Debug, Error, PartialEq)]
pub enum ChainCError {
    #[error("gamma = (1 + 4/alpha) / r = {gamma} must be below 1")]
    GammaNotBelowOne { gamma: f64 },
    #[error("need N >= 1 and alpha > 0, got N = {n}, alpha = {alpha}")]
    BadParameters { n: usize, alpha: f64 },
    #[error("start state {k0} must lie in 1..={kappa}")]
    BadStart { k0: usize, kappa: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// The comparison chain on `{0, ..., kappa}` with `b_k = k / (8N)` and
/// `d_k = gamma * b_k`, `gamma = (1 + 4/alpha) / r`, absorbing at 0 and
/// stopped at `kappa`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainC {
    pub vertices: usize,
    pub kappa: usize,
    pub alpha: f64,
    pub r: f64,
    pub gamma: f64,
    /// `1 / (8N)`.
    pub b: f64,
    chain: BirthDeathChain,
}

impl ChainC {
    pub fn chain(&self) -> &BirthDeathChain {
        &self.chain
    }

    pub fn birth(&self, k: usize) -> f64 {
        self.chain.birth(k)
    }

    pub fn death(&self, k: usize) -> f64 {
        self.chain.death(k)
    }
}

pub fn chain_c_gamma(alpha: f64, r: f64) -> f64 {
    (1.0 + 4.0 / alpha) / r
}

pub fn make_chain_c(vertices: usize, kappa: usize, alpha: f64, r: f64) -> Result<ChainC, ChainCError> {
    if vertices == 0 || !(alpha > 0.0) {
        return Err(ChainCError::BadParameters { n: vertices, alpha });
    }
    let gamma = chain_c_gamma(alpha, r);
    if !(gamma < 1.0) {
        return Err(ChainCError::GammaNotBelowOne { gamma });
    }
    let b = 1.0 / (8.0 * vertices as f64);
    let birth: Vec<f64> = (0..=kappa).map(|k| if k < kappa { k as f64 * b } else { 0.0 }).collect();
    let death: Vec<f64> = (0..=kappa).map(|k| gamma * k as f64 * b).collect();
    let chain = BirthDeathChain::new(birth, death, true)?;
    Ok(ChainC { vertices, kappa, alpha, r, gamma, b, chain })
}

/// `(1 - gamma^k0) / (1 - gamma^kappa)`.
pub fn hit_prob_closed_form(gamma: f64, k0: usize, kappa: usize) -> f64 {
    assert!(gamma > 0.0 && gamma < 1.0, "need 0 < gamma < 1");
    assert!(k0 >= 1 && k0 <= kappa, "need 1 <= k0 <= kappa");
    let lg = gamma.ln();
    (k0 as f64 * lg).exp_m1() / (kappa as f64 * lg).exp_m1()
}

/// `1/(b(1+gamma)) * sum_{1<=i<=k} (1/i) (gamma/(1+gamma))^{k-i}`.
pub fn tau_closed_form(k: usize, b: f64, gamma: f64) -> f64 {
    let q = gamma / (1.0 + gamma);
    // Horner form of the sum.
    let s = (1..=k).fold(0.0, |acc, i| acc * q + 1.0 / i as f64);
    s / (b * (1.0 + gamma))
}

/// `sum_{k0 <= j < kappa} tau_j`, the expected time to reach `{0, kappa}`
/// according to the closed form.
pub fn t_total(k0: usize, kappa: usize, b: f64, gamma: f64) -> f64 {
    let q = gamma / (1.0 + gamma);
    let mut s = 0.0;
    let mut total = 0.0;
    for j in 1..kappa {
        s = s * q + 1.0 / j as f64;
        if j >= k0 {
            total += s;
        }
    }
    total / (b * (1.0 + gamma))
}

/// Exact expected time from `k` to `{0, k+1}`, by solving the chain cut
/// off at `k + 1`.
pub fn tau_exact(c: &ChainC, k: usize) -> Result<f64, ChainCError> {
    if k == 0 {
        return Ok(0.0);
    }
    if k >= c.kappa {
        return Err(ChainCError::BadStart { k0: k, kappa: c.kappa - 1 });
    }
    let cut = make_chain_c(c.vertices, k + 1, c.alpha, c.r)?;
    Ok(solve_birth_death(cut.chain())?.expected_time[k])
}

/// Exact expected time from `k0` to `{0, kappa}`.
pub fn t_exact(c: &ChainC, k0: usize) -> Result<f64, ChainCError> {
    if k0 > c.kappa {
        return Err(ChainCError::BadStart { k0, kappa: c.kappa });
    }
    Ok(solve_birth_death(c.chain())?.expected_time[k0])
}

/// Step budget `ceil(32 N r log2(alpha n) / (r - 1 - 4/alpha))` of the
/// hitting claim, with `n` the amplifier's base parameter.
pub fn hitting_claim_steps(vertices: usize, alpha: f64, n: usize, r: f64) -> u64 {
    let margin = r - 1.0 - 4.0 / alpha;
    (32.0 * vertices as f64 * r * (alpha * n as f64).log2() / margin).ceil() as u64
}

/// Success probability `(r - 1 - 4/alpha) / (2r)` of the hitting claim.
pub fn hitting_claim_probability(alpha: f64, r: f64) -> f64 {
    (r - 1.0 - 4.0 / alpha) / (2.0 * r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainEnd {
    Upper,
    Lower,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainRun {
    pub end: ChainEnd,
    pub steps: u64,
}

/// Number of steps until the next move from a state with move probability
/// `p`, including the move itself.
pub(crate) fn holding_steps<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        1
    } else {
        1 + Geometric::new(p).expect("0 < p < 1").sample(rng)
    }
}

/// Runs a birth-death chain from `k0` for at most `max_steps` steps,
/// sampling holding times instead of stepping through lazy steps.
pub fn simulate_chain<R: Rng + ?Sized>(chain: &BirthDeathChain, k0: usize, max_steps: u64, rng: &mut R) -> ChainRun {
    let mut k = k0;
    let mut steps = 0u64;
    loop {
        if k == chain.kappa() {
            return ChainRun { end: ChainEnd::Upper, steps };
        }
        if k == 0 && chain.zero_absorbing() {
            return ChainRun { end: ChainEnd::Lower, steps };
        }
        let (b, d) = (chain.birth(k), chain.death(k));
        let hold = holding_steps(b + d, rng);
        if steps + hold > max_steps {
            return ChainRun { end: ChainEnd::Timeout, steps: max_steps };
        }
        steps += hold;
        if rng.random::<f64>() * (b + d) < b {
            k += 1;
        } else {
            k -= 1;
        }
    }
}
