//! Exact fixation probabilities.
//!
//! * Closed form for regular graphs, where the mutant count is a biased
//!   random walk with ratio `r`.
//! * A solve over all `2^n` mutant sets for small graphs.
//! * A lumped chain for the star.
//! * Direct elimination for birth-death chains.

mod birth_death;

pub use birth_death::{solve_birth_death, BirthDeathChain, BirthDeathSolution, ChainError};

use thiserror::Error;

use crate::graph::{Graph, GraphError, VertexSet};
use crate::linalg::BandedMatrix;

pub const MAX_EXACT_VERTICES: usize = 20;
const MAX_SWEEPS: usize = 1_000_000;
/// Sweeps stop once no value moves by more than this. It sits well below
/// the advertised residual so the distance to the true fixed point, which
/// can exceed the last update by the inverse spectral gap, stays small.
const SWEEP_TOLERANCE: f64 = 1e-15;
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("fitness must be positive and finite, got {0}")]
    InvalidFitness(f64),
    #[error("star needs at least 3 vertices, got {0}")]
    StarTooSmall(usize),
    #[error("Gauss-Seidel did not converge in {sweeps} sweeps (last change {delta:e})")]
    NotConverged { sweeps: usize, delta: f64 },
    #[error("residual {residual:e} above tolerance after convergence")]
    Residual { residual: f64 },
    #[error("initial set covers {found} vertices, graph has {expected}")]
    UniverseMismatch { found: usize, expected: usize },
    #[error("lumped star system is singular")]
    Singular,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn check_fitness(r: f64) -> Result<(), ExactError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(ExactError::InvalidFitness(r))
    }
}

/// `(1 - r^{-i}) / (1 - r^{-n})`, or `i / n` when `r = 1`.
pub fn fixation_closed_form_regular(n: usize, i: usize, r: f64) -> f64 {
    assert!(i <= n && n > 0, "need 0 <= i <= n, n > 0");
    if i == 0 {
        return 0.0;
    }
    if i == n {
        return 1.0;
    }
    if (r - 1.0).abs() <= 1e-12 {
        return i as f64 / n as f64;
    }
    let lr = r.ln();
    let (i, n) = (i as f64, n as f64);
    if r > 1.0 {
        (-i * lr).exp_m1() / (-n * lr).exp_m1()
    } else {
        // Multiply through by r^n so every exponent is negative.
        ((n - i) * lr).exp() * (i * lr).exp_m1() / (n * lr).exp_m1()
    }
}

/// Absorption probabilities into fixation for every mutant set, indexed by
/// bitmask.
#[derive(Clone, Debug)]
pub struct AbsorbingChainSolution {
    n: usize,
    values: Vec<f64>,
    pub residual: f64,
    pub sweeps: usize,
}

impl AbsorbingChainSolution {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn value(&self, mask: u64) -> f64 {
        self.values[mask as usize]
    }

    pub fn value_of(&self, s: &VertexSet) -> Result<f64, ExactError> {
        if s.universe() != self.n {
            return Err(ExactError::UniverseMismatch { found: s.universe(), expected: self.n });
        }
        Ok(self.value(s.to_mask().expect("n <= 20")))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `rho` from a single mutant at each vertex.
    pub fn singletons(&self) -> Vec<f64> {
        (0..self.n).map(|v| self.values[1 << v]).collect()
    }
}

/// Jump-chain transitions out of `mask`: `(target, weight)` pairs.
///
/// A non-mutant `v` is taken over at rate `r * sum 1/deg(u)` over its mutant
/// neighbours `u`; a mutant `v` is lost at rate `sum 1/deg(u)` over its
/// non-mutant neighbours. Dividing by the total turns these into the
/// conditional law given a change, which has the same absorption
/// probabilities as the full process.
struct Transitions {
    nbr: Vec<u32>,
    inv_deg: Vec<f64>,
    r: f64,
}

impl Transitions {
    #[inline]
    fn update(&self, h: &[f64], mask: u32) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for v in 0..self.nbr.len() {
            let bit = 1u32 << v;
            let mut nb = self.nbr[v];
            if mask & bit == 0 {
                nb &= mask;
                if nb == 0 {
                    continue;
                }
                let mut w = 0.0;
                while nb != 0 {
                    w += self.inv_deg[nb.trailing_zeros() as usize];
                    nb &= nb - 1;
                }
                w *= self.r;
                num += w * h[(mask | bit) as usize];
                den += w;
            } else {
                nb &= !mask;
                if nb == 0 {
                    continue;
                }
                let mut w = 0.0;
                while nb != 0 {
                    w += self.inv_deg[nb.trailing_zeros() as usize];
                    nb &= nb - 1;
                }
                num += w * h[(mask & !bit) as usize];
                den += w;
            }
        }
        num / den
    }
}

/// Upper limit on stored transitions; larger systems recompute weights on
/// every visit instead.
const MAX_STORED_TRANSITIONS: usize = 1 << 23;

/// Normalised jump-chain transitions of every transient state in CSR form.
struct StoredKernel {
    offsets: Vec<u32>,
    targets: Vec<u32>,
    probs: Vec<f64>,
}

impl StoredKernel {
    fn build(t: &Transitions, full: u32) -> Option<Self> {
        let n = t.nbr.len();
        let boundary = |mask: u32| {
            (0..n)
                .filter(|&v| {
                    let nb = t.nbr[v];
                    if mask >> v & 1 == 1 { nb & !mask != 0 } else { nb & mask != 0 }
                })
                .count()
        };
        let total: usize = (1..full).map(boundary).sum();
        if total > MAX_STORED_TRANSITIONS {
            return None;
        }
        let mut offsets = Vec::with_capacity(full as usize + 1);
        let mut targets = Vec::with_capacity(total);
        let mut probs = Vec::with_capacity(total);
        offsets.push(0);
        offsets.push(0);
        for mask in 1..full {
            let start = probs.len();
            let mut den = 0.0;
            for v in 0..n {
                let bit = 1u32 << v;
                let mutant = mask & bit != 0;
                let mut nb = if mutant { t.nbr[v] & !mask } else { t.nbr[v] & mask };
                if nb == 0 {
                    continue;
                }
                let mut w = 0.0;
                while nb != 0 {
                    w += t.inv_deg[nb.trailing_zeros() as usize];
                    nb &= nb - 1;
                }
                if !mutant {
                    w *= t.r;
                }
                targets.push(mask ^ bit);
                probs.push(w);
                den += w;
            }
            probs[start..].iter_mut().for_each(|p| *p /= den);
            offsets.push(probs.len() as u32);
        }
        Some(Self { offsets, targets, probs })
    }

    #[inline]
    fn update(&self, h: &[f64], mask: u32) -> f64 {
        let (a, b) = (self.offsets[mask as usize] as usize, self.offsets[mask as usize + 1] as usize);
        self.targets[a..b].iter().zip(&self.probs[a..b]).map(|(&t, &p)| p * h[t as usize]).sum()
    }
}

/// Solves for the fixation probability from every mutant set of `g`.
///
/// Gauss-Seidel sweeps over bitmask-indexed states, alternating ascending
/// and descending order. Ascending mask order visits every subset of a set
/// before the set itself, so each direction pulls fresh values from one
/// side of the inclusion order.
pub fn solve_absorbing(g: &Graph, r: f64) -> Result<AbsorbingChainSolution, ExactError> {
    check_fitness(r)?;
    let n = g.vertex_count();
    if n > MAX_EXACT_VERTICES {
        return Err(GraphError::TooLargeForExact { n, max: MAX_EXACT_VERTICES }.into());
    }
    g.require_connected()?;
    let t = Transitions {
        nbr: (0..n).map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | 1 << v)).collect(),
        inv_deg: g.degrees().map(|d| 1.0 / d as f64).collect(),
        r,
    };
    let full = (1u32 << n) - 1;
    let stored = StoredKernel::build(&t, full);
    let update = |h: &[f64], mask: u32| match &stored {
        Some(k) => k.update(h, mask),
        None => t.update(h, mask),
    };
    let mut h = vec![0.0; 1 << n];
    h[full as usize] = 1.0;
    // Warm start from the harmonic-volume fraction, which is the exact
    // answer at r = 1.
    let total: f64 = t.inv_deg.iter().sum();
    for mask in 1..full {
        let s: f64 = (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| t.inv_deg[v]).sum();
        h[mask as usize] = s / total;
    }
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut delta: f64 = 0.0;
        let mut relax = |mask: u32, h: &mut [f64]| {
            let new = update(h, mask);
            delta = delta.max((new - h[mask as usize]).abs());
            h[mask as usize] = new;
        };
        if sweeps % 2 == 1 {
            for mask in 1..full {
                relax(mask, &mut h);
            }
        } else {
            for mask in (1..full).rev() {
                relax(mask, &mut h);
            }
        }
        if delta <= SWEEP_TOLERANCE {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(ExactError::NotConverged { sweeps, delta });
        }
    }
    // Residual against the unnormalised on-the-fly weights, independent of
    // the stored kernel.
    let residual = (1..full)
        .map(|mask| (t.update(&h, mask) - h[mask as usize]).abs())
        .fold(0.0, f64::max);
    if residual >= RESIDUAL_TOLERANCE {
        return Err(ExactError::Residual { residual });
    }
    Ok(AbsorbingChainSolution { n, values: h, residual, sweeps })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixationProfile {
    pub per_vertex: Vec<f64>,
    pub mean: f64,
}

/// Fixation probability from one mutant at each vertex, and their mean.
pub fn fixation_exact(g: &Graph, r: f64) -> Result<FixationProfile, ExactError> {
    let per_vertex = solve_absorbing(g, r)?.singletons();
    let mean = per_vertex.iter().sum::<f64>() / per_vertex.len() as f64;
    Ok(FixationProfile { per_vertex, mean })
}

/// Fixation probability from the mutant set `s`.
pub fn fixation_exact_from(g: &Graph, s: &VertexSet, r: f64) -> Result<f64, ExactError> {
    solve_absorbing(g, r)?.value_of(s)
}

/// Fixation probability on the star `K_{1,n-1}` from a uniformly placed
/// mutant.
///
/// Leaves are interchangeable, so the state is `(c, j)`: whether the centre
/// is a mutant and how many leaves are. Up to the common factor
/// `1 / (total fitness)`:
///
/// * from `(1, j)`: to `(1, j+1)` at `r (n-1-j) / (n-1)`, to `(0, j)` at `n-1-j`;
/// * from `(0, j)`: to `(1, j)` at `r j`, to `(0, j-1)` at `j / (n-1)`.
///
/// The start is `(1, 0)` with probability `1/n` and `(0, 1)` otherwise.
pub fn fixation_star_lumped(n: usize, r: f64) -> Result<f64, ExactError> {
    check_fitness(r)?;
    if n < 3 {
        return Err(ExactError::StarTooSmall(n));
    }
    let leaves = (n - 1) as f64;
    let idx = |c: usize, j: usize| 2 * j + c;
    let size = 2 * n;
    let mut a = BandedMatrix::zeros(size, 2, 2);
    let mut rhs = vec![0.0; size];
    for j in 0..n {
        for c in 0..2 {
            let s = idx(c, j);
            a.add(s, s, 1.0);
            if (c, j) == (0, 0) {
                continue;
            }
            if (c, j) == (1, n - 1) {
                rhs[s] = 1.0;
                continue;
            }
            let jf = j as f64;
            let (to, w): ([(usize, f64); 2], f64) = if c == 1 {
                let up = r * (leaves - jf) / leaves;
                let down = leaves - jf;
                ([(idx(1, j + 1), up), (idx(0, j), down)], up + down)
            } else {
                let up = r * jf;
                let down = jf / leaves;
                ([(idx(1, j), up), (idx(0, j - 1), down)], up + down)
            };
            for (t, wt) in to {
                a.add(s, t, -wt / w);
            }
        }
    }
    let x = a.solve(rhs).ok_or(ExactError::Singular)?;
    Ok((x[idx(1, 0)] + leaves * x[idx(0, 1)]) / n as f64)
}
