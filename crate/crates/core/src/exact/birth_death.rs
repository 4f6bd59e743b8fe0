use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("chain needs at least one transient state (kappa >= 1), got kappa = {0}")]
    TooShort(usize),
    #[error("birth/death arrays must have kappa + 1 = {expected} entries, got {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid probabilities at state {state}: b = {birth}, d = {death}")]
    Probabilities { state: usize, birth: f64, death: f64 },
    #[error("state {state} cannot reach an absorbing state")]
    Degenerate { state: usize },
}

/// Birth-death chain on `{0, ..., kappa}`. The top state is the target and
/// always absorbing; state 0 is absorbing when `zero_absorbing` is set and
/// reflecting (`d_0 = 0`) otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct BirthDeathChain {
    kappa: usize,
    birth: Vec<f64>,
    death: Vec<f64>,
    zero_absorbing: bool,
}

impl BirthDeathChain {
    pub fn new(birth: Vec<f64>, death: Vec<f64>, zero_absorbing: bool) -> Result<Self, ChainError> {
        let len = birth.len();
        if len < 2 {
            return Err(ChainError::TooShort(len.saturating_sub(1)));
        }
        if death.len() != len {
            return Err(ChainError::Length { expected: len, found: death.len() });
        }
        let kappa = len - 1;
        let mut birth = birth;
        let mut death = death;
        // Absorbing states carry no transitions.
        birth[kappa] = 0.0;
        death[0] = 0.0;
        if zero_absorbing {
            birth[0] = 0.0;
        }
        for k in 0..=kappa {
            let (b, d) = (birth[k], death[k]);
            if !(b >= 0.0 && d >= 0.0 && b + d <= 1.0 + 1e-12) {
                return Err(ChainError::Probabilities { state: k, birth: b, death: d });
            }
        }
        Ok(Self { kappa, birth, death, zero_absorbing })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn birth(&self, k: usize) -> f64 {
        self.birth[k]
    }

    pub fn death(&self, k: usize) -> f64 {
        self.death[k]
    }

    pub fn zero_absorbing(&self) -> bool {
        self.zero_absorbing
    }

    pub fn is_absorbing(&self, k: usize) -> bool {
        k == self.kappa || (k == 0 && self.zero_absorbing)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirthDeathSolution {
    /// Probability of reaching `kappa` before 0, per starting state.
    pub hit_upper: Vec<f64>,
    /// Expected number of steps to absorption, per starting state.
    pub expected_time: Vec<f64>,
}

/// Exact absorption probabilities and times by direct elimination.
///
/// Writes `x_k = (1 - s_k) x_{k+1} + g_k` upward from the bottom, where
/// `s_k = e_k / (b_k + e_k)` and `e_k = d_k s_{k-1}`. Every quantity is a
/// sum or product of nonnegative terms, so no cancellation occurs even when
/// the chain is strongly biased.
pub fn solve_birth_death(chain: &BirthDeathChain) -> Result<BirthDeathSolution, ChainError> {
    let hit_upper = eliminate(chain, 0.0, 1.0)?;
    let expected_time = eliminate(chain, 1.0, 0.0)?;
    Ok(BirthDeathSolution { hit_upper, expected_time })
}

/// Solves `(b_k + d_k) x_k - b_k x_{k+1} - d_k x_{k-1} = c` on transient
/// states with `x_kappa = top`, and `x_0 = 0` when 0 is absorbing.
fn eliminate(chain: &BirthDeathChain, c: f64, top: f64) -> Result<Vec<f64>, ChainError> {
    let kappa = chain.kappa;
    let mut s = vec![0.0; kappa];
    let mut g = vec![0.0; kappa];
    if chain.zero_absorbing {
        s[0] = 1.0;
    } else {
        // Reflecting: x_0 = x_1 + c / b_0.
        let b0 = chain.birth[0];
        if b0 == 0.0 {
            return Err(ChainError::Degenerate { state: 0 });
        }
        g[0] = c / b0;
    }
    for k in 1..kappa {
        let (b, d) = (chain.birth[k], chain.death[k]);
        let e = d * s[k - 1];
        let piv = b + e;
        if piv == 0.0 {
            // Cannot rise, and every downward path avoids absorption.
            return Err(ChainError::Degenerate { state: k });
        }
        s[k] = e / piv;
        g[k] = (c + d * g[k - 1]) / piv;
    }
    let mut x = vec![0.0; kappa + 1];
    x[kappa] = top;
    for k in (0..kappa).rev() {
        x[k] = (1.0 - s[k]) * x[k + 1] + g[k];
    }
    if chain.zero_absorbing {
        x[0] = 0.0;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn rational(v: f64) -> BigRational {
        BigRational::from_float(v).unwrap()
    }

    /// Independent oracle: Gaussian elimination over the rationals on the
    /// full (kappa+1)-state system.
    fn rational_solve(chain: &BirthDeathChain, c: f64, top: f64) -> Vec<f64> {
        let m = chain.kappa + 1;
        let mut a = vec![vec![BigRational::zero(); m + 1]; m];
        for k in 0..m {
            if chain.is_absorbing(k) {
                a[k][k] = BigRational::one();
                a[k][m] = if k == chain.kappa { rational(top) } else { BigRational::zero() };
                continue;
            }
            let (b, d) = (rational(chain.birth[k]), rational(chain.death[k]));
            a[k][k] = &b + &d;
            a[k][k + 1] = -b;
            if k > 0 {
                a[k][k - 1] = -d;
            }
            a[k][m] = rational(c);
        }
        for col in 0..m {
            let p = (col..m).find(|&r| !a[r][col].is_zero()).unwrap();
            a.swap(col, p);
            let piv = a[col][col].clone();
            for j in col..=m {
                a[col][j] = &a[col][j] / &piv;
            }
            for r in 0..m {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for j in col..=m {
                        let t = &f * &a[col][j];
                        a[r][j] = &a[r][j] - t;
                    }
                }
            }
        }
        a.iter().map(|row| row[m].to_f64().unwrap()).collect()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE) || (a - b).abs() < 1e-300
    }

    #[test]
    fn matches_rational_arithmetic() {
        // Dyadic probabilities so inputs are exact in both representations.
        for (kappa, num) in [(3usize, 1.0), (8, 3.0), (15, 5.0)] {
            let birth: Vec<f64> = (0..=kappa).map(|k| k as f64 / 64.0).collect();
            let death: Vec<f64> = (0..=kappa).map(|k| num * k as f64 / 512.0).collect();
            for zero_abs in [true, false] {
                let chain = BirthDeathChain::new(birth.clone(), death.clone(), zero_abs);
                let Ok(chain) = chain else { continue };
                let sol = match solve_birth_death(&chain) {
                    Ok(s) => s,
                    Err(ChainError::Degenerate { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                let h = rational_solve(&chain, 0.0, 1.0);
                let t = rational_solve(&chain, 1.0, 0.0);
                for k in 0..=kappa {
                    assert!(rel_close(sol.hit_upper[k], h[k], 1e-12), "{k}: {} {}", sol.hit_upper[k], h[k]);
                    assert!(rel_close(sol.expected_time[k], t[k], 1e-12), "{k}: {} {}", sol.expected_time[k], t[k]);
                }
            }
        }
    }

    #[test]
    fn reflecting_bottom_matches_rational() {
        let birth = vec![0.5, 0.25, 0.25, 0.125, 0.0];
        let death = vec![0.0, 0.5, 0.25, 0.5, 0.25];
        let chain = BirthDeathChain::new(birth, death, false).unwrap();
        let sol = solve_birth_death(&chain).unwrap();
        let t = rational_solve(&chain, 1.0, 0.0);
        for k in 0..5 {
            assert!(rel_close(sol.expected_time[k], t[k], 1e-12));
            assert_eq!(sol.hit_upper[k], 1.0);
        }
    }

    #[test]
    fn unbiased_walk_is_symmetric() {
        let chain = BirthDeathChain::new(vec![0.5; 11], vec![0.5; 11], true).unwrap();
        let sol = solve_birth_death(&chain).unwrap();
        assert!((sol.hit_upper[5] - 0.5).abs() < 1e-15);
        // Expected duration k (kappa - k) for the simple walk.
        assert!((sol.expected_time[5] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn biased_walk_matches_ruin_formula() {
        let (p, kappa) = (0.6f64, 20usize);
        let chain = BirthDeathChain::new(vec![p; kappa + 1], vec![1.0 - p; kappa + 1], true).unwrap();
        let sol = solve_birth_death(&chain).unwrap();
        let q = (1.0 - p) / p;
        for k0 in 0..=kappa {
            let want = (1.0 - q.powi(k0 as i32)) / (1.0 - q.powi(kappa as i32));
            assert!((sol.hit_upper[k0] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn no_births_means_no_hit() {
        let chain = BirthDeathChain::new(vec![0.0; 6], vec![0.3; 6], true).unwrap();
        let sol = solve_birth_death(&chain).unwrap();
        assert!(sol.hit_upper[..5].iter().all(|&h| h == 0.0));
    }

    #[test]
    fn degenerate_and_invalid_chains() {
        let chain = BirthDeathChain::new(vec![0.0, 0.5, 0.0, 0.5, 0.0], vec![0.0, 0.5, 0.0, 0.5, 0.0], true).unwrap();
        assert_eq!(solve_birth_death(&chain), Err(ChainError::Degenerate { state: 2 }));
        assert!(matches!(
            BirthDeathChain::new(vec![0.7; 3], vec![0.7; 3], true),
            Err(ChainError::Probabilities { state: 1, .. })
        ));
        assert!(matches!(BirthDeathChain::new(vec![0.5], vec![0.5], true), Err(ChainError::TooShort(0))));
    }
}
