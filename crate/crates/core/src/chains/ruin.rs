//! Gambler's ruin with a capped stake.
//!
//! With fortune `k` the player stakes `b(k)` coins against a profit of
//! `p(k)`, wins with probability `b / (b + r p)` and loses otherwise. The
//! game ends at 0 (ruin) or `m`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RuinError {
    #[error("need 1 <= sigma <= m, got m = {m}, sigma = {sigma}")]
    BadStake { m: usize, sigma: usize },
    #[error("fitness must exceed 1, got {0}")]
    BadFitness(f64),
    #[error("fortune {k} outside 0..={m}")]
    BadFortune { k: usize, m: usize },
    #[error("strategy has {found} entries, expected {expected}")]
    StrategyLength { found: usize, expected: usize },
    #[error("invalid move at fortune {k}: bet {bet}, profit {profit}")]
    InvalidMove { k: usize, bet: usize, profit: usize },
    #[error("{strategies} strategies exceed the enumeration budget of {budget}")]
    Budget { strategies: f64, budget: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuinGame {
    pub m: usize,
    pub sigma: usize,
    pub r: f64,
}

impl RuinGame {
    pub fn new(m: usize, sigma: usize, r: f64) -> Result<Self, RuinError> {
        if sigma < 1 || sigma > m {
            return Err(RuinError::BadStake { m, sigma });
        }
        if !(r > 1.0 && r.is_finite()) {
            return Err(RuinError::BadFitness(r));
        }
        Ok(Self { m, sigma, r })
    }

    /// Admissible `(bet, profit)` pairs at fortune `k`, in lexicographic order.
    pub fn moves(&self, k: usize) -> Vec<(usize, usize)> {
        let bets = 1..=self.sigma.min(k);
        bets.flat_map(|b| (1..=self.sigma.min(self.m - k)).map(move |p| (b, p))).collect()
    }
}

/// Deterministic Markovian strategy: one `(bet, profit)` per fortune
/// `1..m`, stored at index `k - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub moves: Vec<(usize, usize)>,
}

impl Strategy {
    pub fn uniform(game: &RuinGame, bet: usize, profit: usize) -> Self {
        Self { moves: vec![(bet, profit); game.m - 1] }
    }

    pub fn validate(&self, game: &RuinGame) -> Result<(), RuinError> {
        if self.moves.len() != game.m - 1 {
            return Err(RuinError::StrategyLength { found: self.moves.len(), expected: game.m - 1 });
        }
        for (i, &(bet, profit)) in self.moves.iter().enumerate() {
            let k = i + 1;
            let ok = (1..=game.sigma).contains(&bet)
                && (1..=game.sigma).contains(&profit)
                && bet <= k
                && profit <= game.m - k;
            if !ok {
                return Err(RuinError::InvalidMove { k, bet, profit });
            }
        }
        Ok(())
    }
}

/// Ruin probability from every fortune `0..=m` under `strategy`.
pub fn ruin_probabilities(game: &RuinGame, strategy: &Strategy) -> Result<Vec<f64>, RuinError> {
    strategy.validate(game)?;
    Ok(solve_unchecked(game, strategy))
}

fn solve_unchecked(game: &RuinGame, strategy: &Strategy) -> Vec<f64> {
    let m = game.m;
    let inner = m - 1;
    let mut out = vec![0.0; m + 1];
    out[0] = 1.0;
    if inner == 0 {
        return out;
    }
    // pi_k - win * pi_{k+p} - lose * pi_{k-b} = 0, with pi_0 = 1, pi_m = 0.
    let mut a = DMatrix::<f64>::zeros(inner, inner);
    let mut rhs = DVector::<f64>::zeros(inner);
    for (i, &(bet, profit)) in strategy.moves.iter().enumerate() {
        let k = i + 1;
        let (b, p) = (bet as f64, profit as f64);
        let win = b / (b + game.r * p);
        let lose = game.r * p / (b + game.r * p);
        a[(i, i)] += 1.0;
        if k + profit < m {
            a[(i, k + profit - 1)] -= win;
        }
        if k == bet {
            rhs[i] += lose;
        } else {
            a[(i, k - bet - 1)] -= lose;
        }
    }
    let x = a.lu().solve(&rhs).expect("absorbing game has a unique solution");
    out[1..m].copy_from_slice(x.as_slice());
    out
}

/// Ruin probability from fortune `k`.
pub fn ruin_probability(game: &RuinGame, strategy: &Strategy, k: usize) -> Result<f64, RuinError> {
    if k > game.m {
        return Err(RuinError::BadFortune { k, m: game.m });
    }
    Ok(ruin_probabilities(game, strategy)?[k])
}

/// Lower bound `(1 - r^{-(m-k)/sigma}) / (1 - r^{-m/sigma})` on the ruin
/// probability of any strategy.
pub fn ruin_lower_bound(game: &RuinGame, k: usize) -> f64 {
    assert!(k <= game.m, "fortune outside 0..=m");
    let lr = game.r.ln() / game.sigma as f64;
    (-((game.m - k) as f64) * lr).exp_m1() / (-(game.m as f64) * lr).exp_m1()
}

pub const BRUTEFORCE_BUDGET: u64 = 10_000_000;

/// Minimum ruin probability from `k` over all deterministic Markovian
/// strategies. Strategies are visited in lexicographic order of their move
/// lists and the first minimiser wins ties.
pub fn min_ruin_bruteforce(game: &RuinGame, k: usize) -> Result<(f64, Strategy), RuinError> {
    if k > game.m {
        return Err(RuinError::BadFortune { k, m: game.m });
    }
    let options: Vec<Vec<(usize, usize)>> = (1..game.m).map(|k| game.moves(k)).collect();
    let count: f64 = options.iter().map(|o| o.len() as f64).product();
    if count > BRUTEFORCE_BUDGET as f64 {
        return Err(RuinError::Budget { strategies: count, budget: BRUTEFORCE_BUDGET });
    }
    let mut index = vec![0usize; options.len()];
    let mut best: Option<(f64, Strategy)> = None;
    loop {
        let strategy = Strategy { moves: index.iter().zip(&options).map(|(&i, o)| o[i]).collect() };
        let v = solve_unchecked(game, &strategy)[k];
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, strategy));
        }
        // Odometer with the last fortune varying fastest.
        let mut pos = index.len();
        loop {
            if pos == 0 {
                return Ok(best.expect("at least one strategy"));
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < options[pos].len() {
                break;
            }
            index[pos] = 0;
        }
    }
}

/// `x + r y - x r^y - y r^{1-x}`.
pub fn f_inequality(x: f64, y: f64, r: f64) -> f64 {
    x + r * y - x * r.powf(y) - y * r.powf(1.0 - x)
}
