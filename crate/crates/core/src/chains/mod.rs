//! Proof machinery made executable: the comparison birth-death chain C,
//! its coupling with the Moran process on the amplifier, and the capped
//! gambler's ruin game.

mod chain_c;
mod coupling;
mod ruin;

pub use chain_c::{
    chain_c_gamma, hit_prob_closed_form, hitting_claim_probability, hitting_claim_steps, make_chain_c,
    simulate_chain, t_exact, t_total, tau_closed_form, tau_exact, ChainC, ChainCError, ChainEnd, ChainRun,
};
pub use coupling::{
    coupling_run, marginal_tests, CouplingEnd, CouplingError, CouplingTrace, InvariantViolation, MarginalTests,
    RegimeViolation, Sojourn, TraceEntry,
};
pub use ruin::{
    f_inequality, min_ruin_bruteforce, ruin_lower_bound, ruin_probabilities, ruin_probability, RuinError,
    RuinGame, Strategy, BRUTEFORCE_BUDGET,
};
