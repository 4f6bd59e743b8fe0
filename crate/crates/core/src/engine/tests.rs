use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::families::{build_complete, build_cycle, build_star, corpus::connected_graphs};
use crate::stats::chi_square_gof;

/// Exact one-step law of the full process from `mask`, enumerated over
/// every (reproducer, neighbour) pair.
fn exact_step_law(g: &Graph, mask: u64, r: f64) -> HashMap<u64, f64> {
    let n = g.vertex_count();
    let k = mask.count_ones() as f64;
    let z = r * k + (n as f64 - k);
    let mut law = HashMap::new();
    for u in 0..n {
        let mu = mask >> u & 1 == 1;
        let fit = if mu { r } else { 1.0 };
        for &v in g.neighbors(u) {
            let v = v as usize;
            let next = if mu { mask | 1 << v } else { mask & !(1 << v) };
            *law.entry(next).or_insert(0.0) += fit / z / g.degree(u) as f64;
        }
    }
    law
}

fn jump_law(g: &Graph, mask: u64, r: f64) -> HashMap<u64, f64> {
    let mut law = exact_step_law(g, mask, r);
    law.remove(&mask);
    let total: f64 = law.values().sum();
    law.values_mut().for_each(|p| *p /= total);
    law
}

fn test_law(law: &HashMap<u64, f64>, counts: &HashMap<u64, u64>) -> f64 {
    let keys: Vec<u64> = law.keys().chain(counts.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let obs: Vec<u64> = keys.iter().map(|k| counts.get(k).copied().unwrap_or(0)).collect();
    let probs: Vec<f64> = keys.iter().map(|k| law.get(k).copied().unwrap_or(0.0)).collect();
    chi_square_gof(&obs, &probs).p_value
}

/// Undoes the last change so one process can be sampled repeatedly from a
/// fixed state.
fn restore(p: &mut MoranProcess<'_>, mask: u64) {
    for v in 0..p.graph.vertex_count() {
        let want = mask >> v & 1 == 1;
        if p.state.is_mutant(v) != want {
            p.apply(v, want);
        }
    }
}

fn mask_of(p: &MoranProcess<'_>) -> u64 {
    p.state().mutants().to_mask().unwrap()
}

#[test]
fn full_step_matches_exact_law_on_small_graphs() {
    let mut rng = stream_rng(11, 0);
    for n in 2..=5 {
        for (gi, g) in connected_graphs(n).iter().enumerate() {
            let mask = 1u64 | (gi as u64 % 3) << 1 & ((1 << n) - 2);
            let r = [0.5, 1.0, 2.0][gi % 3];
            let law = exact_step_law(g, mask, r);
            let s0 = VertexSet::from_mask(n, mask);
            let mut p = MoranProcess::new(g, &s0, r, SamplerMode::Rejection).unwrap();
            let mut counts = HashMap::new();
            for _ in 0..1_000_000 {
                p.step(&mut rng).unwrap();
                *counts.entry(mask_of(&p)).or_insert(0u64) += 1;
                restore(&mut p, mask);
            }
            let pv = test_law(&law, &counts);
            assert!(pv >= 1e-3, "n={n} graph {gi}: p = {pv}");
        }
    }
}

#[test]
fn jump_samplers_match_conditional_law() {
    let mut rng = stream_rng(12, 0);
    for n in 3..=5 {
        for (gi, g) in connected_graphs(n).iter().enumerate().step_by(2) {
            let mask = 0b101 & ((1 << n) - 1);
            let r = 1.7;
            let law = jump_law(g, mask, r);
            let s0 = VertexSet::from_mask(n, mask);
            for mode in [SamplerMode::Rejection, SamplerMode::Weighted] {
                let mut p = MoranProcess::new(g, &s0, r, mode).unwrap();
                let mut counts = HashMap::new();
                for _ in 0..200_000 {
                    p.step_jump(&mut rng).unwrap();
                    *counts.entry(mask_of(&p)).or_insert(0u64) += 1;
                    restore(&mut p, mask);
                }
                let pv = test_law(&law, &counts);
                assert!(pv >= 1e-3, "n={n} graph {gi} {mode:?}: p = {pv}");
            }
        }
    }
}

#[test]
fn k2_step_probabilities() {
    let g = build_complete(2).unwrap();
    let law = exact_step_law(&g, 0b01, 2.0);
    assert!((law[&0b11] - 2.0 / 3.0).abs() < 1e-15);
    assert!((law[&0b00] - 1.0 / 3.0).abs() < 1e-15);
    let mut rng = stream_rng(3, 0);
    let mut fix = 0u64;
    let trials = 100_000u64;
    for _ in 0..trials {
        let mut p = MoranProcess::new(&g, &VertexSet::from_mask(2, 1), 2.0, SamplerMode::Rejection).unwrap();
        assert!(p.step(&mut rng).unwrap(), "every K_2 step changes the state");
        fix += p.state().is_fixation() as u64;
    }
    let pv = chi_square_gof(&[fix, trials - fix], &[2.0 / 3.0, 1.0 / 3.0]).p_value;
    assert!(pv > 1e-3, "{pv}");
}

#[test]
fn single_boundary_edge_probability() {
    // Path 0-1-2-3 with mutants {0,1}: the only boundary edge is 1-2.
    let g = crate::families::build_path(4).unwrap();
    let law = jump_law(&g, 0b0011, 3.0);
    let up = (3.0 / 2.0) / (3.0 / 2.0 + 1.0 / 2.0);
    assert!((law[&0b0111] - up).abs() < 1e-15);
}

#[test]
fn stepping_absorbing_state_is_an_error() {
    let g = build_cycle(4).unwrap();
    let mut rng = stream_rng(0, 0);
    for s in [VertexSet::full(4), VertexSet::new(4)] {
        let mut p = MoranProcess::new(&g, &s, 2.0, SamplerMode::Auto).unwrap();
        assert!(matches!(p.step(&mut rng), Err(EngineError::Absorbing)));
        assert!(matches!(p.step_jump(&mut rng), Err(EngineError::Absorbing)));
    }
}

#[test]
fn absorbing_starts_return_immediately() {
    let g = build_cycle(5).unwrap();
    let cfg = MoranConfig::new(2.0).with_seed(1);
    let o = run_to_absorption(&g, &VertexSet::full(5), &cfg).unwrap();
    assert_eq!((o.kind, o.real_steps, o.jump_steps), (OutcomeKind::Fixation, 0, 0));
    let o = run_to_absorption(&g, &VertexSet::new(5), &cfg).unwrap();
    assert_eq!((o.kind, o.real_steps, o.jump_steps), (OutcomeKind::Extinction, 0, 0));
}

#[test]
fn cycle4_fixation_frequency() {
    let g = build_cycle(4).unwrap();
    let cfg = MoranConfig::new(2.0);
    let trials = 100_000u64;
    let mut rng = stream_rng(4, 0);
    let mut fix = 0u64;
    for _ in 0..trials {
        let o = run_with_rng(&g, &VertexSet::from_vertices(4, [0]), &cfg, &mut rng).unwrap();
        fix += (o.kind == OutcomeKind::Fixation) as u64;
    }
    let exact = 8.0 / 15.0;
    let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
    let phat = fix as f64 / trials as f64;
    assert!((phat - exact).abs() <= 3.0 * sigma, "{phat} vs {exact}");
}

#[test]
fn config_validation() {
    assert!(matches!(MoranConfig::new(0.0).validate(), Err(EngineError::InvalidFitness(_))));
    assert!(matches!(MoranConfig::new(f64::NAN).validate(), Err(EngineError::InvalidFitness(_))));
    assert!(matches!(
        MoranConfig::new(1.0).with_early_stop(2.0).validate(),
        Err(EngineError::EarlyStopFitness(_))
    ));
    assert!(matches!(
        MoranConfig::new(2.0).with_early_stop(-1.0).validate(),
        Err(EngineError::EarlyStopConstant(_))
    ));
    let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
    let err = run_to_absorption(&g, &VertexSet::from_vertices(4, [0]), &MoranConfig::new(2.0));
    assert!(matches!(err, Err(EngineError::Graph(GraphError::Disconnected))));
}

#[test]
fn default_cap_values() {
    // 4 * 2 * 10^4 / 1
    assert_eq!(default_step_cap(10, 2.0), 80_000);
    // r = 1: divisor 1/n.
    assert_eq!(default_step_cap(10, 1.0), 400_000);
    assert_eq!(default_step_cap(usize::MAX, 2.0), u64::MAX);
}

#[test]
fn step_cap_is_reported() {
    let g = build_cycle(50).unwrap();
    let cfg = MoranConfig::new(1.0).with_step_cap(StepCap::Steps(3)).with_seed(9);
    let o = run_to_absorption(&g, &VertexSet::from_vertices(50, 0..25), &cfg).unwrap();
    assert_eq!(o.kind, OutcomeKind::StepCapExceeded);
    assert!(o.real_steps >= 3);
}

#[test]
fn early_stop_fires_only_when_configured() {
    let g = build_star(32).unwrap();
    let s0 = VertexSet::from_vertices(32, [1]);
    let mut saw_early = false;
    for seed in 0..200 {
        let plain = run_to_absorption(&g, &s0, &MoranConfig::new(2.0).with_seed(seed)).unwrap();
        assert_ne!(plain.kind, OutcomeKind::EarlyStopFixation);
        let early = run_to_absorption(&g, &s0, &MoranConfig::new(2.0).with_seed(seed).with_early_stop(1.0)).unwrap();
        saw_early |= early.kind == OutcomeKind::EarlyStopFixation;
    }
    assert!(saw_early);
}

#[test]
fn early_stopped_runs_rarely_go_extinct() {
    // Star K_{1,7}, c = 1: extinction after the threshold has probability at
    // most 1/8.
    let g = build_star(8).unwrap();
    let r = 2.0;
    let threshold = early_stop_hvol_threshold(8, 1, r, 1.0);
    let mut rng = stream_rng(21, 0);
    let (mut stopped, mut extinct) = (0u64, 0u64);
    while stopped < 10_000 {
        let mut p = MoranProcess::new(&g, &VertexSet::from_vertices(8, [1]), r, SamplerMode::Auto).unwrap();
        while !p.state().is_absorbing() && p.state().mutant_hvol() < threshold {
            p.step_jump(&mut rng).unwrap();
        }
        if p.state().is_absorbing() {
            continue;
        }
        stopped += 1;
        while !p.state().is_absorbing() {
            p.step_jump(&mut rng).unwrap();
        }
        extinct += p.state().is_extinction() as u64;
    }
    let bound = 1.0 / 8.0;
    let frac = extinct as f64 / stopped as f64;
    let sigma = (bound * (1.0 - bound) / stopped as f64).sqrt();
    assert!(frac <= bound + 3.0 * sigma, "{frac}");
}

#[test]
fn auto_mode_switches_and_stays_exact() {
    // One mutant on C_300: change probability (r + 1) / (r + 299) < 1%.
    let g = build_cycle(300).unwrap();
    let r = 2.0;
    let trials = 4_000u64;
    let mut fix = 0u64;
    let mut switched = 0;
    for t in 0..trials {
        let mut rng = stream_rng(31, t);
        let mut p = MoranProcess::new(&g, &VertexSet::from_vertices(300, [7]), r, SamplerMode::Auto).unwrap();
        while !p.state().is_absorbing() {
            p.step_jump(&mut rng).unwrap();
            switched += p.uses_weighted_sampler() as u32;
            assert!(p.state().jump_steps() <= p.state().real_steps());
        }
        fix += p.state().is_fixation() as u64;
    }
    assert!(switched > 0);
    let exact = 0.5 / (1.0 - 2f64.powi(-300));
    let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
    let phat = fix as f64 / trials as f64;
    assert!((phat - exact).abs() <= 3.5 * sigma, "{phat}");
}

#[test]
fn weighted_real_steps_have_geometric_mean() {
    // From one mutant on C_20 the change probability is (r+1)/(r+19).
    let g = build_cycle(20).unwrap();
    let r = 2.0;
    let s0 = VertexSet::from_vertices(20, [0]);
    let mut rng = stream_rng(41, 0);
    let mut p = MoranProcess::new(&g, &s0, r, SamplerMode::Weighted).unwrap();
    let pc = p.change_probability();
    assert!((pc - 3.0 / 21.0).abs() < 1e-12);
    let samples = 200_000;
    let mut total = 0u64;
    for _ in 0..samples {
        let before = p.state().real_steps();
        p.step_jump(&mut rng).unwrap();
        total += p.state().real_steps() - before;
        restore(&mut p, 1);
    }
    let mean = total as f64 / samples as f64;
    let sd = ((1.0 - pc) / (pc * pc) / samples as f64).sqrt();
    assert!((mean - 1.0 / pc).abs() < 4.0 * sd, "{mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flips_change_count_by_one_and_caches_stay_synced(seed in any::<u64>(), weighted in any::<bool>()) {
        let g = crate::families::build_random_regular(30, 4, seed % 16).unwrap();
        prop_assume!(g.is_connected());
        let mode = if weighted { SamplerMode::Weighted } else { SamplerMode::Rejection };
        let s0 = VertexSet::from_vertices(30, (0..30).step_by(3));
        let mut p = MoranProcess::new(&g, &s0, 1.3, mode).unwrap();
        let mut rng = stream_rng(seed, 0);
        for _ in 0..200 {
            if p.state().is_absorbing() { break; }
            let before = p.state().mutant_count();
            let flip = p.step_jump(&mut rng).unwrap();
            let after = p.state().mutant_count();
            prop_assert_eq!(after as i64 - before as i64, if flip.became_mutant { 1 } else { -1 });
            prop_assert!(g.has_edge(flip.reproducer, flip.vertex));
            prop_assert!(p.state().mutants().is_consistent());
            let direct = hvol(&g, p.state().mutants()).unwrap();
            prop_assert!((direct - p.state().mutant_hvol()).abs() < 1e-9);
            if let Some(b) = &p.boundary {
                for u in 0..30 {
                    let m = p.state().is_mutant(u);
                    let opp = g.neighbors(u).iter().filter(|&&v| p.state().is_mutant(v as usize) != m).count();
                    prop_assert_eq!(b.opposite_count(u) as usize, opp);
                }
            }
        }
    }
}
