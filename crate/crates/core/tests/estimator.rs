use moran_core::engine::StepCap;
use moran_core::estimator::{estimate_fixation, estimate_fixation_from, EstimateConfig};
use moran_core::exact::fixation_exact;
use moran_core::families::corpus::all_connected_graphs_up_to;
use moran_core::families::{build_complete, build_star};
use moran_core::VertexSet;

#[test]
fn wilson_interval_coverage_on_exact_corpus() {
    let graphs = all_connected_graphs_up_to(5);
    let exact: Vec<f64> = graphs.iter().map(|g| fixation_exact(g, 1.5).unwrap().mean).collect();
    let runs = 500;
    let covered = (0..runs)
        .filter(|&i| {
            let k = i % graphs.len();
            let cfg = EstimateConfig::new(1.5, 400).with_seed(1000 + i as u64).with_workers(1);
            estimate_fixation(&graphs[k], &cfg).unwrap().contains(exact[k])
        })
        .count();
    assert!(covered as f64 >= 0.97 * runs as f64, "{covered}/{runs}");
}

#[test]
fn early_stop_bias_on_star_is_small() {
    let g = build_star(32).unwrap();
    let base = EstimateConfig::new(2.0, 100_000).with_seed(8).with_step_cap(StepCap::Unlimited);
    let off = estimate_fixation(&g, &base).unwrap();
    let on = estimate_fixation(&g, &base.clone().with_seed(9).with_early_stop(3.0)).unwrap();
    assert!(on.early_stops > 0);
    let width = off.ci_width().max(on.ci_width());
    assert!((on.p_hat - off.p_hat).abs() <= width + 31f64.powi(-3), "{on:?} {off:?}");
}

#[test]
fn star_amplifies_relative_to_complete() {
    let cfg = EstimateConfig::new(1.1, 10_000).with_seed(21).with_early_stop(2.0);
    let star = estimate_fixation(&build_star(64).unwrap(), &cfg).unwrap();
    let complete = estimate_fixation(&build_complete(64).unwrap(), &cfg).unwrap();
    assert!(star.ci_lo > complete.ci_hi, "{star:?} {complete:?}");
}

#[test]
fn full_initial_set_fixes_immediately() {
    let g = build_star(6).unwrap();
    let est = estimate_fixation_from(&g, &VertexSet::full(6), &EstimateConfig::new(2.0, 1)).unwrap();
    assert_eq!(est.p_hat, 1.0);
    assert_eq!(est.jump_steps, 0);
}
