//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The process fails if any criterion fails, except those listed in
//! `EXPECTED_FAILURES`, whose FAIL lines are still printed as such.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use moran_core::bounds::{
    claim2_check, early_stop_threshold, extinction_lb_claim1, key_lower_bound, sqrt_corollary_bound,
    theorem2_extinction_lb,
};
use moran_core::chains::{
    coupling_run, f_inequality, hit_prob_closed_form, hitting_claim_probability, hitting_claim_steps, make_chain_c,
    marginal_tests, min_ruin_bruteforce, ruin_lower_bound, simulate_chain, t_exact, t_total, tau_closed_form,
    tau_exact, ChainEnd, CouplingEnd, RuinGame,
};
use moran_core::engine::StepCap;
use moran_core::estimator::{estimate_fixation, EstimateConfig};
use moran_core::exact::{
    fixation_closed_form_regular, fixation_exact, fixation_star_lumped, solve_absorbing, solve_birth_death,
};
use moran_core::families::corpus::standard_corpus;
use moran_core::families::{
    build_amplifier, build_amplifier_with_alpha, build_complete, build_cycle, build_star, build_suppressor, Layer,
};
use moran_core::graph::hvol;
use moran_core::rng::stream_rng;
use moran_core::{Graph, VertexSet};

/// Criteria known not to hold as stated, with the reason.
const EXPECTED_FAILURES: &[(usize, &str)] = &[(
    5,
    "the closed-form tau recurrence leaves out the return from k-1 to k, so tau_k and T_total agree with the exact chain only for kappa <= 2",
)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for n in 3..=10 {
        for g in [build_cycle(n).unwrap(), build_complete(n).unwrap()] {
            for r in [0.5, 1.0, 1.5, 2.0] {
                let want = fixation_closed_form_regular(n, 1, r);
                let got = fixation_exact(&g, r).unwrap();
                for v in got.per_vertex {
                    worst = worst.max((v - want).abs());
                }
            }
        }
    }
    verdict(worst <= 1e-10, format!("max |exact - closed form| = {worst:.2e} over C_n, K_n, n = 3..10"))
}

fn corpus_solutions(corpus: &[Graph], rs: &[f64]) -> Vec<Vec<moran_core::exact::AbsorbingChainSolution>> {
    corpus.iter().map(|g| rs.iter().map(|&r| solve_absorbing(g, r).unwrap()).collect()).collect()
}

fn criterion_2(corpus: &[Graph]) -> Verdict {
    let rs = [1.2, 2.0];
    let sols = corpus_solutions(corpus, &rs);
    let (mut excess, mut tight_gap, mut sets) = (f64::NEG_INFINITY, 0.0f64, 0u64);
    for (g, gs) in corpus.iter().zip(&sols) {
        let n = g.vertex_count();
        let regular = g.regular_degree().is_some();
        for (&r, sol) in rs.iter().zip(gs) {
            for mask in 1u64..(1 << n) {
                let lb = key_lower_bound(g, &VertexSet::from_mask(n, mask), r).unwrap().raw;
                let exact = sol.value(mask);
                excess = excess.max(lb - exact);
                if regular {
                    tight_gap = tight_gap.max((lb - exact).abs());
                }
                sets += 1;
            }
        }
    }
    verdict(
        excess <= 1e-10 && tight_gap <= 1e-10,
        format!("{} graphs, {sets} (graph, set, r) cases; max(bound - exact) = {excess:.2e}; regular max gap = {tight_gap:.2e}", corpus.len()),
    )
}

fn criterion_3(corpus: &[Graph]) -> Verdict {
    let rs = [1.2, 2.0];
    let sols = corpus_solutions(corpus, &rs);
    let (mut checked, mut bad) = (0u64, 0u64);
    for (g, gs) in corpus.iter().zip(&sols) {
        let n = g.vertex_count();
        for (&r, sol) in rs.iter().zip(gs) {
            let t = early_stop_threshold(g, r, 1.0).unwrap();
            for mask in 1u64..(1 << n) {
                if hvol(g, &VertexSet::from_mask(n, mask)).unwrap() >= t {
                    checked += 1;
                    if sol.value(mask) < 1.0 - 1.0 / n as f64 {
                        bad += 1;
                    }
                }
            }
        }
    }
    let star = build_star(32).unwrap();
    let base = EstimateConfig::new(2.0, 100_000).with_step_cap(StepCap::Unlimited);
    let full = estimate_fixation(&star, &base.clone().with_seed(301)).unwrap();
    let early = estimate_fixation(&star, &base.with_seed(302).with_early_stop(3.0)).unwrap();
    let width = full.ci_width().max(early.ci_width());
    let diff = (full.p_hat - early.p_hat).abs();
    let allowed = width + 2.0 * 31f64.powi(-3);
    let exact = fixation_star_lumped(32, 2.0).unwrap();
    verdict(
        bad == 0 && diff <= allowed,
        format!(
            "{checked} sets above threshold, {bad} below 1 - 1/n; star K_1,31: absorbing {:.5} vs early-stopped {:.5} ({} early stops), |diff| = {diff:.5} <= {allowed:.5}; exact {exact:.5}",
            full.p_hat, early.p_hat, early.early_stops
        ),
    )
}

fn criterion_4(corpus: &[Graph]) -> Verdict {
    let rs = [1.5, 2.0];
    let sols = corpus_solutions(corpus, &rs);
    let (mut c1, mut c2, mut t2, mut sq) = (0u64, 0u64, 0u64, 0u64);
    let mut c1_excess = f64::NEG_INFINITY;
    for (g, gs) in corpus.iter().zip(&sols) {
        let n = g.vertex_count();
        for (&r, sol) in rs.iter().zip(gs) {
            let single = sol.singletons();
            for (u, rho) in single.iter().enumerate() {
                let b = extinction_lb_claim1(g, u, r).unwrap();
                c1_excess = c1_excess.max(b.full.raw - (1.0 - rho));
                if b.full.raw > 1.0 - rho + 1e-10 {
                    c1 += 1;
                }
            }
            let rho = single.iter().sum::<f64>() / n as f64;
            if !claim2_check(g, r, 1.0 - rho).holds() {
                c2 += 1;
            }
            if 1.0 - rho < theorem2_extinction_lb(n, r).unwrap().raw {
                t2 += 1;
            }
            if rho > sqrt_corollary_bound(n, r).unwrap().raw {
                sq += 1;
            }
        }
    }
    verdict(
        c1 + c2 + t2 + sq == 0,
        format!("violations: per-vertex extinction bound {c1} (max bound - exact {c1_excess:.2e}), degree-tail clauses {c2}, graph extinction bound {t2}, sqrt fixation bound {sq}"),
    )
}

fn criterion_5() -> Verdict {
    let (mut hit_err, mut tau_err, mut t_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut tau_worst = (0.0, 0, 0);
    for gamma in [0.1, 0.5, 0.9] {
        let alpha = 4.0;
        let r = (1.0 + 4.0 / alpha) / gamma;
        for kappa in 2..=200usize {
            let c = make_chain_c(1000, kappa, alpha, r).unwrap();
            let sol = solve_birth_death(c.chain()).unwrap();
            for k0 in 1..kappa {
                hit_err = hit_err.max(rel_err(hit_prob_closed_form(c.gamma, k0, kappa), sol.hit_upper[k0]));
                let e = rel_err(t_total(k0, kappa, c.b, c.gamma), t_exact(&c, k0).unwrap());
                t_err = t_err.max(e);
            }
            // tau_k depends on kappa only through k < kappa; check each k once.
            if kappa == 200 {
                for k in 1..kappa {
                    let e = rel_err(tau_closed_form(k, c.b, c.gamma), tau_exact(&c, k).unwrap());
                    if e > tau_err {
                        tau_err = e;
                        tau_worst = (gamma, k, kappa);
                    }
                }
            }
        }
    }
    // Hitting claim on the reduced amplifier's chain.
    let (n_base, alpha, r) = (512usize, 4.0, 3.0);
    let lg = build_amplifier_with_alpha(n_base, alpha as usize, 1).unwrap();
    let w = lg.layers.iter().filter(|&&l| l == Layer::W).count();
    let c = make_chain_c(lg.graph.vertex_count(), w / 2, alpha, r).unwrap();
    let steps = hitting_claim_steps(lg.graph.vertex_count(), alpha, n_base, r);
    let runs = 10_000u64;
    let mut rng = stream_rng(505, 0);
    let hits = (0..runs).filter(|_| simulate_chain(c.chain(), 1, steps, &mut rng).end == ChainEnd::Upper).count();
    let freq = hits as f64 / runs as f64;
    let claim = hitting_claim_probability(alpha, r);
    let sigma = (claim * (1.0 - claim) / runs as f64).sqrt();
    let hit_ok = hit_err <= 1e-9 && freq >= claim - 3.0 * sigma;
    let tau_ok = tau_err <= 1e-9 && t_err <= 1e-9;
    verdict(
        hit_ok && tau_ok,
        format!(
            "hit probability max rel err {hit_err:.2e}; tau max rel err {tau_err:.2e} (gamma {}, k {}); T_total max rel err {t_err:.2e}; hitting claim: {hits}/{runs} = {freq:.4} within {steps} steps vs guarantee {claim:.4} - 3 sigma",
            tau_worst.0, tau_worst.1
        ),
    )
}

fn criterion_6() -> Verdict {
    let lg = build_amplifier_with_alpha(512, 4, 1).unwrap();
    let n = lg.graph.vertex_count();
    let w_members = lg.layer_members(Layer::W);
    let (mut violations, mut regime, mut broken, mut half) = (0usize, 0usize, 0usize, 0usize);
    let mut sojourns = Vec::new();
    let mut chain = None;
    for seed in 0..1000u64 {
        let s0 = VertexSet::from_vertices(n, [w_members[(seed as usize * 7919) % w_members.len()]]);
        let t = coupling_run(&lg, &s0, 3.0, 1_000_000, seed).unwrap();
        violations += t.violations.len();
        regime += t.regime_violations.len();
        broken += (t.end == CouplingEnd::RegimeBroken) as usize;
        half += (t.end == CouplingEnd::HalfOfW) as usize;
        sojourns.extend(t.sojourns);
        chain.get_or_insert(t.chain);
    }
    let m = marginal_tests(&sojourns, chain.as_ref().unwrap(), 606);
    let pass = violations == 0 && m.direction.passes(1e-3) && m.holding.passes(1e-3);
    verdict(
        pass,
        format!(
            "1000 runs: {violations} invariant violations, {half} reached |W|/2, {broken} regime breaks, {regime} regime-inequality misses; {} sojourns, direction p = {:.3}, holding p = {:.3}",
            m.sojourns, m.direction.p_value, m.holding.p_value
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut worst = f64::INFINITY;
    let mut games = 0;
    for m in 1..=6usize {
        for sigma in 1..=2usize.min(m) {
            for r in [1.5, 2.0] {
                let g = RuinGame::new(m, sigma, r).unwrap();
                for k in 0..=m {
                    let (v, _) = min_ruin_bruteforce(&g, k).unwrap();
                    worst = worst.min(v - ruin_lower_bound(&g, k));
                    games += 1;
                }
            }
        }
    }
    let two = min_ruin_bruteforce(&RuinGame::new(2, 1, 2.0).unwrap(), 1).unwrap().0;
    let mut f_min = f64::INFINITY;
    for r in [1.1, 2.0, 10.0] {
        for i in 0..=100 {
            for j in 0..=100 {
                f_min = f_min.min(f_inequality(i as f64 / 100.0, j as f64 / 100.0, r));
            }
        }
    }
    verdict(
        worst >= -1e-12 && two == 2.0 / 3.0 && f_min >= -1e-12,
        format!("{games} (game, k) cases, min(brute force - bound) = {worst:.2e}; m = 2 gives {two:?}; min f on grid = {f_min:.2e}"),
    )
}

fn criterion_8() -> Verdict {
    let big = fixation_star_lumped(10_000, 2.0).unwrap();
    let mut worst = 0.0f64;
    for n in 3..=16 {
        let g = build_star(n).unwrap();
        for r in [0.5, 2.0] {
            let full = fixation_exact(&g, r).unwrap().mean;
            worst = worst.max((full - fixation_star_lumped(n, r).unwrap()).abs());
        }
    }
    verdict(
        (0.73..=0.76).contains(&big) && worst <= 1e-10,
        format!("lumped star n = 10^4, r = 2: {big:.6}; max |lumped - full| for n <= 16 = {worst:.2e}"),
    )
}

fn criterion_9() -> Verdict {
    let mut sup = Vec::new();
    for (i, n) in [16usize, 81, 256].into_iter().enumerate() {
        let lg = build_suppressor(n, 90 + i as u64).unwrap();
        let cfg = EstimateConfig::new(2.0, 20_000).with_seed(900 + i as u64).with_early_stop(2.0);
        sup.push((n, estimate_fixation(&lg.graph, &cfg).unwrap()));
    }
    let decreasing = sup.windows(2).all(|w| w[0].1.p_hat > w[1].1.p_hat);
    let separated = sup[0].1.ci_lo > sup[2].1.ci_hi;
    let lg = build_amplifier(1000, 1.0, 95).unwrap();
    let cfg = EstimateConfig::new(1.5, 10_000).with_seed(950).with_early_stop(2.0);
    let amp = estimate_fixation(&lg.graph, &cfg).unwrap();
    let baseline = 1.0 - 1.0 / 1.5;
    let sup_text: Vec<String> = sup
        .iter()
        .map(|(n, e)| format!("n={n}: {:.4} [{:.4}, {:.4}]", e.p_hat, e.ci_lo, e.ci_hi))
        .collect();
    verdict(
        decreasing && separated && amp.ci_lo > baseline && amp.capped == 0,
        format!(
            "suppressor {}; amplifier ({} vertices) {:.4} [{:.4}, {:.4}] vs baseline {baseline:.4}, {} early stops, {} capped",
            sup_text.join(", "),
            lg.graph.vertex_count(),
            amp.p_hat,
            amp.ci_lo,
            amp.ci_hi,
            amp.early_stops,
            amp.capped
        ),
    )
}

fn moran(dir: &Path, args: &[String]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_moran"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("spec.cfg"),
        "seed = 12\ntrials = 2000\n[cell]\nfamily = suppressor\nn = 16\nr = 2\n[cell]\nfamily = star\nn = 8, 12\nr = 1, 1.5\n",
    )
    .unwrap();
    let commands: Vec<(&str, &str, bool)> = vec![
        ("build", "build --family amplifier --n 512 --alpha 4 --seed 2", false),
        ("exact", "exact --family cycle --n 8 --r 2", false),
        ("estimate", "estimate --family star --n 20 --r 1.5 --trials 4000 --seed 3", true),
        ("bounds", "bounds --family suppressor --n 16 --r 2", false),
        ("ruin", "ruin --m 5 --sigma 2 --r 1.5", false),
        ("chainc", "chainc --vertices 100 --kappa 20 --alpha 8 --r 3 --runs 200 --seed 4", false),
        ("sweep", "sweep --spec spec.cfg", true),
    ];
    let mut problems = Vec::new();
    for (name, cmd, parallel) in &commands {
        let mut originals = Vec::new();
        for workers in [1usize, 8] {
            if !parallel && workers == 8 {
                continue;
            }
            let out = format!("{name}.w{workers}.out");
            let mut args: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if *parallel {
                args.extend(["--workers".into(), workers.to_string()]);
            }
            args.extend(["--out".into(), out.clone()]);
            if let Err(e) = moran(dir.path(), &args) {
                problems.push(e);
                continue;
            }
            originals.push(fs::read(dir.path().join(&out)).unwrap());
            for replay_workers in [1usize, 8] {
                let replay_out = format!("{name}.w{workers}.replay{replay_workers}.out");
                let args: Vec<String> = vec![
                    "--replay".into(),
                    format!("{out}.manifest"),
                    "--replay-out".into(),
                    replay_out.clone(),
                    "--replay-workers".into(),
                    replay_workers.to_string(),
                ];
                if let Err(e) = moran(dir.path(), &args) {
                    problems.push(e);
                    continue;
                }
                if fs::read(dir.path().join(&replay_out)).unwrap() != originals[originals.len() - 1] {
                    problems.push(format!("{name}: replay with {replay_workers} workers differs"));
                }
            }
        }
        if originals.windows(2).any(|w| w[0] != w[1]) {
            problems.push(format!("{name}: outputs differ between 1 and 8 workers"));
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} output-writing commands reproduced byte for byte from their manifests with 1 and 8 workers", commands.len())
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let start = Instant::now();
    let corpus = standard_corpus();
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        (1, "closed-form agreement", Box::new(criterion_1)),
        (2, "set lower bound soundness and tightness", Box::new(|| criterion_2(&corpus))),
        (3, "early stopping", Box::new(|| criterion_3(&corpus))),
        (4, "extinction bounds", Box::new(|| criterion_4(&corpus))),
        (5, "chain C formulas", Box::new(criterion_5)),
        (6, "coupling invariant", Box::new(criterion_6)),
        (7, "gambler's ruin", Box::new(criterion_7)),
        (8, "star amplification", Box::new(criterion_8)),
        (9, "suppressor and amplifier direction", Box::new(criterion_9)),
        (10, "determinism", Box::new(criterion_10)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in &criteria {
        let t = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name} ({:.1}s): {}", t.elapsed().as_secs_f64(), v.detail);
        let expected = EXPECTED_FAILURES.iter().find(|(e, _)| e == id);
        match (v.pass, expected) {
            (false, Some((_, why))) => println!("             expected failure: {why}"),
            (false, None) => unexpected.push(*id),
            (true, Some(_)) => println!("             listed as an expected failure but passed"),
            (true, None) => {}
        }
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
