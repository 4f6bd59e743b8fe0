use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use moran_core::bounds::{
    degree_stats, extinction_lb_claim1, key_lower_bound, sqrt_corollary_bound, theorem2_extinction_lb,
};
use moran_core::chains::{
    hit_prob_closed_form, make_chain_c, min_ruin_bruteforce, ruin_lower_bound, simulate_chain, t_exact, t_total,
    tau_closed_form, tau_exact, ChainEnd, RuinError, RuinGame,
};
use moran_core::engine::StepCap;
use moran_core::estimator::{
    estimate_fixation, estimate_fixation_from, parse_sweep_spec, rows_to_csv, run_sweep, EstimateConfig,
    EstimateError, SweepError, CSV_HEADER,
};
use moran_core::exact::{fixation_exact, fixation_exact_from, fixation_star_lumped, ExactError};
use moran_core::families::{
    build_amplifier_with_alpha, build_family, validate_layered, Construction, Family, FamilyError, FamilyParams,
    Layer, LayeredGraph,
};
use moran_core::graph::{parse_edge_list, write_edge_list};
use moran_core::rng::{derive_seed, stream_rng};
use moran_core::{Graph, VertexSet};

use crate::manifest::{sha256_hex, write_outputs, RunRecord};
use crate::{
    BoundsArgs, BuildArgs, ChainCArgs, CliError, Command, EstimateArgs, ExactArgs, GraphArgs, RuinArgs, SweepArgs,
    ValidateArgs,
};

pub(crate) fn dispatch(
    name: &str,
    command: Command,
    args: &[String],
    params: Vec<(String, String)>,
) -> Result<(), CliError> {
    let produced = match command {
        Command::Build(a) => build(a)?,
        Command::Exact(a) => exact(a)?,
        Command::Estimate(a) => estimate(a)?,
        Command::Bounds(a) => bounds(a)?,
        Command::Ruin(a) => ruin(a)?,
        Command::Chainc(a) => chainc(a)?,
        Command::Sweep(a) => sweep(a)?,
        Command::Validate(a) => return validate(a),
    };
    match produced.out {
        Some(out) => {
            let mut outputs = vec![(out.clone(), produced.text.into_bytes())];
            outputs.extend(produced.extra.into_iter().map(|(suffix, bytes)| (with_suffix(&out, suffix), bytes)));
            write_outputs(RunRecord { subcommand: name, args, params, inputs: produced.inputs, outputs })?;
        }
        None => {
            std::io::stdout().write_all(produced.text.as_bytes()).map_err(CliError::failure)?;
        }
    }
    Ok(())
}

/// Primary output text plus any sibling files and the input hashes.
struct Produced {
    out: Option<PathBuf>,
    text: String,
    extra: Vec<(&'static str, Vec<u8>)>,
    inputs: Vec<(String, String)>,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn graph_hash(g: &Graph) -> String {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf).expect("writing to memory");
    sha256_hex(&buf)
}

fn family_error(e: FamilyError) -> CliError {
    match e {
        FamilyError::GenerationFailed { .. } | FamilyError::CertificationFailed { .. } => CliError::failure(e),
        _ => CliError::usage(e),
    }
}

fn exact_error(e: ExactError) -> CliError {
    match e {
        ExactError::NotConverged { .. } | ExactError::Residual { .. } | ExactError::Singular => CliError::failure(e),
        _ => CliError::usage(e),
    }
}

fn estimate_error(e: EstimateError) -> CliError {
    match e {
        EstimateError::Pool { .. } => CliError::failure(e),
        _ => CliError::usage(e),
    }
}

/// A graph together with the labels that go into CSV rows.
struct Loaded {
    graph: Graph,
    layered: Option<LayeredGraph>,
    family: String,
    n: usize,
    epsilon: Option<f64>,
    inputs: Vec<(String, String)>,
}

fn load_graph(a: &GraphArgs, seed: u64) -> Result<Loaded, CliError> {
    if let Some(path) = &a.graph {
        let bytes = fs::read(path).map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::usage(format!("{} is not UTF-8", path.display())))?;
        let graph = parse_edge_list(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let inputs = vec![("graph_file.sha256".into(), sha256_hex(&bytes)), ("graph.sha256".into(), graph_hash(&graph))];
        let n = graph.vertex_count();
        return Ok(Loaded { graph, layered: None, family: "file".into(), n, epsilon: None, inputs });
    }
    let name = a.family.as_deref().ok_or_else(|| CliError::usage("give --graph or --family"))?;
    let family: Family = name.parse().map_err(CliError::usage)?;
    let n = a.n.ok_or_else(|| CliError::usage("--family needs --n"))?;
    let graph_seed = derive_seed(seed, "graph");
    let lg = match (family, a.alpha) {
        (Family::Amplifier, Some(alpha)) => build_amplifier_with_alpha(n, alpha, graph_seed),
        (_, Some(_)) => return Err(CliError::usage("--alpha applies only to the amplifier")),
        _ => build_family(&FamilyParams { family, n, epsilon: a.epsilon, degree: a.degree, seed: graph_seed }),
    }
    .map_err(family_error)?;
    let inputs = vec![("graph.sha256".into(), graph_hash(&lg.graph))];
    Ok(Loaded { graph: lg.graph.clone(), layered: Some(lg), family: family.tag().into(), n, epsilon: a.epsilon, inputs })
}

fn layer_file(lg: &LayeredGraph) -> String {
    let mut s = String::new();
    match &lg.construction {
        Construction::Suppressor { n, root } => {
            writeln!(s, "# family: suppressor\n# n: {n}\n# root: {root}").unwrap();
        }
        Construction::Amplifier { n, root, alpha, w_to_v_base, w_to_v_extra, certificate, .. } => {
            writeln!(
                s,
                "# family: amplifier\n# n: {n}\n# root: {root}\n# alpha: {alpha}\n# w_to_v_base: {w_to_v_base}\n# w_to_v_extra: {w_to_v_extra}\n# certificate: {certificate}"
            )
            .unwrap();
        }
        Construction::Plain(f) => writeln!(s, "# family: {f}").unwrap(),
    }
    s.push_str(&lg.layer_file());
    s
}

fn parse_layer_file(text: &str, graph: Graph) -> Result<LayeredGraph, String> {
    let mut header = std::collections::HashMap::new();
    let mut layers = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                header.insert(k.trim().to_owned(), v.trim().to_owned());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split_whitespace();
        let (Some(v), Some(l), None) = (f.next(), f.next(), f.next()) else {
            return Err(format!("layer file line {}: expected `vertex layer`", i + 1));
        };
        let v: usize = v.parse().map_err(|_| format!("layer file line {}: bad vertex {v:?}", i + 1))?;
        if v != layers.len() {
            return Err(format!("layer file line {}: expected vertex {}, found {v}", i + 1, layers.len()));
        }
        layers.push(l.parse::<Layer>().map_err(|e| format!("layer file line {}: {e}", i + 1))?);
    }
    let get = |k: &str| -> Result<usize, String> {
        header.get(k).ok_or_else(|| format!("layer file lacks `# {k}:`"))?.parse().map_err(|_| format!("bad `# {k}:` value"))
    };
    let family: Family = header.get("family").ok_or("layer file lacks `# family:`")?.parse()?;
    let construction = match family {
        Family::Suppressor => Construction::Suppressor { n: get("n")?, root: get("root")? },
        Family::Amplifier => Construction::Amplifier {
            n: get("n")?,
            root: get("root")?,
            epsilon: None,
            alpha: get("alpha")?,
            w_to_v_base: get("w_to_v_base")?,
            w_to_v_extra: get("w_to_v_extra")?,
            certificate: header.get("certificate").and_then(|c| c.parse().ok()).unwrap_or(f64::NAN),
        },
        f => Construction::Plain(f),
    };
    Ok(LayeredGraph { graph, layers, construction })
}

fn build(a: BuildArgs) -> Result<Produced, CliError> {
    let loaded = load_graph(&a.graph, a.seed)?;
    let mut buf = Vec::new();
    write_edge_list(&loaded.graph, &mut buf).map_err(CliError::failure)?;
    let extra = match &loaded.layered {
        Some(lg) => vec![(".layers", layer_file(lg).into_bytes())],
        None => Vec::new(),
    };
    Ok(Produced {
        out: Some(a.out),
        text: String::from_utf8(buf).expect("edge lists are ASCII"),
        extra,
        inputs: loaded.inputs,
    })
}

fn exact(a: ExactArgs) -> Result<Produced, CliError> {
    let loaded = load_graph(&a.graph, a.seed)?;
    let g = &loaded.graph;
    let mut text = String::from("start,fixation\n");
    if a.lumped_star {
        let n = g.vertex_count();
        let is_star = n >= 2 && g.degrees().filter(|&d| d == n - 1).count() >= 1 && g.edge_count() == n - 1;
        if !is_star {
            return Err(CliError::usage("--lumped-star needs a star graph"));
        }
        let rho = fixation_star_lumped(n, a.r).map_err(exact_error)?;
        writeln!(text, "mean,{rho}").unwrap();
    } else if let Some(set) = &a.set {
        let n = g.vertex_count();
        if let Some(&v) = set.iter().find(|&&v| v >= n) {
            return Err(CliError::usage(format!("vertex {v} outside 0..{n}")));
        }
        let s = VertexSet::from_vertices(n, set.iter().copied());
        let rho = fixation_exact_from(g, &s, a.r).map_err(exact_error)?;
        let label: Vec<String> = s.sorted().iter().map(|v| v.to_string()).collect();
        writeln!(text, "set {},{rho}", label.join(" ")).unwrap();
    } else {
        let profile = fixation_exact(g, a.r).map_err(exact_error)?;
        for (v, rho) in profile.per_vertex.iter().enumerate() {
            writeln!(text, "{v},{rho}").unwrap();
        }
        writeln!(text, "mean,{}", profile.mean).unwrap();
    }
    Ok(Produced { out: a.out, text, extra: Vec::new(), inputs: loaded.inputs })
}

fn parse_c(c: Option<&str>, r: f64) -> Result<Option<f64>, CliError> {
    match c {
        None => Ok((r > 1.0).then_some(moran_core::estimator::DEFAULT_EARLY_STOP_C)),
        Some("none") => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| CliError::usage(format!("bad --c value {v:?}"))),
    }
}

fn parse_step_cap(s: &str) -> Result<StepCap, CliError> {
    match s {
        "default" => Ok(StepCap::Default),
        "unlimited" => Ok(StepCap::Unlimited),
        v => v.parse().map(StepCap::Steps).map_err(|_| CliError::usage(format!("bad --step-cap value {v:?}"))),
    }
}

fn estimate(a: EstimateArgs) -> Result<Produced, CliError> {
    let loaded = load_graph(&a.graph, a.seed)?;
    let g = &loaded.graph;
    let mut cfg = EstimateConfig::new(a.r, a.trials)
        .with_seed(derive_seed(a.seed, "trials"))
        .with_workers(a.workers)
        .with_step_cap(parse_step_cap(&a.step_cap)?);
    cfg.level = a.level;
    cfg.early_stop_c = parse_c(a.c.as_deref(), a.r)?;
    let est = match &a.set {
        Some(set) => {
            let n = g.vertex_count();
            if let Some(&v) = set.iter().find(|&&v| v >= n) {
                return Err(CliError::usage(format!("vertex {v} outside 0..{n}")));
            }
            estimate_fixation_from(g, &VertexSet::from_vertices(n, set.iter().copied()), &cfg)
        }
        None => estimate_fixation(g, &cfg),
    }
    .map_err(estimate_error)?;
    if est.has_capped_trials() {
        eprintln!("warning: {} trials hit the step cap and are excluded from p_hat", est.capped);
    }
    let text = format!(
        "{CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        loaded.family,
        loaded.n,
        loaded.epsilon.map(|e| e.to_string()).unwrap_or_default(),
        a.r,
        est.trials,
        est.p_hat,
        est.ci_lo,
        est.ci_hi,
        est.fixations,
        est.extinctions,
        est.early_stops,
        est.capped,
        a.seed
    );
    Ok(Produced { out: a.out, text, extra: Vec::new(), inputs: loaded.inputs })
}

fn bounds(a: BoundsArgs) -> Result<Produced, CliError> {
    let loaded = load_graph(&a.graph, a.seed)?;
    let g = &loaded.graph;
    let n = g.vertex_count();
    let mut text = String::from("quantity,index,value,raw\n");
    for u in 0..n {
        let c1 = extinction_lb_claim1(g, u, a.r).map_err(CliError::usage)?;
        writeln!(text, "claim1,{u},{},{}", c1.full.value, c1.full.raw).unwrap();
        writeln!(text, "claim1_weak,{u},{},{}", c1.weak.value, c1.weak.raw).unwrap();
    }
    for u in 0..n {
        let b = key_lower_bound(g, &VertexSet::from_vertices(n, [u]), a.r).map_err(CliError::usage)?;
        writeln!(text, "key_lower_bound,{u},{},{}", b.value, b.raw).unwrap();
    }
    let stats = degree_stats(g);
    for d in 0..stats.histogram.len() {
        writeln!(text, "degree_count,{d},{},", stats.n_d(d)).unwrap();
    }
    for d in 0..stats.tail.len() {
        writeln!(text, "degree_tail,{d},{},", stats.big_n_d(d)).unwrap();
    }
    writeln!(text, "theta,,{},", stats.theta).unwrap();
    if a.r > 1.0 && n >= 2 {
        let t2 = theorem2_extinction_lb(n, a.r).map_err(CliError::usage)?;
        let sq = sqrt_corollary_bound(n, a.r).map_err(CliError::usage)?;
        writeln!(text, "theorem2_extinction,,{},{}", t2.value, t2.raw).unwrap();
        writeln!(text, "sqrt_corollary_fixation,,{},{}", sq.value, sq.raw).unwrap();
    }
    Ok(Produced { out: a.out, text, extra: Vec::new(), inputs: loaded.inputs })
}

fn ruin(a: RuinArgs) -> Result<Produced, CliError> {
    let game = RuinGame::new(a.m, a.sigma, a.r).map_err(CliError::usage)?;
    let ks: Vec<usize> = match a.k {
        Some(k) if k > a.m => return Err(CliError::usage(format!("--k {k} exceeds --m {}", a.m))),
        Some(k) => vec![k],
        None => (0..=a.m).collect(),
    };
    let mut text = String::from("k,lower_bound,min_ruin,strategy\n");
    for k in ks {
        let bound = ruin_lower_bound(&game, k);
        if a.bound_only {
            writeln!(text, "{k},{bound},,").unwrap();
            continue;
        }
        let (v, s) = min_ruin_bruteforce(&game, k).map_err(|e| match e {
            RuinError::Budget { .. } => CliError::failure(e),
            _ => CliError::usage(e),
        })?;
        let moves: Vec<String> = s.moves.iter().map(|(b, p)| format!("{b}:{p}")).collect();
        writeln!(text, "{k},{bound},{v},{}", moves.join(" ")).unwrap();
    }
    Ok(Produced { out: a.out, text, extra: Vec::new(), inputs: Vec::new() })
}

fn chainc(a: ChainCArgs) -> Result<Produced, CliError> {
    let c = make_chain_c(a.vertices, a.kappa, a.alpha, a.r).map_err(CliError::usage)?;
    if a.kappa < 2 {
        return Err(CliError::usage("--kappa must be at least 2"));
    }
    let starts: Vec<usize> = match a.k0 {
        Some(k) if k == 0 || k >= a.kappa => return Err(CliError::usage(format!("--k0 must lie in 1..{}", a.kappa))),
        Some(k) => vec![k],
        None => (1..a.kappa).collect(),
    };
    let mut text = String::from("k0,hit_closed,hit_exact,tau_closed,tau_exact,t_closed,t_exact,runs,hits\n");
    let sol = moran_core::exact::solve_birth_death(c.chain()).map_err(CliError::failure)?;
    let sim_seed = derive_seed(a.seed, "chainc");
    for k0 in starts {
        let hit_closed = hit_prob_closed_form(c.gamma, k0, a.kappa);
        let tau_c = tau_closed_form(k0, c.b, c.gamma);
        let tau_e = tau_exact(&c, k0).map_err(CliError::failure)?;
        let t_c = t_total(k0, a.kappa, c.b, c.gamma);
        let t_e = t_exact(&c, k0).map_err(CliError::failure)?;
        let mut rng = stream_rng(sim_seed, k0 as u64);
        let hits = (0..a.runs)
            .filter(|_| simulate_chain(c.chain(), k0, a.max_steps.unwrap_or(u64::MAX), &mut rng).end == ChainEnd::Upper)
            .count();
        writeln!(
            text,
            "{k0},{hit_closed},{},{tau_c},{tau_e},{t_c},{t_e},{},{hits}",
            sol.hit_upper[k0], a.runs
        )
        .unwrap();
    }
    Ok(Produced { out: a.out, text, extra: Vec::new(), inputs: Vec::new() })
}

fn sweep(a: SweepArgs) -> Result<Produced, CliError> {
    let bytes = fs::read(&a.spec).map_err(|e| CliError::usage(format!("reading {}: {e}", a.spec.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::usage("spec is not UTF-8"))?;
    let spec = parse_sweep_spec(&text).map_err(CliError::usage)?;
    let rows = run_sweep(&spec, a.workers).map_err(|e| match &e {
        SweepError::Build { source: FamilyError::GenerationFailed { .. } | FamilyError::CertificationFailed { .. }, .. } => {
            CliError::failure(e)
        }
        _ => CliError::usage(e),
    })?;
    for row in rows.iter().filter(|r| r.estimate.has_capped_trials()) {
        eprintln!("warning: {} n = {} r = {}: {} trials hit the step cap", row.family, row.n, row.r, row.estimate.capped);
    }
    Ok(Produced {
        out: a.out,
        text: rows_to_csv(&rows),
        extra: Vec::new(),
        inputs: vec![("spec.sha256".into(), sha256_hex(&bytes))],
    })
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.graph).map_err(|e| CliError::usage(format!("reading {}: {e}", a.graph.display())))?;
    let g = parse_edge_list(&text).map_err(|e| CliError::failure(format!("{}: {e}", a.graph.display())))?;
    g.require_connected().map_err(|e| CliError::failure(format!("{}: {e}", a.graph.display())))?;
    let (n, m) = (g.vertex_count(), g.edge_count());
    if let Some(path) = &a.layers {
        let lt = fs::read_to_string(path).map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?;
        let lg = parse_layer_file(&lt, g).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
        validate_layered(&lg).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
    }
    println!("ok: {n} vertices, {m} edges");
    Ok(())
}
