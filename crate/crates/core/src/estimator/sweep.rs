//! Parameter sweeps over graph families.
//!
//! A sweep spec is flat `key = value` text. Keys before the first `[cell]`
//! header are defaults (`seed`, `trials`, `c`, `level`); each `[cell]`
//! names a `family`, comma-separated `n` and `r` lists and optionally
//! `epsilon`, `degree`, `trials`, `c`. `c = none` turns early stopping off;
//! when unset it defaults to 2 for `r > 1` and off otherwise. Lines starting
//! with `#` are comments.

use std::fmt::Write as _;

use thiserror::Error;

use super::{estimate_fixation, EstimateConfig, EstimateError, FixationEstimate, DEFAULT_EARLY_STOP_C, DEFAULT_LEVEL};
use crate::families::{build_family, Family, FamilyError, FamilyParams};
use crate::rng::{derive_indexed_seed, derive_seed};

pub const CSV_HEADER: &str = "family,n,epsilon,r,trials,p_hat,ci_lo,ci_hi,fixations,extinctions,early_stops,capped,seed";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cell {cell} ({family}, n = {n}): {source}")]
    Build {
        cell: usize,
        family: Family,
        n: usize,
        #[source]
        source: FamilyError,
    },
    #[error("cell {cell} ({family}, n = {n}, r = {r}): {source}")]
    Estimate {
        cell: usize,
        family: Family,
        n: usize,
        r: f64,
        #[source]
        source: EstimateError,
    },
}

/// Early-stopping setting of a cell or the defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
enum EarlyStop {
    Auto,
    Off,
    On(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub family: Family,
    pub n: Vec<usize>,
    pub r: Vec<f64>,
    pub epsilon: Option<f64>,
    pub degree: Option<usize>,
    pub trials: Option<u64>,
    early_stop: Option<EarlyStop>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub seed: u64,
    pub trials: u64,
    pub level: f64,
    early_stop: EarlyStop,
    pub cells: Vec<SweepCell>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { seed: 0, trials: 10_000, level: DEFAULT_LEVEL, early_stop: EarlyStop::Auto, cells: Vec::new() }
    }
}

#[derive(Default)]
struct PartialCell {
    line: usize,
    family: Option<Family>,
    n: Option<Vec<usize>>,
    r: Option<Vec<f64>>,
    epsilon: Option<f64>,
    degree: Option<usize>,
    trials: Option<u64>,
    early_stop: Option<EarlyStop>,
}

impl PartialCell {
    fn finish(self) -> Result<SweepCell, SweepError> {
        let missing = |key: &str| SweepError::Parse { line: self.line, message: format!("cell is missing `{key}`") };
        Ok(SweepCell {
            family: self.family.ok_or_else(|| missing("family"))?,
            n: self.n.clone().ok_or_else(|| missing("n"))?,
            r: self.r.clone().ok_or_else(|| missing("r"))?,
            epsilon: self.epsilon,
            degree: self.degree,
            trials: self.trials,
            early_stop: self.early_stop,
        })
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, SweepError> {
    value
        .trim()
        .parse()
        .map_err(|_| SweepError::Parse { line, message: format!("bad value {value:?} for `{key}`") })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, SweepError> {
    value.split(',').map(|v| parse_value(line, key, v)).collect()
}

fn parse_early_stop(line: usize, value: &str) -> Result<EarlyStop, SweepError> {
    if value == "none" {
        Ok(EarlyStop::Off)
    } else {
        Ok(EarlyStop::On(parse_value(line, "c", value)?))
    }
}

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec, SweepError> {
    let mut spec = SweepSpec::default();
    let mut current: Option<PartialCell> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if content.starts_with('[') {
            if content != "[cell]" {
                return Err(SweepError::Parse { line, message: format!("unknown section {content}") });
            }
            if let Some(cell) = current.take() {
                spec.cells.push(cell.finish()?);
            }
            current = Some(PartialCell { line, ..PartialCell::default() });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| SweepError::Parse { line, message: "expected `key = value`".into() })?;
        let (key, value) = (key.trim(), value.trim());
        match current.as_mut() {
            None => match key {
                "seed" => spec.seed = parse_value(line, key, value)?,
                "trials" => spec.trials = parse_value(line, key, value)?,
                "level" => spec.level = parse_value(line, key, value)?,
                "c" => spec.early_stop = parse_early_stop(line, value)?,
                _ => return Err(SweepError::Parse { line, message: format!("unknown key `{key}`") }),
            },
            Some(cell) => match key {
                "family" => {
                    cell.family = Some(value.parse().map_err(|message| SweepError::Parse { line, message })?)
                }
                "n" => cell.n = Some(parse_list(line, key, value)?),
                "r" => cell.r = Some(parse_list(line, key, value)?),
                "epsilon" => cell.epsilon = Some(parse_value(line, key, value)?),
                "degree" => cell.degree = Some(parse_value(line, key, value)?),
                "trials" => cell.trials = Some(parse_value(line, key, value)?),
                "c" => cell.early_stop = Some(parse_early_stop(line, value)?),
                _ => return Err(SweepError::Parse { line, message: format!("unknown key `{key}`") }),
            },
        }
    }
    if let Some(cell) = current {
        spec.cells.push(cell.finish()?);
    }
    Ok(spec)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub family: Family,
    pub n: usize,
    pub epsilon: Option<f64>,
    pub r: f64,
    pub seed: u64,
    pub estimate: FixationEstimate,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let e = &self.estimate;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.n,
            self.epsilon.map(|x| x.to_string()).unwrap_or_default(),
            self.r,
            e.trials,
            e.p_hat,
            e.ci_lo,
            e.ci_hi,
            e.fixations,
            e.extinctions,
            e.early_stops,
            e.capped,
            self.seed
        )
    }
}

/// Header plus one line per row.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        writeln!(out, "{}", row.csv_line()).expect("writing to a String");
    }
    out
}

/// Runs every `(n, r)` combination of every cell, in spec order. Row `i`
/// uses seed `derive_indexed_seed(spec.seed, "sweep", i)`; its graph and
/// trials use named children of that seed.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>, SweepError> {
    let mut rows = Vec::new();
    for (ci, cell) in spec.cells.iter().enumerate() {
        for &n in &cell.n {
            for &r in &cell.r {
                let seed = derive_indexed_seed(spec.seed, "sweep", rows.len() as u64);
                let params = FamilyParams {
                    family: cell.family,
                    n,
                    epsilon: cell.epsilon,
                    degree: cell.degree,
                    seed: derive_seed(seed, "graph"),
                };
                let lg = build_family(&params)
                    .map_err(|source| SweepError::Build { cell: ci, family: cell.family, n, source })?;
                let mut cfg = EstimateConfig::new(r, cell.trials.unwrap_or(spec.trials))
                    .with_seed(derive_seed(seed, "trials"))
                    .with_workers(workers);
                cfg.level = spec.level;
                cfg.early_stop_c = match cell.early_stop.unwrap_or(spec.early_stop) {
                    EarlyStop::Auto => (r > 1.0).then_some(DEFAULT_EARLY_STOP_C),
                    EarlyStop::Off => None,
                    EarlyStop::On(c) => Some(c),
                };
                let estimate = estimate_fixation(&lg.graph, &cfg)
                    .map_err(|source| SweepError::Estimate { cell: ci, family: cell.family, n, r, source })?;
                rows.push(SweepRow { family: cell.family, n, epsilon: cell.epsilon, r, seed, estimate });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_cells() {
        let spec = parse_sweep_spec(
            "# demo\nseed = 9\ntrials = 100\nc = none\n\n[cell]\nfamily = star\nn = 5, 6\nr = 1.5,2\n[cell]\nfamily = amplifier\nn = 64\nr = 2\nepsilon = 1\nc = 3\ntrials = 7\n",
        )
        .unwrap();
        assert_eq!((spec.seed, spec.trials, spec.early_stop), (9, 100, EarlyStop::Off));
        assert_eq!(spec.cells.len(), 2);
        assert_eq!(spec.cells[0].n, vec![5, 6]);
        assert_eq!(spec.cells[0].r, vec![1.5, 2.0]);
        assert_eq!(spec.cells[1].epsilon, Some(1.0));
        assert_eq!(spec.cells[1].early_stop, Some(EarlyStop::On(3.0)));
        assert_eq!(spec.cells[1].trials, Some(7));
    }

    #[test]
    fn parse_errors_name_the_line() {
        for (text, line) in [
            ("seed = x\n", 1),
            ("[cell]\nfamily = blob\n", 2),
            ("[cells]\n", 1),
            ("[cell]\nfamily = star\nr = 2\n", 1),
            ("trials\n", 1),
            ("[cell]\nfoo = 1\n", 2),
        ] {
            match parse_sweep_spec(text) {
                Err(SweepError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_spec_gives_header_only() {
        let spec = parse_sweep_spec("seed = 1\n").unwrap();
        let rows = run_sweep(&spec, 1).unwrap();
        assert_eq!(rows_to_csv(&rows), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn sweep_is_deterministic_and_names_bad_cells() {
        let spec = parse_sweep_spec("seed = 4\ntrials = 300\n[cell]\nfamily = cycle\nn = 5, 7\nr = 1, 2\n").unwrap();
        let a = rows_to_csv(&run_sweep(&spec, 1).unwrap());
        let b = rows_to_csv(&run_sweep(&spec, 4).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 5);
        assert!(a.lines().nth(1).unwrap().starts_with("cycle,5,,1,300,"));
        let bad = parse_sweep_spec("[cell]\nfamily = cycle\nn = 5\nr = 2\n[cell]\nfamily = cycle\nn = 1\nr = 2\n").unwrap();
        match run_sweep(&bad, 1) {
            Err(e @ SweepError::Build { cell: 1, n: 1, .. }) => assert!(e.to_string().contains("cell 1 (cycle, n = 1)")),
            other => panic!("{other:?}"),
        }
    }
}
