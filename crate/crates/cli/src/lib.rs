//! The `moran` command line: build graphs, solve small instances exactly,
//! estimate fixation probabilities, evaluate bounds, and run the ruin game
//! and chain C analyses.
//!
//! Every command that writes `--out <path>` also writes `<path>.manifest`,
//! a flat `key = value` record of the arguments, resolved parameters,
//! input hashes and output hashes. `moran --replay <manifest>` runs the
//! command again and checks that the output bytes match.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub use manifest::Manifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or parameters; exit code 1.
    Usage(String),
    /// The computation itself failed (non-convergence, failed certificate,
    /// invalid graph, I/O); exit code 2.
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }

    pub(crate) fn usage(e: impl fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub(crate) fn failure(e: impl fmt::Display) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Parser, Debug)]
#[command(name = "moran", version, about = "Moran process experiments on graphs")]
#[command(arg_required_else_help = true, args_conflicts_with_subcommands = true)]
pub struct Cli {
    /// Re-run the command recorded in a manifest and check its output hashes.
    #[arg(long, value_name = "MANIFEST")]
    pub replay: Option<PathBuf>,
    /// With --replay: write the output here instead of the recorded path.
    #[arg(long, value_name = "PATH", requires = "replay")]
    pub replay_out: Option<PathBuf>,
    /// With --replay: override the recorded worker count.
    #[arg(long, value_name = "N", requires = "replay")]
    pub replay_workers: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a graph family and write it as an edge list.
    Build(BuildArgs),
    /// Solve for exact fixation probabilities (at most 20 vertices, or a lumped star).
    Exact(ExactArgs),
    /// Monte Carlo estimate of the fixation probability.
    Estimate(EstimateArgs),
    /// Evaluate the graph-level bounds.
    Bounds(BoundsArgs),
    /// Capped-stake gambler's ruin: lower bound and brute-force optimum.
    Ruin(RuinArgs),
    /// Closed forms, exact values and simulation of chain C.
    Chainc(ChainCArgs),
    /// Run a parameter sweep described by a spec file.
    Sweep(SweepArgs),
    /// Check an edge list (and optional layer file) for consistency.
    Validate(ValidateArgs),
}

/// Where a command gets its graph from.
#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Edge-list file to load.
    #[arg(long, value_name = "PATH", conflicts_with = "family")]
    pub graph: Option<PathBuf>,
    /// Family to build: suppressor, amplifier, star, complete, cycle, path, random_regular.
    #[arg(long, value_name = "NAME")]
    pub family: Option<String>,
    /// Family size parameter.
    #[arg(long, value_name = "N", requires = "family")]
    pub n: Option<usize>,
    /// Amplifier epsilon in (0, 1].
    #[arg(long, value_name = "EPS", requires = "family")]
    pub epsilon: Option<f64>,
    /// Amplifier alpha, instead of deriving it from epsilon.
    #[arg(long, value_name = "ALPHA", requires = "family", conflicts_with = "epsilon")]
    pub alpha: Option<usize>,
    /// Degree for random_regular.
    #[arg(long, value_name = "D", requires = "family")]
    pub degree: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Master seed; the graph uses a stream derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output edge-list path (layers go to <out>.layers).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Master seed for randomized families.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mutant fitness r.
    #[arg(long, value_name = "R")]
    pub r: f64,
    /// Comma-separated initial mutant set; default is every single vertex.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub set: Option<Vec<usize>>,
    /// Use the lumped star chain (graph must be a star, any size).
    #[arg(long)]
    pub lumped_star: bool,
    /// Output CSV path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Mutant fitness r.
    #[arg(long, value_name = "R")]
    pub r: f64,
    /// Number of independent trials.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Early-stopping constant c, or "none"; default 2 when r > 1, else none.
    #[arg(long, value_name = "C")]
    pub c: Option<String>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Confidence level of the Wilson interval.
    #[arg(long, default_value_t = 0.99)]
    pub level: f64,
    /// Step cap per trial: "default", "unlimited" or a number of steps.
    #[arg(long, default_value = "default")]
    pub step_cap: String,
    /// Comma-separated fixed initial set; default is one uniform mutant.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub set: Option<Vec<usize>>,
    /// Output CSV path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Master seed for randomized families.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mutant fitness r.
    #[arg(long, value_name = "R")]
    pub r: f64,
    /// Output CSV path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RuinArgs {
    /// Target fortune m.
    #[arg(long)]
    pub m: usize,
    /// Stake cap sigma.
    #[arg(long)]
    pub sigma: usize,
    /// Fitness r > 1.
    #[arg(long, value_name = "R")]
    pub r: f64,
    /// Single starting fortune; default is every k in 0..=m.
    #[arg(long)]
    pub k: Option<usize>,
    /// Skip the brute-force search and report only the bound.
    #[arg(long)]
    pub bound_only: bool,
    /// Output CSV path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChainCArgs {
    /// Vertex count N of the graph the chain is compared with.
    #[arg(long, value_name = "N")]
    pub vertices: usize,
    /// Upper state kappa.
    #[arg(long)]
    pub kappa: usize,
    /// Amplifier alpha.
    #[arg(long)]
    pub alpha: f64,
    /// Fitness r.
    #[arg(long, value_name = "R")]
    pub r: f64,
    /// Single start state; default is every k0 in 1..kappa.
    #[arg(long)]
    pub k0: Option<usize>,
    /// Simulated runs per start state (0 skips simulation).
    #[arg(long, default_value_t = 0)]
    pub runs: u64,
    /// Step limit per simulated run; default unlimited.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Master seed for simulation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Sweep spec file.
    #[arg(long, value_name = "PATH")]
    pub spec: PathBuf,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output CSV path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Edge-list file to check.
    #[arg(long, value_name = "PATH")]
    pub graph: PathBuf,
    /// Layer file written by `build` for layered families.
    #[arg(long, value_name = "PATH")]
    pub layers: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match run_inner(&argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn run_inner(argv: &[OsString]) -> Result<(), CliError> {
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(()),
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Err(CliError::usage("no command given")),
                _ => Err(CliError::usage("invalid arguments")),
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(CliError::usage)?;
    if let Some(path) = &cli.replay {
        return manifest::replay(path, cli.replay_out.as_deref(), cli.replay_workers);
    }
    let (name, sub) = matches.subcommand().expect("a subcommand is required without --replay");
    let params = manifest::resolved_params(sub);
    let command = cli.command.expect("subcommand present");
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    commands::dispatch(name, command, &args, params)
}
