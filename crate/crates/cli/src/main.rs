//! Command-line interface: estimate interventional effect curves from
//! observational time series, simulate benchmark processes, score methods
//! against the ground-truth oracle, and build causal-effect graphs.

mod commands;
mod config;
mod io;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{FileConfig, RunConfig};

#[derive(Parser)]
#[command(
    name = "mintt",
    about = "Total causal effects from stationary time series via kernel marginal integration",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonOpts {
    /// JSON config file with flat keys; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (required; created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input CSV (header = component names, one row per time step).
    #[arg(long)]
    input: Option<String>,
    /// Builtin benchmark model id (1..=6) to simulate as input.
    #[arg(long)]
    model: Option<u32>,
    /// Sample length when simulating.
    #[arg(long)]
    n: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Burn-in steps discarded when simulating.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Apply log transform and first-order differencing to the input.
    #[arg(long)]
    logdiff: bool,
    /// Adjustment lag window p.
    #[arg(long)]
    p: Option<usize>,
    /// Rule-of-thumb bandwidth multiplier.
    #[arg(long)]
    h_mult: Option<f64>,
    /// Maximal number of boosting iterations.
    #[arg(long)]
    boost: Option<usize>,
    /// Absolute stopping fraction for the boosting stopping rule.
    #[arg(long)]
    stop_frac: Option<f64>,
    /// Ratio threshold for the boosting stopping rule.
    #[arg(long)]
    stop_ratio: Option<f64>,
    /// Disable the boosting stopping rule (fixed iteration count).
    #[arg(long)]
    no_stopping: bool,
    /// Initial fit: locally-constant or partially-locally-linear.
    #[arg(long)]
    fit_mode: Option<String>,
    /// Response transform: identity, square, abs or le:<b>.
    #[arg(long)]
    transform: Option<String>,
    /// Intervention values: deciles, <k>xdeciles, or a comma list.
    #[arg(long)]
    interventions: Option<String>,
    /// Adjust for contemporaneous values of the other components.
    #[arg(long)]
    instantaneous: bool,
    /// Worker threads (0 = automatic).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a builtin benchmark process and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Estimate one interventional effect curve.
    Estimate {
        #[command(flatten)]
        common: CommonOpts,
        /// Response component name.
        #[arg(long)]
        c1: Option<String>,
        /// Intervention component name.
        #[arg(long)]
        c2: Option<String>,
        /// Lag between intervention and response.
        #[arg(long)]
        s: Option<usize>,
    },
    /// Score one estimation method against the ground-truth oracle.
    Benchmark {
        #[command(flatten)]
        common: CommonOpts,
        /// Estimation method: mint-t or reference.
        #[arg(long)]
        method: Option<String>,
        /// Oracle Monte-Carlo replications.
        #[arg(long)]
        oracle_reps: Option<usize>,
        /// Reference-method simulation replications.
        #[arg(long)]
        reference_reps: Option<usize>,
        /// Reference noise: resample or gaussian.
        #[arg(long)]
        noise_mode: Option<String>,
    },
    /// Estimate effects for every component pair and lag, and emit the
    /// thresholded causal graph.
    Graph {
        #[command(flatten)]
        common: CommonOpts,
        /// Maximal lag in the graph.
        #[arg(long)]
        s_max: Option<usize>,
    },
}

/// Merges defaults, config-file values and command-line flags.
fn resolve(command: &str, common: &CommonOpts, extra: ExtraOpts) -> Result<RunConfig> {
    let file = FileConfig::load(common.config.as_deref())?;
    let out = common
        .out
        .clone()
        .or_else(|| file.out.as_ref().map(PathBuf::from))
        .context("--out is required")?;
    // Benchmark tables and the graph recipe use a fixed iteration count
    // (and the graph squared responses) unless told otherwise; the
    // stopping rule stays on for one-off estimates.
    let default_stopping = command == "estimate";
    let default_transform = if command == "graph" {
        "square"
    } else {
        "identity"
    };
    Ok(RunConfig {
        command: command.to_string(),
        input: common.input.clone().or(file.input),
        model: common.model.or(file.model),
        n: common.n.or(file.n).unwrap_or(1000),
        seed: common.seed.or(file.seed).unwrap_or(1),
        burn_in: common
            .burn_in
            .or(file.burn_in)
            .unwrap_or(mintt::DEFAULT_BURN_IN),
        logdiff: common.logdiff || file.logdiff.unwrap_or(false),
        c1: extra.c1.or(file.c1),
        c2: extra.c2.or(file.c2),
        s: extra.s.or(file.s),
        p: common.p.or(file.p).unwrap_or(10),
        h_mult: common.h_mult.or(file.h_mult).unwrap_or(2.0),
        boost: common.boost.or(file.boost).unwrap_or(10),
        stop_frac: common.stop_frac.or(file.stop_frac).unwrap_or(0.005),
        stop_ratio: common.stop_ratio.or(file.stop_ratio).unwrap_or(0.75),
        stopping: if common.no_stopping {
            false
        } else {
            file.stopping.unwrap_or(default_stopping)
        },
        fit_mode: common
            .fit_mode
            .clone()
            .or(file.fit_mode)
            .unwrap_or_else(|| "locally-constant".to_string()),
        transform: common
            .transform
            .clone()
            .or(file.transform)
            .unwrap_or_else(|| default_transform.to_string()),
        interventions: common
            .interventions
            .clone()
            .or(file.interventions)
            .unwrap_or_else(|| "deciles".to_string()),
        instantaneous: common.instantaneous || file.instantaneous.unwrap_or(false),
        s_max: extra.s_max.or(file.s_max).unwrap_or(9),
        method: extra
            .method
            .or(file.method)
            .unwrap_or_else(|| "mint-t".to_string()),
        oracle_reps: extra.oracle_reps.or(file.oracle_reps).unwrap_or(10_000),
        reference_reps: extra.reference_reps.or(file.reference_reps).unwrap_or(1000),
        noise_mode: extra
            .noise_mode
            .or(file.noise_mode)
            .unwrap_or_else(|| "resample".to_string()),
        workers: common.workers.or(file.workers).unwrap_or(0),
        out,
    })
}

#[derive(Default)]
struct ExtraOpts {
    c1: Option<String>,
    c2: Option<String>,
    s: Option<usize>,
    s_max: Option<usize>,
    method: Option<String>,
    oracle_reps: Option<usize>,
    reference_reps: Option<usize>,
    noise_mode: Option<String>,
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let (cfg, runner): (RunConfig, fn(&RunConfig) -> Result<()>) = match &cli.command {
        Command::Simulate { common } => (
            resolve("simulate", common, ExtraOpts::default())?,
            commands::cmd_simulate,
        ),
        Command::Estimate { common, c1, c2, s } => (
            resolve(
                "estimate",
                common,
                ExtraOpts {
                    c1: c1.clone(),
                    c2: c2.clone(),
                    s: *s,
                    ..ExtraOpts::default()
                },
            )?,
            commands::cmd_estimate,
        ),
        Command::Benchmark {
            common,
            method,
            oracle_reps,
            reference_reps,
            noise_mode,
        } => (
            resolve(
                "benchmark",
                common,
                ExtraOpts {
                    method: method.clone(),
                    oracle_reps: *oracle_reps,
                    reference_reps: *reference_reps,
                    noise_mode: noise_mode.clone(),
                    ..ExtraOpts::default()
                },
            )?,
            commands::cmd_benchmark,
        ),
        Command::Graph { common, s_max } => (
            resolve(
                "graph",
                common,
                ExtraOpts {
                    s_max: *s_max,
                    ..ExtraOpts::default()
                },
            )?,
            commands::cmd_graph,
        ),
    };
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .context("cannot configure worker pool")?;
    }
    runner(&cfg)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
