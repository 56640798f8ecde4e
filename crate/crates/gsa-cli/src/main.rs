//! Command-line front end for the sensitivity-analysis library.
//!
//! A JSON config file describes the input space, the model and the analyses
//! to run. `run` executes everything; `sample`, `evaluate`, `analyze` and
//! `report` expose the stages individually so expensive model runs can be
//! farmed out and resumed.
//!
//! Exit codes: 0 success, 2 config or artifact problem, 3 model evaluation
//! failure, 4 analysis failure.

mod artifacts;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Stage-tagged failure; the tag decides the exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Evaluation(String),
    Analysis(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn evaluation(msg: impl Into<String>) -> Self {
        CliError::Evaluation(msg.into())
    }

    pub fn analysis(msg: impl Into<String>) -> Self {
        CliError::Analysis(msg.into())
    }

    fn stage(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Evaluation(_) => "evaluation",
            CliError::Analysis(_) => "analysis",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Evaluation(m) | CliError::Analysis(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Evaluation(_) => 3,
            CliError::Analysis(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "gsa", version, about = "Global sensitivity analysis toolkit")]
struct Cli {
    /// Override the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Evaluation worker threads (default: all cores, or GSA_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the output directory from the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured analysis end to end.
    Run {
        config: PathBuf,
    },
    /// Generate the design for one analysis block and write it to disk.
    Sample {
        config: PathBuf,
        /// Analysis block: morris, regression, sobol or metamodel.
        #[arg(long)]
        block: String,
    },
    /// Evaluate the configured model over a persisted design file.
    Evaluate {
        config: PathBuf,
        /// Path to a `<block>_design.csv` produced by `sample`.
        #[arg(long)]
        design: PathBuf,
    },
    /// Run one analysis block against a persisted evaluation file.
    Analyze {
        config: PathBuf,
        /// Analysis block: morris, regression, sobol or metamodel.
        #[arg(long)]
        block: String,
        /// Path to a `<block>_eval.csv` produced by `evaluate`.
        #[arg(long)]
        eval: PathBuf,
        /// Design metadata sidecar; inferred from the eval path when absent.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Write exploration datasets (scatter, main effects, cobweb) from a
    /// persisted evaluation file.
    Report {
        config: PathBuf,
        /// Path to a `<block>_eval.csv` produced by `evaluate`.
        #[arg(long)]
        eval: PathBuf,
        /// Bins per input for the main-effect curves.
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Fraction of largest outputs highlighted in the cobweb dataset.
        #[arg(long, default_value_t = 0.05)]
        top: f64,
    },
}

fn config_path(command: &Command) -> &PathBuf {
    match command {
        Command::Run { config }
        | Command::Sample { config, .. }
        | Command::Evaluate { config, .. }
        | Command::Analyze { config, .. }
        | Command::Report { config, .. } => config,
    }
}

fn init_workers(cli_workers: Option<usize>) -> Result<(), CliError> {
    let workers = match cli_workers {
        Some(w) => Some(w),
        None => match std::env::var("GSA_WORKERS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                CliError::config(format!("GSA_WORKERS: `{v}` is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::config("--workers: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    init_workers(cli.workers)?;
    let mut problem = config::load(config_path(&cli.command))?;
    if let Some(seed) = cli.seed {
        problem.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        problem.out_dir = dir.clone();
    }
    match &cli.command {
        Command::Run { .. } => pipeline::run(&problem),
        Command::Sample { block, .. } => {
            let path = pipeline::stage_sample(&problem, block)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Evaluate { design, .. } => {
            let path = pipeline::stage_evaluate(&problem, design)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Analyze { block, eval, meta, .. } => {
            pipeline::stage_analyze(&problem, block, eval, meta.as_deref())
        }
        Command::Report { eval, bins, top, .. } => {
            pipeline::stage_report(&problem, eval, *bins, *top)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsa: [{}] {}", e.stage(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
