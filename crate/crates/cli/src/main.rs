//! `propuq`: deterministic terrain path-loss simulation and surrogate-based
//! uncertainty quantification from a single experiment config file.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::PartialFailure;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "propuq",
    version,
    about = "Path-loss uncertainty quantification over irregular terrain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (TOML).
    #[arg(long, global = true, default_value = "propuq.toml")]
    config: PathBuf,

    /// Override the training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread count (default: hardware parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the surrogate method (mc|standard|sparse|apce).
    #[arg(long, global = true)]
    method: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One deterministic run at the nominal antenna configuration.
    Simulate,
    /// Latin hypercube design plus forward-model evaluations (resumable).
    Sample,
    /// Fit a surrogate on an existing sample set.
    Fit,
    /// Full pipeline: design, evaluate, fit, extract statistics.
    Uq,
    /// Monte Carlo reference statistics (cached by config hash).
    Mc,
    /// Error statistics of every surrogate method against the MC reference
    /// over independent training sets.
    Compare,
    /// Adaptive-fit convergence sweep over training-set sizes.
    Convergence,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        // a second initialization (e.g. in tests) is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config_dir = cli
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let exp = ExperimentConfig::load(&cli.config)?.resolve(
        &config_dir,
        cli.seed,
        cli.method.as_deref(),
        cli.out.as_deref(),
    )?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&exp),
        Command::Sample => commands::cmd_sample(&exp),
        Command::Fit => commands::cmd_fit(&exp),
        Command::Uq => commands::cmd_uq(&exp),
        Command::Mc => commands::cmd_mc(&exp),
        Command::Compare => commands::cmd_compare(&exp),
        Command::Convergence => commands::cmd_convergence(&exp),
    }
}

/// 2 = configuration error, 3 = numerical failure, 4 = partial sample
/// failure; anything else maps to the generic failure code 1.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<PartialFailure>().is_some() {
        return 4;
    }
    if let Some(e) = err.downcast_ref::<propuq::Error>() {
        return match e {
            propuq::Error::Numerics { .. } => 3,
            propuq::Error::Io(_) => 1,
            _ => 2,
        };
    }
    // config loading and validation failures surface as plain messages
    if err.chain().any(|c| c.downcast_ref::<toml::de::Error>().is_some()) {
        return 2;
    }
    let text = err.to_string();
    if text.contains("config") || text.contains("not found") {
        2
    } else {
        1
    }
}
