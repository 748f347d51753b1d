//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 config error, 3 state error (missing or stale
//! artifacts), 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use driftsig_harness::{
    stage_incremental, stage_ingest, stage_protocol, stage_report, stage_sweep, stage_synth,
    ExperimentConfig, HarnessError,
};

#[derive(Parser)]
#[command(
    name = "driftsig",
    about = "Detect and explain label-corruption concept drift via feature-relevance fingerprints",
    version
)]
struct Cli {
    /// Experiment config JSON; defaults apply for missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the config's worker-thread count (0 = default).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic recordings as ingest-compatible CSVs.
    Synth,
    /// Extract windowed features and the selected subset to CSVs.
    Ingest,
    /// Train clean and worst-case models, select and calibrate signatures.
    Protocol,
    /// Run the corruption-ratio sweep over protocol artifacts.
    Sweep,
    /// Run the chunked incremental stream with drift screening.
    Incremental,
    /// Emit figure CSVs and a summary from the sweep.
    Report,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Synth => stage_synth(&cfg),
        Command::Ingest => stage_ingest(&cfg),
        Command::Protocol => stage_protocol(&cfg),
        Command::Sweep => stage_sweep(&cfg),
        Command::Incremental => stage_incremental(&cfg),
        Command::Report => stage_report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("driftsig: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
