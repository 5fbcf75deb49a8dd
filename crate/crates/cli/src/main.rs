//! Command-line front end for the jamming detection pipeline.
//!
//! Typical flow: `gen` synthesizes the dataset, `train` fits every model,
//! `eval`/`bnm`/`correct`/`bench` analyze them, and `report` collates all
//! artifacts. Every artifact is stamped with the configuration hash and
//! seed, so a run is reproducible end to end from its config file alone.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use jamguard::commands;
use jamguard::config::PipelineConfig;
use jamguard::pipeline::Workspace;

#[derive(Debug, Parser)]
#[command(name = "jamguard", version, about = "Jamming detection on cellular KPI streams")]
struct Cli {
    /// Pipeline configuration file (JSON); built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the configured random seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Directory all artifacts are written to and read from.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the labeled KPI dataset.
    Gen,
    /// Fit the configured detectors and the echo state network.
    Train,
    /// Score trained models on the held-out test rows.
    Eval {
        /// Evaluate only this model (a detector name or `esn`).
        #[arg(long, value_name = "NAME")]
        model: Option<String>,
        /// Measure and embed runtimes (makes eval artifacts run-dependent).
        #[arg(long)]
        with_timing: bool,
    },
    /// Fit the belief network; optionally answer a posterior query.
    Bnm {
        /// JSON file with any of: snr (dB), cqi, dl_mcs, ul_mcs.
        #[arg(long, value_name = "PATH")]
        evidence: Option<PathBuf>,
    },
    /// Review borderline sequential decisions against the belief network.
    Correct {
        /// Restrict the pass to one scenario's test windows.
        #[arg(long, value_name = "ID")]
        scenario: Option<String>,
    },
    /// Measure training and inference runtimes for every model.
    Bench,
    /// Collate all artifacts into one Markdown report.
    Report {
        /// Proceed even when artifacts mix configuration hashes.
        #[arg(long)]
        force: bool,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter("JAMGUARD_LOG")).init();
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    config.finalize(cli.seed)?;
    let ws = Workspace::new(&cli.out);
    match &cli.command {
        Command::Gen => commands::gen::run(&config, &ws),
        Command::Train => commands::train::run(&config, &ws),
        Command::Eval { model, with_timing } => {
            commands::eval::run(&config, &ws, model.as_deref(), *with_timing)
        }
        Command::Bnm { evidence } => commands::bnm::run(&config, &ws, evidence.as_deref()),
        Command::Correct { scenario } => {
            commands::correct::run(&config, &ws, scenario.as_deref())
        }
        Command::Bench => commands::bench::run(&config, &ws),
        Command::Report { force } => commands::report::run(&config, &ws, *force),
    }
}
