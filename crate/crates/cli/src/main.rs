//! `driftlab`: simulate, correct, decode, evaluate, export features, serve.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on a data error.

mod cmd;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Usage;

#[derive(Debug, Parser)]
#[command(name = "driftlab", version, about = "Vertical drift correction for multi-line reading eye-tracking data")]
struct Cli {
    /// Worker threads for per-trial work. Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON file whose keys mirror the command's flags. Flags given on the
    /// command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset over a grid of distortions.
    Simulate(cmd::simulate::SimulateArgs),
    /// Run correction algorithms, optionally with a weighted vote, over a dataset.
    Correct(cmd::correct::CorrectArgs),
    /// Decode model logits into line assignments.
    Decode(cmd::decode::DecodeArgs),
    /// Score predictions against gold lines.
    Evaluate(cmd::evaluate::EvaluateArgs),
    /// Write the model input features of every trial.
    ExportFeatures(cmd::features::FeaturesArgs),
    /// Start the review service.
    Serve(cmd::serve::ServeArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = cli.config.as_deref().map(config::ConfigFile::read).transpose()?;
    let jobs = config::jobs(cli.jobs, file.as_ref())?;
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Usage(format!("cannot size the worker pool: {e}")))?;
    }
    let ctx = cmd::Context { jobs };
    match cli.command {
        Command::Simulate(a) => cmd::simulate::run(&ctx, config::resolve(a, file.as_ref(), "simulate")?),
        Command::Correct(a) => cmd::correct::run(&ctx, config::resolve(a, file.as_ref(), "correct")?),
        Command::Decode(a) => cmd::decode::run(&ctx, config::resolve(a, file.as_ref(), "decode")?),
        Command::Evaluate(a) => cmd::evaluate::run(&ctx, config::resolve(a, file.as_ref(), "evaluate")?),
        Command::ExportFeatures(a) => {
            cmd::features::run(&ctx, config::resolve(a, file.as_ref(), "export-features")?)
        }
        Command::Serve(a) => cmd::serve::run(&ctx, config::resolve(a, file.as_ref(), "serve")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            eprintln!("Run `driftlab --help` for usage.");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
