//! `moralscope`: prepare corpora, classify, train, evaluate and report.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod commands;
mod config;
mod context;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use context::{Ctx, UsageError};

#[derive(Parser, Debug)]
#[command(
    name = "moralscope",
    version,
    about = "Moral foundation detection experiments"
)]
struct Cli {
    /// Directory all relative paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    /// Run configuration (TOML), relative to the working directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build gold sub-corpora from a raw annotation table.
    Prepare(commands::prepare::Args),
    /// Run one backend over a prepared sub-corpus.
    Classify(commands::classify::Args),
    /// Train a classifier on one sub-corpus.
    Train(commands::train::Args),
    /// Score a prediction file against gold labels.
    Evaluate(commands::evaluate::Args),
    /// Render result tables from all evaluation reports.
    Report(commands::report::Args),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx::new(&cli.workdir, cli.config.as_deref())?;
    match cli.command {
        Command::Prepare(a) => commands::prepare::run(&ctx, a),
        Command::Classify(a) => commands::classify::run(&ctx, a),
        Command::Train(a) => commands::train::run(&ctx, a),
        Command::Evaluate(a) => commands::evaluate::run(&ctx, a),
        Command::Report(a) => commands::report::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
