//! `offr`: run online fair-ranking experiments and write their CSVs.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Settings;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "offr", version, about = "Online Frank-Wolfe fair ranking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one algorithm for every seed.
    Run(Common),
    /// Sweep the fairness weight and write tradeoff.csv.
    Sweep(Common),
    /// Compare OFFR, paced OFFR and FairCo trajectories.
    CompareFairco(Common),
    /// Score a stored exposure matrix.
    EvalStatic(EvalStatic),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat TOML file with the same keys as the flags (underscored).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Args)]
struct EvalStatic {
    /// Exposure matrix CSV (`user,item,value`), e.g. a pi_hat_seed<S>.csv.
    #[arg(long)]
    pi: PathBuf,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn merged(self) -> Result<Settings, CliError> {
        let base = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        Ok(base.overlay(self.settings))
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(c) => commands::run(c.merged()?),
        Command::Sweep(c) => commands::sweep(c.merged()?),
        Command::CompareFairco(c) => commands::compare_fairco(c.merged()?),
        Command::EvalStatic(e) => {
            let text = commands::eval_static(e.common.merged()?, &e.pi)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("offr: {e}");
            e.exit_code()
        }
    }
}
