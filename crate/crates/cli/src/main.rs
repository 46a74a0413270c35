use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::debug;
use molrelay::commands::{error_exit_code, run_command, Command};
use molrelay::config::load_config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Arrival probability table q(offset, age)
    Arrivals,
    /// ROC sweep of a common fixed threshold
    Roc,
    /// Capacity over the MSI variance sweep
    Capacity,
    /// Semi-analytic Monte Carlo against the closed forms
    Simulate,
    /// Full acceptance suite
    Validate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Arrivals => Command::Arrivals,
            Cmd::Roc => Command::Roc,
            Cmd::Capacity => Command::Capacity,
            Cmd::Simulate => Command::Simulate,
            Cmd::Validate => Command::Validate,
        }
    }
}

/// Relay-assisted mobile molecular communication simulator.
///
/// Exit status: 0 success, 1 validation failure, 2 config error,
/// 3 numeric error.
#[derive(Debug, Parser)]
#[command(name = "molrelay", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,

    /// Config file (`key = value` lines); an empty file selects the baseline.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory; overrides the config `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("molrelay: {e}");
            return ExitCode::from(error_exit_code(&e) as u8);
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from(&config.out));
    debug!("config: {config:?}");

    match run_command(args.command.into(), &config, &out) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("molrelay {}: {e}", Command::from(args.command));
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
