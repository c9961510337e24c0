//! `boolean-spheres`: simulation, estimation, variance and reproduction
//! tables for planar Boolean models of discs.

mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "boolean-spheres", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one realization and write its germs.
    Simulate(Settings),
    /// Estimate the radius distribution from simulated or stored realizations.
    Estimate(Settings),
    /// Asymptotic variances by quasi-Monte Carlo, optionally with empirical ones.
    Variance(Settings),
    /// Distance table of all estimators over many replications.
    Table(Settings),
    /// Run the invariant suites; exits with 2 unless every suite passes.
    Validate(Settings),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("validation did not pass: {0}")]
    Validation(String),
}

impl From<boolean_spheres::Error> for CliError {
    fn from(e: boolean_spheres::Error) -> Self {
        use boolean_spheres::Error as E;
        match e {
            E::Io(_) | E::InsufficientMargin { .. } | E::BoundViolation(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let run = |s: Settings, f: fn(Settings) -> Result<(), CliError>| s.resolve().and_then(f);
    let result = match cli.command {
        Command::Simulate(s) => run(s, commands::simulate),
        Command::Estimate(s) => run(s, commands::estimate),
        Command::Variance(s) => run(s, commands::variance),
        Command::Table(s) => run(s, commands::table),
        Command::Validate(s) => run(s, commands::validate),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
