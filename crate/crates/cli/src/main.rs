//! `pss`: verify pseudo-spherical families, run the obstruction analysis and build surfaces.
//!
//! Exit codes: 0 success, 1 a check failed (or an internal error), 2 invalid input or
//! constraint violation.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, RunConfig};

/// A command outcome other than success, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    pub fn check(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (args, run): (_, fn(&RunConfig) -> Result<(), Failure>) = match &cli.command {
        Command::Verify(a) => (a, commands::verify),
        Command::Obstruct(a) => (a, commands::obstruct),
        Command::Immerse(a) => (a, commands::immerse),
    };
    let outcome = RunConfig::from_args(args).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pss: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
