//! CLI wiring for the repair pipeline.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, missing
//! inputs, malformed configs), 2 on runtime errors. Every subcommand
//! validates its configuration before writing any file.

mod args;
mod commands;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<logmend_log::LogError> for CliError {
    fn from(e: logmend_log::LogError) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Parses `argv` (without the program name) and runs the subcommand.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut full: Vec<String> = vec!["logmend".into()];
    full.extend(argv.into_iter().map(Into::into));

    let cli = match Cli::try_parse_from(&full) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };

    let result = match &cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Mask(args) => commands::mask(args),
        Command::Tune(args) => commands::tune(args),
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Repair(args) => commands::repair(args),
    };

    match result {
        Ok(()) => 0,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(CliError::Runtime(error)) => {
            eprintln!("error: {error:#}");
            2
        }
    }
}
