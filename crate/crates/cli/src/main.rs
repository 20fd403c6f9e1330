//! `hotda`: hierarchical optimal transport for domain adaptation.
//!
//! Subcommands: `ot` (transport distance between measure files), `hw`
//! (hierarchical distance between structured datasets), `adapt` (the
//! structure-matching pipeline), `bound` (generalization-bound reports),
//! and `gen` (synthetic scenarios). Exit codes: 0 success, 1 usage,
//! 2 data, 3 numerical failure.

// Negated comparisons like `!(x > 0.0)` are guards that must reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod io;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl From<hotda_core::Error> for CliError {
    fn from(e: hotda_core::Error) -> Self {
        if e.is_rejected_input() {
            CliError::Data(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hotda",
    version,
    about = "Hierarchical optimal transport for domain adaptation"
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
