//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure,
//! 3 I/O failure.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand};

use crate::error::Error;
pub use config::{Flags, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ceenet",
    version,
    about = "Trade gravity, correspondence analysis and ownership networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Load every given input and report record counts and problems.
    Validate,
    /// Fit the Poisson gravity model per year.
    Gravity,
    /// Correspondence analysis of country-year × sector exports.
    TradeCa,
    /// Correspondence analysis and Ward clustering of city × sector ownership.
    CityCa,
    /// City and country aggregates of ownership links.
    Network,
    /// Write the seeded synthetic fixtures.
    Synth,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Csv { source, .. } if source.is_io_error() => EXIT_IO,
        e if e.is_validation() => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn load_config(flags: &Flags) -> Result<RunConfig, Failure> {
    let (file, base) = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let map = config::parse_config(&text)
                .map_err(|m| Failure::config(format!("{}: {m}", path.display())))?;
            (map, path.parent().map(Path::to_path_buf))
        }
        None => Default::default(),
    };
    RunConfig::resolve(flags, &file, base.as_deref()).map_err(Failure::config)
}

pub fn execute(command: Command, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Validate => commands::validate(cfg, stdout),
        Command::Gravity => commands::gravity(cfg, stdout),
        Command::TradeCa => commands::trade_ca(cfg, stdout),
        Command::CityCa => commands::city_ca(cfg, stdout),
        Command::Network => commands::network(cfg, stdout),
        Command::Synth => commands::synth(cfg, stdout),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    let result = load_config(&cli.flags).and_then(|cfg| execute(cli.command, &cfg, stdout));
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}
