//! Command-line surface of the phaselock laboratory.

pub mod cache;
pub mod commands;
pub mod config;

use std::io::Write;

use clap::Parser;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("theorem-violation alarm: {0}")]
    Alarm(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Alarm(_) => 4,
        }
    }
}

impl From<phaselock::Error> for CliError {
    fn from(e: phaselock::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// Parses `args`, runs the command writing its report to `out`, and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("phaselock: {e}");
            e.exit_code()
        }
    }
}
