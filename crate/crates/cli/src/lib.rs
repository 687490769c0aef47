//! Command-line front end for `itereq`. Every command writes one CSV table.

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

pub mod config;
pub mod output;
mod run;

pub use config::{CliConfig, Command};
pub use run::execute;

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters; exit 2.
    Usage(String),
    /// A computation failed; `op` names it. Exit 3.
    Numerical { op: String, message: String },
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }

    /// Maps a library error raised while running `op`. Parameter and domain
    /// errors are the caller's fault and count as usage errors.
    pub fn from_lib(op: &str, e: itereq::Error) -> Self {
        use itereq::Error as E;
        let message = e.to_string();
        let op = match &e {
            E::Domain { .. } | E::InvalidParameter(_) => return CliError::Usage(message),
            E::Overflow { op, .. } | E::Underflow { op, .. } => op.to_string(),
            E::Convergence { .. } | E::UnsupportedDepth { .. } | E::Resolution { .. } => op.to_string(),
        };
        let message = match message.strip_prefix(&format!("{op}: ")) {
            Some(rest) => rest.to_string(),
            None => message,
        };
        CliError::Numerical { op, message }
    }
}

/// Always a single line: `error[kind]: ...`.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = match self {
            CliError::Usage(m) => format!("error[usage]: {m}"),
            CliError::Numerical { op, message } => format!("error[numerical]: {op}: {message}"),
            CliError::Io(e) => format!("error[io]: {e}"),
        };
        f.write_str(&line.replace(['\n', '\r'], " "))
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Parses, runs and writes, returning the process exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::from(EXIT_OK);
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            let _ = writeln!(io::stderr(), "{err}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&config) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            let _ = writeln!(io::stderr(), "{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(config: &CliConfig) -> Result<(), CliError> {
    let csv = execute(config)?;
    output::write_output(config, &csv)
}
