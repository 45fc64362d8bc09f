//! Batch front-end for the chirplet toolkit.
//!
//! Everything user-facing is in Hz and Hz/s; [`hz_inputs`] is the one place
//! where those values become rad/s and rad/s².

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod matrix;
pub mod render;
pub mod run;

use std::process::ExitCode;

pub use run::{compute, Computed, Plan};

/// Failure classes with stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config values or parameter combinations (exit 2).
    #[error("{0}")]
    Validation(String),
    /// Unreadable inputs, unwritable outputs or corrupt files (exit 3).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<chirplet::Error> for CliError {
    fn from(e: chirplet::Error) -> Self {
        match e {
            chirplet::Error::Invalid { .. } => CliError::Validation(e.to_string()),
            chirplet::Error::Io(_) | chirplet::Error::Format { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<matrix::MatrixError> for CliError {
    fn from(e: matrix::MatrixError) -> Self {
        match e {
            matrix::MatrixError::HeaderTooLong(_) => CliError::Validation(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<render::RenderError> for CliError {
    fn from(e: render::RenderError) -> Self {
        match e {
            render::RenderError::Invalid(..) => CliError::Validation(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

/// Converts Hz or Hz/s values to rad/s or rad/s².
pub fn hz_inputs(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| chirplet::hz_to_rad(v)).collect()
}

/// Parses `argv`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        args::Command::Run(a) => run::run(*a),
        args::Command::Render(a) => run::render(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("chirplet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
