//! The `suretynet` command-line tool.
//!
//! Each subcommand loads a network, runs one analysis and writes its tables,
//! a `summary.json` where relevant, and a `manifest.json` into
//! `--output-dir`. Exit codes: 0 on success, 1 when the input fails
//! validation, 2 on any other error.

pub mod args;
mod commands;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

use suretynet::cascade::CascadeError;
use suretynet::exactdist::ExactError;
use suretynet::meanfield::MeanFieldError;
use suretynet::netgraph::{Diagnostic, NetworkError};
use suretynet::synthgen::SynthError;

pub use args::Cli;
pub use output::RunManifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input failed validation with {} error(s); see diagnostics.json", .0.len())]
    Validation(Vec<Diagnostic>),
    #[error("`{0}` needs --input")]
    MissingInput(&'static str),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Network(NetworkError),
    #[error(transparent)]
    MeanField(#[from] MeanFieldError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Synth(SynthError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Runtime(String),
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Invalid(d) => CliError::Validation(d),
            other => CliError::Network(other),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Network(n) => n.into(),
            other => CliError::Synth(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            _ => 2,
        }
    }
}

/// Run one parsed invocation. On a validation failure `diagnostics.json`
/// and the manifest are still written before the error is returned.
pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    match commands::dispatch(cli) {
        Err(CliError::Validation(diags)) => {
            let mut out = output::OutputSet::create(&cli.global.output_dir, cli.global.format)?;
            out.json("diagnostics", &diags)?;
            out.finish(cli)?;
            Err(CliError::Validation(diags))
        }
        other => other,
    }
}
