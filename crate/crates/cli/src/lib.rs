//! Experiment driver for `nehari-core`: TOML configuration, one function per
//! subcommand, deterministic CSV/JSON artifacts and an append-only run index.
//!
//! Every command writes into the configured output directory. Re-running a
//! command with the same configuration into an empty directory reproduces
//! every artifact byte for byte.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod manifest;
pub mod plots;

pub use commands::{run, Command, RunReport};
pub use config::{ExperimentConfig, Overrides};
pub use manifest::RunManifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{command} needs regime {required}, but λ = {lambda} is {regime}")]
    RegimeMismatch { command: String, required: String, regime: String, lambda: f64 },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error(transparent)]
    Stationary(#[from] nehari_core::stationary::StationaryError),
    #[error(transparent)]
    Spectral(#[from] nehari_core::spectral::SpectralError),
    #[error(transparent)]
    Parabolic(#[from] nehari_core::parabolic::ParabolicError),
    #[error(transparent)]
    Serialize(#[from] nehari_core::io::IoError),
}

impl CliError {
    /// 2 for regime mismatches, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::RegimeMismatch { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }
}
