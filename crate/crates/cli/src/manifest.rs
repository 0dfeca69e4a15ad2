//! Run manifests, config hashes and the append-only run index.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use nehari_core::io::fmt_float;
use nehari_core::spectral::{Regime, Thresholds};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const RUN_INDEX: &str = "run_index.csv";

/// Hex SHA-256 of the canonical configuration text, with the output
/// location blanked so relocated reruns hash equal.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output.dir = Default::default();
    let digest = Sha256::digest(c.canonical().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub lambda1_omega: f64,
    pub lambda2_omega: f64,
    pub lambda1_omega0: f64,
    pub lambda2_omega0: Option<f64>,
}

impl From<&Thresholds<f64>> for ThresholdRecord {
    fn from(t: &Thresholds<f64>) -> Self {
        Self {
            lambda1_omega: t.lambda1_omega,
            lambda2_omega: t.lambda2_omega,
            lambda1_omega0: t.lambda1_omega0,
            lambda2_omega0: t.lambda2_omega0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub dimension: usize,
    pub extent: Vec<f64>,
    pub n: Vec<usize>,
    pub omega0_lower: Vec<f64>,
    pub omega0_upper: Vec<f64>,
}

impl GridDescriptor {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        let d = &cfg.domain;
        Self {
            dimension: d.extent.len(),
            extent: d.extent.clone(),
            n: d.n.clone(),
            omega0_lower: d.omega0_lower.clone(),
            omega0_upper: d.omega0_upper.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub lambda: f64,
    pub nu: f64,
    pub grid: GridDescriptor,
    pub thresholds: ThresholdRecord,
    pub regime: String,
    /// Also admissible; the window is a sub-regime.
    pub admissible: bool,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &ExperimentConfig, lambda: f64, th: &Thresholds<f64>) -> Self {
        let regime = Regime::classify(lambda, th);
        Self {
            command: command.to_string(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            lambda,
            nu: cfg.problem.nu,
            grid: GridDescriptor::of(cfg),
            thresholds: th.into(),
            regime: regime.label().to_string(),
            admissible: regime.is_admissible(),
            artifacts: Vec::new(),
        }
    }

    /// Writes `manifest_<command>.json` and records it as an artifact.
    pub fn write(&mut self, dir: &Path) -> Result<String, CliError> {
        let name = format!("manifest_{}.json", self.command.replace('-', "_"));
        self.artifacts.push(name.clone());
        write_json(&dir.join(&name), self)?;
        Ok(name)
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Appends `command,config_hash,lambda,regime,manifest` to the run index,
/// writing the header when the file is new. Rows reference files that exist.
pub fn append_run_index(dir: &Path, manifest: &RunManifest, manifest_file: &str) -> Result<(), CliError> {
    if !dir.join(manifest_file).is_file() {
        return Err(CliError::MissingArtifact(dir.join(manifest_file)));
    }
    let path = dir.join(RUN_INDEX);
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| CliError::io(&path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str("command,config_hash,lambda,regime,manifest\n");
    }
    text.push_str(&format!(
        "{},{},{},{},{}\n",
        manifest.command,
        manifest.config_hash,
        fmt_float(manifest.lambda),
        manifest.regime,
        manifest_file
    ));
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(&path, e))
}
