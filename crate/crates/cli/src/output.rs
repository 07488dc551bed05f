//! CSV and JSON emission with per-file digests, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, InitialValues};
use crate::error::{CliError, Result};

/// Full double precision: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Output directory that records every file written through it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::Io {
            path: root.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        self.files.push(OutputFile {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            path: self.root.join(name),
            source: e.into_error(),
        })?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }
}

/// Written as `manifest.json` after every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the config with `output_dir` cleared.
    pub config_hash: String,
    pub seed: u64,
    pub artifact_version: String,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub initial: InitialValues,
    pub outputs: Vec<OutputFile>,
    pub config: Value,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(&cfg.hashable()).expect("config serializes"))
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, outputs: &OutputDir, wall_clock_seconds: f64) -> Self {
        Self {
            experiment: cfg.experiment.as_str().to_string(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            threads: rayon::current_num_threads(),
            initial: cfg.initial,
            outputs: outputs.files().to_vec(),
            config: cfg.to_value(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}
