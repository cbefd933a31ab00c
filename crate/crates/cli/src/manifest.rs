use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub mode: String,
    pub version: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<PathBuf>,
}

pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    seed: u64,
    mode: String,
    start: Instant,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64, mode: &str) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            mode: mode.to_string(),
            start: Instant::now(),
            outputs: Vec::new(),
        })
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `<out_dir>/<command>.manifest.json`.
    pub fn finish(self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            seed: self.seed,
            mode: self.mode,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: self.start.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let path = out_dir.join(format!("{}.manifest.json", manifest.command));
        lwc_core::io::write_json(&path, &manifest)?;
        Ok(path)
    }
}
