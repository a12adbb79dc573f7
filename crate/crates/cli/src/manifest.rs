use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Record of one command invocation, written as `manifest.json` next to its
/// outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    pub exit_code: i32,
    pub summary: Value,
}

pub struct Recorder {
    out: PathBuf,
    start: Instant,
    command: String,
    config: Value,
    seed: u64,
    outputs: Vec<String>,
}

impl Recorder {
    pub fn new(out: &Path, command: &str, config: Value, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
        Ok(Recorder { out: out.to_path_buf(), start: Instant::now(), command: command.into(), config, seed, outputs: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Write a file into the output directory and list it in the manifest.
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, contents).with_context(|| format!("cannot write {}", p.display()))?;
        self.outputs.push(name.into());
        Ok(p)
    }

    /// List a file written by other means.
    pub fn register(&mut self, name: &str) {
        self.outputs.push(name.into());
    }

    pub fn finish(mut self, exit_code: i32, summary: Value) -> Result<PathBuf> {
        self.outputs.push("manifest.json".into());
        let m = RunManifest {
            command: self.command,
            config: self.config,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.outputs,
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
            exit_code,
            summary,
        };
        let p = self.out.join("manifest.json");
        std::fs::write(&p, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("cannot write {}", p.display()))?;
        Ok(p)
    }
}
