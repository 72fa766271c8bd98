//! Run manifests: what was run, with which resolved parameters, and what it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub duration_s: f64,
}

/// Output directory plus bookkeeping for one invocation.
pub struct Run {
    command: String,
    dir: PathBuf,
    stem: String,
    started: Instant,
    outputs: Vec<PathBuf>,
    params: serde_json::Value,
    seed: Option<u64>,
}

impl Run {
    pub fn new(command: &str, dir: &Path, stem: Option<&str>) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Run {
            command: command.to_string(),
            dir: dir.to_path_buf(),
            stem: stem.unwrap_or(command).to_string(),
            started: Instant::now(),
            outputs: Vec::new(),
            params: serde_json::Value::Null,
            seed: None,
        })
    }

    pub fn stem(&self) -> &str {
        &self.stem
    }

    pub fn set_params(&mut self, params: &impl Serialize) -> CliResult<()> {
        self.params = serde_json::to_value(params)?;
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Creates `<dir>/<name>` and records it as an output.
    pub fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.outputs.push(path);
        Ok(BufWriter::new(file))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.manifest.json` and returns its path.
    pub fn finish(self) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            tool: "vise",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: std::env::args().collect(),
            params: self.params,
            seed: self.seed,
            outputs: self.outputs,
            duration_s: self.started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join(format!("{}.manifest.json", self.stem));
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        writeln!(w)?;
        w.flush()?;
        log::info!("manifest written to {}", path.display());
        Ok(path)
    }
}
