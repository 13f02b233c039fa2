//! Report files: `report.json` (deterministic), `run_meta.json` (timing),
//! and CSV data files next to them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::{CliError, Verdict};

pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| output_err(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write one data file through `f` and remember its name for the report.
    pub fn write<F, E>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(BufWriter<File>) -> Result<(), E>,
        E: std::fmt::Display,
    {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| output_err(&path, e))?;
        f(BufWriter::new(file)).map_err(|e| output_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<(), CliError> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(v).map_err(|e| output_err(&path, e))?;
        text.push('\n');
        let mut file = File::create(&path).map_err(|e| output_err(&path, e))?;
        file.write_all(text.as_bytes()).map_err(|e| output_err(&path, e))
    }
}

/// Everything a subcommand hands back for the report.
pub struct CommandOutput {
    pub verdict: Verdict,
    pub tolerances: Value,
    pub outputs: Value,
}

pub fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Write `report.json` and `run_meta.json`. Keys come out sorted, so equal
/// inputs give byte-identical reports.
pub fn finish(
    dir: &OutputDir,
    command: &str,
    config: &ExperimentConfig,
    seed: u64,
    out: &CommandOutput,
    started: f64,
    threads: usize,
) -> Result<(), CliError> {
    let report = json!({
        "command": command,
        "config": serde_json::to_value(config).expect("config serializes"),
        "config_hash": config.hash(),
        "seed": seed,
        "status": out.verdict.as_str(),
        "tolerances": out.tolerances,
        "outputs": out.outputs,
        "files": dir.files(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    dir.write_json("report.json", &report)?;
    let meta = json!({
        "command": command,
        "config_hash": config.hash(),
        "started_unix": started,
        "finished_unix": unix_seconds(),
        "threads": threads,
    });
    dir.write_json("run_meta.json", &meta)
}
