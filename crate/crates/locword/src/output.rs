//! Run output directory and its manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::formats::{canonical_json, Table};
use crate::svg::LinePlot;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

/// Written exactly once, after the run, naming every emitted file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub workers: usize,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub files: Vec<String>,
    pub status: String,
    pub error: Option<ErrorRecord>,
}

pub fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Collects files written during a run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    /// Creates `root`; files named by a previous manifest there are removed
    /// so the directory never holds two runs' outputs.
    pub fn prepare(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(&root.display().to_string(), e))?;
        let old = root.join(MANIFEST);
        if old.exists() {
            let text = fs::read_to_string(&old).map_err(|e| CliError::io(&old.display().to_string(), e))?;
            if let Ok(m) = serde_json::from_str::<RunManifest>(&text) {
                for f in m.files.iter().filter(|f| is_plain_name(f)) {
                    let _ = fs::remove_file(root.join(f));
                }
            }
            fs::remove_file(&old).map_err(|e| CliError::io(&old.display().to_string(), e))?;
        }
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        debug_assert!(is_plain_name(name) && name != MANIFEST);
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> CliResult<()> {
        self.write_bytes(name, &table.to_csv()?)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write_bytes(name, canonical_json(value)?.as_bytes())
    }

    pub fn write_svg(&mut self, name: &str, plot: &LinePlot) -> CliResult<()> {
        self.write_bytes(name, plot.render().as_bytes())
    }

    pub fn finish(self, mut manifest: RunManifest) -> CliResult<RunManifest> {
        manifest.files = self.files;
        manifest.files.sort();
        let path = self.root.join(MANIFEST);
        fs::write(&path, canonical_json(&manifest)?).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        Ok(manifest)
    }
}

fn is_plain_name(name: &str) -> bool {
    !name.is_empty() && !name.contains(['/', '\\']) && name != "." && name != ".."
}
