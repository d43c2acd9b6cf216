//! Report assembly and the files written for one run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Bumped whenever a record or CSV layout changes.
pub const SCHEMA: &str = "rough-taylor-report/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunError {
    pub seed: Option<u64>,
    pub message: String,
}

/// Everything a pipeline produces before it is written out.
#[derive(Debug, Default)]
pub struct Outputs {
    pub records: Vec<Value>,
    pub aggregates: BTreeMap<String, f64>,
    pub violations: usize,
    pub errors: Vec<RunError>,
    /// File name → contents, written in name order.
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Outputs {
    pub fn file(&mut self, name: String, bytes: Vec<u8>) {
        self.files.insert(name, bytes);
    }

    pub fn aggregate(&mut self, name: &str, value: f64) {
        self.aggregates.insert(name.to_string(), value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub config: ExperimentConfig,
    pub records: Vec<Value>,
    pub aggregates: BTreeMap<String, f64>,
    pub violations: usize,
    pub errors: Vec<RunError>,
    /// Artifacts written next to `report.json`.
    pub files: Vec<String>,
}

impl Report {
    pub fn success(&self) -> bool {
        self.violations == 0 && self.errors.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialise") + "\n"
    }
}

pub(crate) fn write_all(dir: &Path, files: &BTreeMap<String, Vec<u8>>, report: &Report) -> Result<(), CliError> {
    let io = |path: PathBuf| move |source| CliError::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(path.clone()))?;
    }
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json()).map_err(io(path.clone()))
}
