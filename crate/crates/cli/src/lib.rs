//! Configuration-driven experiments over the `rough-taylor` library.
//!
//! A run reads one [`ExperimentConfig`], executes the pipeline for its kind
//! and writes CSV artifacts plus a `report.json` into the output directory.
//! Output bytes depend only on the config: seeds are processed in sorted
//! order and floats are printed with fixed precision.

// parameter checks are written as negated comparisons so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{validate, ExperimentConfig, Kind, Violation};
pub use report::{Report, SCHEMA};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ROUGH_TAYLOR_OUT";
pub const FALLBACK_OUT_DIR: &str = "rough-taylor-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("cannot load config {}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] rough_taylor::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

/// Validates and runs `config`, then writes everything into `out_dir`.
/// Relative field and driver files are resolved against `base_dir`.
pub fn run(config: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> Result<Report, CliError> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    let mut exp = experiments::Run { config, base_dir, out: Default::default() };
    exp.execute()?;
    let out = exp.out;
    let report = Report {
        schema: SCHEMA,
        config: config.clone(),
        records: out.records,
        aggregates: out.aggregates,
        violations: out.violations,
        errors: out.errors,
        files: out.files.keys().cloned().collect(),
    };
    report::write_all(out_dir, &out.files, &report)?;
    Ok(report)
}

/// `--out`, then the config's `output_dir`, then the environment, then a fixed name.
pub fn resolve_out_dir(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}
