//! Experiment configuration: parsing, normalisation and validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Experiment kinds; the serialised names double as CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    FbmSample,
    Signature,
    TaylorConverge,
    BoundsCheck,
    Garsia,
    StoppingTime,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::FbmSample => "fbm-sample",
            Kind::Signature => "signature",
            Kind::TaylorConverge => "taylor-converge",
            Kind::BoundsCheck => "bounds-check",
            Kind::Garsia => "garsia",
            Kind::StoppingTime => "stopping-time",
        }
    }

    /// Kinds that always draw fBm samples.
    fn always_stochastic(self) -> bool {
        matches!(self, Kind::FbmSample | Kind::BoundsCheck | Kind::Garsia)
    }

    fn uses_field(self) -> bool {
        matches!(self, Kind::TaylorConverge | Kind::StoppingTime)
    }

    fn uses_driver(self) -> bool {
        matches!(self, Kind::Signature | Kind::TaylorConverge | Kind::StoppingTime)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kind-specific parameters. Unknown keys are rejected so typos surface.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    /// Parses JSON, or TOML when `toml` is set; both end up as the same value.
    pub fn parse(text: &str, toml: bool) -> Result<Self, String> {
        if toml {
            let value: serde_json::Value = toml::from_str(text).map_err(|e| e.to_string())?;
            serde_json::from_value(value).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.to_path_buf(), msg: e.to_string() })?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        Self::parse(&text, is_toml).map_err(|msg| CliError::Config { path: path.to_path_buf(), msg })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialise")
    }

    /// Whether runs are keyed by fBm seeds.
    pub fn stochastic(&self) -> bool {
        let p = &self.parameters;
        self.kind.always_stochastic() || (self.kind.uses_driver() && p.driver_file.is_none() && p.slope.is_none())
    }
}

/// One rejected field with the constraint it breaks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub const MAX_GRID: usize = rough_taylor::fbm::MAX_GRID;

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.out.push(Violation { field: format!("parameters.{field}"), message: message.into() });
    }

    fn require<T>(&mut self, field: &str, v: &Option<T>) -> bool {
        if v.is_none() {
            self.push(field, format!("{field} is required"));
        }
        v.is_some()
    }
}

/// Every reason `run` would reject the config; empty when it is accepted.
pub fn validate(config: &ExperimentConfig) -> Vec<Violation> {
    let p = &config.parameters;
    let kind = config.kind;
    let mut c = Checker { out: Vec::new() };

    if let Some(t) = p.horizon {
        if !(t > 0.0 && t.is_finite()) {
            c.push("T", "T must be positive");
        }
    }
    let stochastic = config.stochastic();
    if stochastic {
        if c.require("H", &p.hurst) {
            let h = p.hurst.unwrap();
            if !(h > 0.0 && h < 1.0) {
                c.push("H", "H must lie in (0, 1)");
            }
        }
        match &p.seeds {
            Some(s) if !s.is_empty() => {}
            _ => c.push("seeds", "seeds must be a non-empty list"),
        }
        if c.require("n", &p.n) {
            let n = p.n.unwrap();
            if n == 0 || n > MAX_GRID {
                c.push("n", format!("n must lie in [1, {MAX_GRID}]"));
            } else if kind != Kind::FbmSample && !n.is_power_of_two() {
                c.push("n", "n must be a power of two");
            } else if let Some(m) = p.m {
                if n.is_power_of_two() && m > n.trailing_zeros() {
                    c.push("m", "m must not exceed log2(n)");
                }
            }
        }
        if let Some(d) = p.d {
            if d == 0 {
                c.push("d", "d must be positive");
            }
        }
    }

    let needs_beta = matches!(kind, Kind::TaylorConverge | Kind::BoundsCheck | Kind::Garsia);
    if needs_beta {
        c.require("beta", &p.beta);
    }
    if let Some(beta) = p.beta {
        if !(beta > 1.0 / 3.0 && beta < 0.5) {
            c.push("beta", "beta must lie in (1/3, 1/2)");
        }
        if let Some(g) = p.gamma {
            if !(g > 0.0) {
                c.push("gamma", "gamma must be positive");
            } else if g >= beta {
                c.push("gamma", "gamma must be < beta");
            }
        }
        if let Some(grid) = &p.gamma_grid {
            if grid.is_empty() {
                c.push("gamma_grid", "gamma_grid must be non-empty");
            }
            if grid.iter().any(|&g| !(g > 0.0 && g < beta)) {
                c.push("gamma_grid", "gamma_grid entries must lie in (0, beta)");
            }
        }
    }

    if kind == Kind::Garsia {
        let q = c.require("p", &p.p);
        if let (Some(h), Some(beta)) = (p.hurst, p.beta) {
            if beta >= h {
                c.push("beta", "beta must be < H");
            } else if q {
                let threshold = 1.0 / (2.0 * (h - beta));
                if !(p.p.unwrap() > threshold) {
                    c.push("p", format!("p must exceed 1/(2(H - beta)) = {threshold}"));
                }
            }
        }
    }

    if kind == Kind::Signature {
        c.require("N", &p.order);
    }
    if p.order == Some(0) {
        c.push("N", "N must be at least 1");
    }
    if let Some(r) = p.r {
        if !(r > 1.0) {
            c.push("r", "r must exceed 1");
        }
    }
    if let Some(tol) = p.tol {
        if !(rough_taylor::ode::MIN_TOL..=rough_taylor::ode::MAX_TOL).contains(&tol) {
            c.push("tol", "tol must lie in [1e-13, 1e-6]");
        }
    }
    if let Some(0) = p.n_cap {
        c.push("n_cap", "n_cap must be at least 1");
    }
    if let Some(g) = p.grid_points {
        if g < 1 {
            c.push("grid_points", "grid_points must be at least 1");
        }
    }

    if kind.uses_driver() {
        let sources = [p.driver_file.is_some(), p.slope.is_some()].iter().filter(|&&b| b).count();
        if sources > 1 {
            c.push("driver_file", "give at most one of driver_file and slope");
        }
    }
    if kind.uses_field() {
        match (p.field.is_some(), p.field_file.is_some()) {
            (false, false) => c.push("field", "field or field_file is required"),
            (true, true) => c.push("field", "give only one of field and field_file"),
            _ => {}
        }
        c.require("x0", &p.x0);
    }
    c.out
}
