//! Experiment configuration files.
//!
//! Configs are JSON. Problem names, system kinds and gap selectors are parsed
//! while deserializing, so a bad name is reported with its line and column.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use toges_core::{Builtin, DynamicsConfig, GapSelector, IntegratorConfig, SystemKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Seeds the sample points of gradient checks.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub figures: Vec<FigureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    #[serde(with = "by_name")]
    pub problem: Builtin,
    pub system: SystemSpec,
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(with = "by_name")]
    pub kind: SystemKind,
    #[serde(default = "three")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub t0: f64,
    pub u0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub du0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ddu0: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

impl SystemSpec {
    pub fn to_dynamics(&self) -> DynamicsConfig {
        let mut cfg = DynamicsConfig::new(self.kind, &self.u0)
            .alpha(self.alpha)
            .beta(self.beta)
            .mu(self.mu)
            .lambda(self.lambda)
            .t0(self.t0);
        if let Some(du0) = &self.du0 {
            cfg = cfg.velocity(du0);
        }
        if let Some(ddu0) = &self.ddu0 {
            cfg = cfg.acceleration(ddu0);
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub t_end: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

fn default_rel_tol() -> f64 {
    1e-9
}

fn default_abs_tol() -> f64 {
    1e-12
}

impl IntegratorSpec {
    /// Integrator settings with both tolerances multiplied by `tol_scale`.
    pub fn to_integrator(&self, tol_scale: f64) -> IntegratorConfig {
        let mut icfg = IntegratorConfig::new(self.t_end)
            .tolerances(self.rel_tol * tol_scale, self.abs_tol * tol_scale);
        if let Some(h) = self.h_init {
            icfg.h_init = h;
        }
        if let Some(h) = self.h_max {
            icfg = icfg.h_max(h);
        }
        if let Some(n) = self.max_steps {
            icfg = icfg.max_steps(n);
        }
        if let Some(grid) = &self.grid {
            icfg = icfg.grid(grid.points());
        }
        icfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Log { lo: f64, hi: f64, n: usize },
    Points(Vec<f64>),
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            GridSpec::Log { lo, hi, n } => toges_core::log_grid(*lo, *hi, *n),
            GridSpec::Points(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Adds the `energy` column.
    #[serde(default)]
    pub energy: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<RateSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    #[serde(with = "by_name")]
    pub selector: GapSelector,
    pub window: (f64, f64),
    #[serde(default = "three")]
    pub power: f64,
    /// A fitted slope above this fails the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// The Lyapunov energy is nonincreasing (past `t₁` for the Hessian-damped
    /// family; below its exponential envelope for `SC3`).
    EnergyMonotone { tol: f64 },
    /// Finite-difference gradient (and Hessian-vector) checks at random
    /// points around `u₀`.
    Gradient { points: usize, tol: f64, radius: f64 },
    /// Second-order reduction residual at every sample.
    Reduction { tol: f64 },
    /// `f(prox u) ≤ f_λ(u)` at every sample.
    ProxEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axes {
    Loglog,
    Semilogy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub axes: Axes,
    /// CSV column plotted for every run.
    #[serde(default = "default_column")]
    pub column: String,
    pub runs: Vec<String>,
    /// Asserts that one run is below others in `column` at a sample time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fastest_at: Option<FastestAt>,
}

fn default_column() -> String {
    "gap_u".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FastestAt {
    pub t: f64,
    pub run: String,
    /// Runs `run` must beat; every other plotted run when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub than: Vec<String>,
}

/// Serializes through `Display` and deserializes through `FromStr`.
mod by_name {
    use super::*;

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A config that failed to parse, with the position serde reported.
#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.check_structure().map_err(|message| ParseError { line: 0, column: 0, message })?;
        Ok(cfg)
    }

    /// Name uniqueness and cross references.
    fn check_structure(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for run in &self.runs {
            if run.name.is_empty() || run.name.contains(['/', '\\']) {
                return Err(format!("run name '{}' is not a plain file stem", run.name));
            }
            if !seen.insert(run.name.as_str()) {
                return Err(format!("duplicate run name '{}'", run.name));
            }
        }
        let mut figs = HashSet::new();
        for fig in &self.figures {
            if !figs.insert(fig.name.as_str()) {
                return Err(format!("duplicate figure name '{}'", fig.name));
            }
            if let Some(r) = fig.runs.iter().find(|r| !seen.contains(r.as_str())) {
                return Err(format!("figure '{}' refers to unknown run '{r}'", fig.name));
            }
            if let Some(f) = &fig.fastest_at {
                if let Some(r) = std::iter::once(&f.run).chain(&f.than).find(|r| !fig.runs.contains(r)) {
                    return Err(format!("figure '{}' ranks run '{r}' it does not plot", fig.name));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
