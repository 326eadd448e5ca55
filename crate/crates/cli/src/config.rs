//! Experiment configuration: a JSON document whose fields can all be overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use starwalk::verify::Suite;
use starwalk::{BoundaryCondition, GraphPoint};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Kernel,
    Resolvent,
    Scatter,
    Simulate,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SuiteArg {
    Primary,
    Smoke,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Primary => Suite::Primary,
            SuiteArg::Smoke => Suite::Smoke,
        }
    }
}

/// Start point with a 1-based edge index: `"vertex"` or `{"edge": k, "x": x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Start {
    Named(VertexTag),
    Edge { edge: usize, x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexTag {
    Vertex,
}

impl Start {
    pub const VERTEX: Start = Start::Named(VertexTag::Vertex);

    pub fn to_point(self, n_edges: usize) -> Result<GraphPoint, CliError> {
        match self {
            Start::Named(VertexTag::Vertex) => Ok(GraphPoint::Vertex),
            Start::Edge { edge, x } => {
                if edge == 0 || edge > n_edges {
                    return Err(CliError::Config(format!(
                        "run.start edge {edge} out of range (edges are numbered 1..={n_edges})"
                    )));
                }
                Ok(GraphPoint::new(edge - 1, x)?)
            }
        }
    }
}

impl FromStr for Start {
    type Err = String;

    /// `vertex` or `k:x` with a 1-based edge `k`.
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "vertex" {
            return Ok(Start::VERTEX);
        }
        let (k, x) = s.split_once(':').ok_or_else(|| format!("expected \"vertex\" or \"edge:x\", got {s:?}"))?;
        let edge = k.trim().parse().map_err(|_| format!("bad edge index {k:?}"))?;
        let x = x.trim().parse().map_err(|_| format!("bad position {x:?}"))?;
        Ok(Start::Edge { edge, x })
    }
}

impl fmt::Display for Start {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Start::Named(_) => write!(f, "vertex"),
            Start::Edge { edge, x } => write!(f, "{edge}:{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub n_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Times for `kernel`.
    pub t: Vec<f64>,
    /// Spectral parameters for `resolvent` and `scatter`.
    pub lambda: Vec<f64>,
    /// Wavenumber for the sticky time delay in `scatter`.
    pub k: f64,
    pub start: Start,
    /// Kernel tables use `n_y` evenly spaced points on `[0, y_max]`.
    pub y_max: f64,
    pub n_y: usize,
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub record_every: usize,
    pub seed: u64,
    pub suite: SuiteArg,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Kernel,
            t: vec![1.0],
            lambda: vec![1.0],
            k: 1.0,
            start: Start::VERTEX,
            y_max: 4.0,
            n_y: 41,
            n_paths: 100,
            dt: 1e-3,
            horizon: 1.0,
            record_every: 1,
            seed: 42,
            suite: SuiteArg::Primary,
            output: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphConfig,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphConfig { n_edges: 2 },
            boundary: BoundaryConfig { a: 0.0, b: vec![0.5, 0.5], c: 0.0 },
            run: RunConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed config {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks cross-field constraints and builds the boundary condition.
    pub fn validate(&self) -> Result<BoundaryCondition, CliError> {
        let n = self.graph.n_edges;
        if n == 0 {
            return Err(CliError::Config("graph.n_edges must be >= 1".into()));
        }
        if self.boundary.b.len() != n {
            return Err(CliError::Config(format!(
                "boundary.b has {} entries but graph.n_edges = {n}",
                self.boundary.b.len()
            )));
        }
        let bc = BoundaryCondition::new(self.boundary.a, self.boundary.b.clone(), self.boundary.c)?;
        self.run.start.to_point(n)?;
        let r = &self.run;
        let positive = |name: &str, v: &[f64]| -> Result<(), CliError> {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(CliError::Config(format!("run.{name} must be a non-empty list of positive numbers")));
            }
            Ok(())
        };
        match r.mode {
            Mode::Kernel => positive("t", &r.t)?,
            Mode::Resolvent | Mode::Scatter => positive("lambda", &r.lambda)?,
            _ => {}
        }
        if !(r.y_max > 0.0 && r.y_max.is_finite()) || r.n_y < 2 {
            return Err(CliError::Config("run.y_max must be > 0 and run.n_y >= 2".into()));
        }
        if !(r.k > 0.0 && r.k.is_finite()) {
            return Err(CliError::Config("run.k must be finite and > 0".into()));
        }
        Ok(bc)
    }
}
