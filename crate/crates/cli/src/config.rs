use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slmc_core::cauchy::{Scheme, TransformBc};
use slmc_core::classify::Infinity;
use slmc_core::grid::Grid1D;
use slmc_core::model::{DiffusionModel, ModelSpec};
use slmc_core::montecarlo::Estimator;
use slmc_core::payoff::PayoffSpec;
use slmc_core::{Error, Result};

/// Truncation `[left, right]` with `n` nodes; `tanh_strength` switches to
/// origin-clustered spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub left: f64,
    pub right: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tanh_strength: Option<f64>,
}

impl GridConfig {
    pub fn default_for(model: &DiffusionModel) -> Self {
        let (left, right) = match model.spec() {
            ModelSpec::InverseBessel2d => (-12.0, 6.0),
            ModelSpec::QnvNoRoot { a, .. } => (a - 50.0, a + 50.0),
            _ => match model.support() {
                Some((lo, hi)) => (lo, hi),
                None => (-12.0, 12.0),
            },
        };
        Self { left, right, n: 2001, tanh_strength: None }
    }

    pub fn build(&self) -> Result<Grid1D> {
        match self.tanh_strength {
            Some(s) => Grid1D::tanh(self.left, self.right, self.n, s),
            None => Grid1D::uniform(self.left, self.right, self.n),
        }
    }
}

/// Everything a command needs. Fields absent from the file take their
/// defaults; the resolved form is what gets hashed and recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: DiffusionModel,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(rename = "T", default = "one")]
    pub t: f64,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Time steps for PDE solves, Euler steps for Monte Carlo.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub bc: TransformBc,
    #[serde(default = "yes")]
    pub check_truncation: bool,
    #[serde(default = "identity")]
    pub payoff: PayoffSpec,
    /// Extra output times for surfaces; boundary-layer times.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Defect side; defaults to a strict side of the model.
    #[serde(default)]
    pub side: Option<Infinity>,
    /// Fixed interior points for the boundary-layer small-time limit.
    #[serde(default)]
    pub probes: Vec<f64>,
    #[serde(default = "origin")]
    pub x0: Vec<f64>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub estimator: Option<Estimator>,
    #[serde(default)]
    pub antithetic: bool,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn identity() -> PayoffSpec {
    PayoffSpec::Identity
}
fn origin() -> Vec<f64> {
    vec![0.0]
}
fn default_paths() -> usize {
    100_000
}
fn default_seed() -> u64 {
    20_240_601
}

pub const DEFAULT_MC_STEPS: usize = 2000;

/// Command-line overrides; `None` leaves the file value alone.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub grid_left: Option<f64>,
    pub grid_right: Option<f64>,
    pub grid_n: Option<usize>,
    pub steps: Option<usize>,
    pub paths: Option<usize>,
    pub payoff: Option<PayoffSpec>,
    pub scheme: Option<Scheme>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Reads a config file, or the `config` member of an emitted manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if value.get("config_sha256").is_some() {
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        let mut grid = self.grid.take().unwrap_or_else(|| GridConfig::default_for(&self.model));
        if let Some(v) = o.grid_left {
            grid.left = v;
        }
        if let Some(v) = o.grid_right {
            grid.right = v;
        }
        if let Some(v) = o.grid_n {
            grid.n = v;
        }
        self.grid = Some(grid);
        macro_rules! set {
            ($($field:ident <- $src:ident),*) => {$(
                if let Some(v) = o.$src.clone() {
                    self.$field = v;
                }
            )*};
        }
        set!(lambda <- lambda, t <- t, paths <- paths, payoff <- payoff, scheme <- scheme, seed <- seed);
        if o.steps.is_some() {
            self.steps = o.steps;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.payoff.validate()?;
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::Config(format!("T must be >= 0, got {}", self.t)));
        }
        if self.paths == 0 {
            return Err(Error::Config("paths must be >= 1".into()));
        }
        if self.steps == Some(0) {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        self.grid.clone().unwrap_or_else(|| GridConfig::default_for(&self.model)).build()
    }

    /// Compact JSON of the resolved config; the hash input.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator.unwrap_or(match self.model.spec() {
            ModelSpec::InverseBessel2d => Estimator::ExactBessel2d,
            _ if self.model.lamperti().is_some() => Estimator::LampertiEuler,
            _ => Estimator::Euler,
        })
    }
}
