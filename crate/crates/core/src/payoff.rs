use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sturm::SlSolution;

/// Terminal data `H` of the Cauchy problem. Every variant grows at most
/// linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    Identity,
    Constant {
        c: f64,
    },
    Call {
        strike: f64,
    },
    Abs,
    /// Piecewise linear through `nodes`, continued linearly with the given
    /// slopes outside them.
    Tabulated {
        nodes: Vec<[f64; 2]>,
        left_slope: f64,
        right_slope: f64,
    },
}

impl PayoffSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("payoff {what} must be finite, got {v}")))
            }
        };
        match self {
            PayoffSpec::Identity | PayoffSpec::Abs => Ok(()),
            PayoffSpec::Constant { c } => finite(*c, "constant"),
            PayoffSpec::Call { strike } => finite(*strike, "strike"),
            PayoffSpec::Tabulated {
                nodes,
                left_slope,
                right_slope,
            } => {
                finite(*left_slope, "left slope")?;
                finite(*right_slope, "right slope")?;
                if nodes.is_empty() {
                    return Err(Error::Config("tabulated payoff needs at least one node".into()));
                }
                if nodes.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Config("tabulated payoff nodes must be finite".into()));
                }
                if nodes.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Config(
                        "tabulated payoff abscissae must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PayoffSpec::Identity => x,
            PayoffSpec::Constant { c } => *c,
            PayoffSpec::Call { strike } => (x - strike).max(0.0),
            PayoffSpec::Abs => x.abs(),
            PayoffSpec::Tabulated {
                nodes,
                left_slope,
                right_slope,
            } => {
                let first = nodes[0];
                let last = nodes[nodes.len() - 1];
                if x <= first[0] {
                    first[1] + left_slope * (x - first[0])
                } else if x >= last[0] {
                    last[1] + right_slope * (x - last[0])
                } else {
                    let i = nodes.partition_point(|p| p[0] <= x) - 1;
                    let (a, b) = (nodes[i], nodes[i + 1]);
                    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
                }
            }
        }
    }

    pub fn eval_nodes(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// `sup |H|/Φ` over the grid of `sol`.
    pub fn phi_ratio(&self, sol: &SlSolution) -> f64 {
        sol.grid()
            .nodes()
            .iter()
            .zip(sol.log_big_phi())
            .map(|(&x, lp)| self.eval(x).abs() * (-lp).exp())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for PayoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffSpec::Identity => write!(f, "identity"),
            PayoffSpec::Constant { c } => write!(f, "constant:{c}"),
            PayoffSpec::Call { strike } => write!(f, "call:{strike}"),
            PayoffSpec::Abs => write!(f, "abs"),
            PayoffSpec::Tabulated { nodes, .. } => write!(f, "tabulated({} nodes)", nodes.len()),
        }
    }
}

/// Parses the short forms `identity`, `abs`, `constant:<c>`, `call:<K>`.
impl FromStr for PayoffSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let number = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::Config(format!("payoff '{kind}' needs a {what}, e.g. {kind}:1")))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad {what} in payoff '{s}': {e}")))
        };
        let p = match (kind, arg) {
            ("identity", None) => PayoffSpec::Identity,
            ("abs", None) => PayoffSpec::Abs,
            ("constant", _) => PayoffSpec::Constant { c: number("value")? },
            ("call", _) => PayoffSpec::Call {
                strike: number("strike")?,
            },
            _ => {
                return Err(Error::Config(format!(
                    "unknown payoff '{s}' (expected identity, abs, constant:<c> or call:<K>)"
                )))
            }
        };
        p.validate()?;
        Ok(p)
    }
}
