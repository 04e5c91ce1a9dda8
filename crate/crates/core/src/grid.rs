use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spacing {
    /// Piecewise uniform: constant step on each side of 0, with the split of
    /// nodes proportional to the side lengths so that 0 is a node.
    Uniform,
    /// On each side, `x = x_side·(1 − tanh(s(1−u))/tanh(s))` for uniform `u`,
    /// which concentrates nodes near the origin as `strength` grows.
    Tanh { strength: f64 },
    /// Nodes supplied explicitly.
    Explicit,
}

/// Truncation of ℝ to `[x_left, x_right]` with 0 as a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    nodes: Vec<f64>,
    spacing: Spacing,
    zero: usize,
}

impl Grid1D {
    pub fn uniform(x_left: f64, x_right: f64, n: usize) -> Result<Self> {
        let (nl, nr) = split(x_left, x_right, n)?;
        let hl = -x_left / nl as f64;
        let hr = x_right / nr as f64;
        Self::from_sides(hl, nl, hr, nr, Spacing::Uniform, x_left, x_right)
    }

    pub fn tanh(x_left: f64, x_right: f64, n: usize, strength: f64) -> Result<Self> {
        if !(strength.is_finite() && strength > 0.0) {
            return Err(Error::Config(format!("tanh strength must be > 0, got {strength}")));
        }
        let (nl, nr) = split(x_left, x_right, n)?;
        let map = |side: f64, k: usize, m: usize| {
            let u = k as f64 / m as f64;
            side * (1.0 - (strength * (1.0 - u)).tanh() / strength.tanh())
        };
        let mut nodes = Vec::with_capacity(n);
        for k in (1..=nl).rev() {
            nodes.push(map(x_left, k, nl));
        }
        nodes.push(0.0);
        for k in 1..=nr {
            nodes.push(map(x_right, k, nr));
        }
        nodes[0] = x_left;
        nodes[n - 1] = x_right;
        Self::build(nodes, Spacing::Tanh { strength })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        Self::build(nodes, Spacing::Explicit)
    }

    fn from_sides(
        hl: f64,
        nl: usize,
        hr: f64,
        nr: usize,
        spacing: Spacing,
        x_left: f64,
        x_right: f64,
    ) -> Result<Self> {
        let mut nodes = Vec::with_capacity(nl + nr + 1);
        for k in (1..=nl).rev() {
            nodes.push(-(k as f64) * hl);
        }
        nodes.push(0.0);
        for k in 1..=nr {
            nodes.push(k as f64 * hr);
        }
        nodes[0] = x_left;
        let n = nodes.len();
        nodes[n - 1] = x_right;
        Self::build(nodes, spacing)
    }

    fn build(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Config(format!("grid needs >= 3 nodes, got {}", nodes.len())));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid nodes must be finite".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "grid nodes must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let zero = nodes.iter().position(|x| *x == 0.0).ok_or_else(|| {
            Error::Config("0 must be a grid node (it is the normalization point)".into())
        })?;
        if zero == 0 || zero == nodes.len() - 1 {
            return Err(Error::Config("grid must satisfy x_left < 0 < x_right".into()));
        }
        Ok(Self {
            nodes,
            spacing,
            zero,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x_left(&self) -> f64 {
        self.nodes[0]
    }

    pub fn x_right(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Index of the node at 0.
    pub fn zero_index(&self) -> usize {
        self.zero
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|v| *v < x);
        if i == 0 {
            0
        } else if i == self.nodes.len() {
            i - 1
        } else if (self.nodes[i] - x).abs() < (x - self.nodes[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    /// Indices of nodes in `[lo, hi]`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.nodes.partition_point(|v| *v < lo);
        let b = self.nodes.partition_point(|v| *v <= hi);
        a..b.max(a)
    }

    /// Nodes in `[x_left/2, x_right/2]`.
    pub fn inner_half(&self) -> std::ops::Range<usize> {
        self.indices_in(0.5 * self.x_left(), 0.5 * self.x_right())
    }

    /// A grid covering `[factor·x_left, factor·x_right]`.
    ///
    /// For uniform grids the step on each side is kept, so every node of
    /// `self` is a node of the result and `offset` (returned alongside) maps
    /// index `i` here to `i + offset` there. Other spacings are rebuilt with
    /// the node count scaled by `factor` and return `None`.
    pub fn enlarged(&self, factor: f64) -> Result<(Grid1D, Option<usize>)> {
        if !(factor > 1.0) {
            return Err(Error::Config(format!("enlargement factor must be > 1, got {factor}")));
        }
        let n = self.len();
        match self.spacing {
            Spacing::Uniform => {
                let nl = self.zero;
                let nr = n - 1 - self.zero;
                let hl = -self.x_left() / nl as f64;
                let hr = self.x_right() / nr as f64;
                let nl2 = ((nl as f64) * factor).ceil() as usize;
                let nr2 = ((nr as f64) * factor).ceil() as usize;
                let g = Self::from_sides(
                    hl,
                    nl2,
                    hr,
                    nr2,
                    Spacing::Uniform,
                    -(nl2 as f64) * hl,
                    nr2 as f64 * hr,
                )?;
                Ok((g, Some(nl2 - nl)))
            }
            Spacing::Tanh { strength } => {
                let m = ((n as f64) * factor).ceil() as usize;
                let g = Self::tanh(factor * self.x_left(), factor * self.x_right(), m, strength)?;
                Ok((g, None))
            }
            Spacing::Explicit => {
                let m = ((n as f64) * factor).ceil() as usize;
                let g = Self::uniform(factor * self.x_left(), factor * self.x_right(), m)?;
                Ok((g, None))
            }
        }
    }
}

fn split(x_left: f64, x_right: f64, n: usize) -> Result<(usize, usize)> {
    if !(x_left.is_finite() && x_right.is_finite() && x_left < 0.0 && x_right > 0.0) {
        return Err(Error::Config(format!(
            "grid must satisfy x_left < 0 < x_right, got [{x_left}, {x_right}]"
        )));
    }
    if n < 3 {
        return Err(Error::Config(format!("grid needs >= 3 nodes, got {n}")));
    }
    let frac = -x_left / (x_right - x_left);
    let nl = (((n - 1) as f64) * frac).round() as usize;
    let nl = nl.clamp(1, n - 2);
    Ok((nl, n - 1 - nl))
}
