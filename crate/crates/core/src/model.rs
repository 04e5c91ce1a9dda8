//! Volatility specifications for driftless diffusions `dX = σ(X) dB` on ℝ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::numerics::interp::Pchip;

/// Relative slope jump between adjacent tabulated intervals above which a
/// node is reported as a kink.
pub const KINK_THRESHOLD: f64 = 0.5;

/// How a tabulated σ is continued beyond its outermost nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailExtension {
    Constant,
    /// Log-linear continuation through the last two nodes on each side.
    ExponentialFit,
    /// Queries outside the nodes are domain errors.
    #[default]
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// σ(ξ) = e^{−ξ}; e^{X} is a two-dimensional Bessel process.
    #[serde(rename = "inverse_bessel_2d")]
    InverseBessel2d,
    /// σ(ξ) = b(1 + ((ξ − a)/b)²), a quadratic volatility without real roots.
    QnvNoRoot { a: f64, b: f64 },
    ConstantVol { c: f64 },
    Tabulated {
        nodes: Vec<[f64; 2]>,
        #[serde(default)]
        extension: TailExtension,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelConfig {
    #[serde(flatten)]
    spec: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

/// A validated volatility model. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct DiffusionModel {
    spec: ModelSpec,
    description: Option<String>,
    table: Option<Table>,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    pchip: Pchip,
    extension: TailExtension,
    left_rate: f64,
    right_rate: f64,
}

impl TryFrom<ModelConfig> for DiffusionModel {
    type Error = Error;
    fn try_from(c: ModelConfig) -> Result<Self> {
        let mut m = DiffusionModel::new(c.spec)?;
        m.description = c.description;
        Ok(m)
    }
}

impl From<DiffusionModel> for ModelConfig {
    fn from(m: DiffusionModel) -> Self {
        ModelConfig {
            spec: m.spec,
            description: m.description,
        }
    }
}

/// Coordinates `y = F(x)` with `F′ = 1/σ`, in which the diffusion has unit
/// volatility. Used by the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lamperti {
    /// `y = x / c`, `dY = dB`.
    Scaled { c: f64 },
    /// `y = e^{x}`, `dY = dB + dt/(2Y)`, reflected at 0.
    Bessel2d,
    /// `y = arctan((x − a)/b)`, `dY = dB − tan(Y) dt`, reflected at ±π/2.
    Arctan { a: f64, b: f64 },
}

impl Lamperti {
    #[inline]
    pub fn to_y(&self, x: f64) -> f64 {
        match *self {
            Lamperti::Scaled { c } => x / c,
            Lamperti::Bessel2d => x.exp(),
            Lamperti::Arctan { a, b } => ((x - a) / b).atan(),
        }
    }

    #[inline]
    pub fn to_x(&self, y: f64) -> f64 {
        match *self {
            Lamperti::Scaled { c } => c * y,
            Lamperti::Bessel2d => y.ln(),
            Lamperti::Arctan { a, b } => a + b * y.tan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub min_sigma: f64,
    pub argmin: f64,
    /// Tabulated nodes whose adjacent slopes jump by more than
    /// [`KINK_THRESHOLD`] in relative terms.
    pub kinks: Vec<f64>,
}

impl DiffusionModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let table = match &spec {
            ModelSpec::InverseBessel2d => None,
            ModelSpec::QnvNoRoot { a, b } => {
                if !a.is_finite() || !(b.is_finite() && *b > 0.0) {
                    return Err(Error::InvalidModel {
                        reason: format!(
                            "qnv_no_root needs finite a and b > 0 (got a={a}, b={b}); \
                             b <= 0 gives a real root and a half-line diffusion"
                        ),
                        offending: vec![],
                    });
                }
                None
            }
            ModelSpec::ConstantVol { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidModel {
                        reason: format!("constant_vol needs c > 0, got {c}"),
                        offending: vec![],
                    });
                }
                None
            }
            ModelSpec::Tabulated { nodes, extension } => Some(Table::new(nodes, *extension)?),
        };
        Ok(Self {
            spec,
            description: None,
            table,
        })
    }

    pub fn inverse_bessel_2d() -> Self {
        Self::new(ModelSpec::InverseBessel2d).unwrap()
    }

    pub fn qnv_no_root(a: f64, b: f64) -> Result<Self> {
        Self::new(ModelSpec::QnvNoRoot { a, b })
    }

    pub fn constant_vol(c: f64) -> Result<Self> {
        Self::new(ModelSpec::ConstantVol { c })
    }

    pub fn tabulated(nodes: Vec<[f64; 2]>, extension: TailExtension) -> Result<Self> {
        Self::new(ModelSpec::Tabulated { nodes, extension })
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = Some(d.into());
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind_name(&self) -> &'static str {
        match self.spec {
            ModelSpec::InverseBessel2d => "inverse_bessel_2d",
            ModelSpec::QnvNoRoot { .. } => "qnv_no_root",
            ModelSpec::ConstantVol { .. } => "constant_vol",
            ModelSpec::Tabulated { .. } => "tabulated",
        }
    }

    pub fn description(&self) -> String {
        if let Some(d) = &self.description {
            return d.clone();
        }
        match &self.spec {
            ModelSpec::InverseBessel2d => "inverse 2D Bessel: sigma(x) = exp(-x)".into(),
            ModelSpec::QnvNoRoot { a, b } => {
                format!("quadratic volatility without real roots: a={a}, b={b}")
            }
            ModelSpec::ConstantVol { c } => format!("Brownian motion with volatility {c}"),
            ModelSpec::Tabulated { nodes, extension } => {
                format!("tabulated sigma on {} nodes, tails {:?}", nodes.len(), extension)
            }
        }
    }

    /// Closed interval outside of which σ cannot be evaluated, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match &self.table {
            Some(t) if t.extension == TailExtension::Error => {
                Some((t.pchip.x_min(), t.pchip.x_max()))
            }
            _ => None,
        }
    }

    /// σ(ξ), or NaN where the model is undefined. Intended for hot loops.
    #[inline]
    pub fn sigma_raw(&self, x: f64) -> f64 {
        match &self.spec {
            ModelSpec::InverseBessel2d => (-x).exp(),
            ModelSpec::QnvNoRoot { a, b } => {
                let u = (x - a) / b;
                b * (1.0 + u * u)
            }
            ModelSpec::ConstantVol { c } => *c,
            ModelSpec::Tabulated { .. } => self.table.as_ref().unwrap().eval(x),
        }
    }

    pub fn sigma(&self, x: f64) -> Result<f64> {
        let s = self.sigma_raw(x);
        if s.is_nan() {
            return Err(Error::Domain(format!(
                "sigma queried at {x}, outside the tabulated range {:?}",
                self.support()
            )));
        }
        Ok(s)
    }

    /// σ(ξ)² without intermediate overflow for the exponential model.
    #[inline]
    pub fn sigma_sq_raw(&self, x: f64) -> f64 {
        match self.spec {
            ModelSpec::InverseBessel2d => (-2.0 * x).exp(),
            _ => {
                let s = self.sigma_raw(x);
                s * s
            }
        }
    }

    /// Speed density m′(ξ) = 2/σ(ξ)².
    pub fn speed_density(&self, x: f64) -> Result<f64> {
        match self.spec {
            ModelSpec::InverseBessel2d => Ok(2.0 * (2.0 * x).exp()),
            _ => {
                let s = self.sigma(x)?;
                Ok(2.0 / (s * s))
            }
        }
    }

    /// Speed density as a plain function; NaN where σ is undefined.
    pub fn speed_density_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| match self.spec {
            ModelSpec::InverseBessel2d => 2.0 * (2.0 * x).exp(),
            _ => 2.0 / self.sigma_sq_raw(x),
        }
    }

    pub fn validate(&self, probe: &Grid1D) -> Result<ValidationReport> {
        let mut min_sigma = f64::INFINITY;
        let mut argmin = f64::NAN;
        let mut offending = vec![];
        for &x in probe.nodes() {
            let s = self.sigma(x)?;
            if !(s > 0.0) || !s.is_finite() {
                offending.push(x);
            }
            if s < min_sigma {
                min_sigma = s;
                argmin = x;
            }
        }
        if !offending.is_empty() {
            return Err(Error::InvalidModel {
                reason: "sigma must be finite and positive".into(),
                offending,
            });
        }
        let kinks = match &self.table {
            Some(t) => t.kinks(),
            None => vec![],
        };
        Ok(ValidationReport {
            min_sigma,
            argmin,
            kinks,
        })
    }

    pub fn lamperti(&self) -> Option<Lamperti> {
        match self.spec {
            ModelSpec::InverseBessel2d => Some(Lamperti::Bessel2d),
            ModelSpec::QnvNoRoot { a, b } => Some(Lamperti::Arctan { a, b }),
            ModelSpec::ConstantVol { c } => Some(Lamperti::Scaled { c }),
            ModelSpec::Tabulated { .. } => None,
        }
    }

    /// The same model with σ multiplied by `c`, where the family allows it.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let spec = match &self.spec {
            ModelSpec::ConstantVol { c: c0 } => ModelSpec::ConstantVol { c: c * c0 },
            ModelSpec::QnvNoRoot { a, b } => {
                // c·b(1+((ξ−a)/b)²) is not in the family for c ≠ 1; tabulate.
                return Self::tabulate_scaled(|x| c * b * (1.0 + ((x - a) / b).powi(2)));
            }
            ModelSpec::InverseBessel2d => return Self::tabulate_scaled(|x| c * (-x).exp()),
            ModelSpec::Tabulated { nodes, extension } => ModelSpec::Tabulated {
                nodes: nodes.iter().map(|[x, s]| [*x, c * s]).collect(),
                extension: *extension,
            },
        };
        Self::new(spec)
    }

    fn tabulate_scaled(f: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes = (-400..=400)
            .map(|k| {
                let x = k as f64 * 0.05;
                [x, f(x)]
            })
            .collect();
        Self::tabulated(nodes, TailExtension::ExponentialFit)
    }
}

impl Table {
    fn new(nodes: &[[f64; 2]], extension: TailExtension) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidModel {
                reason: "tabulated model needs at least two nodes".into(),
                offending: vec![],
            });
        }
        let offending: Vec<f64> = nodes
            .iter()
            .filter(|[_, s]| !(s.is_finite() && *s > 0.0))
            .map(|[x, _]| *x)
            .collect();
        if !offending.is_empty() {
            return Err(Error::InvalidModel {
                reason: "tabulated sigma must be finite and positive".into(),
                offending,
            });
        }
        let unsorted: Vec<f64> = nodes
            .windows(2)
            .filter(|w| !(w[1][0] > w[0][0]))
            .map(|w| w[1][0])
            .collect();
        if !unsorted.is_empty() || nodes.iter().any(|[x, _]| !x.is_finite()) {
            return Err(Error::InvalidModel {
                reason: "tabulated abscissae must be finite and strictly increasing".into(),
                offending: unsorted,
            });
        }
        let xs: Vec<f64> = nodes.iter().map(|n| n[0]).collect();
        let ys: Vec<f64> = nodes.iter().map(|n| n[1]).collect();
        let n = xs.len();
        let left_rate = (ys[1] / ys[0]).ln() / (xs[1] - xs[0]);
        let right_rate = (ys[n - 1] / ys[n - 2]).ln() / (xs[n - 1] - xs[n - 2]);
        Ok(Self {
            pchip: Pchip::new(xs, ys)?,
            extension,
            left_rate,
            right_rate,
        })
    }

    fn eval(&self, x: f64) -> f64 {
        if let Some(v) = self.pchip.eval(x) {
            return v;
        }
        let (xs, ys) = self.pchip.nodes();
        let (x0, y0, rate) = if x < xs[0] {
            (xs[0], ys[0], self.left_rate)
        } else {
            (xs[xs.len() - 1], ys[ys.len() - 1], self.right_rate)
        };
        match self.extension {
            TailExtension::Constant => y0,
            TailExtension::ExponentialFit => y0 * (rate * (x - x0)).exp(),
            TailExtension::Error => f64::NAN,
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let (xs, ys) = self.pchip.nodes();
        let slopes: Vec<f64> = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let scale = ys.iter().fold(0.0f64, |m, v| m.max(*v));
        slopes
            .windows(2)
            .enumerate()
            .filter(|(_, s)| {
                let jump = (s[1] - s[0]).abs();
                jump > 1e-12 * scale && jump > KINK_THRESHOLD * (s[0].abs() + s[1].abs())
            })
            .map(|(i, _)| xs[i + 1])
            .collect()
    }
}
