//! Monte Carlo estimates of `E^x[H(X_t)]` for `dX = σ(X)dB`.
//!
//! Path `i` always draws from stream `i` of the seed (see
//! [`NormalStream`]), and terminal values are collected in path order, so a
//! run is bit-identical whether it is executed serially or on many threads.
//! With antithetic pairing, paths `2k` and `2k+1` share stream `k`, the second
//! using the negated normals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiffusionModel, Lamperti};
use crate::numerics::rng::NormalStream;
use crate::payoff::PayoffSpec;

/// Largest tolerated fraction of Euler paths that became non-finite.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Euler–Maruyama on `X` itself.
    Euler,
    /// Euler–Maruyama on the unit-volatility coordinate `Y = F(X)`, with
    /// reflection at the image of ±∞ where that is finite.
    LampertiEuler,
    /// `X_t = ln|W_t|` for planar Brownian motion (inverse 2-D Bessel only).
    ExactBessel2d,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Estimator::Euler),
            "lamperti_euler" => Ok(Estimator::LampertiEuler),
            "exact_bessel2d" => Ok(Estimator::ExactBessel2d),
            _ => Err(Error::Config(format!(
                "unknown estimator '{s}' (expected euler, lamperti_euler or exact_bessel2d)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Terminal values in path order; non-finite entries are flagged paths.
    pub values: Vec<f64>,
    pub flagged: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub antithetic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub flagged: usize,
}

struct Draws {
    stream: NormalStream,
    sign: f64,
}

impl Draws {
    fn for_path(seed: u64, path: usize, antithetic: bool) -> Self {
        if antithetic {
            Self {
                stream: NormalStream::new(seed, (path / 2) as u64),
                sign: if path.is_multiple_of(2) { 1.0 } else { -1.0 },
            }
        } else {
            Self {
                stream: NormalStream::new(seed, path as u64),
                sign: 1.0,
            }
        }
    }

    #[inline]
    fn normal(&mut self) -> f64 {
        self.sign * self.stream.normal()
    }
}

fn check_common(t: f64, n_paths: usize) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Config(format!("t must be > 0, got {t}")));
    }
    if n_paths == 0 {
        return Err(Error::Config("n_paths must be >= 1".into()));
    }
    Ok(())
}

fn check_steps(n_steps: usize) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be >= 1".into()));
    }
    Ok(())
}

/// Paths advanced in lockstep by one task. Interleaving independent paths
/// hides the latency of the serial per-path recurrence; it does not change
/// any path's draws.
const LANES: usize = 8;

fn collect<F>(n_paths: usize, seed: u64, antithetic: bool, lanes: F) -> Vec<f64>
where
    F: Fn(&mut [Draws], &mut [f64]) + Sync,
{
    let batches = n_paths.div_ceil(LANES);
    let parts: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let first = b * LANES;
            let m = LANES.min(n_paths - first);
            let mut draws: Vec<Draws> =
                (first..first + m).map(|i| Draws::for_path(seed, i, antithetic)).collect();
            let mut out = vec![0.0; m];
            lanes(&mut draws, &mut out);
            out
        })
        .collect();
    parts.concat()
}

fn finish(values: Vec<f64>, seed: u64, estimator: Estimator, antithetic: bool) -> Result<Sample> {
    let flagged = values.iter().filter(|v| !v.is_finite()).count();
    let frac = flagged as f64 / values.len() as f64;
    if frac > MAX_FLAGGED_FRACTION {
        return Err(Error::Numerical(format!(
            "{flagged} of {} paths became non-finite ({:.3}% > {:.1}%)",
            values.len(),
            100.0 * frac,
            100.0 * MAX_FLAGGED_FRACTION
        )));
    }
    Ok(Sample {
        values,
        flagged,
        seed,
        estimator,
        antithetic,
    })
}

/// `X_{k+1} = X_k + σ(X_k)√Δt·Z_k`. Paths are never clamped; a path whose
/// value becomes non-finite is flagged and excluded.
pub fn simulate_euler(
    model: &DiffusionModel,
    x0: f64,
    t: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<Sample> {
    check_common(t, n_paths)?;
    check_steps(n_steps)?;
    model.sigma(x0)?;
    let sq = (t / n_steps as f64).sqrt();
    let values = collect(n_paths, seed, antithetic, |draws, out| {
        out.fill(x0);
        for _ in 0..n_steps {
            for (x, d) in out.iter_mut().zip(draws.iter_mut()) {
                // A non-finite value stays non-finite and is flagged later.
                *x += model.sigma_raw(*x) * sq * d.normal();
            }
        }
    });
    finish(values, seed, Estimator::Euler, antithetic)
}

/// Euler–Maruyama in the Lamperti coordinate of a built-in model.
pub fn simulate_lamperti_euler(
    model: &DiffusionModel,
    x0: f64,
    t: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<Sample> {
    check_common(t, n_paths)?;
    check_steps(n_steps)?;
    let lamperti = model.lamperti().ok_or_else(|| {
        Error::Config(format!("no Lamperti coordinate for a {} model", model.kind_name()))
    })?;
    let dt = t / n_steps as f64;
    let sq = dt.sqrt();
    let y0 = lamperti.to_y(x0);
    let values = collect(n_paths, seed, antithetic, |draws, out| {
        out.fill(y0);
        match lamperti {
            Lamperti::Scaled { .. } => {
                for _ in 0..n_steps {
                    for (y, d) in out.iter_mut().zip(draws.iter_mut()) {
                        *y += sq * d.normal();
                    }
                }
            }
            Lamperti::Bessel2d => {
                for _ in 0..n_steps {
                    for (y, d) in out.iter_mut().zip(draws.iter_mut()) {
                        *y = (*y + 0.5 * dt / *y + sq * d.normal()).abs();
                    }
                }
            }
            Lamperti::Arctan { .. } => {
                for _ in 0..n_steps {
                    for (y, d) in out.iter_mut().zip(draws.iter_mut()) {
                        *y = fold_half_pi(*y - y.tan() * dt + sq * d.normal());
                    }
                }
            }
        }
        for y in out.iter_mut() {
            *y = lamperti.to_x(*y);
        }
    });
    finish(values, seed, Estimator::LampertiEuler, antithetic)
}

/// Reflects `y` into `[−π/2, π/2]` (the fold has period 2π).
#[inline]
fn fold_half_pi(y: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    if y.abs() < FRAC_PI_2 {
        return y;
    }
    let z = (y + FRAC_PI_2).rem_euclid(2.0 * PI);
    let z = if z > PI { 2.0 * PI - z } else { z };
    z - FRAC_PI_2
}

/// Exact in law: `X_t = ln|(e^{x0} + √t Z₁, √t Z₂)|`.
pub fn simulate_exact_bessel2d(
    x0: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<Sample> {
    check_common(t, n_paths)?;
    if !x0.is_finite() {
        return Err(Error::Config(format!("x0 must be finite, got {x0}")));
    }
    let r0 = x0.exp();
    let sq = t.sqrt();
    let values = collect(n_paths, seed, antithetic, |draws, out| {
        for (x, d) in out.iter_mut().zip(draws.iter_mut()) {
            let a = r0 + sq * d.normal();
            let b = sq * d.normal();
            *x = a.hypot(b).ln();
        }
    });
    finish(values, seed, Estimator::ExactBessel2d, antithetic)
}

/// Dispatches on `estimator`; `n_steps` is ignored by the exact sampler.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    estimator: Estimator,
    model: &DiffusionModel,
    x0: f64,
    t: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<Sample> {
    match estimator {
        Estimator::Euler => simulate_euler(model, x0, t, n_steps, n_paths, seed, antithetic),
        Estimator::LampertiEuler => {
            simulate_lamperti_euler(model, x0, t, n_steps, n_paths, seed, antithetic)
        }
        Estimator::ExactBessel2d => {
            if model.lamperti() != Some(Lamperti::Bessel2d) {
                return Err(Error::Config(
                    "exact_bessel2d applies to the inverse_bessel_2d model only".into(),
                ));
            }
            simulate_exact_bessel2d(x0, t, n_paths, seed, antithetic)
        }
    }
}

/// Mean and standard error of `H` over the finite terminal values, by a
/// serial Welford pass in path order. With antithetic pairing the error bar
/// is computed from pair averages, and a pair with a flagged member is
/// dropped.
pub fn estimate_expectation(sample: &Sample, payoff: &PayoffSpec) -> Result<McEstimate> {
    payoff.validate()?;
    let mut acc = Welford::default();
    let mut used = 0;
    if sample.antithetic {
        for pair in sample.values.chunks(2) {
            if pair.iter().all(|v| v.is_finite()) {
                let m = pair.iter().map(|&v| payoff.eval(v)).sum::<f64>() / pair.len() as f64;
                acc.push(m);
                used += pair.len();
            }
        }
    } else {
        for &v in sample.values.iter().filter(|v| v.is_finite()) {
            acc.push(payoff.eval(v));
            used += 1;
        }
    }
    if acc.n == 0 {
        return Err(Error::Numerical("no finite paths to average".into()));
    }
    Ok(McEstimate {
        mean: acc.mean,
        std_error: acc.std_error(),
        n_paths: used,
        seed: sample.seed,
        estimator: sample.estimator,
        flagged: sample.flagged,
    })
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Sample standard deviation over √n; zero for fewer than two values.
    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
    }
}
