//! Finite-difference solver for `h_t = ½σ²h_xx`, `h(0,·) = H`.
//!
//! The uniqueness-selecting mode works with the Φ-transform `g = e^{−λt}h/Φ`.
//! Multiplying the transformed scheme through by the diagonal matrix of Φ
//! gives an equivalent, better-scaled system in `v = ρh` (ρ the discrete
//! e^{−λt}), which is what is stepped here: the operator is `½σ²D² − λ`
//! on the grid and ρ is divided out after every step, so only `h` is stored.
//! Far-field rows are:
//!
//! * entrance (strict) side — zero-flux ghost node: `h` levels off there,
//!   which is what `h/Φ → 0` forces once Φ grows linearly;
//! * natural side — Dirichlet `h = H`, the behaviour of any solution that is
//!   dominated by a super-linear Φ.
//!
//! [`TransformBc::DirichletZero`] instead imposes `g = 0` at both truncation
//! ends literally; it is kept for comparison and is markedly less accurate
//! on a strict side at desk-scale truncations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classify::{classify_default, Infinity, MartingaleClass};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::DiffusionModel;
use crate::numerics::interp::linear;
use crate::numerics::tridiag::solve_in_place;
use crate::payoff::PayoffSpec;
use crate::sturm::{compute_basic_solutions, Adequacy, SlSolution};

/// Relative change of `h` on the inner half accepted under 25% enlargement.
pub const CAUCHY_ADEQUACY_TOL: f64 = 5e-4;
const ENLARGE: f64 = 1.25;
/// Number of leading Crank–Nicolson steps watched for oscillation.
const OSCILLATION_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    CrankNicolson,
    ImplicitEuler,
    /// Four implicit-Euler half-steps over the first two steps, then
    /// Crank–Nicolson.
    #[default]
    Rannacher,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crank_nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            "implicit_euler" | "implicit" => Ok(Scheme::ImplicitEuler),
            "rannacher" => Ok(Scheme::Rannacher),
            _ => Err(Error::Config(format!(
                "unknown scheme '{s}' (expected crank_nicolson, implicit_euler or rannacher)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformBc {
    /// Zero flux on entrance sides, `h = H` on natural sides.
    #[default]
    FarField,
    /// `g = 0` at both truncation ends.
    DirichletZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BcMode {
    Transform { variant: TransformBc },
    /// User Dirichlet data, sampled at the output times.
    RawDirichlet {
        left_values: Vec<f64>,
        right_values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyOptions {
    /// Defaults to `ceil(4·T·N/(x_right − x_left))`.
    pub n_steps: Option<usize>,
    pub scheme: Scheme,
    /// Extra output times in `(0, T)`; `0` and `T` are always reported.
    pub times: Vec<f64>,
    pub check_truncation: bool,
    pub bc: TransformBc,
}

impl Default for CauchyOptions {
    fn default() -> Self {
        Self {
            n_steps: None,
            scheme: Scheme::Rannacher,
            times: vec![],
            check_truncation: true,
            bc: TransformBc::FarField,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyDiagnostics {
    /// `max_{t,x} |g| / max_x |g(0,·)|` with `g = e^{−λt}h/Φ` (discrete
    /// e^{−λt}); at most 1 when the maximum principle holds.
    pub dmp_ratio: Option<f64>,
    /// Realized constant `sup |h|/(e^{λt}Φ)`.
    pub growth_constant: Option<f64>,
    /// `sup |H|/Φ` on the grid.
    pub payoff_phi_ratio: Option<f64>,
    pub adequacy: Adequacy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchySolution {
    model: DiffusionModel,
    lambda: Option<f64>,
    grid: Grid1D,
    time_points: Vec<f64>,
    surfaces: Vec<Vec<f64>>,
    bc_mode: BcMode,
    scheme: Scheme,
    n_steps: usize,
    diagnostics: CauchyDiagnostics,
}

impl CauchySolution {
    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    /// λ of the transform; `None` in raw mode.
    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn time_points(&self) -> &[f64] {
        &self.time_points
    }

    pub fn surfaces(&self) -> &[Vec<f64>] {
        &self.surfaces
    }

    /// Surface at the output time closest to `t`.
    pub fn surface_at(&self, t: f64) -> &[f64] {
        let k = self
            .time_points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.surfaces[k]
    }

    pub fn final_surface(&self) -> &[f64] {
        self.surfaces.last().unwrap()
    }

    /// `h(t, x)` at the output time closest to `t`, linear in `x`.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        linear(self.grid.nodes(), self.surface_at(t), x)
    }

    pub fn bc_mode(&self) -> &BcMode {
        &self.bc_mode
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn diagnostics(&self) -> &CauchyDiagnostics {
        &self.diagnostics
    }

    /// Long-format CSV `t,x,h`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_long_csv(w, "h", self.grid.nodes(), &self.time_points, &self.surfaces)
    }
}

fn write_long_csv<W: Write>(
    mut w: W,
    name: &str,
    x: &[f64],
    times: &[f64],
    surfaces: &[Vec<f64>],
) -> std::io::Result<()> {
    writeln!(w, "t,x,{name}")?;
    for (t, s) in times.iter().zip(surfaces) {
        for (x, v) in x.iter().zip(s) {
            writeln!(w, "{t:e},{x:e},{v:e}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    ZeroFlux,
    Dirichlet,
}

#[derive(Debug, Clone, Copy)]
struct Step {
    dt: f64,
    theta: f64,
    /// Index into the output times reached at the end of this step.
    output: Option<usize>,
}

/// Steps of length `T/n` with the requested output times inserted as exact
/// stopping points.
fn time_plan(t: f64, n: usize, scheme: Scheme, extra: &[f64]) -> Result<(Vec<f64>, Vec<Step>)> {
    if extra.iter().any(|s| !(s.is_finite() && *s >= 0.0 && *s <= t)) {
        return Err(Error::Config(format!("output times must lie in [0, {t}]")));
    }
    let eps = 1e-12 * t;
    let mut outputs: Vec<f64> = extra.iter().copied().chain([0.0, t]).collect();
    outputs.sort_by(f64::total_cmp);
    outputs.dedup_by(|a, b| (*a - *b).abs() <= eps);
    let base_dt = t / n as f64;
    let mut stops: Vec<f64> = (0..=n).map(|k| k as f64 * base_dt).collect();
    stops[n] = t;
    stops.extend(outputs.iter().copied());
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= eps);
    let smoothing_end = 2.0 * base_dt + eps;
    let mut steps = vec![];
    for w in stops.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let out = outputs.iter().position(|o| (o - t1).abs() <= eps);
        let dt = t1 - t0;
        match scheme {
            Scheme::Rannacher if t1 <= smoothing_end => {
                steps.push(Step { dt: 0.5 * dt, theta: 1.0, output: None });
                steps.push(Step { dt: 0.5 * dt, theta: 1.0, output: out });
            }
            Scheme::ImplicitEuler => steps.push(Step { dt, theta: 1.0, output: out }),
            _ => steps.push(Step { dt, theta: 0.5, output: out }),
        }
    }
    Ok((outputs, steps))
}

fn default_steps(t: f64, grid: &Grid1D) -> usize {
    ((4.0 * t * grid.len() as f64 / (grid.x_right() - grid.x_left())).ceil() as usize).max(1)
}

struct March {
    surfaces: Vec<Vec<f64>>,
    max_g: Option<f64>,
}

/// Steps `h` under `½σ²D² − λ` with ρ divided out after each step.
#[allow(clippy::too_many_arguments)]
fn march(
    x: &[f64],
    sigma_sq: &[f64],
    lambda: f64,
    edges: [Edge; 2],
    h0: Vec<f64>,
    plan: &[Step],
    n_outputs: usize,
    edge_value: &dyn Fn(usize, f64) -> f64,
    watch_oscillation: bool,
    log_phi: Option<&[f64]>,
) -> Result<March> {
    let n = x.len();
    let (mut lo, mut di, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 1..n - 1 {
        let hl = x[i] - x[i - 1];
        let hr = x[i + 1] - x[i];
        lo[i] = sigma_sq[i] / (hl * (hl + hr));
        up[i] = sigma_sq[i] / (hr * (hl + hr));
        di[i] = -(lo[i] + up[i]) - lambda;
    }
    for (k, &(i, j)) in [(0, 1), (n - 1, n - 2)].iter().enumerate() {
        if edges[k] == Edge::ZeroFlux {
            let h = x[j] - x[i];
            let c = sigma_sq[i] / (h * h);
            di[i] = -c - lambda;
            if i == 0 {
                up[0] = c;
            } else {
                lo[n - 1] = c;
            }
        }
    }
    let dirichlet = [edges[0] == Edge::Dirichlet, edges[1] == Edge::Dirichlet];

    let mut h = h0;
    let mut surfaces = Vec::with_capacity(n_outputs);
    surfaces.push(h.clone());
    let g_of = |h: &[f64], log_rho: f64, lp: &[f64]| {
        h.iter()
            .zip(lp)
            .map(|(v, l)| (v.abs().ln() + log_rho - l).exp())
            .fold(0.0, f64::max)
    };
    let mut max_g = log_phi.map(|lp| g_of(&h, 0.0, lp));
    let mut log_rho = 0.0;
    let (mut ml, mut md, mut mu) = (vec![0.0; n - 1], vec![0.0; n], vec![0.0; n - 1]);
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut prev_change: Option<Vec<f64>> = None;
    let mut cn_seen = 0;
    let mut t = 0.0;
    for step in plan {
        let (dt, theta) = (step.dt, step.theta);
        let r = (1.0 - (1.0 - theta) * dt * lambda) / (1.0 + theta * dt * lambda);
        if !(r > 0.0) {
            return Err(Error::Config(format!(
                "time step {dt} too large for lambda = {lambda} (need dt*lambda < 2)"
            )));
        }
        t += dt;
        for i in 0..n {
            // Interior rows in slope form, which is exact on data linear in the nodes.
            let av = if i > 0 && i + 1 < n {
                let sr = (h[i + 1] - h[i]) / (x[i + 1] - x[i]);
                let sl = (h[i] - h[i - 1]) / (x[i] - x[i - 1]);
                sigma_sq[i] / (x[i + 1] - x[i - 1]) * (sr - sl) - lambda * h[i]
            } else if i == 0 {
                di[0] * h[0] + up[0] * h[1]
            } else {
                di[i] * h[i] + lo[i] * h[i - 1]
            };
            rhs[i] = dt * av;
            md[i] = 1.0 - theta * dt * di[i];
            if i > 0 {
                ml[i - 1] = -theta * dt * lo[i];
            }
            if i + 1 < n {
                mu[i] = -theta * dt * up[i];
            }
        }
        for (k, &i) in [0, n - 1].iter().enumerate() {
            if dirichlet[k] {
                md[i] = 1.0;
                if i == 0 {
                    mu[0] = 0.0;
                } else {
                    ml[n - 2] = 0.0;
                }
                rhs[i] = r * edge_value(k, t) - h[i];
            }
        }
        solve_in_place(&ml, &md, &mu, &mut rhs, &mut scratch)?;
        let mut next: Vec<f64> = h.iter().zip(&rhs).map(|(v, d)| (v + d) / r).collect();
        for (k, &i) in [0, n - 1].iter().enumerate() {
            if dirichlet[k] {
                next[i] = edge_value(k, t);
            }
        }
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite h at x = {}, t = {t}",
                x[i]
            )));
        }
        if watch_oscillation && theta == 0.5 && cn_seen < OSCILLATION_WINDOW {
            cn_seen += 1;
            let change: Vec<f64> = next.iter().zip(&h).map(|(a, b)| a - b).collect();
            if let Some(prev) = &prev_change {
                let scale = 1e-8 * (1.0 + next.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                for i in 0..n {
                    let (d0, d1) = (prev[i], change[i]);
                    if d0 * d1 < 0.0 && d1.abs() >= 0.9 * d0.abs() && d1.abs() > scale {
                        return Err(Error::Oscillation { x: x[i] });
                    }
                }
            }
            prev_change = Some(change);
        }
        h = next;
        log_rho += r.ln();
        if let (Some(m), Some(lp)) = (max_g.as_mut(), log_phi) {
            *m = m.max(g_of(&h, log_rho, lp));
        }
        if step.output.is_some() {
            surfaces.push(h.clone());
        }
    }
    Ok(March { surfaces, max_g })
}

/// Solves with the Φ-transform selecting the solution class; computes the
/// classification and basic solutions itself.
pub fn solve_transformed(
    model: &DiffusionModel,
    payoff: &PayoffSpec,
    t: f64,
    lambda: f64,
    grid: &Grid1D,
    opts: &CauchyOptions,
) -> Result<CauchySolution> {
    let class = classify_default(model)?;
    let sol = compute_basic_solutions(model, lambda, grid)?;
    solve_transformed_with(model, &class, &sol, payoff, t, opts)
}

/// [`solve_transformed`] on a given classification and SL solution; the
/// scheme lives on `sol`'s grid.
pub fn solve_transformed_with(
    model: &DiffusionModel,
    class: &MartingaleClass,
    sol: &SlSolution,
    payoff: &PayoffSpec,
    t: f64,
    opts: &CauchyOptions,
) -> Result<CauchySolution> {
    payoff.validate()?;
    check_horizon(t)?;
    let grid = sol.grid();
    let lambda = sol.lambda();
    let edges = match opts.bc {
        TransformBc::FarField => [
            side_edge(class.is_strict_side(Infinity::MinusInf)),
            side_edge(class.is_strict_side(Infinity::PlusInf)),
        ],
        TransformBc::DirichletZero => [Edge::Dirichlet, Edge::Dirichlet],
    };
    let n_steps = opts.n_steps.unwrap_or_else(|| default_steps(t, grid));
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be >= 1".into()));
    }
    let (times, plan) = time_plan(t, n_steps, opts.scheme, &opts.times)?;
    let log_phi = sol.log_big_phi();
    let bc_mode = BcMode::Transform { variant: opts.bc };
    let ratio = payoff.phi_ratio(sol);
    let diagnostics = |dmp: Option<f64>, adequacy| CauchyDiagnostics {
        dmp_ratio: dmp.map(|m| if ratio > 0.0 { m / ratio } else { 0.0 }),
        growth_constant: dmp,
        payoff_phi_ratio: Some(ratio),
        adequacy,
    };
    let make = |surfaces, diag| CauchySolution {
        model: model.clone(),
        lambda: Some(lambda),
        grid: grid.clone(),
        time_points: times.clone(),
        surfaces,
        bc_mode: bc_mode.clone(),
        scheme: opts.scheme,
        n_steps,
        diagnostics: diag,
    };
    if t == 0.0 {
        let h0 = payoff.eval_nodes(grid.nodes());
        return Ok(make(vec![h0], diagnostics(Some(ratio), Adequacy::NotChecked)));
    }

    let run = |g: &Grid1D, log_phi: Option<&[f64]>| -> Result<March> {
        let x = g.nodes();
        let s2: Vec<f64> = x.iter().map(|&v| model.sigma_sq_raw(v)).collect();
        let h0 = payoff.eval_nodes(x);
        let ends = [h0[0], h0[x.len() - 1]];
        let value = |k: usize, _t: f64| match opts.bc {
            TransformBc::FarField => ends[k],
            TransformBc::DirichletZero => 0.0,
        };
        march(
            x,
            &s2,
            lambda,
            edges,
            h0,
            &plan,
            times.len(),
            &value,
            opts.scheme == Scheme::CrankNicolson,
            log_phi,
        )
    };
    let base = run(grid, Some(&log_phi))?;
    if !opts.check_truncation {
        return Ok(make(base.surfaces, diagnostics(base.max_g, Adequacy::NotChecked)));
    }
    if let Some((lo, hi)) = model.support() {
        if ENLARGE * grid.x_left() < lo || ENLARGE * grid.x_right() > hi {
            let reason = format!("sigma undefined beyond [{lo}, {hi}]");
            return Ok(make(base.surfaces, diagnostics(base.max_g, Adequacy::Skipped { reason })));
        }
    }
    let (g1, off1) = grid.enlarged(ENLARGE)?;
    let first = restrict(&run(&g1, None)?.surfaces, &g1, off1, grid);
    let c1 = surface_change(&base.surfaces, &first, grid);
    if c1 < CAUCHY_ADEQUACY_TOL {
        let adequacy = Adequacy::Passed { max_rel_change: c1 };
        return Ok(make(base.surfaces, diagnostics(base.max_g, adequacy)));
    }
    let retry_ok = model
        .support()
        .is_none_or(|(lo, hi)| ENLARGE * ENLARGE * grid.x_left() >= lo && ENLARGE * ENLARGE * grid.x_right() <= hi);
    if retry_ok {
        let (g2, off2) = g1.enlarged(ENLARGE)?;
        let offset = off1.zip(off2).map(|(a, b)| a + b);
        let second = restrict(&run(&g2, None)?.surfaces, &g2, offset, grid);
        let c2 = surface_change(&first, &second, grid);
        if c2 < CAUCHY_ADEQUACY_TOL {
            let max_g = output_max_g(&first, &times, lambda, &plan, &log_phi);
            let adequacy = Adequacy::PassedAfterRetry {
                first_change: c1,
                max_rel_change: c2,
            };
            return Ok(make(first, diagnostics(Some(max_g), adequacy)));
        }
        return Err(Error::Truncation {
            detail: format!(
                "h changed by {c1:.3e} then {c2:.3e} relative on the inner half under 25% \
                 enlargement (limit {CAUCHY_ADEQUACY_TOL:.0e})"
            ),
        });
    }
    Err(Error::Truncation {
        detail: format!("h changed by {c1:.3e} relative on the inner half under 25% enlargement"),
    })
}

fn side_edge(strict: bool) -> Edge {
    if strict {
        Edge::ZeroFlux
    } else {
        Edge::Dirichlet
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("T must be finite and >= 0, got {t}")))
    }
}

/// Surfaces of a run on `big` sampled at the nodes of `grid`.
fn restrict(surfaces: &[Vec<f64>], big: &Grid1D, offset: Option<usize>, grid: &Grid1D) -> Vec<Vec<f64>> {
    surfaces
        .iter()
        .map(|s| match offset {
            Some(off) => s[off..off + grid.len()].to_vec(),
            None => grid.nodes().iter().map(|&x| linear(big.nodes(), s, x)).collect(),
        })
        .collect()
}

fn surface_change(a: &[Vec<f64>], b: &[Vec<f64>], grid: &Grid1D) -> f64 {
    let inner = grid.inner_half();
    a.iter()
        .zip(b)
        .map(|(sa, sb)| {
            let scale = inner.clone().map(|i| sa[i].abs()).fold(1.0, f64::max);
            inner.clone().map(|i| (sa[i] - sb[i]).abs()).fold(0.0, f64::max) / scale
        })
        .fold(0.0, f64::max)
}

/// max |g| over the output surfaces (used when the surfaces come from an
/// enlarged run).
fn output_max_g(surfaces: &[Vec<f64>], times: &[f64], lambda: f64, plan: &[Step], log_phi: &[f64]) -> f64 {
    let mut log_rho_at = vec![0.0; times.len()];
    let mut acc = 0.0;
    for s in plan {
        acc += ((1.0 - (1.0 - s.theta) * s.dt * lambda) / (1.0 + s.theta * s.dt * lambda)).ln();
        if let Some(k) = s.output {
            log_rho_at[k] = acc;
        }
    }
    surfaces
        .iter()
        .zip(&log_rho_at)
        .flat_map(|(s, lr)| s.iter().zip(log_phi).map(move |(h, l)| (h.abs().ln() + lr - l).exp()))
        .fold(0.0, f64::max)
}

/// Solves directly in `h` with user Dirichlet data; no uniqueness guarantee.
pub fn solve_raw(
    model: &DiffusionModel,
    payoff: &PayoffSpec,
    t: f64,
    grid: &Grid1D,
    left_bc: &dyn Fn(f64) -> f64,
    right_bc: &dyn Fn(f64) -> f64,
    opts: &CauchyOptions,
) -> Result<CauchySolution> {
    payoff.validate()?;
    check_horizon(t)?;
    if let Some((lo, hi)) = model.support() {
        if grid.x_left() < lo || grid.x_right() > hi {
            return Err(Error::Domain(format!("grid exceeds the tabulated range [{lo}, {hi}]")));
        }
    }
    let n_steps = opts.n_steps.unwrap_or_else(|| default_steps(t, grid));
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be >= 1".into()));
    }
    let (times, plan) = time_plan(t, n_steps, opts.scheme, &opts.times)?;
    let x = grid.nodes();
    let h0 = payoff.eval_nodes(x);
    let surfaces = if t == 0.0 {
        vec![h0]
    } else {
        let s2: Vec<f64> = x.iter().map(|&v| model.sigma_sq_raw(v)).collect();
        let value = |k: usize, t: f64| if k == 0 { left_bc(t) } else { right_bc(t) };
        march(
            x,
            &s2,
            0.0,
            [Edge::Dirichlet, Edge::Dirichlet],
            h0,
            &plan,
            times.len(),
            &value,
            opts.scheme == Scheme::CrankNicolson,
            None,
        )?
        .surfaces
    };
    let bc_mode = BcMode::RawDirichlet {
        left_values: times.iter().map(|&s| left_bc(s)).collect(),
        right_values: times.iter().map(|&s| right_bc(s)).collect(),
    };
    Ok(CauchySolution {
        model: model.clone(),
        lambda: None,
        grid: grid.clone(),
        time_points: times,
        surfaces,
        bc_mode,
        scheme: opts.scheme,
        n_steps,
        diagnostics: CauchyDiagnostics {
            dmp_ratio: None,
            growth_constant: None,
            payoff_phi_ratio: None,
            adequacy: Adequacy::NotChecked,
        },
    })
}

/// `w(t,x) = E^x[e^{−λt}φ(X_t)]/φ(x)` for the basic solution decaying
/// towards `side`'s opposite infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectSurface {
    pub side: Infinity,
    pub lambda: f64,
    pub grid: Grid1D,
    pub time_points: Vec<f64>,
    pub surfaces: Vec<Vec<f64>>,
    pub n_steps: usize,
}

impl DefectSurface {
    pub fn surface_at(&self, t: f64) -> &[f64] {
        let k = self
            .time_points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.surfaces[k]
    }

    /// Long-format CSV `t,x,w`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_long_csv(w, "w", self.grid.nodes(), &self.time_points, &self.surfaces)
    }
}

pub fn defect_surface(
    model: &DiffusionModel,
    lambda: f64,
    side: Infinity,
    t: f64,
    grid: &Grid1D,
    opts: &CauchyOptions,
) -> Result<DefectSurface> {
    let class = classify_default(model)?;
    let sol = compute_basic_solutions(model, lambda, grid)?;
    defect_surface_with(&class, &sol, side, t, opts)
}

/// Implicit Euler on the Doob-transformed generator
/// `½σ²∂² + σ²(φ′/φ)∂`, written with zero row sums (so constants are
/// exactly invariant away from the boundary): `w = 0` on the strict side,
/// zero flux on the other. The scheme matrix is an M-matrix, which keeps
/// `0 ≤ w ≤ 1` and `w` non-increasing in t for any step sequence.
pub fn defect_surface_with(
    class: &MartingaleClass,
    sol: &SlSolution,
    side: Infinity,
    t: f64,
    opts: &CauchyOptions,
) -> Result<DefectSurface> {
    if !class.is_strict_side(side) {
        return Err(Error::Precondition(format!(
            "the defect needs a strict side, but {side:?} is not one for class {}",
            class.label().as_str()
        )));
    }
    check_horizon(t)?;
    let grid = sol.grid();
    let x = grid.nodes();
    let n = x.len();
    let log = match side {
        Infinity::PlusInf => sol.log_phi_up(),
        Infinity::MinusInf => sol.log_phi_down(),
    };
    let s2 = sol.sigma_sq();
    let (mut lo, mut di, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 1..n - 1 {
        let hl = x[i] - x[i - 1];
        let hr = x[i + 1] - x[i];
        lo[i] = s2[i] / (hl * (hl + hr)) * (log[i - 1] - log[i]).exp();
        up[i] = s2[i] / (hr * (hl + hr)) * (log[i + 1] - log[i]).exp();
        di[i] = -(lo[i] + up[i]);
    }
    // Dirichlet row on the strict side, reflecting row on the other.
    let (dir, refl) = match side {
        Infinity::MinusInf => (0, n - 1),
        Infinity::PlusInf => (n - 1, 0),
    };
    let h = (x[1] - x[0]).max(0.0);
    let h_end = x[n - 1] - x[n - 2];
    if refl == 0 {
        up[0] = s2[0] / (h * h);
        di[0] = -up[0];
    } else {
        lo[n - 1] = s2[n - 1] / (h_end * h_end);
        di[n - 1] = -lo[n - 1];
    }
    let n_steps = opts.n_steps.unwrap_or_else(|| default_steps(t, grid));
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be >= 1".into()));
    }
    let (times, plan) = time_plan(t, n_steps, Scheme::ImplicitEuler, &opts.times)?;
    let mut w = vec![1.0; n];
    let mut surfaces = vec![w.clone()];
    let (mut ml, mut md, mut mu) = (vec![0.0; n - 1], vec![0.0; n], vec![0.0; n - 1]);
    let mut scratch = vec![0.0; n];
    if t > 0.0 {
        for step in &plan {
            for i in 0..n {
                md[i] = 1.0 - step.dt * di[i];
                if i > 0 {
                    ml[i - 1] = -step.dt * lo[i];
                }
                if i + 1 < n {
                    mu[i] = -step.dt * up[i];
                }
            }
            md[dir] = 1.0;
            if dir == 0 {
                mu[0] = 0.0;
            } else {
                ml[n - 2] = 0.0;
            }
            w[dir] = 0.0;
            solve_in_place(&ml, &md, &mu, &mut w, &mut scratch)?;
            // Round-off can push values a hair outside [0, 1].
            for v in w.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
            if step.output.is_some() {
                surfaces.push(w.clone());
            }
        }
    }
    Ok(DefectSurface {
        side,
        lambda: sol.lambda(),
        grid: grid.clone(),
        time_points: times,
        surfaces,
        n_steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLayerRow {
    pub t: f64,
    pub x: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLayerReport {
    /// `h(t,x)/x` on the outermost decade `|x| ∈ [|x_e|/10, |x_e|]` of both
    /// ends, for every requested time.
    pub rows: Vec<BoundaryLayerRow>,
    /// `(t, h(t,x_left)/x_left)`.
    pub left_edge: Vec<(f64, f64)>,
    /// `(t, h(t,x_right)/x_right)`.
    pub right_edge: Vec<(f64, f64)>,
    /// `(x, h(t_min, x)/x)` at the probe points, for the smallest time.
    pub small_time: Vec<(f64, f64)>,
    pub strict_left: bool,
    pub strict_right: bool,
}

/// Tabulates `h(t,x)/x` for a transform-mode identity-payoff solution.
/// `times` must be output times of `sol`; `probes` are fixed interior `x`.
pub fn boundary_layer_report(
    sol: &CauchySolution,
    class: &MartingaleClass,
    times: &[f64],
    probes: &[f64],
) -> Result<BoundaryLayerReport> {
    if !matches!(sol.bc_mode, BcMode::Transform { .. }) {
        return Err(Error::Precondition("boundary-layer report needs a transform-mode solution".into()));
    }
    let x = sol.grid.nodes();
    let (xl, xr) = (sol.grid.x_left(), sol.grid.x_right());
    let mut rows = vec![];
    let (mut left_edge, mut right_edge) = (vec![], vec![]);
    for &t in times {
        let tol = 1e-9 * t.abs().max(1.0);
        if !sol.time_points.iter().any(|s| (s - t).abs() <= tol) {
            return Err(Error::Config(format!("t = {t} is not an output time of the solution")));
        }
        let h = sol.surface_at(t);
        for (i, &xi) in x.iter().enumerate() {
            let outer = (xi <= 0.1 * xl) || (xi >= 0.1 * xr);
            if outer && xi != 0.0 {
                rows.push(BoundaryLayerRow { t, x: xi, ratio: h[i] / xi });
            }
        }
        left_edge.push((t, h[0] / xl));
        right_edge.push((t, h[x.len() - 1] / xr));
    }
    let t_min = times.iter().copied().fold(f64::INFINITY, f64::min);
    let small_time = if t_min.is_finite() {
        probes
            .iter()
            .map(|&p| (p, sol.value(t_min, p) / p))
            .collect()
    } else {
        vec![]
    };
    Ok(BoundaryLayerReport {
        rows,
        left_edge,
        right_edge,
        small_time,
        strict_left: class.is_strict_side(Infinity::MinusInf),
        strict_right: class.is_strict_side(Infinity::PlusInf),
    })
}
