//! Basic solutions of `λφ = ½σ²φ″` on a truncated grid.
//!
//! Each solution is carried in log form: `L = ln φ` and the log-derivative
//! `u = φ′/φ`, which satisfies the Riccati equation `u′ = q − u²` with
//! `q = 2λ/σ²`. Integrating that equation away from the boundary at which
//! the solution is small is stable (the wanted branch attracts), so φ↑ is
//! swept left→right and φ↓ right→left with classical RK4 on an adaptive
//! sub-step. Working in logs keeps `φ↑φ↓` products and `Φ = φ↑ + φ↓`
//! representable long after φ itself would overflow.
//!
//! The truncation end from which a sweep starts needs a far-field value of
//! `u`. Where the potential is WKB-resolved (`|q′|/(4q^{3/2}) ≤ 0.1`) the
//! two-term WKB log-derivative is used; otherwise the Born value
//! `u ≈ ∫ q` over the discarded tail is used when that tail integral
//! converges; failing both, the zero-slope (Neumann) condition.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classify::{Infinity, MartingaleClass};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::DiffusionModel;
use crate::numerics::quadrature::{integrate_improper, CutoffSchedule, Side, Verdict};

/// Domain enlargement used by the truncation adequacy rule.
pub const ENLARGE_FACTOR: f64 = 1.25;
/// Maximum relative change of φ on the inner half under enlargement.
pub const ADEQUACY_TOL: f64 = 1e-6;
/// WKB validity threshold on `|q′|/(4q^{3/2})`.
const WKB_THRESHOLD: f64 = 0.1;
/// RK4 sub-step is limited to `STEP_FACTOR / (|u| + √q)`.
const STEP_FACTOR: f64 = 0.3;
const MAX_SUBSTEPS: usize = 1_000_000;
/// Tail-integral starts are moved out to this multiple of the truncation.
const TAIL_REACH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarField {
    Wkb,
    TailIntegral,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Adequacy {
    NotChecked,
    Passed { max_rel_change: f64 },
    /// The first enlargement changed φ too much; the solution returned is the
    /// one started from the enlarged truncation, which passed against a
    /// second enlargement.
    PassedAfterRetry { first_change: f64, max_rel_change: f64 },
    /// σ cannot be evaluated beyond the grid (bounded tabulated model).
    Skipped { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlOptions {
    pub check_truncation: bool,
    pub enlarge_factor: f64,
    pub adequacy_tol: f64,
}

impl Default for SlOptions {
    fn default() -> Self {
        Self {
            check_truncation: true,
            enlarge_factor: ENLARGE_FACTOR,
            adequacy_tol: ADEQUACY_TOL,
        }
    }
}

/// Grid samples of φ↑, φ↓ (normalized to 1 at 0) and their log-derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlSolution {
    lambda: f64,
    grid: Grid1D,
    sigma_sq: Vec<f64>,
    log_up: Vec<f64>,
    log_down: Vec<f64>,
    dlog_up: Vec<f64>,
    dlog_down: Vec<f64>,
    far_field: [FarField; 2],
    truncation_starts: [f64; 2],
    adequacy: Adequacy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UChoice {
    #[serde(rename = "Phi")]
    Phi,
    PhiUp,
    PhiDown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformCoefficients {
    /// σ²·u′/u at each node.
    pub drift: Vec<f64>,
    /// `s_u(x) = ∫₀^x u^{−2}` by the cumulative trapezoid rule.
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    Linear,
    SuperLinear,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideGrowth {
    pub kind: GrowthKind,
    /// Extrapolated `lim φ(x)/|x|` when the growth is linear.
    pub limit_ratio: Option<f64>,
    /// `ln |φ′|` increase between `x_e/√10` and the edge `x_e`.
    pub log_slope_change: f64,
    /// The growth kind agrees with the finiteness of that side's integral.
    pub consistent_with_class: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// φ↑ at the right truncation end.
    pub phi_up_plus_inf: SideGrowth,
    /// φ↓ at the left truncation end.
    pub phi_down_minus_inf: SideGrowth,
    pub warnings: Vec<String>,
}

struct Sweep {
    dlog: Vec<f64>,
    log: Vec<f64>,
    far_field: FarField,
}

pub fn compute_basic_solutions(
    model: &DiffusionModel,
    lambda: f64,
    grid: &Grid1D,
) -> Result<SlSolution> {
    compute_basic_solutions_with(model, lambda, grid, &SlOptions::default())
}

pub fn compute_basic_solutions_with(
    model: &DiffusionModel,
    lambda: f64,
    grid: &Grid1D,
    opts: &SlOptions,
) -> Result<SlSolution> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be > 0, got {lambda}")));
    }
    if let Some((lo, hi)) = model.support() {
        if grid.x_left() < lo || grid.x_right() > hi {
            return Err(Error::Domain(format!(
                "grid [{}, {}] exceeds the tabulated range [{lo}, {hi}]",
                grid.x_left(),
                grid.x_right()
            )));
        }
    }
    let (xl, xr) = (grid.x_left(), grid.x_right());
    let base = solve_from(model, lambda, grid, xl, xr)?;
    if !opts.check_truncation {
        return finish(model, lambda, grid, base, [xl, xr], Adequacy::NotChecked);
    }
    let f = opts.enlarge_factor;
    if !(f > 1.0) {
        return Err(Error::Config(format!("enlargement factor must be > 1, got {f}")));
    }
    if let Some((lo, hi)) = model.support() {
        if f * xl < lo || f * xr > hi {
            let reason = format!("sigma undefined beyond [{lo}, {hi}]");
            return finish(model, lambda, grid, base, [xl, xr], Adequacy::Skipped { reason });
        }
    }
    let inner = grid.inner_half();
    let first = solve_from(model, lambda, grid, f * xl, f * xr)?;
    let c1 = relative_change(&base, &first, inner.clone());
    if c1 < opts.adequacy_tol {
        return finish(model, lambda, grid, base, [xl, xr], Adequacy::Passed { max_rel_change: c1 });
    }
    let in_support = model
        .support()
        .is_none_or(|(lo, hi)| f * f * xl >= lo && f * f * xr <= hi);
    if !in_support {
        return Err(Error::Truncation {
            detail: format!("phi changed by {c1:.3e} relative under enlargement"),
        });
    }
    let second = solve_from(model, lambda, grid, f * f * xl, f * f * xr)?;
    let c2 = relative_change(&first, &second, inner);
    if c2 < opts.adequacy_tol {
        finish(
            model,
            lambda,
            grid,
            first,
            [f * xl, f * xr],
            Adequacy::PassedAfterRetry {
                first_change: c1,
                max_rel_change: c2,
            },
        )
    } else {
        Err(Error::Truncation {
            detail: format!(
                "phi changed by {c1:.3e} then {c2:.3e} relative on the inner half under \
                 {f}x enlargement (limit {:.1e})",
                opts.adequacy_tol
            ),
        })
    }
}

fn relative_change(a: &(Sweep, Sweep), b: &(Sweep, Sweep), range: std::ops::Range<usize>) -> f64 {
    range
        .map(|i| {
            let du = (a.0.log[i] - b.0.log[i]).exp_m1().abs();
            let dd = (a.1.log[i] - b.1.log[i]).exp_m1().abs();
            du.max(dd)
        })
        .fold(0.0, f64::max)
}

fn solve_from(
    model: &DiffusionModel,
    lambda: f64,
    grid: &Grid1D,
    start_left: f64,
    start_right: f64,
) -> Result<(Sweep, Sweep)> {
    let q = |x: f64| 2.0 * lambda / model.sigma_sq_raw(x);
    let nodes = grid.nodes();
    let up = sweep(&q, nodes, start_left, grid.zero_index())?;

    // φ↓(x) = ψ(−x) with ψ increasing: sweep the mirrored problem.
    let q_mirror = |y: f64| q(-y);
    let mirrored: Vec<f64> = nodes.iter().rev().map(|x| -x).collect();
    let zero_m = nodes.len() - 1 - grid.zero_index();
    let m = sweep(&q_mirror, &mirrored, -start_right, zero_m)?;
    let down = Sweep {
        dlog: m.dlog.iter().rev().map(|u| -u).collect(),
        log: m.log.iter().rev().copied().collect(),
        far_field: m.far_field,
    };
    Ok((up, down))
}

/// Far-field start `(x₀, u(x₀))` for the increasing solution truncated at
/// `x`. A tail-integral start is placed further out at `TAIL_REACH·x`, so
/// the sweep inward from there washes out most of the Born error.
fn far_field<Q: Fn(f64) -> f64>(q: &Q, x: f64) -> (f64, f64, FarField) {
    let qx = q(x);
    let d = 1e-3 * x.abs().max(1.0);
    let qi = q(x + d);
    if qx.is_finite() && qi.is_finite() && qx > 0.0 && qi > 0.0 {
        let dlnq = (qi.ln() - qx.ln()) / d;
        let root = qx.sqrt();
        if dlnq.abs() <= 4.0 * WKB_THRESHOLD * root {
            return (x, (root - 0.25 * dlnq).max(0.0), FarField::Wkb);
        }
    }
    let far = TAIL_REACH * x;
    let origin = if q(far).is_finite() { far } else { x };
    let schedule = CutoffSchedule::powers_of_two(-2, 12).unwrap();
    // An inconclusive tail still yields a usable (slightly low) partial value.
    match integrate_improper(q, Side::ToMinusInf, origin, 1e-10, &schedule) {
        Ok(r) if r.verdict != Verdict::Divergent && r.value.is_finite() && r.value >= 0.0 => {
            (origin, r.value, FarField::TailIntegral)
        }
        _ => (x, 0.0, FarField::Neumann),
    }
}

/// Sweeps `u = φ′/φ` of the increasing solution from `start ≤ nodes[0]` to
/// the last node and returns `u` and `ln φ` (zero at `nodes[zero]`).
fn sweep<Q: Fn(f64) -> f64>(q: &Q, nodes: &[f64], start: f64, zero: usize) -> Result<Sweep> {
    let n = nodes.len();
    let (mut x, mut u, far_field) = far_field(q, start);
    let mut dlog = vec![0.0; n];
    let mut increments = vec![0.0; n - 1];
    if x < nodes[0] {
        let h = nodes[1] - nodes[0];
        while x < nodes[0] {
            let target = (x + h.max(0.02 * x.abs())).min(nodes[0]);
            let (u1, _) = rk4_interval(q, x, target, u)?;
            u = u1;
            x = target;
        }
    }
    dlog[0] = u;
    for i in 0..n - 1 {
        let (u1, dl) = rk4_interval(q, nodes[i], nodes[i + 1], u)?;
        u = u1;
        dlog[i + 1] = u;
        increments[i] = dl;
    }
    let mut log = vec![0.0; n];
    for i in (0..zero).rev() {
        log[i] = log[i + 1] - increments[i];
    }
    for i in zero..n - 1 {
        log[i + 1] = log[i] + increments[i];
    }
    Ok(Sweep {
        dlog,
        log,
        far_field,
    })
}

/// Integrates `u′ = q − u²`, `L′ = u` across `[a, b]`; returns `(u(b), ΔL)`.
fn rk4_interval<Q: Fn(f64) -> f64>(q: &Q, a: f64, b: f64, u0: f64) -> Result<(f64, f64)> {
    let mut x = a;
    let mut u = u0;
    let mut dl = 0.0;
    let mut q0 = q(x);
    let mut count = 0;
    while x < b {
        let rate = u.abs() + q0.max(0.0).sqrt();
        let mut s = b - x;
        if rate * s > STEP_FACTOR {
            s = STEP_FACTOR / rate;
        }
        let x_next = if s >= b - x { b } else { x + s };
        let s = x_next - x;
        let qm = q(x + 0.5 * s);
        let q1 = q(x_next);
        let k1 = q0 - u * u;
        let u2 = u + 0.5 * s * k1;
        let k2 = qm - u2 * u2;
        let u3 = u + 0.5 * s * k2;
        let k3 = qm - u3 * u3;
        let u4 = u + s * k3;
        let k4 = q1 - u4 * u4;
        dl += s / 6.0 * (u + 2.0 * u2 + 2.0 * u3 + u4);
        u += s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !u.is_finite() || !dl.is_finite() {
            return Err(Error::Numerical(format!(
                "Riccati sweep produced a non-finite value at x = {x_next}"
            )));
        }
        x = x_next;
        q0 = q1;
        count += 1;
        if count > MAX_SUBSTEPS {
            return Err(Error::Numerical(format!(
                "Riccati sweep needs more than {MAX_SUBSTEPS} sub-steps on [{a}, {b}]"
            )));
        }
    }
    Ok((u, dl))
}

fn finish(
    model: &DiffusionModel,
    lambda: f64,
    grid: &Grid1D,
    sweeps: (Sweep, Sweep),
    starts: [f64; 2],
    adequacy: Adequacy,
) -> Result<SlSolution> {
    let (up, down) = sweeps;
    let sigma_sq: Vec<f64> = grid.nodes().iter().map(|&x| model.sigma_sq_raw(x)).collect();
    let sol = SlSolution {
        lambda,
        grid: grid.clone(),
        sigma_sq,
        log_up: up.log,
        log_down: down.log,
        dlog_up: up.dlog,
        dlog_down: down.dlog,
        far_field: [up.far_field, down.far_field],
        truncation_starts: starts,
        adequacy,
    };
    sol.check_invariants()?;
    Ok(sol)
}

impl SlSolution {
    fn check_invariants(&self) -> Result<()> {
        let x = self.grid.nodes();
        let n = x.len();
        for (i, xi) in x.iter().enumerate() {
            let vals = [self.log_up[i], self.log_down[i], self.dlog_up[i], self.dlog_down[i]];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite basic solution at x = {xi}")));
            }
            // A zero slope is allowed only at the node where a Neumann sweep starts.
            let up_bad = self.dlog_up[i] < 0.0 || (self.dlog_up[i] == 0.0 && i > 0);
            let down_bad = self.dlog_down[i] > 0.0 || (self.dlog_down[i] == 0.0 && i < n - 1);
            if up_bad || down_bad {
                return Err(Error::Truncation {
                    detail: format!(
                        "monotonicity violated at node {i} (x = {xi}): phi_up'/phi_up = {:e}, \
                         phi_down'/phi_down = {:e}",
                        self.dlog_up[i], self.dlog_down[i]
                    ),
                });
            }
        }
        for i in 1..n - 1 {
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            for log in [&self.log_up, &self.log_down] {
                let a = (log[i + 1] - log[i]).exp_m1();
                let b = (log[i - 1] - log[i]).exp_m1();
                let second = hl * a + hr * b;
                if second < -1e-8 * (hl * a.abs() + hr * b.abs()) - 1e-300 {
                    return Err(Error::Truncation {
                        detail: format!("convexity violated at node {i} (x = {})", x[i]),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn sigma_sq(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn adequacy(&self) -> &Adequacy {
        &self.adequacy
    }

    /// Far-field conditions used for (φ↑ at the left, φ↓ at the right).
    pub fn far_field(&self) -> [FarField; 2] {
        self.far_field
    }

    /// Abscissae from which the two sweeps were started.
    pub fn truncation_starts(&self) -> [f64; 2] {
        self.truncation_starts
    }

    pub fn log_phi_up(&self) -> &[f64] {
        &self.log_up
    }

    pub fn log_phi_down(&self) -> &[f64] {
        &self.log_down
    }

    /// φ↑′/φ↑ at each node.
    pub fn dlog_phi_up(&self) -> &[f64] {
        &self.dlog_up
    }

    /// φ↓′/φ↓ at each node.
    pub fn dlog_phi_down(&self) -> &[f64] {
        &self.dlog_down
    }

    pub fn phi_up(&self) -> Vec<f64> {
        self.log_up.iter().map(|l| l.exp()).collect()
    }

    pub fn phi_down(&self) -> Vec<f64> {
        self.log_down.iter().map(|l| l.exp()).collect()
    }

    pub fn phi_up_prime(&self) -> Vec<f64> {
        self.log_up.iter().zip(&self.dlog_up).map(|(l, u)| u * l.exp()).collect()
    }

    pub fn phi_down_prime(&self) -> Vec<f64> {
        self.log_down.iter().zip(&self.dlog_down).map(|(l, u)| u * l.exp()).collect()
    }

    /// ln Φ = ln(φ↑ + φ↓).
    pub fn log_big_phi(&self) -> Vec<f64> {
        self.log_up.iter().zip(&self.log_down).map(|(a, b)| log_add_exp(*a, *b)).collect()
    }

    pub fn big_phi(&self) -> Vec<f64> {
        self.log_big_phi().iter().map(|l| l.exp()).collect()
    }

    /// Φ′/Φ.
    pub fn dlog_big_phi(&self) -> Vec<f64> {
        (0..self.log_up.len())
            .map(|i| {
                let w = 1.0 / (1.0 + (self.log_down[i] - self.log_up[i]).exp());
                w * self.dlog_up[i] + (1.0 - w) * self.dlog_down[i]
            })
            .collect()
    }

    /// ln and log-derivative of the chosen transform weight.
    pub fn weight(&self, choice: UChoice) -> (Vec<f64>, Vec<f64>) {
        match choice {
            UChoice::Phi => (self.log_big_phi(), self.dlog_big_phi()),
            UChoice::PhiUp => (self.log_up.clone(), self.dlog_up.clone()),
            UChoice::PhiDown => (self.log_down.clone(), self.dlog_down.clone()),
        }
    }

    /// `|½σ²·D²φ/φ − λ|` at interior nodes for (φ↑, φ↓), with `D²` the
    /// three-point second difference.
    pub fn ode_residual(&self) -> (Vec<f64>, Vec<f64>) {
        let x = self.grid.nodes();
        let n = x.len();
        let res = |log: &[f64], i: usize| {
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            let a = (log[i + 1] - log[i]).exp_m1();
            let b = (log[i - 1] - log[i]).exp_m1();
            let d2 = 2.0 * (a / hr + b / hl) / (hl + hr);
            (0.5 * self.sigma_sq[i] * d2 - self.lambda).abs()
        };
        (
            (1..n - 1).map(|i| res(&self.log_up, i)).collect(),
            (1..n - 1).map(|i| res(&self.log_down, i)).collect(),
        )
    }

    /// Writes x, phi_up, phi_down, Phi, phi_up_prime, phi_down_prime,
    /// drift_Phi, scale_Phi, log_phi_up, log_phi_down.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let t = transform_coefficients(self, UChoice::Phi);
        let phi = self.big_phi();
        let up = self.phi_up();
        let down = self.phi_down();
        let upp = self.phi_up_prime();
        let downp = self.phi_down_prime();
        writeln!(
            w,
            "x,phi_up,phi_down,Phi,phi_up_prime,phi_down_prime,drift_Phi,scale_Phi,log_phi_up,log_phi_down"
        )?;
        for (i, x) in self.grid.nodes().iter().enumerate() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                x,
                up[i],
                down[i],
                phi[i],
                upp[i],
                downp[i],
                t.drift[i],
                t.scale[i],
                self.log_up[i],
                self.log_down[i]
            )?;
        }
        Ok(())
    }
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// φ↓φ↑′ − φ↓′φ↑ at each node; constant for this drift-free equation.
pub fn wronskian(sol: &SlSolution) -> Vec<f64> {
    (0..sol.log_up.len())
        .map(|i| (sol.log_up[i] + sol.log_down[i]).exp() * (sol.dlog_up[i] - sol.dlog_down[i]))
        .collect()
}

pub fn transform_coefficients(sol: &SlSolution, choice: UChoice) -> TransformCoefficients {
    let (log, dlog) = sol.weight(choice);
    let drift = sol.sigma_sq.iter().zip(&dlog).map(|(s, d)| s * d).collect();
    let x = sol.grid.nodes();
    let z = sol.grid.zero_index();
    let inv_sq: Vec<f64> = log.iter().map(|l| (-2.0 * l).exp()).collect();
    let mut scale = vec![0.0; x.len()];
    for i in z + 1..x.len() {
        scale[i] = scale[i - 1] + 0.5 * (x[i] - x[i - 1]) * (inv_sq[i] + inv_sq[i - 1]);
    }
    for i in (0..z).rev() {
        scale[i] = scale[i + 1] - 0.5 * (x[i + 1] - x[i]) * (inv_sq[i] + inv_sq[i + 1]);
    }
    TransformCoefficients { drift, scale }
}

/// Relative tolerance on the change of |φ′| over the outer half-decade below
/// which growth is called linear.
const LINEAR_SLOPE_TOL: f64 = 0.05;

pub fn growth_report(sol: &SlSolution, class: &MartingaleClass) -> GrowthReport {
    let g = &sol.grid;
    let up = side_growth(sol, &sol.log_up, &sol.dlog_up, g.x_right());
    let down = side_growth(sol, &sol.log_down, &sol.dlog_down, g.x_left());
    let mut warnings = vec![];
    let finish = |mut s: SideGrowth, side: Infinity, name: &str, warnings: &mut Vec<String>| {
        let finite = class.is_strict_side(side);
        s.consistent_with_class = match s.kind {
            GrowthKind::Linear => finite,
            GrowthKind::SuperLinear => !finite,
            GrowthKind::Indeterminate => false,
        };
        if !s.consistent_with_class {
            warnings.push(format!(
                "{name} growth is {:?} but the speed integral on that side is {}",
                s.kind,
                if finite { "finite" } else { "infinite" }
            ));
        }
        s
    };
    let up = finish(up, Infinity::PlusInf, "phi_up at +inf", &mut warnings);
    let down = finish(down, Infinity::MinusInf, "phi_down at -inf", &mut warnings);
    GrowthReport {
        phi_up_plus_inf: up,
        phi_down_minus_inf: down,
        warnings,
    }
}

fn side_growth(sol: &SlSolution, log: &[f64], dlog: &[f64], edge: f64) -> SideGrowth {
    let g = &sol.grid;
    let idx = [
        g.nearest(edge / 10.0),
        g.nearest(edge / 10f64.sqrt()),
        if edge < 0.0 { 0 } else { g.len() - 1 },
    ];
    let ln_slope: Vec<f64> = idx.iter().map(|&i| log[i] + dlog[i].abs().ln()).collect();
    let change = ln_slope[2] - ln_slope[1];
    let kind = if !change.is_finite() {
        GrowthKind::Indeterminate
    } else if change.abs() <= (1.0 + LINEAR_SLOPE_TOL).ln() {
        GrowthKind::Linear
    } else if change > 0.0 {
        GrowthKind::SuperLinear
    } else {
        GrowthKind::Indeterminate
    };
    let limit_ratio = (kind == GrowthKind::Linear).then(|| {
        let s: Vec<f64> = ln_slope.iter().map(|l| l.exp()).collect();
        let d1 = s[1] - s[0];
        let d2 = s[2] - s[1];
        let r = if d1 != 0.0 { d2 / d1 } else { 0.0 };
        if r > 0.0 && r < 1.0 {
            s[2] + d2 * r / (1.0 - r)
        } else {
            s[2]
        }
    });
    SideGrowth {
        kind,
        limit_ratio,
        log_slope_change: change,
        consistent_with_class: true,
    }
}
