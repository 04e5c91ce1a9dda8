//! Adaptive Simpson quadrature and a divergence-aware improper integrator.
//!
//! The improper integrator evaluates partial integrals at a growing list of
//! cutoffs and inspects how the increments between consecutive cutoffs
//! behave. Integrands are required to be nonnegative and eventually
//! monotone beyond the first cutoff; under that assumption geometric
//! shrinking of the increments certifies a finite limit and a failure to
//! shrink certifies an infinite one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for speed-measure integrals.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Outcome of a quadrature. When `verdict` is `Divergent`, `value` is the
/// last finite partial integral and is not a limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    ToPlusInf,
    ToMinusInf,
}

/// Distances from the origin at which partial integrals are taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSchedule {
    cutoffs: Vec<f64>,
}

impl CutoffSchedule {
    pub fn new(cutoffs: Vec<f64>) -> Result<Self> {
        if cutoffs.len() < 4 {
            return Err(Error::Config(format!(
                "cutoff schedule needs at least 4 terms, got {}",
                cutoffs.len()
            )));
        }
        if cutoffs.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Error::Config("cutoffs must be finite and positive".into()));
        }
        if cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("cutoff schedule must be strictly increasing".into()));
        }
        Ok(Self { cutoffs })
    }

    /// Cutoffs `2^k` for `k = first..=last`.
    pub fn powers_of_two(first: i32, last: i32) -> Result<Self> {
        Self::new((first..=last).map(|k| 2f64.powi(k)).collect())
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.cutoffs
    }

    pub fn last(&self) -> f64 {
        *self.cutoffs.last().unwrap()
    }
}

impl Default for CutoffSchedule {
    fn default() -> Self {
        Self::powers_of_two(3, 12).unwrap()
    }
}

struct Simpson<'a, F> {
    f: &'a F,
    evaluations: usize,
    err: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evaluations += 1;
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { at: x, value: y })
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // The roundoff clause stops refinement once the correction is below
        // what double precision can resolve for integrands of large magnitude.
        let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        if depth >= MAX_DEPTH
            || delta.abs() <= 15.0 * tol
            || delta.abs() <= roundoff
            || m <= a
            || b <= m
        {
            self.err += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        let l = self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson rule with Richardson correction on `[a, b]`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Config(format!("invalid interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let mut s = Simpson {
        f: &f,
        evaluations: 0,
        err: 0.0,
    };
    // Split into a few panels first so that narrow features are not missed
    // by the initial five-point sample.
    const PANELS: usize = 8;
    let width = (b - a) / PANELS as f64;
    let mut total = 0.0;
    let mut x0 = a;
    let mut f0 = s.eval(a)?;
    for k in 1..=PANELS {
        let x1 = if k == PANELS { b } else { a + width * k as f64 };
        let m = 0.5 * (x0 + x1);
        let fm = s.eval(m)?;
        let f1 = s.eval(x1)?;
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += s.recurse(x0, x1, f0, fm, f1, whole, tol / PANELS as f64, 0)?;
        x0 = x1;
        f0 = f1;
    }
    Ok(QuadratureResult {
        value: total,
        abs_error_estimate: s.err,
        evaluations: s.evaluations,
        verdict: Verdict::Convergent,
    })
}

/// Decides finiteness of `∫ f` from `origin` towards `±∞`.
///
/// Increments `d_k` between consecutive cutoffs are compared: the integral
/// is declared divergent when `|d_k| > |d_{k-1}| / 2` for each of the last
/// three increments (or whenever the integrand overflows), and convergent
/// when the last three increments all shrink by at least a factor of two and
/// the geometric tail extrapolations at the last two cutoffs agree within
/// `tol`. Anything else is inconclusive.
pub fn integrate_improper<F: Fn(f64) -> f64>(
    f: F,
    side: Side,
    origin: f64,
    tol: f64,
    schedule: &CutoffSchedule,
) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if !origin.is_finite() {
        return Err(Error::Config("origin must be finite".into()));
    }
    let sign = match side {
        Side::ToPlusInf => 1.0,
        Side::ToMinusInf => -1.0,
    };
    // Integrate in the reflected variable u = sign·(ξ − origin) ≥ 0.
    let g = |u: f64| f(origin + sign * u);
    let cutoffs = schedule.cutoffs();
    let seg_tol = tol / (4.0 * cutoffs.len() as f64);

    let mut partials: Vec<f64> = Vec::with_capacity(cutoffs.len());
    let mut evaluations = 0;
    let mut quad_err = 0.0;
    let mut lower = 0.0;
    let mut running = 0.0;
    for &upper in cutoffs {
        match integrate_adaptive(g, lower, upper, seg_tol) {
            Ok(r) => {
                evaluations += r.evaluations;
                quad_err += r.abs_error_estimate;
                running += r.value;
                if !running.is_finite() {
                    return Ok(divergent(&partials, evaluations, quad_err));
                }
                partials.push(running);
            }
            Err(Error::NonFiniteIntegrand { value, .. }) if value.is_infinite() => {
                return Ok(divergent(&partials, evaluations, quad_err));
            }
            Err(e) => return Err(e),
        }
        lower = upper;
    }

    let increments: Vec<f64> = partials.windows(2).map(|w| w[1] - w[0]).collect();
    let shrinks: Vec<bool> = increments
        .windows(2)
        .map(|w| w[1].abs() <= 0.5 * w[0].abs() * (1.0 + 1e-9))
        .collect();
    let window = shrinks.len().min(3);
    let recent = &shrinks[shrinks.len() - window..];

    let last = *partials.last().unwrap();
    if recent.iter().all(|s| !s) {
        return Ok(QuadratureResult {
            value: last,
            abs_error_estimate: quad_err,
            evaluations,
            verdict: Verdict::Divergent,
        });
    }

    let extrapolated = |k: usize| -> f64 {
        // Aitken-style geometric tail beyond cutoff k (k ≥ 2).
        let d = increments[k - 1];
        let d_prev = increments[k - 2];
        let ratio = if d_prev == 0.0 {
            0.0
        } else {
            (d / d_prev).clamp(0.0, 0.5)
        };
        partials[k] + d * ratio / (1.0 - ratio)
    };
    let n = partials.len();
    let e_last = extrapolated(n - 1);
    let e_prev = extrapolated(n - 2);
    let cauchy_gap = (e_last - e_prev).abs();
    let verdict = if recent.iter().all(|s| *s) && cauchy_gap <= tol {
        Verdict::Convergent
    } else {
        Verdict::Inconclusive
    };
    Ok(QuadratureResult {
        value: if verdict == Verdict::Convergent { e_last } else { last },
        abs_error_estimate: cauchy_gap + quad_err,
        evaluations,
        verdict,
    })
}

fn divergent(partials: &[f64], evaluations: usize, quad_err: f64) -> QuadratureResult {
    QuadratureResult {
        value: partials.last().copied().unwrap_or(0.0),
        abs_error_estimate: quad_err,
        evaluations,
        verdict: Verdict::Divergent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_exact() {
        let r = integrate_adaptive(|x| x, 0.0, 1.0, 1e-10).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        assert_eq!(r.verdict, Verdict::Convergent);
    }

    #[test]
    fn cubic_exact_on_wide_interval() {
        let f = |x: f64| 3.0 * x * x * x - 2.0 * x * x + x - 7.0;
        let anti = |x: f64| 0.75 * x.powi(4) - 2.0 / 3.0 * x.powi(3) + 0.5 * x * x - 7.0 * x;
        let r = integrate_adaptive(f, -10.0, 9.5, 1e-10).unwrap();
        assert!((r.value - (anti(9.5) - anti(-10.0))).abs() < 1e-12 * 1e4);
    }

    #[test]
    fn gaussian_against_erf_series() {
        // ∫_{-6}^{6} e^{-x²/2} = √(2π)·erf(6/√2), with erf from its
        // positive-term series e^{−z²}·Σ 2^k z^{2k+1}/(2k+1)!!.
        let z: f64 = 6.0 / 2f64.sqrt();
        let mut term = z;
        let mut sum = z;
        let mut k = 0.0;
        while term > 1e-20 * sum {
            k += 1.0;
            term *= 2.0 * z * z / (2.0 * k + 1.0);
            sum += term;
        }
        let erf = 2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * sum;
        let oracle = (2.0 * std::f64::consts::PI).sqrt() * erf;
        let r = integrate_adaptive(|x: f64| (-0.5 * x * x).exp(), -6.0, 6.0, 1e-10).unwrap();
        assert!((r.value - oracle).abs() < 1e-10, "{} vs {}", r.value, oracle);
        assert!((r.value - 2.5066283).abs() < 1e-7);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate_adaptive(|x: f64| 1.0 / x, 0.0, 1.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { at, .. } if at == 0.0));
    }

    #[test]
    fn bad_interval_and_tolerance() {
        assert!(matches!(integrate_adaptive(|x| x, 1.0, 0.0, 1e-8), Err(Error::Config(_))));
        assert!(matches!(integrate_adaptive(|x| x, 0.0, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn schedule_validation() {
        assert!(CutoffSchedule::new(vec![]).is_err());
        assert!(CutoffSchedule::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(CutoffSchedule::new(vec![1.0, 2.0, 2.0, 3.0]).is_err());
        assert!(CutoffSchedule::new(vec![1.0, 2.0, 3.0, 4.0]).is_ok());
        assert_eq!(CutoffSchedule::default().cutoffs().len(), 10);
    }

    #[test]
    fn exponential_tail_converges_to_half() {
        // ∫_{-∞}^0 |ξ|·2e^{2ξ} dξ = ∫_0^∞ 2u e^{-2u} du = 1/2.
        let r = integrate_improper(
            |x: f64| x.abs() * 2.0 * (2.0 * x).exp(),
            Side::ToMinusInf,
            0.0,
            1e-10,
            &CutoffSchedule::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Convergent);
        assert!((r.value - 0.5).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn exponential_growth_diverges() {
        let r = integrate_improper(
            |x: f64| x * 2.0 * (2.0 * x).exp(),
            Side::ToPlusInf,
            0.0,
            1e-10,
            &CutoffSchedule::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Divergent);
        assert!(r.value.is_finite());
    }

    #[test]
    fn algebraic_tail_converges_to_one() {
        // antiderivative −1/(1+ξ²)
        let r = integrate_improper(
            |x: f64| x * 2.0 / (1.0 + x * x).powi(2),
            Side::ToPlusInf,
            0.0,
            1e-10,
            &CutoffSchedule::powers_of_two(3, 14).unwrap(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Convergent);
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn nan_integrand_propagates() {
        let r = integrate_improper(
            |x: f64| if x > 20.0 { f64::NAN } else { 1.0 },
            Side::ToPlusInf,
            0.0,
            1e-10,
            &CutoffSchedule::default(),
        );
        assert!(matches!(r, Err(Error::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn power_family_verdicts() {
        let schedule = CutoffSchedule::default();
        for p in 0..=2 {
            for q in [0.5, 1.0, 2.0] {
                let r = integrate_improper(
                    |x: f64| x.powi(p) * (-q * x).exp(),
                    Side::ToPlusInf,
                    0.0,
                    1e-10,
                    &schedule,
                )
                .unwrap();
                assert_eq!(r.verdict, Verdict::Convergent, "p={p} q={q}");
                // Γ(p+1)/q^{p+1}
                let gamma = [1.0, 1.0, 2.0][p as usize];
                assert!((r.value - gamma / q.powi(p + 1)).abs() < 1e-8);
            }
            let r = integrate_improper(|x: f64| x.powi(p), Side::ToPlusInf, 0.0, 1e-10, &schedule)
                .unwrap();
            assert_eq!(r.verdict, Verdict::Divergent, "p={p}");
        }
    }
}
