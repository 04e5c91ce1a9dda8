//! Modified Bessel functions I₀, K₀ and the exponential integral E₁.
//!
//! Kept in-crate so that test oracles and solver code share bit-stable
//! implementations. Target accuracy is 1e-9 relative on `[1e-6, 30]`.

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// I₀ power series is used below this point; all of its terms are positive so
/// it is cancellation-free, and beyond it the asymptotic expansion is
/// accurate to well under 1e-12.
const I0_SERIES_MAX: f64 = 20.0;
/// K₀ series loses ~e^{2z} relative accuracy to cancellation; above this the
/// integral representation is used instead.
const K0_SERIES_MAX: f64 = 2.0;
const E1_SERIES_MAX: f64 = 1.0;

fn i0_series(z: f64) -> f64 {
    let y = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= y / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
    }
}

/// e^{−z}·I₀(z) by the large-argument expansion.
fn i0_asymptotic_scaled(z: f64) -> f64 {
    // Σ ((2k−1)!!)² / (k! 8^k z^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// I₀(z) for z ≥ 0.
pub fn bessel_i0(z: f64) -> Result<f64> {
    if !(z >= 0.0) || z.is_infinite() {
        return Err(Error::Domain(format!("bessel_i0 requires finite z >= 0, got {z}")));
    }
    if z <= I0_SERIES_MAX {
        Ok(i0_series(z))
    } else {
        Ok(i0_asymptotic_scaled(z) * z.exp())
    }
}

/// ln I₀(z), finite for arguments where I₀ itself overflows.
pub fn ln_bessel_i0(z: f64) -> Result<f64> {
    if !(z >= 0.0) || z.is_infinite() {
        return Err(Error::Domain(format!("ln_bessel_i0 requires finite z >= 0, got {z}")));
    }
    if z <= I0_SERIES_MAX {
        Ok(i0_series(z).ln())
    } else {
        Ok(z + i0_asymptotic_scaled(z).ln())
    }
}

fn k0_series(z: f64) -> f64 {
    // K₀ = −(ln(z/2) + γ) I₀ + Σ_{k≥1} (z²/4)^k/(k!)² H_k
    let y = 0.25 * z * z;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut corr = 0.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= y / (k * k);
        harmonic += 1.0 / k;
        i0 += term;
        corr += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -((0.5 * z).ln() + EULER_GAMMA) * i0 + corr
}

/// e^{z}·K₀(z) = ∫₀^∞ exp(−z(cosh t − 1)) dt, by the trapezoidal rule, which
/// converges geometrically for this analytic, rapidly decaying integrand.
fn k0_integral_scaled(z: f64) -> f64 {
    let step: f64 = 0.05;
    let mut sum = 0.5;
    let mut t = step;
    loop {
        let v = (-z * (t.cosh() - 1.0)).exp();
        sum += v;
        if v < 1e-18 * sum {
            return sum * step;
        }
        t += step;
    }
}

/// K₀(z) for z > 0.
pub fn bessel_k0(z: f64) -> Result<f64> {
    if !(z > 0.0) || z.is_infinite() {
        return Err(Error::Domain(format!("bessel_k0 requires finite z > 0, got {z}")));
    }
    if z <= K0_SERIES_MAX {
        Ok(k0_series(z))
    } else {
        Ok(k0_integral_scaled(z) * (-z).exp())
    }
}

/// ln K₀(z), finite where K₀ underflows.
pub fn ln_bessel_k0(z: f64) -> Result<f64> {
    if !(z > 0.0) || z.is_infinite() {
        return Err(Error::Domain(format!("ln_bessel_k0 requires finite z > 0, got {z}")));
    }
    if z <= K0_SERIES_MAX {
        Ok(k0_series(z).ln())
    } else {
        Ok(k0_integral_scaled(z).ln() - z)
    }
}

fn e1_series(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -z / k;
        let add = -term / k;
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() + sum
}

/// e^{z}·E₁(z) by the modified Lentz evaluation of the continued fraction
/// 1/(z+1−1²/(z+3−2²/(z+5−…))).
fn e1_continued_fraction_scaled(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// E₁(z) = ∫_z^∞ e^{−u}/u du for z > 0.
pub fn exp_integral_e1(z: f64) -> Result<f64> {
    if !(z > 0.0) || z.is_infinite() {
        return Err(Error::Domain(format!("exp_integral_e1 requires finite z > 0, got {z}")));
    }
    if z <= E1_SERIES_MAX {
        Ok(e1_series(z))
    } else {
        Ok(e1_continued_fraction_scaled(z) * (-z).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_values() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert!((bessel_i0(1.0).unwrap() - 1.266_065_877_752_008_4).abs() < 1e-13);
        assert!((bessel_k0(1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-13);
        assert!((exp_integral_e1(0.5).unwrap() - 0.559_773_594_776_160_8).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_i0(-1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k0(0.0), Err(Error::Domain(_))));
        assert!(matches!(exp_integral_e1(-0.1), Err(Error::Domain(_))));
        assert!(matches!(exp_integral_e1(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn i0_branches_agree_at_switch() {
        let z = I0_SERIES_MAX;
        let a = i0_series(z);
        let b = i0_asymptotic_scaled(z) * z.exp();
        assert!(rel(a, b) < 1e-12, "{a} {b}");
    }

    #[test]
    fn k0_branches_agree_at_switch() {
        for z in [1.0, 1.5, 2.0, 3.0] {
            let a = k0_series(z);
            let b = k0_integral_scaled(z) * (-z).exp();
            assert!(rel(a, b) < 1e-11, "z={z}: {a} {b}");
        }
    }

    #[test]
    fn e1_branches_agree_near_switch() {
        for z in [0.8, 1.0, 1.5, 3.0, 5.0] {
            let a = e1_series(z);
            let b = e1_continued_fraction_scaled(z) * (-z).exp();
            assert!(rel(a, b) < 1e-10, "z={z}: {a} {b}");
        }
    }

    #[test]
    fn e1_matches_truncated_series_identity() {
        let mut z = 0.1;
        while z <= 5.0 {
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 1..=40 {
                let kf = k as f64;
                term *= z / kf;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sum += sign * term / kf;
            }
            let residual = exp_integral_e1(z).unwrap() + EULER_GAMMA + z.ln() - sum;
            assert!(residual.abs() <= 1e-9, "z={z}: {residual}");
            z += 0.07;
        }
    }

    #[test]
    fn bessel_wronskian() {
        // I₀′ K₀ − K₀′ I₀ = 1/z via finite differences.
        let mut z: f64 = 0.5;
        while z <= 10.0 {
            let d = 1e-4 * z;
            let di = (bessel_i0(z + d).unwrap() - bessel_i0(z - d).unwrap()) / (2.0 * d);
            let dk = (bessel_k0(z + d).unwrap() - bessel_k0(z - d).unwrap()) / (2.0 * d);
            let w = di * bessel_k0(z).unwrap() - dk * bessel_i0(z).unwrap();
            assert!(rel(w, 1.0 / z) < 1e-6, "z={z}: {w}");
            z += 0.25;
        }
    }

    #[test]
    fn logs_agree_with_direct_values() {
        for z in [1e-6, 0.3, 1.0, 5.0, 19.0, 25.0, 30.0] {
            assert!(rel(ln_bessel_i0(z).unwrap(), bessel_i0(z).unwrap().ln()) < 1e-12 || z < 1e-3);
            assert!((ln_bessel_k0(z).unwrap() - bessel_k0(z).unwrap().ln()).abs() < 1e-11);
        }
        assert!(ln_bessel_i0(1000.0).unwrap().is_finite());
        assert!(ln_bessel_k0(1000.0).unwrap().is_finite());
    }

    #[test]
    fn small_argument_limits() {
        // K₀(z) ≈ −ln(z/2) − γ for z → 0, E₁(z) ≈ −γ − ln z.
        let z = 1e-6;
        assert!((bessel_k0(z).unwrap() - (-(0.5 * z).ln() - EULER_GAMMA)).abs() < 1e-10);
        assert!((exp_integral_e1(z).unwrap() - (-EULER_GAMMA - z.ln())).abs() < 1e-5);
        assert!(rel(bessel_i0(z).unwrap(), 1.0) < 1e-11);
    }
}
