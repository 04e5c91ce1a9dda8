//! Independent special-function oracles shared by the integration tests.
#![allow(dead_code)]

pub const GAMMA: f64 = 0.577_215_664_901_532_9;

/// I₀ from its (positive-term) power series.
pub fn i0(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..400 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// K₀ from its power series; cancels badly once z exceeds a few units.
pub fn k0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let (mut term, mut harmonic, mut corr) = (1.0, 0.0, 0.0);
    for k in 1..400 {
        term *= q / (k * k) as f64;
        harmonic += 1.0 / k as f64;
        corr += term * harmonic;
        if term * harmonic < 1e-18 * corr.abs().max(1e-300) {
            break;
        }
    }
    -((0.5 * z).ln() + GAMMA) * i0(z) + corr
}

/// K₀ via `∫₀^∞ e^{−z cosh s} ds`; the trapezoid rule converges
/// geometrically for this integrand.
pub fn k0_integral(z: f64) -> f64 {
    let h = 0.01;
    let mut sum = 0.5 * (-z).exp();
    for k in 1..2000 {
        let v = (-z * (k as f64 * h).cosh()).exp();
        sum += v;
        if v < 1e-30 * sum {
            break;
        }
    }
    h * sum
}

pub fn k0(z: f64) -> f64 {
    if z <= 2.0 {
        k0_series(z)
    } else {
        k0_integral(z)
    }
}

/// E₁ by its power series below 2 and a modified-Lentz continued fraction above.
pub fn e1(z: f64) -> f64 {
    if z <= 2.0 {
        let (mut term, mut sum) = (1.0, 0.0);
        for k in 1..80 {
            term *= -z / k as f64;
            sum -= term / k as f64;
        }
        return -GAMMA - z.ln() + sum;
    }
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `x + ½E₁(e^{2x}/(2t))`: the identity-payoff value for the inverse 2-D Bessel model.
pub fn bessel2d_value(x: f64, t: f64) -> f64 {
    x + 0.5 * e1((2.0 * x).exp() / (2.0 * t))
}
