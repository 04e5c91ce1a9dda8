//! Closed forms for the inverse 2-D Bessel model `σ(x) = e^{−x}`.

use crate::error::Result;
use crate::numerics::special::{exp_integral_e1, EULER_GAMMA};

/// `E^x[X_t] = x + ½E₁(e^{2x}/(2t))`.
pub fn bessel2d_mean(x: f64, t: f64) -> Result<f64> {
    Ok(x + bessel2d_defect(x, t)?)
}

/// `E^x[X_t] − x = ½E₁(e^{2x}/(2t))`.
pub fn bessel2d_defect(x: f64, t: f64) -> Result<f64> {
    Ok(0.5 * exp_integral_e1((2.0 * x).exp() / (2.0 * t))?)
}

/// `lim_{x→−∞} E^x[X_t] = ½(ln 2 + ln t − γ)`.
pub fn bessel2d_far_left_limit(t: f64) -> f64 {
    0.5 * (2f64.ln() + t.ln() - EULER_GAMMA)
}
