//! Martingale classification by the |ξ|-weighted speed-measure tails.
//!
//! `X` is a true martingale iff both `∫₀^∞ ξ m′(ξ)dξ` and
//! `∫_{−∞}^0 |ξ| m′(ξ)dξ` diverge; each finite tail makes the corresponding
//! infinity an entrance boundary and `X` a strict local martingale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::numerics::quadrature::{
    integrate_improper, CutoffSchedule, QuadratureResult, Side, Verdict, DEFAULT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    TrueMartingale,
    /// Right tail finite, left tail infinite.
    StrictCaseI,
    /// Left tail finite, right tail infinite.
    StrictCaseIi,
    /// Both tails finite.
    StrictCaseIii,
}

impl ClassLabel {
    pub fn from_finiteness(right_finite: bool, left_finite: bool) -> Self {
        match (right_finite, left_finite) {
            (false, false) => ClassLabel::TrueMartingale,
            (true, false) => ClassLabel::StrictCaseI,
            (false, true) => ClassLabel::StrictCaseIi,
            (true, true) => ClassLabel::StrictCaseIii,
        }
    }

    pub fn is_strict(self) -> bool {
        self != ClassLabel::TrueMartingale
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::TrueMartingale => "true_martingale",
            ClassLabel::StrictCaseI => "strict_case_i",
            ClassLabel::StrictCaseIi => "strict_case_ii",
            ClassLabel::StrictCaseIii => "strict_case_iii",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infinity {
    PlusInf,
    MinusInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryType {
    Natural,
    Entrance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleClass {
    label: ClassLabel,
    right_integral: QuadratureResult,
    left_integral: QuadratureResult,
}

impl MartingaleClass {
    /// Builds the class from two conclusive integral audits.
    pub fn new(right: QuadratureResult, left: QuadratureResult) -> Result<Self> {
        for (name, r) in [("right", &right), ("left", &left)] {
            if r.verdict == Verdict::Inconclusive {
                return Err(Error::Inconclusive {
                    detail: format!("{name} integral partial value {}", r.value),
                });
            }
        }
        let label = ClassLabel::from_finiteness(
            right.verdict == Verdict::Convergent,
            left.verdict == Verdict::Convergent,
        );
        Ok(Self {
            label,
            right_integral: right,
            left_integral: left,
        })
    }

    pub fn label(&self) -> ClassLabel {
        self.label
    }

    pub fn right_integral(&self) -> &QuadratureResult {
        &self.right_integral
    }

    pub fn left_integral(&self) -> &QuadratureResult {
        &self.left_integral
    }

    pub fn boundary_type(&self, side: Infinity) -> BoundaryType {
        let r = match side {
            Infinity::PlusInf => &self.right_integral,
            Infinity::MinusInf => &self.left_integral,
        };
        if r.verdict == Verdict::Convergent {
            BoundaryType::Entrance
        } else {
            BoundaryType::Natural
        }
    }

    pub fn is_strict_side(&self, side: Infinity) -> bool {
        self.boundary_type(side) == BoundaryType::Entrance
    }
}

/// Default cutoffs `2^3 … 2^14`.
pub fn default_schedule() -> CutoffSchedule {
    CutoffSchedule::powers_of_two(3, 14).unwrap()
}

/// Classifies `model`. An inconclusive tail is retried once with the
/// schedule extended by four further doublings before an error is raised.
pub fn classify(
    model: &DiffusionModel,
    tol: f64,
    schedule: &CutoffSchedule,
) -> Result<MartingaleClass> {
    if let Some((lo, hi)) = model.support() {
        return Err(Error::Domain(format!(
            "model is only defined on [{lo}, {hi}]; choose a tail extension to classify it"
        )));
    }
    let m = model.speed_density_fn();
    let right = tail(|x| x * m(x), Side::ToPlusInf, tol, schedule)?;
    let left = tail(|x| -x * m(x), Side::ToMinusInf, tol, schedule)?;
    MartingaleClass::new(right, left)
}

/// [`classify`] with the default tolerance and schedule.
pub fn classify_default(model: &DiffusionModel) -> Result<MartingaleClass> {
    classify(model, DEFAULT_TOL, &default_schedule())
}

fn tail<F: Fn(f64) -> f64>(
    f: F,
    side: Side,
    tol: f64,
    schedule: &CutoffSchedule,
) -> Result<QuadratureResult> {
    let r = integrate_improper(&f, side, 0.0, tol, schedule)?;
    if r.verdict != Verdict::Inconclusive {
        return Ok(r);
    }
    let mut cutoffs = schedule.cutoffs().to_vec();
    let last = schedule.last();
    cutoffs.extend((1..=4).map(|k| last * 2f64.powi(k)));
    integrate_improper(&f, side, 0.0, tol, &CutoffSchedule::new(cutoffs)?)
}

pub fn boundary_type(model: &DiffusionModel, side: Infinity) -> Result<BoundaryType> {
    Ok(classify_default(model)?.boundary_type(side))
}
