use crate::error::{Error, Result};

/// `lower[i]` multiplies `x[i]` in row `i + 1`; `upper[i]` multiplies
/// `x[i + 1]` in row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::Config("empty tridiagonal system".into()));
        }
        if lower.len() != n - 1 || upper.len() != n - 1 || rhs.len() != n {
            return Err(Error::Config(format!(
                "inconsistent tridiagonal lengths: lower {}, diag {n}, upper {}, rhs {}",
                lower.len(),
                upper.len(),
                rhs.len()
            )));
        }
        Ok(Self {
            lower,
            diag,
            upper,
            rhs,
        })
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let mut x = self.rhs.clone();
        let mut scratch = vec![0.0; self.diag.len()];
        solve_in_place(&self.lower, &self.diag, &self.upper, &mut x, &mut scratch)?;
        Ok(x)
    }

    /// `max |A x − rhs|`.
    pub fn residual_max(&self, x: &[f64]) -> f64 {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i] * x[i] - self.rhs[i];
                if i > 0 {
                    r += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    r += self.upper[i] * x[i + 1];
                }
                r.abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Thomas algorithm. `rhs` is overwritten with the solution; `scratch` must
/// have the length of `diag`.
pub fn solve_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    debug_assert!(rhs.len() == n && scratch.len() == n);
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i - 1] * scratch[i];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    Ok(())
}

/// Convenience wrapper over [`TridiagonalSystem::solve`].
pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    sys.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity() {
        let sys = TridiagonalSystem::new(
            vec![0.0; 3],
            vec![1.0; 4],
            vec![0.0; 3],
            vec![1.0, -2.0, 3.5, 0.0],
        )
        .unwrap();
        assert_eq!(sys.solve().unwrap(), vec![1.0, -2.0, 3.5, 0.0]);
    }

    #[test]
    fn three_by_three_by_hand() {
        let sys = TridiagonalSystem::new(
            vec![-1.0, -1.0],
            vec![2.0, 2.0, 2.0],
            vec![-1.0, -1.0],
            vec![1.0, 0.0, 1.0],
        )
        .unwrap();
        let x = sys.solve().unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_row() {
        let sys = TridiagonalSystem::new(vec![], vec![4.0], vec![], vec![2.0]).unwrap();
        assert_eq!(sys.solve().unwrap(), vec![0.5]);
    }

    #[test]
    fn zero_pivot() {
        let sys =
            TridiagonalSystem::new(vec![1.0], vec![1.0, 1.0], vec![1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(sys.solve(), Err(Error::SingularSystem { row: 1 }));
        let sys = TridiagonalSystem::new(vec![], vec![0.0], vec![], vec![1.0]).unwrap();
        assert_eq!(sys.solve(), Err(Error::SingularSystem { row: 0 }));
    }

    #[test]
    fn length_mismatch() {
        assert!(TridiagonalSystem::new(vec![1.0], vec![1.0], vec![], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn dominant_systems_have_small_residual(
            rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.01f64..2.0, -10.0f64..10.0), 1..60)
        ) {
            let n = rows.len();
            let lower: Vec<f64> = rows.iter().skip(1).map(|r| r.0).collect();
            let upper: Vec<f64> = rows.iter().take(n - 1).map(|r| r.1).collect();
            let diag: Vec<f64> = (0..n).map(|i| {
                let off = if i > 0 { lower[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { upper[i].abs() } else { 0.0 };
                off + rows[i].2
            }).collect();
            let rhs: Vec<f64> = rows.iter().map(|r| r.3).collect();
            let max_rhs = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sys = TridiagonalSystem::new(lower, diag, upper, rhs).unwrap();
            let x = sys.solve().unwrap();
            prop_assert!(sys.residual_max(&x) <= 1e-12 * (1.0 + max_rhs));
        }
    }
}
