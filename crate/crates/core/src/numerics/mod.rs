pub mod interp;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod tridiag;

pub use quadrature::{
    integrate_adaptive, integrate_improper, CutoffSchedule, QuadratureResult, Side, Verdict,
};
pub use special::{bessel_i0, bessel_k0, exp_integral_e1, EULER_GAMMA};
pub use tridiag::{solve_tridiagonal, TridiagonalSystem};
