mod common;

use common::{i0 as i0_series, k0, k0_series};
use proptest::prelude::*;
use slmc_core::classify::classify_default;
use slmc_core::grid::Grid1D;
use slmc_core::model::DiffusionModel;
use slmc_core::sturm::{compute_basic_solutions, growth_report, transform_coefficients, wronskian, GrowthKind, SlSolution, UChoice};
use slmc_core::Error;

fn check_invariants(s: &SlSolution) {
    let up = s.phi_up();
    let down = s.phi_down();
    let z = s.grid().zero_index();
    assert_eq!(up[z], 1.0);
    assert_eq!(down[z], 1.0);
    assert!(s.dlog_phi_up()[1..].iter().all(|u| *u > 0.0));
    assert!(s.dlog_phi_down()[..s.grid().len() - 1].iter().all(|u| *u < 0.0));
    assert!(s.log_big_phi().iter().all(|l| l.is_finite() && *l > 0.0));
    let w = wronskian(s);
    let (lo, hi) = w.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi / lo < 1.0 + 1e-4, "Wronskian spread {lo}..{hi}");
}

#[test]
fn exponentials_for_constant_volatility() {
    let m = DiffusionModel::constant_vol(2f64.sqrt()).unwrap();
    let g = Grid1D::uniform(-8.0, 8.0, 1601).unwrap();
    let s = compute_basic_solutions(&m, 1.0, &g).unwrap();
    let (up, down) = (s.phi_up(), s.phi_down());
    for i in g.indices_in(-5.0, 5.0) {
        let x = g.nodes()[i];
        assert!((up[i] / x.exp() - 1.0).abs() < 1e-6);
        assert!((down[i] / (-x).exp() - 1.0).abs() < 1e-6);
    }
    for w in wronskian(&s) {
        assert!((w / 2.0 - 1.0).abs() < 1e-5);
    }
    let t = transform_coefficients(&s, UChoice::PhiUp);
    assert!(t.drift.iter().all(|d| (d - 2.0).abs() < 1e-6));
    assert_eq!(t.scale[g.zero_index()], 0.0);
}

#[test]
fn bessel_oracles() {
    let m = DiffusionModel::inverse_bessel_2d();
    let g = Grid1D::uniform(-12.0, 6.0, 2001).unwrap();
    let s = compute_basic_solutions(&m, 0.5, &g).unwrap();
    let (up, down) = (s.phi_up(), s.phi_down());
    let (i1, k1) = (i0_series(1.0), k0_series(1.0));
    for i in g.indices_in(-3.0, 3.0) {
        let z = g.nodes()[i].exp();
        assert!((up[i] / (i0_series(z) / i1) - 1.0).abs() < 1e-5);
        assert!((down[i] / (k0(z) / k1) - 1.0).abs() < 1e-5, "x={}", g.nodes()[i]);
    }
    let j = g.nearest(1.0);
    assert!((up[j] - 3.078).abs() < 2e-2, "{}", up[j]);
    check_invariants(&s);
}

#[test]
fn derivatives_match_bessel_derivatives() {
    // d/dx I₀(eˣ) = eˣ I₁(eˣ); checked against a centred difference of the oracle.
    let m = DiffusionModel::inverse_bessel_2d();
    let g = Grid1D::uniform(-6.0, 3.0, 901).unwrap();
    let s = compute_basic_solutions(&m, 0.5, &g).unwrap();
    let d = 1e-5;
    let up_p = s.phi_up_prime();
    let i1 = i0_series(1.0);
    for i in g.indices_in(-2.0, 2.0).step_by(20) {
        let x = g.nodes()[i];
        let fd = (i0_series((x + d).exp()) - i0_series((x - d).exp())) / (2.0 * d) / i1;
        assert!((up_p[i] - fd).abs() < 1e-6 * (1.0 + fd.abs()));
    }
}

#[test]
fn growth_reports() {
    let cases = [
        (DiffusionModel::inverse_bessel_2d(), (-12.0, 6.0), GrowthKind::Linear, GrowthKind::SuperLinear),
        (DiffusionModel::constant_vol(1.0).unwrap(), (-10.0, 10.0), GrowthKind::SuperLinear, GrowthKind::SuperLinear),
        (DiffusionModel::qnv_no_root(0.0, 1.0).unwrap(), (-50.0, 50.0), GrowthKind::Linear, GrowthKind::Linear),
    ];
    for (m, (l, r), down_kind, up_kind) in cases {
        let g = Grid1D::uniform(l, r, 2001).unwrap();
        let s = compute_basic_solutions(&m, 0.5, &g).unwrap();
        let rep = growth_report(&s, &classify_default(&m).unwrap());
        assert_eq!(rep.phi_down_minus_inf.kind, down_kind, "{}", m.kind_name());
        assert_eq!(rep.phi_up_plus_inf.kind, up_kind, "{}", m.kind_name());
        assert!(rep.warnings.is_empty());
    }
}

#[test]
fn bessel_phi_down_slope_limit() {
    // K₀(eˣ) ~ −x for x → −∞, so φ↓(x)/|x| → 1/K₀(1).
    let m = DiffusionModel::inverse_bessel_2d();
    let g = Grid1D::uniform(-12.0, 6.0, 2001).unwrap();
    let s = compute_basic_solutions(&m, 0.5, &g).unwrap();
    let rep = growth_report(&s, &classify_default(&m).unwrap());
    let lim = rep.phi_down_minus_inf.limit_ratio.unwrap();
    assert!((lim * k0_series(1.0) - 1.0).abs() < 1e-3, "{lim}");
}

#[test]
fn scale_functions_of_the_transform() {
    let m = DiffusionModel::inverse_bessel_2d();
    let mut left = vec![];
    let mut right = vec![];
    for xr in [2.0, 3.0, 4.0] {
        let g = Grid1D::uniform(-12.0, xr, 1601).unwrap();
        let s = compute_basic_solutions(&m, 1.0, &g).unwrap();
        let t = transform_coefficients(&s, UChoice::PhiDown);
        left.push(t.scale[0]);
        right.push(*t.scale.last().unwrap());
        let phi = transform_coefficients(&s, UChoice::Phi);
        assert!(phi.scale[0].is_finite() && phi.scale[0] < 0.0);
        assert!(phi.scale.last().unwrap().is_finite());
    }
    assert!(right.windows(2).all(|w| w[1] > 100.0 * w[0]));
    assert!((left[2] / left[0] - 1.0).abs() < 1e-2);
}

#[test]
fn grid_without_zero_is_a_config_error() {
    assert!(matches!(Grid1D::from_nodes(vec![-1.0, -0.5, 0.5, 1.0]), Err(Error::Config(_))));
}

#[test]
fn residual_converges_at_second_order() {
    for m in [DiffusionModel::inverse_bessel_2d(), DiffusionModel::qnv_no_root(0.0, 1.0).unwrap()] {
        let mut errs = vec![];
        for n in [301, 601, 1201] {
            let g = Grid1D::uniform(-3.0, 3.0, n).unwrap();
            let s = compute_basic_solutions(&m, 1.0, &g).unwrap();
            let (ru, rd) = s.ode_residual();
            errs.push(ru.iter().chain(&rd).fold(0.0f64, |a, b| a.max(*b)));
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{}: {errs:?}", m.kind_name());
        }
    }
}

#[test]
fn tanh_grids_are_supported() {
    let m = DiffusionModel::qnv_no_root(0.0, 1.0).unwrap();
    let g = Grid1D::tanh(-20.0, 20.0, 801, 1.5).unwrap();
    let s = compute_basic_solutions(&m, 1.0, &g).unwrap();
    check_invariants(&s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariants_hold_across_lambda_and_models(
        lambda in prop::sample::select(vec![0.5, 1.0, 2.0]),
        which in 0usize..3,
        a in -1.0f64..1.0,
        b in 0.5f64..2.0,
    ) {
        let (m, l, r) = match which {
            0 => (DiffusionModel::inverse_bessel_2d(), -12.0, 5.0),
            1 => (DiffusionModel::qnv_no_root(a, b).unwrap(), -30.0, 30.0),
            _ => (DiffusionModel::constant_vol(b).unwrap(), -8.0, 8.0),
        };
        let g = Grid1D::uniform(l, r, 801).unwrap();
        let s = compute_basic_solutions(&m, lambda, &g).unwrap();
        check_invariants(&s);
        let other = compute_basic_solutions(&m, lambda * 1.5, &g).unwrap();
        let i = g.nearest(0.5 * r);
        prop_assert!((s.log_phi_up()[i] - other.log_phi_up()[i]).abs() > 1e-6);
    }
}
