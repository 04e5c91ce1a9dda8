//! Acceptance suite: runs the ten end-to-end criteria and prints one
//! PASS/FAIL line each. Exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{bessel2d_value, e1, i0, k0, GAMMA};
use slmc_core::cauchy::{defect_surface, solve_raw, solve_transformed, CauchyOptions, CauchySolution, Scheme};
use slmc_core::classify::{classify_default, ClassLabel, Infinity};
use slmc_core::grid::Grid1D;
use slmc_core::model::DiffusionModel;
use slmc_core::montecarlo::{estimate_expectation, simulate_exact_bessel2d, simulate_lamperti_euler};
use slmc_core::payoff::PayoffSpec;
use slmc_core::sturm::{compute_basic_solutions, growth_report, wronskian, GrowthKind};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bessel_grid(n: usize) -> Grid1D {
    Grid1D::uniform(-12.0, 6.0, n).unwrap()
}

fn rannacher() -> CauchyOptions {
    CauchyOptions { scheme: Scheme::Rannacher, ..Default::default() }
}

fn bessel_identity(n: usize, lambda: f64) -> CauchySolution {
    let m = DiffusionModel::inverse_bessel_2d();
    solve_transformed(&m, &PayoffSpec::Identity, 1.0, lambda, &bessel_grid(n), &rannacher()).unwrap()
}

fn max_closed_form_error(sol: &CauchySolution) -> f64 {
    let g = sol.grid();
    g.indices_in(-6.0, 2.0)
        .map(|i| (sol.final_surface()[i] - bessel2d_value(g.nodes()[i], 1.0)).abs())
        .fold(0.0, f64::max)
}

fn classification() -> Outcome {
    let b = classify_default(&DiffusionModel::inverse_bessel_2d()).map_err(|e| e.to_string())?;
    let q = classify_default(&DiffusionModel::qnv_no_root(0.0, 1.0).unwrap()).map_err(|e| e.to_string())?;
    let c = classify_default(&DiffusionModel::constant_vol(1.0).unwrap()).map_err(|e| e.to_string())?;
    let bl = b.left_integral().value;
    let (ql, qr) = (q.left_integral().value, q.right_integral().value);
    let ok = b.label() == ClassLabel::StrictCaseIi
        && q.label() == ClassLabel::StrictCaseIii
        && c.label() == ClassLabel::TrueMartingale
        && (bl - 0.5).abs() <= 1e-6
        && (ql - 1.0).abs() <= 1e-6
        && (qr - 1.0).abs() <= 1e-6;
    check(
        ok,
        format!(
            "labels {}/{}/{}; bessel left {bl:.9}; qnv {ql:.9}, {qr:.9}",
            b.label().as_str(),
            q.label().as_str(),
            c.label().as_str()
        ),
    )
}

fn sturm_liouville() -> Outcome {
    let m = DiffusionModel::inverse_bessel_2d();
    let g = bessel_grid(4001);
    let s = compute_basic_solutions(&m, 0.5, &g).map_err(|e| e.to_string())?;
    let (up, down) = (s.phi_up(), s.phi_down());
    let (i1, k1) = (i0(1.0), k0(1.0));
    let mut err = 0.0f64;
    for i in g.indices_in(-3.0, 3.0) {
        let z = g.nodes()[i].exp();
        err = err.max((up[i] / (i0(z) / i1) - 1.0).abs());
        err = err.max((down[i] / (k0(z) / k1) - 1.0).abs());
    }
    let w = wronskian(&s);
    let (lo, hi) = w.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let spread = hi / lo - 1.0;
    let rep = growth_report(&s, &classify_default(&m).unwrap());
    let ok = err <= 1e-4
        && spread <= 1e-4
        && rep.phi_down_minus_inf.kind == GrowthKind::Linear
        && rep.phi_up_plus_inf.kind == GrowthKind::SuperLinear;
    check(
        ok,
        format!(
            "max rel err {err:.2e}; Wronskian spread {spread:.2e}; growth φ↓ {:?}, φ↑ {:?}",
            rep.phi_down_minus_inf.kind, rep.phi_up_plus_inf.kind
        ),
    )
}

fn cauchy_closed_form() -> Outcome {
    let sol = bessel_identity(2001, 1.0);
    let err = max_closed_form_error(&sol);
    let far = sol.value(1.0, -8.0);
    let target = 0.5 * (2f64.ln() + 1f64.ln() - GAMMA);
    let ok = err <= 5e-3 && (far - 0.057966).abs() <= 5e-3 && (target - 0.057966).abs() < 1e-6;
    check(ok, format!("max err on [-6,2] {err:.2e}; h(1,-8) = {far:.6}"))
}

fn nonuniqueness() -> Outcome {
    let m = DiffusionModel::inverse_bessel_2d();
    let g = bessel_grid(2001);
    let (xl, xr) = (g.x_left(), g.x_right());
    let opts = CauchyOptions { times: (1..10).map(|k| k as f64 / 10.0).collect(), ..rannacher() };
    let raw = solve_raw(&m, &PayoffSpec::Identity, 1.0, &g, &|_| xl, &|_| xr, &opts).map_err(|e| e.to_string())?;
    let raw_err = raw
        .surfaces()
        .iter()
        .flat_map(|s| s.iter().zip(g.nodes()).map(|(h, x)| (h - x).abs()))
        .fold(0.0, f64::max);
    let tr = bessel_identity(2001, 1.0);
    let gap = tr.value(1.0, -4.0) + 4.0;
    let exact = 0.5 * e1((-8f64).exp() / 2.0);
    let ok = raw_err <= 1e-10 && gap >= 0.25 && (gap - exact).abs() <= 5e-3;
    check(ok, format!("raw max |h-x| {raw_err:.2e}; transformed h(1,-4)+4 = {gap:.5} (oracle {exact:.5})"))
}

fn defect() -> Outcome {
    let m = DiffusionModel::inverse_bessel_2d();
    let opts = CauchyOptions { times: (1..20).map(|k| k as f64 / 20.0).collect(), ..Default::default() };
    let d = defect_surface(&m, 1.0, Infinity::MinusInf, 1.0, &bessel_grid(2001), &opts).map_err(|e| e.to_string())?;
    let initial = d.surfaces[0].iter().all(|w| *w == 1.0);
    let bounded = d.surfaces.iter().flatten().all(|w| (0.0..=1.0).contains(w));
    let worst_increase = d
        .surfaces
        .windows(2)
        .flat_map(|p| p[1].iter().zip(&p[0]).map(|(b, a)| b - a))
        .fold(f64::NEG_INFINITY, f64::max);
    let last = d.surface_at(1.0);
    let outer = &last[..5];
    let decreasing = outer.windows(2).all(|w| w[0] < w[1]) && outer[0] < 1e-3;
    let ok = initial && bounded && worst_increase <= 1e-10 && decreasing;
    check(
        ok,
        format!("w(0)=1 {initial}; in [0,1] {bounded}; max increase {worst_increase:.1e}; outer nodes {outer:?}"),
    )
}

fn mc_closed_form() -> Outcome {
    let mut detail = vec![];
    let mut ok = true;
    for (x0, target, seed) in [(0.0, 0.5 * e1(0.5), 20_240_601), (-8.0, 0.5 * (2f64.ln() - GAMMA), 20_240_602)] {
        let s = simulate_exact_bessel2d(x0, 1.0, 1_000_000, seed, false).map_err(|e| e.to_string())?;
        let e = estimate_expectation(&s, &PayoffSpec::Identity).map_err(|e| e.to_string())?;
        let z = (e.mean - target).abs() / e.std_error;
        ok &= z <= 4.0;
        detail.push(format!("x0={x0}: {:.6} ± {:.1e} ({z:.2} SE)", e.mean, e.std_error));
    }
    check(ok, detail.join("; "))
}

fn mc_vs_fd() -> Outcome {
    let m = DiffusionModel::qnv_no_root(0.0, 1.0).unwrap();
    let t = 0.5;
    let fine = Grid1D::uniform(-50.0, 50.0, 4001).unwrap();
    let coarse = Grid1D::uniform(-50.0, 50.0, 2001).unwrap();
    let fd = solve_transformed(&m, &PayoffSpec::Identity, t, 1.0, &fine, &rannacher()).map_err(|e| e.to_string())?;
    let fd_c = solve_transformed(&m, &PayoffSpec::Identity, t, 1.0, &coarse, &rannacher()).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut detail = vec![];
    for (k, x0) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        let s = simulate_lamperti_euler(&m, x0, t, 2000, 1_000_000, 7_000 + k as u64, false)
            .map_err(|e| e.to_string())?;
        let e = estimate_expectation(&s, &PayoffSpec::Identity).map_err(|e| e.to_string())?;
        let v = fd.value(t, x0);
        let fd_err = (v - fd_c.value(t, x0)).abs();
        let bar = e.std_error.hypot(fd_err);
        let z = (e.mean - v).abs() / bar;
        ok &= z <= 4.0;
        detail.push(format!("x0={x0}: mc {:.5} fd {v:.5} ({z:.2} bars)", e.mean));
    }
    let n = fine.len();
    let (left, right) = (fd.final_surface()[0] / -50.0, fd.final_surface()[n - 1] / 50.0);
    ok &= left.abs() <= 0.1 && right.abs() <= 0.1;
    detail.push(format!("edge ratios {left:.4}, {right:.4}"));
    check(ok, detail.join("; "))
}

fn lambda_invariance() -> Outcome {
    let a = bessel_identity(2001, 0.5);
    let b = bessel_identity(2001, 2.0);
    if a.n_steps() != b.n_steps() {
        return Err("step counts differ".into());
    }
    let g = a.grid();
    let d = g
        .indices_in(-6.0, 2.0)
        .map(|i| (a.final_surface()[i] - b.final_surface()[i]).abs())
        .fold(0.0, f64::max);
    check(d <= 1e-3, format!("max |h(λ=0.5) − h(λ=2)| on [-6,2] {d:.2e}"))
}

fn convergence_order() -> Outcome {
    let coarse = bessel_identity(2001, 1.0);
    let fine = bessel_identity(4001, 1.0);
    let (e1, e2) = (max_closed_form_error(&coarse), max_closed_form_error(&fine));
    let order = (e1 / e2).log2();
    let steps = (coarse.n_steps(), fine.n_steps());
    check(order >= 1.8, format!("errors {e1:.3e} → {e2:.3e}, order {order:.3}; steps {steps:?}"))
}

fn martingale_control() -> Outcome {
    let m = DiffusionModel::constant_vol(1.0).unwrap();
    let g = Grid1D::uniform(-12.0, 12.0, 2401).unwrap();
    let opts = CauchyOptions { times: vec![0.25, 0.5, 0.75], ..rannacher() };
    let sol = solve_transformed(&m, &PayoffSpec::Identity, 1.0, 1.0, &g, &opts).map_err(|e| e.to_string())?;
    let x = g.nodes();
    let err = sol
        .surfaces()
        .iter()
        .flat_map(|s| g.inner_half().map(move |i| (s[i] - x[i]).abs()))
        .fold(0.0, f64::max);
    check(err <= 1e-3, format!("max |h-x| on inner half {err:.2e}"))
}

fn main() {
    type Criterion = (&'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("classification exactness", 1, classification),
        ("Sturm-Liouville accuracy", 5, sturm_liouville),
        ("Cauchy closed-form reproduction", 60, cauchy_closed_form),
        ("nonuniqueness demo", 60, nonuniqueness),
        ("defect properties", 60, defect),
        ("Monte Carlo vs closed form", 60, mc_closed_form),
        ("Monte Carlo vs finite differences", 300, mc_vs_fd),
        ("lambda invariance", 120, lambda_invariance),
        ("convergence order", 300, convergence_order),
        ("martingale control", 30, martingale_control),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        failures += usize::from(!pass);
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2}s of {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
