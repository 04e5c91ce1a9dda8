use serde::Serialize;
use serde_json::{json, Value};
use slmc_core::cauchy::{
    boundary_layer_report, defect_surface_with, solve_raw, solve_transformed_with, CauchyOptions, CauchySolution,
};
use slmc_core::classify::{classify_default, Infinity, MartingaleClass};
use slmc_core::grid::Grid1D;
use slmc_core::model::ModelSpec;
use slmc_core::montecarlo::{estimate_expectation, simulate, Estimator};
use slmc_core::payoff::PayoffSpec;
use slmc_core::reference::bessel2d_defect;
use slmc_core::sturm::{compute_basic_solutions, growth_report, SlSolution};
use slmc_core::{Error, Result};

use crate::config::{RunConfig, DEFAULT_MC_STEPS};
use crate::output::Outputs;

fn grid_summary(g: &Grid1D) -> Value {
    json!({ "left": g.x_left(), "right": g.x_right(), "n": g.len(), "spacing": g.spacing() })
}

fn cauchy_options(cfg: &RunConfig) -> CauchyOptions {
    CauchyOptions {
        n_steps: cfg.steps,
        scheme: cfg.scheme,
        times: cfg.times.clone(),
        check_truncation: cfg.check_truncation,
        bc: cfg.bc,
    }
}

fn basic_solutions(cfg: &RunConfig) -> Result<(MartingaleClass, SlSolution)> {
    let class = classify_default(&cfg.model)?;
    let sol = compute_basic_solutions(&cfg.model, cfg.lambda, &cfg.grid()?)?;
    Ok((class, sol))
}

fn sl_details(class: &MartingaleClass, sol: &SlSolution) -> Value {
    json!({
        "class_label": class.label(),
        "lambda": sol.lambda(),
        "grid": grid_summary(sol.grid()),
        "far_field": sol.far_field(),
        "sl_adequacy": sol.adequacy(),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

#[derive(Serialize)]
struct ClassReport<'a> {
    model: String,
    label: &'a str,
    right_integral: &'a slmc_core::numerics::QuadratureResult,
    left_integral: &'a slmc_core::numerics::QuadratureResult,
    minus_inf: slmc_core::classify::BoundaryType,
    plus_inf: slmc_core::classify::BoundaryType,
}

pub fn classify(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let class = classify_default(&cfg.model)?;
    let report = ClassReport {
        model: cfg.model.description(),
        label: class.label().as_str(),
        right_integral: class.right_integral(),
        left_integral: class.left_integral(),
        minus_inf: class.boundary_type(Infinity::MinusInf),
        plus_inf: class.boundary_type(Infinity::PlusInf),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    out.write_json("classify.json", &report)?;
    Ok(json!({ "class_label": class.label() }))
}

pub fn phi(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let (class, sol) = basic_solutions(cfg)?;
    let growth = growth_report(&sol, &class);
    out.write_csv("phi.csv", |w| sol.write_csv(w))?;
    out.write_json("growth_report.json", &growth)?;
    println!(
        "phi: {} nodes, far field {:?}; growth phi_down at -inf {:?}, phi_up at +inf {:?}",
        sol.grid().len(),
        sol.far_field(),
        growth.phi_down_minus_inf.kind,
        growth.phi_up_plus_inf.kind
    );
    for w in &growth.warnings {
        eprintln!("warning: {w}");
    }
    Ok(merge(sl_details(&class, &sol), json!({ "growth": growth })))
}

fn print_values(label: &str, sol: &CauchySolution, t: f64, xs: &[f64]) {
    let g = sol.grid();
    for &x in xs.iter().filter(|x| (g.x_left()..=g.x_right()).contains(*x)) {
        println!("{label}: h({t}, {x}) = {:.8}", sol.value(t, x));
    }
}

pub fn solve(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let (class, sl) = basic_solutions(cfg)?;
    let sol = solve_transformed_with(&cfg.model, &class, &sl, &cfg.payoff, cfg.t, &cauchy_options(cfg))?;
    out.write_csv("solve.csv", |w| sol.write_csv(w))?;
    print_values("solve", &sol, cfg.t, &cfg.x0);
    Ok(merge(
        sl_details(&class, &sl),
        json!({
            "scheme": sol.scheme(),
            "n_steps": sol.n_steps(),
            "diagnostics": sol.diagnostics(),
        }),
    ))
}

pub fn defect(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let (class, sl) = basic_solutions(cfg)?;
    let side = cfg.side.unwrap_or(if class.is_strict_side(Infinity::PlusInf) {
        Infinity::PlusInf
    } else {
        Infinity::MinusInf
    });
    let d = defect_surface_with(&class, &sl, side, cfg.t, &cauchy_options(cfg))?;
    out.write_csv("defect.csv", |w| d.write_csv(w))?;
    let last = d.surface_at(cfg.t);
    println!(
        "defect ({side:?}): w({}, x) ranges over [{:.3e}, {:.3e}]",
        cfg.t,
        last.iter().copied().fold(f64::INFINITY, f64::min),
        last.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    );
    Ok(merge(sl_details(&class, &sl), json!({ "side": side, "n_steps": d.n_steps })))
}

pub fn mc(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let estimator = cfg.estimator();
    let steps = match estimator {
        Estimator::ExactBessel2d => 1,
        _ => cfg.steps.unwrap_or(DEFAULT_MC_STEPS),
    };
    let mut rows = vec![];
    for &x0 in &cfg.x0 {
        let s = simulate(estimator, &cfg.model, x0, cfg.t, steps, cfg.paths, cfg.seed, cfg.antithetic)?;
        let e = estimate_expectation(&s, &cfg.payoff)?;
        println!("mc: x0 = {x0}: mean {:.6} ± {:.2e} ({} paths, {:?})", e.mean, e.std_error, e.n_paths, estimator);
        rows.push((x0, e));
    }
    let model = cfg.model.kind_name();
    out.write_csv("mc.csv", |w| {
        use std::io::Write;
        writeln!(w, "model,x0,t,H,n_paths,seed,mean,std_error,estimator,flagged")?;
        for (x0, e) in &rows {
            writeln!(
                w,
                "{model},{x0},{},{},{},{},{:e},{:e},{},{}",
                cfg.t,
                cfg.payoff,
                e.n_paths,
                e.seed,
                e.mean,
                e.std_error,
                serde_json::to_value(e.estimator).expect("serializable").as_str().unwrap_or(""),
                e.flagged
            )?;
        }
        Ok(())
    })?;
    Ok(json!({
        "estimator": estimator,
        "steps": steps,
        "estimates": rows.iter().map(|(x0, e)| json!({ "x0": x0, "estimate": e })).collect::<Vec<_>>(),
    }))
}

const LAYER_TIMES: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
const LAYER_PROBES: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];

pub fn boundary_layer(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    if cfg.payoff != PayoffSpec::Identity {
        return Err(Error::Precondition(format!(
            "the boundary-layer report needs the identity payoff, got {}",
            cfg.payoff
        )));
    }
    let (class, sl) = basic_solutions(cfg)?;
    let requested: Vec<f64> = if cfg.times.is_empty() { LAYER_TIMES.to_vec() } else { cfg.times.clone() };
    let mut interior: Vec<f64> = requested.into_iter().filter(|t| *t > 0.0 && *t < cfg.t).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    let opts = CauchyOptions { times: interior.clone(), ..cauchy_options(cfg) };
    let sol = solve_transformed_with(&cfg.model, &class, &sl, &cfg.payoff, cfg.t, &opts)?;
    let mut times = interior;
    times.push(cfg.t);
    let g = sl.grid();
    let probes: Vec<f64> = if cfg.probes.is_empty() { LAYER_PROBES.to_vec() } else { cfg.probes.clone() };
    let probes: Vec<f64> =
        probes.into_iter().filter(|p| *p != 0.0 && *p > g.x_left() && *p < g.x_right()).collect();
    let report = boundary_layer_report(&sol, &class, &times, &probes)?;
    out.write_csv("boundary_layer.csv", |w| {
        use std::io::Write;
        writeln!(w, "t,x,ratio")?;
        for r in &report.rows {
            writeln!(w, "{:e},{:e},{:e}", r.t, r.x, r.ratio)?;
        }
        Ok(())
    })?;
    out.write_json("boundary_layer.json", &report)?;
    for (t, r) in &report.left_edge {
        println!("boundary-layer: t = {t}: h/x at x_left {r:.4}");
    }
    for (t, r) in &report.right_edge {
        println!("boundary-layer: t = {t}: h/x at x_right {r:.4}");
    }
    for (p, r) in &report.small_time {
        println!("boundary-layer: x = {p}: h/x at t = {} is {r:.4}", times[0]);
    }
    Ok(merge(
        sl_details(&class, &sl),
        json!({ "scheme": sol.scheme(), "n_steps": sol.n_steps(), "diagnostics": sol.diagnostics() }),
    ))
}

pub fn demo_nonuniqueness(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let (class, sl) = basic_solutions(cfg)?;
    let opts = cauchy_options(cfg);
    let g = sl.grid();
    let (hl, hr) = (cfg.payoff.eval(g.x_left()), cfg.payoff.eval(g.x_right()));
    let raw_opts = CauchyOptions { check_truncation: false, ..opts.clone() };
    let raw = solve_raw(&cfg.model, &cfg.payoff, cfg.t, g, &|_| hl, &|_| hr, &raw_opts)?;
    let tr = solve_transformed_with(&cfg.model, &class, &sl, &cfg.payoff, cfg.t, &opts)?;
    let h0 = cfg.payoff.eval_nodes(g.nodes());
    let raw_dev = raw
        .surfaces()
        .iter()
        .flat_map(|s| s.iter().zip(&h0).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let (r, t) = (raw.final_surface(), tr.final_surface());
    let (imax, dmax) = r
        .iter()
        .zip(t)
        .map(|(a, b)| (b - a).abs())
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    // For the inverse 2-D Bessel model with identity data the gap has a closed form.
    let closed = matches!(cfg.model.spec(), ModelSpec::InverseBessel2d)
        && cfg.payoff == PayoffSpec::Identity
        && cfg.t > 0.0;
    let gap: Option<Vec<f64>> = if closed {
        Some(g.nodes().iter().map(|&x| bessel2d_defect(x, cfg.t)).collect::<Result<_>>()?)
    } else {
        None
    };
    out.write_csv("raw.csv", |w| raw.write_csv(w))?;
    out.write_csv("transformed.csv", |w| tr.write_csv(w))?;
    out.write_csv("difference.csv", |w| {
        use std::io::Write;
        write!(w, "x,raw,transformed,transformed_minus_raw")?;
        writeln!(w, "{}", if gap.is_some() { ",closed_form" } else { "" })?;
        for (i, x) in g.nodes().iter().enumerate() {
            write!(w, "{x:e},{:e},{:e},{:e}", r[i], t[i], t[i] - r[i])?;
            match &gap {
                Some(c) => writeln!(w, ",{:e}", c[i])?,
                None => writeln!(w)?,
            }
        }
        Ok(())
    })?;
    let gap_error = gap.as_ref().map(|c| {
        g.inner_half().map(|i| (t[i] - r[i] - c[i]).abs()).fold(0.0, f64::max)
    });
    println!("demo-nonuniqueness: raw solution deviates from the data by at most {raw_dev:.2e}");
    println!(
        "demo-nonuniqueness: solutions differ by up to {dmax:.6} at t = {}, x = {}",
        cfg.t,
        g.nodes()[imax]
    );
    if let Some(e) = gap_error {
        println!("demo-nonuniqueness: difference matches the closed form within {e:.2e} on the inner half");
    }
    Ok(merge(
        sl_details(&class, &sl),
        json!({
            "scheme": tr.scheme(),
            "n_steps": tr.n_steps(),
            "diagnostics": tr.diagnostics(),
            "raw_max_deviation_from_data": raw_dev,
            "max_difference": dmax,
            "max_difference_at": g.nodes()[imax],
            "closed_form_difference_error": gap_error,
        }),
    ))
}
