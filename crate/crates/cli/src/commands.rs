use num_complex::Complex64;
use quadprop::cauchy::{gaussian, propagate_with_report, WaveFunction1D};
use quadprop::characteristic::{characteristic_horizon, solve_characteristic};
use quadprop::green1d::PhaseEngine;
use quadprop::magnetic3d::{eval_green3d, ladder_window, solve_mu_h, MagneticEngine};
use quadprop::validation::{run_validation, CriterionReport, ValidationConfig};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{read_wave_csv, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Characteristic,
    Green1d,
    Propagate,
    Nls,
    Magnetic3d,
    Validate,
}

/// What a command reports back to the driver.
pub struct Outcome {
    pub success: bool,
    pub summary: Value,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Outcome { success: true, summary }
    }
}

pub fn run(cmd: Command, cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Outcome> {
    match cmd {
        Command::Characteristic => characteristic(cfg, out),
        Command::Green1d => green1d(cfg, out),
        Command::Propagate => propagate(cfg, out),
        Command::Nls => nls(cfg, out),
        Command::Magnetic3d => magnetic3d(cfg, out),
        Command::Validate => validate(cfg, out),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn characteristic(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Outcome> {
    let cs = cfg.coefficients.build()?;
    let t_end = characteristic_horizon(&cs, cfg.t);
    let sol = solve_characteristic(&cs, t_end, cfg.tol)?;
    let rows: Vec<[f64; 3]> = linspace(0.0, t_end, cfg.time_samples)
        .into_iter()
        .map(|t| [t, sol.mu(t), sol.mu_prime(t)])
        .collect();
    out.csv("characteristic.csv", &["t", "mu", "mu_prime"], &rows)?;
    let meta = json!({
        "t_end": t_end,
        "source": sol.source(),
        "steps": sol.step_count(),
        "focal_times": sol.focal_times(),
        "slope_zeros": sol.slope_zeros(),
    });
    out.json("characteristic.json", &meta)?;
    Ok(Outcome::ok(meta))
}

fn green1d(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Outcome> {
    let cs = cfg.coefficients.build()?;
    let t = cfg.t;
    let sol = solve_characteristic(&cs, characteristic_horizon(&cs, t), cfg.tol)?;
    let green = PhaseEngine::new(&cs, &sol, t, cfg.qtol)?.green(t)?;
    let axis = cfg.grid.points();
    let mut rows = Vec::with_capacity(axis.len() * axis.len());
    for &x in &axis {
        for &y in &axis {
            let g = green.eval(x, y)?;
            rows.push([x, y, g.re, g.im]);
        }
    }
    out.csv("green1d.csv", &["x", "y", "re_G", "im_G"], &rows)?;
    out.json("phase.json", &green.phase)?;
    let meta = json!({
        "t": t,
        "mu": green.mu,
        "branch": green.branch,
        "crossings": green.crossings,
        "rows": rows.len(),
    });
    out.json("green1d.json", &meta)?;
    Ok(Outcome::ok(meta))
}

fn initial_state(cfg: &RunConfig) -> CliResult<WaveFunction1D> {
    let Some(path) = &cfg.psi0 else {
        let g = cfg.grid;
        return Ok(WaveFunction1D::from_fn(g.min, g.max, g.n, 0.0, |x| gaussian(x, 0.0, 0.0))?);
    };
    let (xs, vals) = read_wave_csv(path)?;
    let n = xs.len();
    if n < 2 {
        return Err(CliError::config("initial state needs at least two rows"));
    }
    let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    for (i, &x) in xs.iter().enumerate() {
        let expected = xs[0] + i as f64 * h;
        if (x - expected).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(CliError::config("initial state must be sampled on a uniform increasing grid")
                .with_context(json!({ "row": i + 1, "x": x, "expected": expected })));
        }
    }
    let values = vals.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
    Ok(WaveFunction1D::new(xs[0], xs[n - 1], values, 0.0)?)
}

fn propagate(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Outcome> {
    let cs = cfg.coefficients.build()?;
    let t = cfg.t;
    let psi0 = initial_state(cfg)?;
    let sol = solve_characteristic(&cs, characteristic_horizon(&cs, t), cfg.tol)?;
    let (psi, report) = propagate_with_report(&cs, &sol, &psi0, t, cfg.qtol)?;
    let rows: Vec<[f64; 3]> = psi.values.iter().enumerate().map(|(i, v)| [psi.x(i), v.re, v.im]).collect();
    out.csv("psi.csv", &["x", "re", "im"], &rows)?;
    let meta = json!({
        "t": t,
        "points": psi.len(),
        "norm_initial": report.norm_initial,
        "norm_final": report.norm_final,
        "norm_drift": (report.norm_final - report.norm_initial).abs(),
        "truncation_bound": report.truncation_bound,
        "max_subpanels": report.max_subpanels,
    });
    out.json("propagate.json", &meta)?;
    Ok(Outcome::ok(meta))
}

fn nls(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Outcome> {
    let family = &cfg.nls;
    let blowup = family.blowup_time();
    if let Some(t0) = blowup {
        if cfg.t >= t0 {
            return Err(CliError::from(quadprop::Error::BlowUp { t: cfg.t, mu: 0.0 })
                .with_context(json!({ "blowup_time": t0 })));
        }
    }
    let xs = cfg.grid.points();
    let mut rows = Vec::with_capacity(xs.len() * cfg.time_samples);
    for t in linspace(0.0, cfg.t, cfg.time_samples) {
        for &x in &xs {
            let psi = family.eval(x, t)?;
            rows.push([x, t, psi.re, psi.im, psi.norm()]);
        }
    }
    out.csv("nls.csv", &["x", "t", "re", "im", "abs"], &rows)?;
    let meta = json!({
        "family": family,
        "exponent": family.exponent(),
        "blowup_time": blowup,
        "t_end": cfg.t,
    });
    out.json("nls.json", &meta)?;
    Ok(Outcome::ok(meta))
}

fn magnetic3d(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Outcome> {
    let profile = cfg.magnetic.build()?;
    let t = cfg.t;
    let sol = solve_mu_h(&profile, 1.2 * t, cfg.tol)?;
    let engine = MagneticEngine::new(&profile, &sol, t, cfg.qtol)?;
    let coeffs = engine.propagator_coeffs(t)?;
    let axis = cfg.grid.points();
    let mut rows = Vec::with_capacity(axis.len().pow(3) * cfg.magnetic.sources.len());
    for &rp in &cfg.magnetic.sources {
        for &x in &axis {
            for &y in &axis {
                for &z in &axis {
                    let g = eval_green3d(&coeffs, [x, y, z], rp, t, &profile)?;
                    rows.push([x, y, z, rp[0], rp[1], rp[2], g.re, g.im]);
                }
            }
        }
    }
    out.csv("magnetic3d.csv", &["x", "y", "z", "xp", "yp", "zp", "re_G", "im_G"], &rows)?;
    let meta = json!({
        "t": t,
        "profile": profile,
        "ladder_window": ladder_window(&sol),
        "ladder": coeffs,
    });
    out.json("ladder.json", &meta)?;
    Ok(Outcome::ok(json!({ "t": t, "rows": rows.len() })))
}

fn validate(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Outcome> {
    let vc = ValidationConfig { seed: cfg.seed, tol: cfg.tol, qtol: cfg.qtol };
    let mut report = run_validation(&vc)?;
    // Reproducibility is checked by a second full run.
    let again = run_validation(&vc)?;
    let same = again.to_json() == report.to_json();
    report.criteria.push(CriterionReport {
        id: 12,
        name: "determinism".into(),
        passed: same,
        metric: Some(if same { 0.0 } else { 1.0 }),
        tolerance: 0.0,
        detail: "two runs compared byte for byte".into(),
    });
    report.all_passed = report.criteria.iter().all(|c| c.passed);
    for c in &report.criteria {
        println!("{}", c.line());
    }
    out.json("report.json", &report)?;
    let failed: Vec<u32> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    Ok(Outcome { success: report.all_passed, summary: json!({ "all_passed": report.all_passed, "failed": failed }) })
}
