//! The six experiment commands. Every file artifact is deterministic given
//! (config, seed); run timing appears only in the report's runtime field and
//! on stdout.

use crate::config::Config;
use crate::report::{
    fmt_f64, verdict_section, write_csv, BurgersSection, CurlSection,
    MartingaleSection, RunReport, SimulateSection, SolverSection, StudyReport,
    ThresholdsSection,
};
use girsanov_lab::burgers1d::{burgers_residual, harmonic_residual, phi_consistency};
use girsanov_lab::error::Error;
use girsanov_lab::girsanov::{density_process, martingale_check};
use girsanov_lab::kpz::{cole_hopf_solve, gradient_form_check, BoxRegion, GridAxis, GridField};
use girsanov_lab::sde::{simulate_ensemble, TimeGrid};
use girsanov_lab::verify::{run_verification, Verdict};
use girsanov_lab::VecD;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Independent,
    Dependent,
}

pub struct Outcome {
    pub exit_code: i32,
    pub report: RunReport,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::ConfigError(msg.into())
}

fn require_dt(cfg: &Config) -> Result<f64, Error> {
    cfg.dt.ok_or_else(|| cfg_err("this command needs a top-level `dt` in the config"))
}

fn finish(mut report: RunReport, started: Instant, out_dir: &Path, exit_code: i32) -> Result<Outcome, Error> {
    report.runtime_seconds = started.elapsed().as_secs_f64();
    report
        .write(out_dir)
        .map_err(|e| cfg_err(format!("cannot write report to {}: {e}", out_dir.display())))?;
    Ok(Outcome { exit_code, report })
}

pub fn simulate(cfg: &Config, out_dir: &Path) -> Result<Outcome, Error> {
    let started = Instant::now();
    let dt = require_dt(cfg)?;
    let grid = TimeGrid::from_dt(cfg.horizon, dt)?;
    let scen = &cfg.scenario;
    let ensemble = simulate_ensemble(&scen.fb, &scen.x0, &grid, cfg.seed, cfg.n_paths);

    let mut header = String::from("path_id,t");
    for k in 1..=scen.dim {
        header.push_str(&format!(",x{k}"));
    }
    header.push_str(",zhat,weight");

    let mut rows: Vec<String> = Vec::with_capacity(ensemble.paths.len() * (grid.steps() + 1));
    for (path_id, path) in &ensemble.paths {
        let series = density_process(&scen.fb, path)?;
        for n in 0..=grid.steps() {
            let mut row = format!("{path_id},{}", fmt_f64(grid.time(n)));
            for k in 0..scen.dim {
                row.push(',');
                row.push_str(&fmt_f64(path.states[n].get(k)));
            }
            row.push(',');
            row.push_str(&fmt_f64(series.zhat[n]));
            row.push(',');
            row.push_str(&fmt_f64((-series.zhat[n]).exp()));
            rows.push(row);
        }
    }
    write_csv(&out_dir.join("paths.csv"), &header, rows.into_iter())
        .map_err(|e| cfg_err(format!("cannot write paths.csv: {e}")))?;

    if !ensemble.failures.is_empty() {
        eprintln!(
            "warning: {} of {} paths blew up and were excluded",
            ensemble.failures.len(),
            cfg.n_paths
        );
    }
    let mut report = RunReport::new("simulate", &scen.name, cfg.seed);
    report.simulate = Some(SimulateSection {
        n_paths: cfg.n_paths,
        steps: grid.steps(),
        dt,
        blowups: ensemble.failures.len(),
        blown_path_ids: ensemble.failures.iter().map(|(id, _)| *id).collect(),
    });
    println!(
        "simulate: {} paths x {} steps written to paths.csv ({} blow-ups)",
        ensemble.paths.len(),
        grid.steps(),
        ensemble.failures.len()
    );
    finish(report, started, out_dir, 0)
}

pub fn verify(cfg: &Config, out_dir: &Path, expect: Option<Expectation>) -> Result<Outcome, Error> {
    let started = Instant::now();
    let scen = &cfg.scenario;
    let region = BoxRegion::centered(&scen.x0, cfg.curl_half_width);
    let verification = run_verification(
        &scen.fb,
        &scen.candidate,
        &scen.x0,
        cfg.horizon,
        &cfg.dt_list,
        cfg.n_paths,
        cfg.seed,
        &region,
        cfg.curl_samples,
        &cfg.thresholds,
    )?;

    let header = "dt,steps,rms_t,max_abs,mean_t,order_vs_prev,blowups";
    let rows = verification.study.levels.iter().enumerate().map(|(i, l)| {
        let order = if i == 0 {
            String::new()
        } else {
            let o = verification.study.pairwise_orders[i - 1];
            if o.is_nan() { String::new() } else { fmt_f64(o) }
        };
        format!(
            "{},{},{},{},{},{order},{}",
            fmt_f64(l.dt),
            l.steps,
            fmt_f64(l.rms_t),
            fmt_f64(l.max_abs),
            fmt_f64(l.mean_t),
            l.blowups
        )
    });
    write_csv(&out_dir.join("verify_stats.csv"), header, rows)
        .map_err(|e| cfg_err(format!("cannot write verify_stats.csv: {e}")))?;

    let mut report = RunReport::new("verify", &scen.name, cfg.seed);
    report.verdict = Some(verdict_section(&verification));
    report.study = Some(StudyReport::from_study(&verification.study));
    report.curl = Some(CurlSection::from_report(&verification.curl));
    report.thresholds = Some(ThresholdsSection::from_thresholds(&verification.thresholds));

    println!("verdict: {} ({})", verification.verdict, verification.explanation);
    let exit_code = match expect {
        None => 0,
        Some(Expectation::Independent) => {
            if verification.verdict == Verdict::PathIndependent { 0 } else { 2 }
        }
        Some(Expectation::Dependent) => {
            if verification.verdict == Verdict::PathDependent { 0 } else { 2 }
        }
    };
    finish(report, started, out_dir, exit_code)
}

pub fn kpz_solve(cfg: &Config, out_dir: &Path) -> Result<Outcome, Error> {
    let started = Instant::now();
    let scen = &cfg.scenario;
    let sigma = scen
        .constant_sigma
        .ok_or_else(|| cfg_err("the Cole-Hopf solver requires constant sigma"))?;
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| cfg_err("kpz-solve needs a [grid] section"))?;
    if grid.x_min.len() != scen.dim
        || grid.x_max.len() != scen.dim
        || grid.n_points.len() != scen.dim
    {
        return Err(cfg_err(format!(
            "[grid] axis arrays must all have {} entries",
            scen.dim
        )));
    }
    let axes: Vec<GridAxis> = (0..scen.dim)
        .map(|i| GridAxis::new(grid.x_min[i], grid.x_max[i], grid.n_points[i]))
        .collect::<Result<_, _>>()?;
    let terminal =
        GridField::from_fn(axes, cfg.horizon, |x| cfg.scenario.candidate.value(cfg.horizon, x))?;
    let output_times = grid.output_times.clone().unwrap_or_else(|| vec![0.0]);
    let slices = cole_hopf_solve(&terminal, &sigma, grid.steps, &output_times)?;

    // exact discrete maximum principle: w stays within the terminal range
    let (w_lo, w_hi) = (terminal.min_value().exp(), terminal.max_value().exp());
    let max_principle = slices.iter().all(|s| {
        s.values.iter().all(|v| {
            let w = v.exp();
            w >= w_lo - 1e-12 && w <= w_hi + 1e-12
        })
    });

    let mut files = Vec::new();
    for (i, slice) in slices.iter().enumerate() {
        let name = format!("kpz_{i:03}.csv");
        let header = match scen.dim {
            1 => "t,x1,v".to_string(),
            _ => "t,x1,x2,v".to_string(),
        };
        let rows: Vec<String> = match scen.dim {
            1 => (0..slice.axes[0].n_points)
                .map(|ix| {
                    format!(
                        "{},{},{}",
                        fmt_f64(slice.t),
                        fmt_f64(slice.axes[0].coord(ix)),
                        fmt_f64(slice.values[ix])
                    )
                })
                .collect(),
            _ => {
                let mut rows = Vec::new();
                for ix in 0..slice.axes[0].n_points {
                    for iy in 0..slice.axes[1].n_points {
                        rows.push(format!(
                            "{},{},{},{}",
                            fmt_f64(slice.t),
                            fmt_f64(slice.axes[0].coord(ix)),
                            fmt_f64(slice.axes[1].coord(iy)),
                            fmt_f64(slice.values[slice.idx(ix, iy)])
                        ));
                    }
                }
                rows
            }
        };
        write_csv(&out_dir.join(&name), &header, rows.into_iter())
            .map_err(|e| cfg_err(format!("cannot write {name}: {e}")))?;
        files.push(name);
    }

    let mut report = RunReport::new("kpz-solve", &scen.name, cfg.seed);
    report.solver = Some(SolverSection {
        steps: grid.steps,
        internal_dt: cfg.horizon / grid.steps as f64,
        output_times,
        files: files.clone(),
        max_principle_exact: max_principle,
    });
    println!("kpz-solve: {} slice(s) written ({})", files.len(), files.join(", "));
    finish(report, started, out_dir, 0)
}

pub fn burgers_check(cfg: &Config, out_dir: &Path) -> Result<Outcome, Error> {
    let started = Instant::now();
    let scen = &cfg.scenario;
    let model = cfg
        .burgers_model
        .as_ref()
        .ok_or_else(|| cfg_err("burgers-check needs a [burgers] section or a 1D scenario with a built-in structure function"))?;
    let (x_min, x_max, n_samples, h, stationary, t_samples) = match &cfg.burgers_section {
        Some(s) => (
            s.x_min,
            s.x_max,
            s.n_samples,
            s.h.unwrap_or(1e-3),
            s.stationary.unwrap_or(false),
            s.t_samples.clone().unwrap_or_else(|| vec![0.0, 0.45 * cfg.horizon, 0.9 * cfg.horizon]),
        ),
        None => (
            -2.0,
            2.0,
            81,
            1e-3,
            false,
            vec![0.0, 0.45 * cfg.horizon, 0.9 * cfg.horizon],
        ),
    };
    if n_samples < 2 {
        return Err(cfg_err("burgers.n_samples must be >= 2"));
    }

    let mut rows = Vec::new();
    let mut max_abs = 0.0f64;
    let dx = (x_max - x_min) / (n_samples - 1) as f64;
    if stationary {
        for i in 0..n_samples {
            let x = x_min + i as f64 * dx;
            let u = model.u(0.0, x)?;
            let r = harmonic_residual(model, x, h)?;
            max_abs = max_abs.max(r.abs());
            rows.push(format!("{},{},{},{}", fmt_f64(0.0), fmt_f64(x), fmt_f64(u), fmt_f64(r)));
        }
    } else {
        for &t in &t_samples {
            for i in 0..n_samples {
                let x = x_min + i as f64 * dx;
                let u = model.u(t, x)?;
                let r = burgers_residual(model, t, x, h)?;
                max_abs = max_abs.max(r.abs());
                rows.push(format!("{},{},{},{}", fmt_f64(t), fmt_f64(x), fmt_f64(u), fmt_f64(r)));
            }
        }
    }
    write_csv(&out_dir.join("burgers_scan.csv"), "t,x,u,residual", rows.into_iter())
        .map_err(|e| cfg_err(format!("cannot write burgers_scan.csv: {e}")))?;

    // structure-function consistency |b - Phi(u)| on the sampled points
    let consistency = if scen.dim == 1 {
        let fb = scen.fb.clone();
        let b: girsanov_lab::burgers1d::Scalar1D =
            Arc::new(move |t, x| Ok(fb.drift(t, &VecD::from_slice(&[x]))?.get(0)));
        let samples: Vec<(f64, f64)> = t_samples
            .iter()
            .flat_map(|&t| (0..n_samples).map(move |i| (t, x_min + i as f64 * dx)))
            .collect();
        Some(phi_consistency(model, &b, &samples)?)
    } else {
        None
    };

    let pass = max_abs <= cfg.residual_tol;
    let mut report = RunReport::new("burgers-check", &scen.name, cfg.seed);
    report.burgers = Some(BurgersSection {
        n_samples,
        max_abs_residual: max_abs,
        residual_tol: cfg.residual_tol,
        pass,
        phi_consistency_max_dev: consistency,
        stationary,
    });
    println!(
        "burgers-check: max |residual| = {max_abs:.3e} (tolerance {:.3e}) -> {}",
        cfg.residual_tol,
        if pass { "pass" } else { "fail" }
    );
    finish(report, started, out_dir, if pass { 0 } else { 2 })
}

pub fn gradient_check(
    cfg: &Config,
    out_dir: &Path,
    expect: Option<Expectation>,
) -> Result<Outcome, Error> {
    let started = Instant::now();
    let scen = &cfg.scenario;
    let region = BoxRegion::centered(&scen.x0, cfg.curl_half_width);
    let curl = gradient_form_check(
        &scen.fb,
        0.0,
        &region,
        cfg.curl_samples,
        cfg.seed,
        cfg.thresholds.curl_tol,
    )?;

    let mut report = RunReport::new("gradient-check", &scen.name, cfg.seed);
    report.curl = Some(CurlSection::from_report(&curl));
    println!(
        "gradient-check: max asymmetry {:.6e} over {} samples -> {}",
        curl.max_asym,
        curl.n_samples,
        if curl.pass { "pass" } else { "fail" }
    );
    let exit_code = match (expect, curl.pass) {
        (None, _) => 0,
        (Some(Expectation::Independent), true) | (Some(Expectation::Dependent), false) => 0,
        _ => 2,
    };
    finish(report, started, out_dir, exit_code)
}

pub fn martingale(cfg: &Config, out_dir: &Path) -> Result<Outcome, Error> {
    let started = Instant::now();
    let dt = require_dt(cfg)?;
    let grid = TimeGrid::from_dt(cfg.horizon, dt)?;
    let scen = &cfg.scenario;
    let ensemble = simulate_ensemble(&scen.fb, &scen.x0, &grid, cfg.seed, cfg.n_paths);
    if !ensemble.failures.is_empty() {
        eprintln!(
            "warning: {} of {} paths blew up and were excluded",
            ensemble.failures.len(),
            cfg.n_paths
        );
    }
    let mut weights = Vec::with_capacity(ensemble.paths.len());
    let mut rows = Vec::with_capacity(ensemble.paths.len());
    for (path_id, path) in &ensemble.paths {
        let series = density_process(&scen.fb, path)?;
        let z = series.final_zhat();
        let w = (-z).exp();
        weights.push(w);
        rows.push(format!("{path_id},{},{}", fmt_f64(z), fmt_f64(w)));
    }
    write_csv(&out_dir.join("weights.csv"), "path_id,zhat_t,weight", rows.into_iter())
        .map_err(|e| cfg_err(format!("cannot write weights.csv: {e}")))?;

    let check = martingale_check(&weights)?;
    let mut report = RunReport::new("martingale-check", &scen.name, cfg.seed);
    report.martingale = Some(MartingaleSection::from_check(&check));
    println!(
        "martingale-check: mean = {:.6} +- {:.6} over {} paths -> {}",
        check.mean,
        check.stderr,
        check.n_paths,
        if check.pass { "pass" } else { "fail" }
    );
    finish(report, started, out_dir, if check.pass { 0 } else { 2 })
}
