//! Euler-Maruyama simulation of dX = b(t,X) dt + sigma(t,X) dB on a uniform
//! time grid, with a counter-keyed Gaussian stream so ensembles are
//! reproducible independent of scheduling.

use crate::error::{Error, Result};
use crate::fields::FieldBundle;
use crate::numerics::VecD;
use crate::rng::GaussianStream;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Uniform grid on [0, T] with N steps; t_n = n * dt exactly (no accumulation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if horizon <= 0.0 || !horizon.is_finite() {
            return Err(Error::ConfigError(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::ConfigError("step count must be >= 1".into()));
        }
        Ok(TimeGrid { horizon, steps })
    }

    /// Grid from a requested dt; dt must divide the horizon within 1e-12
    /// relative.
    pub fn from_dt(horizon: f64, dt: f64) -> Result<Self> {
        if dt <= 0.0 || dt.is_nan() {
            return Err(Error::ConfigError(format!("dt must be positive, got {dt}")));
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > 1e-12 * horizon.abs() {
            return Err(Error::ConfigError(format!(
                "dt = {dt} does not divide the horizon T = {horizon}"
            )));
        }
        TimeGrid::new(horizon, steps as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    #[inline]
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }
}

/// One simulated trajectory: the states and the Brownian increments that
/// actually drove them (the density process must integrate the same dB).
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub grid: TimeGrid,
    pub states: Vec<VecD>,
    pub increments: Vec<VecD>,
}

impl PathRecord {
    pub fn initial_state(&self) -> &VecD {
        &self.states[0]
    }

    pub fn final_state(&self) -> &VecD {
        self.states.last().unwrap()
    }
}

/// One explicit Euler-Maruyama step: x + b(t,x) dt + sigma(t,x) dB,
/// coefficients at the left endpoint (Ito convention).
pub fn em_step(fb: &FieldBundle, t: f64, x: &VecD, dt: f64, db: &VecD) -> Result<VecD> {
    let b = fb.drift(t, x)?;
    let sigma = fb.sigma(t, x)?;
    let next = x.add(&b.scale(dt)).add(&sigma.matvec(db));
    if !next.is_finite() {
        return Err(Error::NonFiniteState { step: 0, t });
    }
    Ok(next)
}

/// Gaussian increments dB_n ~ N(0, dt I) for one path, each component drawn
/// at stream offset (path, step, component).
pub fn draw_increments(
    stream: &GaussianStream,
    path_id: u64,
    grid: &TimeGrid,
    dim: usize,
) -> Vec<VecD> {
    let sqrt_dt = grid.dt().sqrt();
    (0..grid.steps())
        .map(|n| {
            let mut db = VecD::zeros(dim);
            for k in 0..dim {
                db.set(k, sqrt_dt * stream.standard_normal(path_id, n as u64, k as u64));
            }
            db
        })
        .collect()
}

/// Iterate Euler-Maruyama along the given increments, recording every state.
/// A non-finite state aborts with the offending step index.
pub fn simulate_path_with_increments(
    fb: &FieldBundle,
    x0: &VecD,
    grid: &TimeGrid,
    increments: Vec<VecD>,
) -> Result<PathRecord> {
    assert_eq!(increments.len(), grid.steps());
    let mut states = Vec::with_capacity(grid.steps() + 1);
    states.push(*x0);
    let mut x = *x0;
    let dt = grid.dt();
    for (n, db) in increments.iter().enumerate() {
        let t = grid.time(n);
        x = em_step(fb, t, &x, dt, db).map_err(|e| match e {
            Error::NonFiniteState { .. } => Error::NonFiniteState { step: n, t },
            other => other,
        })?;
        states.push(x);
    }
    Ok(PathRecord { grid: *grid, states, increments })
}

/// Simulate one path, drawing its increments from the stream at offsets keyed
/// by `path_id`.
pub fn simulate_path(
    fb: &FieldBundle,
    x0: &VecD,
    grid: &TimeGrid,
    stream: &GaussianStream,
    path_id: u64,
) -> Result<PathRecord> {
    let increments = draw_increments(stream, path_id, grid, fb.dim());
    simulate_path_with_increments(fb, x0, grid, increments)
}

/// Ensemble simulation result. Failed (blown-up) paths are recorded with
/// their path id and the step at which they left the finite range.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub paths: Vec<(u64, PathRecord)>,
    pub failures: Vec<(u64, Error)>,
}

impl Ensemble {
    pub fn n_requested(&self) -> usize {
        self.paths.len() + self.failures.len()
    }

    pub fn blowup_fraction(&self) -> f64 {
        self.failures.len() as f64 / self.n_requested() as f64
    }
}

fn collect_ensemble(results: Vec<(u64, Result<PathRecord>)>) -> Ensemble {
    let mut paths = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(p) => paths.push((id, p)),
            Err(e) => failures.push((id, e)),
        }
    }
    Ensemble { paths, failures }
}

/// Simulate `n_paths` paths; path p uses stream offsets keyed by (seed, p),
/// so the ensemble is identical whether computed serially or in parallel.
#[cfg(feature = "parallel")]
pub fn simulate_ensemble(
    fb: &FieldBundle,
    x0: &VecD,
    grid: &TimeGrid,
    seed: u64,
    n_paths: usize,
) -> Ensemble {
    let stream = GaussianStream::new(seed);
    let results: Vec<(u64, Result<PathRecord>)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| (p, simulate_path(fb, x0, grid, &stream, p)))
        .collect();
    collect_ensemble(results)
}

#[cfg(not(feature = "parallel"))]
pub fn simulate_ensemble(
    fb: &FieldBundle,
    x0: &VecD,
    grid: &TimeGrid,
    seed: u64,
    n_paths: usize,
) -> Ensemble {
    simulate_ensemble_seq(fb, x0, grid, seed, n_paths)
}

/// Sequential ensemble simulation; always available, used as the baseline in
/// the benchmark suite and as the fallback without the `parallel` feature.
pub fn simulate_ensemble_seq(
    fb: &FieldBundle,
    x0: &VecD,
    grid: &TimeGrid,
    seed: u64,
    n_paths: usize,
) -> Ensemble {
    let stream = GaussianStream::new(seed);
    let results: Vec<(u64, Result<PathRecord>)> = (0..n_paths as u64)
        .map(|p| (p, simulate_path(fb, x0, grid, &stream, p)))
        .collect();
    collect_ensemble(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::MatD;

    #[test]
    fn grid_times_are_exact_multiples() {
        let g = TimeGrid::from_dt(1.0, 1e-3).unwrap();
        assert_eq!(g.steps(), 1000);
        assert_eq!(g.time(250), 250.0 * g.dt());
    }

    #[test]
    fn grid_rejects_non_dividing_dt() {
        assert!(matches!(TimeGrid::from_dt(1.0, 3e-4), Err(Error::ConfigError(_))));
    }

    #[test]
    fn em_step_no_dynamics() {
        let fb = FieldBundle::constant(VecD::zeros(2), MatD::identity(2));
        let x = VecD::from_slice(&[1.0, -1.0]);
        let next = em_step(&fb, 0.0, &x, 0.1, &VecD::zeros(2)).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn em_step_pure_drift() {
        let fb = FieldBundle::constant(VecD::from_slice(&[1.0, -1.0]), MatD::zeros(2));
        let next = em_step(&fb, 0.0, &VecD::zeros(2), 0.1, &VecD::zeros(2)).unwrap();
        assert_eq!(next, VecD::from_slice(&[0.1, -0.1]));
    }

    #[test]
    fn em_step_hand_value() {
        let fb = FieldBundle::constant(
            VecD::from_slice(&[1.0, -1.0]),
            MatD::diagonal(&[2.0, 2.0]),
        );
        let next =
            em_step(&fb, 0.0, &VecD::zeros(2), 0.1, &VecD::from_slice(&[0.05, 0.05])).unwrap();
        assert!((next.get(0) - 0.2).abs() < 1e-15);
        assert!((next.get(1) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn zero_drift_path_telescopes() {
        let fb = FieldBundle::constant(VecD::zeros(2), MatD::identity(2));
        let grid = TimeGrid::from_dt(1.0, 0.01).unwrap();
        let stream = GaussianStream::new(9);
        let x0 = VecD::from_slice(&[0.5, -0.5]);
        let path = simulate_path(&fb, &x0, &grid, &stream, 0).unwrap();
        let mut expected = x0;
        for db in &path.increments {
            expected = expected.add(db);
        }
        assert_eq!(*path.final_state(), expected);
    }

    #[test]
    fn deterministic_drift_reaches_x0_plus_ct() {
        let c = VecD::from_slice(&[2.0, -3.0]);
        let fb = FieldBundle::constant(c, MatD::zeros(2));
        let grid = TimeGrid::from_dt(1.0, 1e-3).unwrap();
        let stream = GaussianStream::new(1);
        let path = simulate_path(&fb, &VecD::zeros(2), &grid, &stream, 0).unwrap();
        let end = path.final_state();
        assert!((end.get(0) - 2.0).abs() <= 1e-12);
        assert!((end.get(1) + 3.0).abs() <= 1e-12);
    }

    #[test]
    fn constant_coefficients_match_closed_form() {
        // X_N = x0 + b T + sigma B_T exactly for constant (b, sigma), with
        // B_T reconstructed from the recorded increments
        let b = VecD::from_slice(&[0.8, -0.3]);
        let sigma = MatD::from_rows(2, &[1.0, 0.3, 0.0, 0.9]);
        let fb = FieldBundle::constant(b, sigma);
        let grid = TimeGrid::from_dt(1.0, 1e-3).unwrap();
        let stream = GaussianStream::new(33);
        let x0 = VecD::from_slice(&[0.2, -0.1]);
        let path = simulate_path(&fb, &x0, &grid, &stream, 3).unwrap();
        let mut b_total = VecD::zeros(2);
        for db in &path.increments {
            b_total = b_total.add(db);
        }
        let closed = x0.add(&b.scale(grid.horizon())).add(&sigma.matvec(&b_total));
        for i in 0..2 {
            assert!(
                (path.final_state().get(i) - closed.get(i)).abs() <= 1e-12,
                "component {i}: {} vs {}",
                path.final_state().get(i),
                closed.get(i)
            );
        }
    }

    #[test]
    fn same_seed_same_path_bitwise() {
        let fb = FieldBundle::constant(VecD::from_slice(&[0.1, 0.0]), MatD::identity(2));
        let grid = TimeGrid::from_dt(0.5, 0.01).unwrap();
        let stream = GaussianStream::new(42);
        let a = simulate_path(&fb, &VecD::zeros(2), &grid, &stream, 7).unwrap();
        let b = simulate_path(&fb, &VecD::zeros(2), &grid, &stream, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_path_ids_get_distinct_increments() {
        let grid = TimeGrid::from_dt(0.1, 0.01).unwrap();
        let stream = GaussianStream::new(42);
        let a = draw_increments(&stream, 0, &grid, 2);
        let b = draw_increments(&stream, 1, &grid, 2);
        assert_ne!(a, b);
    }

    #[test]
    fn ensemble_mean_within_clt_bound() {
        // b = 0, sigma = I: final-state mean is within 3 sqrt(T/n) of x0
        let fb = FieldBundle::constant(VecD::zeros(2), MatD::identity(2));
        let grid = TimeGrid::from_dt(1.0, 0.05).unwrap();
        let n = 10_000;
        let ens = simulate_ensemble_seq(&fb, &VecD::zeros(2), &grid, 3, n);
        assert!(ens.failures.is_empty());
        let mut mean = VecD::zeros(2);
        for (_, p) in &ens.paths {
            mean = mean.add(p.final_state());
        }
        mean = mean.scale(1.0 / n as f64);
        let bound = 3.0 * (1.0f64 / n as f64).sqrt();
        assert!(mean.get(0).abs() <= bound, "{} > {bound}", mean.get(0));
        assert!(mean.get(1).abs() <= bound, "{} > {bound}", mean.get(1));
    }

    #[test]
    fn blow_up_reports_step_index() {
        use std::sync::Arc;
        // cubic drift explodes in a handful of steps from x0 = 2
        let fb = FieldBundle::new(
            1,
            Arc::new(|_, x: &VecD| {
                let v = x.get(0);
                Ok(VecD::from_slice(&[100.0 * v * v * v]))
            }),
            Arc::new(|_, _| Ok(MatD::identity(1))),
        );
        let grid = TimeGrid::from_dt(1.0, 0.1).unwrap();
        let stream = GaussianStream::new(5);
        match simulate_path(&fb, &VecD::from_slice(&[2.0]), &grid, &stream, 0) {
            Err(Error::NonFiniteState { step, .. }) => assert!(step < 10),
            other => panic!("expected NonFiniteState, got {other:?}"),
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_serial_ensembles_are_identical() {
        let fb = FieldBundle::constant(VecD::from_slice(&[0.3, -0.2]), MatD::identity(2));
        let grid = TimeGrid::from_dt(0.5, 0.01).unwrap();
        let par = simulate_ensemble(&fb, &VecD::zeros(2), &grid, 11, 64);
        let seq = simulate_ensemble_seq(&fb, &VecD::zeros(2), &grid, 11, 64);
        assert_eq!(par.paths, seq.paths);
    }
}
