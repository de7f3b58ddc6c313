//! The density process of the Girsanov transformation along simulated paths.
//!
//! With gamma = -sigma^{-1} b, the Radon-Nikodym derivative of the
//! drift-removing measure change is dQ_t/dP = exp(-Zhat_t) where
//!
//!   Zhat_t = int_0^t <sigma^{-1}b, dB> + 1/2 int_0^t |sigma^{-1}b|^2 ds.
//!
//! The stochastic integral is discretized with left-endpoint (Ito)
//! evaluation against the increments recorded during simulation. Weights are
//! kept in log space (Zhat itself) and exponentiated on demand.

use crate::error::{Error, Result};
use crate::fields::FieldBundle;
use crate::numerics::VecD;
use crate::sde::PathRecord;

/// The running density process along one path: Zhat at every grid time and
/// the weights e^{-Zhat}.
#[derive(Debug, Clone)]
pub struct GirsanovSeries {
    pub times: Vec<f64>,
    pub zhat: Vec<f64>,
    /// Running quadratic-variation part 1/2 sum |sigma^{-1}b|^2 dt,
    /// nonnegative and nondecreasing.
    pub quadratic_part: Vec<f64>,
}

impl GirsanovSeries {
    pub fn weights(&self) -> Vec<f64> {
        self.zhat.iter().map(|z| (-z).exp()).collect()
    }

    pub fn final_zhat(&self) -> f64 {
        *self.zhat.last().unwrap()
    }

    pub fn final_weight(&self) -> f64 {
        (-self.final_zhat()).exp()
    }
}

/// One increment of Zhat at the left endpoint (t, x):
/// <sigma^{-1}b, dB> + 1/2 |sigma^{-1}b|^2 dt.
pub fn zhat_increment(fb: &FieldBundle, t: f64, x: &VecD, dt: f64, db: &VecD) -> Result<f64> {
    let f = fb.sigma_inv_drift(t, x)?;
    Ok(f.dot(db) + 0.5 * f.norm_sq() * dt)
}

/// Accumulate the density process along a path simulated with the same
/// field bundle (the recorded increments are integrated as-is).
pub fn density_process(fb: &FieldBundle, path: &PathRecord) -> Result<GirsanovSeries> {
    let n = path.grid.steps();
    let dt = path.grid.dt();
    let mut zhat = Vec::with_capacity(n + 1);
    let mut quad = Vec::with_capacity(n + 1);
    let mut times = Vec::with_capacity(n + 1);
    zhat.push(0.0);
    quad.push(0.0);
    times.push(0.0);
    let mut z = 0.0;
    let mut q = 0.0;
    for step in 0..n {
        let t = path.grid.time(step);
        let x = &path.states[step];
        let f = fb.sigma_inv_drift(t, x).map_err(|e| match e {
            Error::SingularMatrix { pivot, threshold, .. } => Error::SingularMatrix {
                pivot,
                threshold,
                context: Some(format!("density process at step {step}, t = {t}")),
            },
            other => other,
        })?;
        let qinc = 0.5 * f.norm_sq() * dt;
        z += f.dot(&path.increments[step]) + qinc;
        q += qinc;
        zhat.push(z);
        quad.push(q);
        times.push(path.grid.time(step + 1));
    }
    Ok(GirsanovSeries { times, zhat, quadratic_part: quad })
}

/// Empirical martingale check: the sample mean of the final weights
/// e^{-Zhat_T} should be 1. Passes iff |mean - 1| <= 3 stderr.
///
/// This is a finite-sample proxy for the exponential-moment condition
/// behind the measure change: it can falsify, never prove.
#[derive(Debug, Clone, Copy)]
pub struct MartingaleCheck {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub pass: bool,
}

pub fn martingale_check(final_weights: &[f64]) -> Result<MartingaleCheck> {
    let n = final_weights.len();
    if n < 100 {
        return Err(Error::TooFewPaths { got: n, need: 100 });
    }
    let mean = final_weights.iter().sum::<f64>() / n as f64;
    let var = final_weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (n - 1) as f64;
    let stderr = (var / n as f64).sqrt();
    Ok(MartingaleCheck { mean, stderr, n_paths: n, pass: (mean - 1.0).abs() <= 3.0 * stderr })
}
