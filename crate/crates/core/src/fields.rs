//! SDE coefficient fields (b, sigma), scalar potentials, and the
//! gradient-form drift construction b = sigma sigma^T grad(v).

use crate::error::Result;
use crate::numerics::{self, MatD, VecD};
use std::sync::Arc;

pub type DriftFn = Arc<dyn Fn(f64, &VecD) -> Result<VecD> + Send + Sync>;
pub type SigmaFn = Arc<dyn Fn(f64, &VecD) -> Result<MatD> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64, &VecD) -> Result<f64> + Send + Sync>;
pub type GradFn = Arc<dyn Fn(f64, &VecD) -> Result<VecD> + Send + Sync>;
pub type HessFn = Arc<dyn Fn(f64, &VecD) -> Result<MatD> + Send + Sync>;

/// The coefficient pair (b, sigma) of the SDE dX = b dt + sigma dB.
///
/// sigma(t, x) must be invertible wherever it is evaluated; this is checked
/// lazily by the operations that need the inverse.
#[derive(Clone)]
pub struct FieldBundle {
    dim: usize,
    drift: DriftFn,
    sigma: SigmaFn,
}

impl FieldBundle {
    pub fn new(dim: usize, drift: DriftFn, sigma: SigmaFn) -> Self {
        FieldBundle { dim, drift, sigma }
    }

    /// Constant-coefficient bundle.
    pub fn constant(b: VecD, sigma: MatD) -> Self {
        assert_eq!(b.dim(), sigma.dim());
        FieldBundle {
            dim: b.dim(),
            drift: Arc::new(move |_, _| Ok(b)),
            sigma: Arc::new(move |_, _| Ok(sigma)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self, t: f64, x: &VecD) -> Result<VecD> {
        (self.drift)(t, x)
    }

    pub fn sigma(&self, t: f64, x: &VecD) -> Result<MatD> {
        (self.sigma)(t, x)
    }

    /// Diffusion matrix a = sigma sigma^T, symmetric by construction (each
    /// off-diagonal entry is computed once and mirrored).
    pub fn eval_a(&self, t: f64, x: &VecD) -> Result<MatD> {
        let sigma = self.sigma(t, x)?;
        let d = sigma.dim();
        let mut a = MatD::zeros(d);
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += sigma.get(i, k) * sigma.get(j, k);
                }
                a.set(i, j, acc);
                a.set(j, i, acc);
            }
        }
        Ok(a)
    }

    /// sigma(t,x)^{-1} b(t,x), the integrand of the density process.
    pub fn sigma_inv_drift(&self, t: f64, x: &VecD) -> Result<VecD> {
        let sigma = self.sigma(t, x)?;
        let b = self.drift(t, x)?;
        Ok(sigma.inverse()?.matvec(&b))
    }
}

/// gamma = -sigma^{-1} b, the drift-removing integrand of the Girsanov
/// transformation.
pub fn gamma_field(fb: &FieldBundle) -> GradFn {
    let fb = fb.clone();
    Arc::new(move |t, x| Ok(fb.sigma_inv_drift(t, x)?.scale(-1.0)))
}

/// Scalar potential v(t, x) with optional analytic derivatives and
/// finite-difference fallbacks.
///
/// The finite-difference fallbacks (and the self-check below) presuppose
/// that the field is C^1 in time and C^2 in space; smoothness of
/// user-supplied expressions is not machine-checkable.
#[derive(Clone)]
pub struct Potential {
    value: ScalarFn,
    grad: Option<GradFn>,
    hess: Option<HessFn>,
    time_derivative: Option<ScalarFn>,
}

impl Potential {
    pub fn numeric(value: ScalarFn) -> Self {
        Potential { value, grad: None, hess: None, time_derivative: None }
    }

    pub fn analytic(
        value: ScalarFn,
        grad: GradFn,
        hess: HessFn,
        time_derivative: ScalarFn,
    ) -> Self {
        Potential {
            value,
            grad: Some(grad),
            hess: Some(hess),
            time_derivative: Some(time_derivative),
        }
    }

    pub fn with_gradient(mut self, grad: GradFn) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_hessian(mut self, hess: HessFn) -> Self {
        self.hess = Some(hess);
        self
    }

    pub fn with_time_derivative(mut self, dv_dt: ScalarFn) -> Self {
        self.time_derivative = Some(dv_dt);
        self
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn value(&self, t: f64, x: &VecD) -> Result<f64> {
        (self.value)(t, x)
    }

    pub fn gradient(&self, t: f64, x: &VecD) -> Result<VecD> {
        match &self.grad {
            Some(g) => g(t, x),
            None => numerics::fd_gradient(|t, x| self.value(t, x), t, x, None),
        }
    }

    /// Gradient by finite differences regardless of analytic availability.
    pub fn fd_gradient(&self, t: f64, x: &VecD) -> Result<VecD> {
        numerics::fd_gradient(|t, x| self.value(t, x), t, x, None)
    }

    pub fn hessian(&self, t: f64, x: &VecD) -> Result<MatD> {
        match &self.hess {
            Some(h) => h(t, x),
            None => numerics::fd_hessian(|t, x| self.value(t, x), t, x, None),
        }
    }

    pub fn fd_hessian(&self, t: f64, x: &VecD) -> Result<MatD> {
        numerics::fd_hessian(|t, x| self.value(t, x), t, x, None)
    }

    pub fn time_derivative(&self, t: f64, x: &VecD) -> Result<f64> {
        match &self.time_derivative {
            Some(d) => d(t, x),
            None => numerics::fd_time_derivative(|t, x| self.value(t, x), t, x, None),
        }
    }

    pub fn fd_time_derivative(&self, t: f64, x: &VecD) -> Result<f64> {
        numerics::fd_time_derivative(|t, x| self.value(t, x), t, x, None)
    }
}

/// Drift of gradient form: b(t,x) = a(t,x) grad(v)(t,x) with a = sigma sigma^T.
pub fn drift_from_potential(v: &Potential, sigma: SigmaFn) -> DriftFn {
    let v = v.clone();
    Arc::new(move |t, x| {
        let s = sigma(t, x)?;
        let d = s.dim();
        let mut a = MatD::zeros(d);
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += s.get(i, k) * s.get(j, k);
                }
                a.set(i, j, acc);
                a.set(j, i, acc);
            }
        }
        Ok(a.matvec(&v.gradient(t, x)?))
    })
}

/// Result of comparing analytic derivatives against their finite-difference
/// estimates on a sample of points.
#[derive(Debug, Clone)]
pub struct SelfCheckReport {
    pub max_gradient_dev: Option<f64>,
    pub max_hessian_dev: Option<f64>,
    pub max_time_derivative_dev: Option<f64>,
    pub pass: bool,
}

/// Check the analytic derivatives of `v` against finite differences.
/// Passes iff every deviation is <= 1e-4 * (1 + |analytic value|).
/// A potential without analytic derivatives passes vacuously.
pub fn potential_self_check(v: &Potential, samples: &[(f64, VecD)]) -> Result<SelfCheckReport> {
    assert!(!samples.is_empty(), "need at least one sample point");
    let tol = |analytic: f64| 1e-4 * (1.0 + analytic.abs());
    let mut pass = true;
    let mut max_grad = None;
    let mut max_hess = None;
    let mut max_dt = None;

    for (t, x) in samples {
        if let Some(g) = &v.grad {
            let analytic = g(*t, x)?;
            let fd = v.fd_gradient(*t, x)?;
            for i in 0..analytic.dim() {
                let dev = (analytic.get(i) - fd.get(i)).abs();
                max_grad = Some(max_grad.unwrap_or(0.0f64).max(dev));
                pass &= dev <= tol(analytic.get(i));
            }
        }
        if let Some(h) = &v.hess {
            let analytic = h(*t, x)?;
            let fd = v.fd_hessian(*t, x)?;
            for i in 0..analytic.dim() {
                for j in 0..analytic.dim() {
                    let dev = (analytic.get(i, j) - fd.get(i, j)).abs();
                    max_hess = Some(max_hess.unwrap_or(0.0f64).max(dev));
                    pass &= dev <= tol(analytic.get(i, j));
                }
            }
        }
        if let Some(d) = &v.time_derivative {
            let analytic = d(*t, x)?;
            let fd = v.fd_time_derivative(*t, x)?;
            let dev = (analytic - fd).abs();
            max_dt = Some(max_dt.unwrap_or(0.0f64).max(dev));
            pass &= dev <= tol(analytic);
        }
    }

    Ok(SelfCheckReport {
        max_gradient_dev: max_grad,
        max_hessian_dev: max_hess,
        max_time_derivative_dev: max_dt,
        pass,
    })
}
