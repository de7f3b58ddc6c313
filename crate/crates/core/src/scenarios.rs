//! Built-in scenarios with closed-form structure, used as ground truth by the
//! verification pipeline and the test suites.
//!
//! - `linear`: v = <c,x> - |sigma^T c|^2 t / 2 with constant sigma; the
//!   drift b = sigma sigma^T c is constant and the discrete density
//!   identity telescopes exactly.
//! - `bridge`: v is the log-density of a Gaussian pinned at time t0 > T;
//!   b = -x / (t0 - t). Solves the time-reversed equation.
//! - `rotational`: b = kappa (-x2, x1), sigma = I, candidate v = 0. The
//!   canonical non-gradient counterexample.
//! - `ou1d`: b = -theta x with the stationary candidate potential
//!   v = -theta x^2 / (2 sigma0^2). The candidate does not solve the
//!   time-reversed equation, so the density is path-dependent despite the
//!   drift being a spatial gradient.
//! - `porous1d`: the monomial structure function Phi(r) = m r^m evaluated
//!   on the constant solution u = u0; coefficients are constant so the
//!   density identity is exact.

use crate::burgers1d::{Burgers1DModel, Phi};
use crate::fields::{drift_from_potential, FieldBundle, Potential};
use crate::numerics::{MatD, VecD};
use std::sync::Arc;

/// A named coefficient/candidate pairing plus the metadata the verification
/// pipeline needs.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub fb: FieldBundle,
    /// Candidate potential for the path-independence identity.
    pub candidate: Potential,
    pub x0: VecD,
    /// Present when sigma is constant (enables the Cole-Hopf solver).
    pub constant_sigma: Option<MatD>,
    /// One-dimensional generalized Burgers structure, when the scenario has
    /// one.
    pub burgers: Option<Burgers1DModel>,
}

/// v = <c,x> - |sigma^T c|^2 t / 2, b = sigma sigma^T c (all constant).
pub fn linear(sigma: MatD, c: VecD) -> Scenario {
    assert_eq!(sigma.dim(), c.dim());
    let dim = c.dim();
    let sigma_t_c = sigma.transpose().matvec(&c);
    let rate = 0.5 * sigma_t_c.norm_sq();
    let value = Arc::new(move |t: f64, x: &VecD| Ok(c.dot(x) - rate * t));
    let grad = Arc::new(move |_: f64, _: &VecD| Ok(c));
    let hess = Arc::new(move |_: f64, _: &VecD| Ok(MatD::zeros(dim)));
    let dvdt = Arc::new(move |_: f64, _: &VecD| Ok(-rate));
    let candidate = Potential::analytic(value, grad, hess, dvdt);

    let mut a = MatD::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += sigma.get(i, k) * sigma.get(j, k);
            }
            a.set(i, j, acc);
        }
    }
    let b = a.matvec(&c);
    Scenario {
        name: "linear".into(),
        dim,
        fb: FieldBundle::constant(b, sigma),
        candidate,
        x0: VecD::zeros(dim),
        constant_sigma: Some(sigma),
        burgers: None,
    }
}

/// Default linear scenario: d = 2, sigma = [[1, 0.3], [0, 0.9]],
/// c = (0.7, -0.4).
pub fn linear_default() -> Scenario {
    linear(
        MatD::from_rows(2, &[1.0, 0.3, 0.0, 0.9]),
        VecD::from_slice(&[0.7, -0.4]),
    )
}

/// v(t,x) = -|x|^2 / (2 sigma0^2 (t0 - t)) - (d/2) log(2 pi sigma0^2 (t0 - t)),
/// b = -x / (t0 - t), sigma = sigma0 I. Requires t0 greater than the horizon.
pub fn bridge(dim: usize, sigma0: f64, t0: f64) -> Scenario {
    assert!(sigma0 > 0.0 && t0 > 0.0);
    let s2 = sigma0 * sigma0;
    let dd = dim as f64;
    let value = Arc::new(move |t: f64, x: &VecD| {
        let tau = t0 - t;
        Ok(-x.norm_sq() / (2.0 * s2 * tau) - 0.5 * dd * (std::f64::consts::TAU * s2 * tau).ln())
    });
    let grad = Arc::new(move |t: f64, x: &VecD| Ok(x.scale(-1.0 / (s2 * (t0 - t)))));
    let hess = Arc::new(move |t: f64, _: &VecD| {
        let mut h = MatD::identity(dim);
        let c = -1.0 / (s2 * (t0 - t));
        for i in 0..dim {
            h.set(i, i, c);
        }
        Ok(h)
    });
    let dvdt = Arc::new(move |t: f64, x: &VecD| {
        let tau = t0 - t;
        Ok(-x.norm_sq() / (2.0 * s2 * tau * tau) + 0.5 * dd / tau)
    });
    let candidate = Potential::analytic(value, grad, hess, dvdt);

    let drift = Arc::new(move |t: f64, x: &VecD| Ok(x.scale(-1.0 / (t0 - t))));
    let mut sigma = MatD::identity(dim);
    for i in 0..dim {
        sigma.set(i, i, sigma0);
    }
    let fb = FieldBundle::new(dim, drift, Arc::new(move |_, _| Ok(sigma)));

    // 1D: u = dv/dx = -x / (sigma0^2 (t0 - t)) with the classical structure
    // function Phi(r) = sigma0^2 r
    let burgers = (dim == 1).then(|| {
        Burgers1DModel::new(
            Arc::new(move |t: f64, x: f64| Ok(-x / (s2 * (t0 - t)))),
            Phi::monomial(s2, 1),
            0.0,
        )
        .expect("classical Phi is integrable")
    });

    Scenario {
        name: "bridge".into(),
        dim,
        fb,
        candidate,
        x0: VecD::zeros(dim),
        constant_sigma: Some(sigma),
        burgers,
    }
}

/// b = kappa (-x2, x1), sigma = I, candidate v = 0: curl-failing drift whose
/// density process is path-dependent.
pub fn rotational(kappa: f64) -> Scenario {
    let drift = Arc::new(move |_: f64, x: &VecD| {
        Ok(VecD::from_slice(&[-kappa * x.get(1), kappa * x.get(0)]))
    });
    let fb = FieldBundle::new(2, drift, Arc::new(|_, _| Ok(MatD::identity(2))));
    let candidate = Potential::analytic(
        Arc::new(|_, _| Ok(0.0)),
        Arc::new(|_, _| Ok(VecD::zeros(2))),
        Arc::new(|_, _| Ok(MatD::zeros(2))),
        Arc::new(|_, _| Ok(0.0)),
    );
    Scenario {
        name: "rotational".into(),
        dim: 2,
        fb,
        candidate,
        x0: VecD::from_slice(&[1.0, 0.0]),
        constant_sigma: Some(MatD::identity(2)),
        burgers: None,
    }
}

/// b = -theta x, sigma = sigma0, candidate v = -theta x^2 / (2 sigma0^2).
/// The candidate reproduces the drift through the gradient construction but
/// does not solve the time-reversed equation, so the residual has a floor.
pub fn ou1d(theta: f64, sigma0: f64) -> Scenario {
    assert!(sigma0 > 0.0);
    let s2 = sigma0 * sigma0;
    let candidate = Potential::analytic(
        Arc::new(move |_, x: &VecD| Ok(-theta * x.get(0) * x.get(0) / (2.0 * s2))),
        Arc::new(move |_, x: &VecD| Ok(VecD::from_slice(&[-theta * x.get(0) / s2]))),
        Arc::new(move |_, _| Ok(MatD::from_rows(1, &[-theta / s2]))),
        Arc::new(|_, _| Ok(0.0)),
    );
    let sigma = MatD::from_rows(1, &[sigma0]);
    let fb = FieldBundle::new(
        1,
        drift_from_potential(&candidate, Arc::new(move |_, _| Ok(sigma))),
        Arc::new(move |_, _| Ok(sigma)),
    );
    let burgers = Burgers1DModel::new(
        Arc::new(move |_: f64, x: f64| Ok(-theta * x / s2)),
        Phi::monomial(s2, 1),
        0.0,
    )
    .expect("classical Phi is integrable");
    Scenario {
        name: "ou1d".into(),
        dim: 1,
        fb,
        candidate,
        x0: VecD::from_slice(&[1.0]),
        constant_sigma: Some(sigma),
        burgers: Some(burgers),
    }
}

/// Monomial structure function Phi(r) = m r^m on the constant solution
/// u = u0: drift m u0^m and diffusion sqrt(m) u0^((m-1)/2), both constant,
/// with the linear-type candidate potential v = u0 x - sigma^2 u0^2 t / 2.
pub fn porous1d(m: u32, u0: f64) -> Scenario {
    assert!(m >= 1, "porous exponent must be >= 1");
    assert!(u0 > 0.0, "constant state must be positive");
    let mf = m as f64;
    let b = mf * u0.powi(m as i32);
    let s2 = mf * u0.powi(m as i32 - 1); // sigma^2, so b / sigma^2 = u0
    let sigma0 = s2.sqrt();
    let rate = 0.5 * s2 * u0 * u0;
    let candidate = Potential::analytic(
        Arc::new(move |t: f64, x: &VecD| Ok(u0 * x.get(0) - rate * t)),
        Arc::new(move |_, _| Ok(VecD::from_slice(&[u0]))),
        Arc::new(|_, _| Ok(MatD::zeros(1))),
        Arc::new(move |_, _| Ok(-rate)),
    );
    let sigma = MatD::from_rows(1, &[sigma0]);
    let fb = FieldBundle::constant(VecD::from_slice(&[b]), sigma);
    let burgers = Burgers1DModel::new(
        Arc::new(move |_: f64, _: f64| Ok(u0)),
        Phi::monomial(mf, m as i32),
        0.0,
    )
    .expect("monomial Phi with m >= 1 is integrable");
    Scenario {
        name: "porous1d".into(),
        dim: 1,
        fb,
        candidate,
        x0: VecD::zeros(1),
        constant_sigma: Some(sigma),
        burgers: Some(burgers),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::potential_self_check;
    use crate::kpz::kpz_residual;

    fn sample_points(dim: usize) -> Vec<(f64, VecD)> {
        let coords: &[&[f64]] = &[&[0.4], &[-1.2], &[0.9]];
        coords
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut x = VecD::zeros(dim);
                for k in 0..dim {
                    x.set(k, c[0] * (k as f64 + 1.0) * 0.5);
                }
                (0.3 * i as f64, x)
            })
            .collect()
    }

    #[test]
    fn analytic_derivatives_agree_with_fd() {
        for scen in [
            linear_default(),
            bridge(1, 1.0, 2.0),
            bridge(2, 0.8, 3.0),
            rotational(1.0),
            ou1d(1.0, 1.0),
            porous1d(2, 0.8),
        ] {
            let report = potential_self_check(&scen.candidate, &sample_points(scen.dim)).unwrap();
            assert!(report.pass, "{} self-check failed: {report:?}", scen.name);
        }
    }

    #[test]
    fn linear_and_bridge_solve_the_equation() {
        for scen in [
            linear_default(),
            bridge(1, 1.0, 2.0),
            bridge(2, 1.3, 2.5),
            bridge(3, 1.1, 2.5),
            porous1d(3, 0.5),
        ] {
            for (t, x) in sample_points(scen.dim) {
                let r = kpz_residual(&scen.candidate, &scen.fb, t, &x).unwrap();
                assert!(r.abs() <= 1e-8, "{}: residual {r} at t={t}", scen.name);
            }
        }
    }

    #[test]
    fn ou_candidate_does_not_solve_the_equation() {
        let scen = ou1d(1.0, 1.0);
        // R = (theta/2)(theta x^2 / sigma^2 - 1): nonzero except at |x| = 1
        let r = kpz_residual(&scen.candidate, &scen.fb, 0.0, &VecD::from_slice(&[0.0])).unwrap();
        assert!((r + 0.5).abs() <= 1e-10, "{r}");
    }

    #[test]
    fn drifts_match_gradient_construction() {
        for scen in [linear_default(), bridge(2, 1.0, 2.0), ou1d(0.7, 1.2), porous1d(2, 0.8)] {
            for (t, x) in sample_points(scen.dim) {
                let b = scen.fb.drift(t, &x).unwrap();
                let a = scen.fb.eval_a(t, &x).unwrap();
                let expected = a.matvec(&scen.candidate.gradient(t, &x).unwrap());
                for i in 0..scen.dim {
                    assert!(
                        (b.get(i) - expected.get(i)).abs() <= 1e-10,
                        "{}: drift mismatch",
                        scen.name
                    );
                }
            }
        }
    }

    #[test]
    fn porous_ratio_is_the_constant_state() {
        let scen = porous1d(2, 0.8);
        let x = VecD::from_slice(&[0.3]);
        let b = scen.fb.drift(0.0, &x).unwrap().get(0);
        let s = scen.fb.sigma(0.0, &x).unwrap().get(0, 0);
        assert!((b / (s * s) - 0.8).abs() <= 1e-12);
    }
}
