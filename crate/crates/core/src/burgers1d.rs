//! One-dimensional structure machinery: the drift/diffusion ratio
//! u = b / sigma^2, a structure function Phi with b = Phi(u), the derived
//! maps Psi1(r) = int Phi(r)/r dr and Psi2(r) = r Phi(r), and the residual of
//! the time-reversed generalized Burgers equation
//!
//!   du/dt = -1/2 d^2/dx^2 Psi1(u) - 1/2 d/dx Psi2(u).

use crate::error::{Error, Result};
use crate::numerics::{fd_time_derivative, VecD};
use std::sync::Arc;

pub type Scalar1D = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;
pub type RealMap = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// The structure function Phi. Monomials a r^k with k >= 1 get closed-form
/// antiderivatives; anything else goes through adaptive quadrature.
#[derive(Clone)]
pub enum Phi {
    Monomial { coef: f64, power: i32 },
    Custom(RealMap),
}

impl Phi {
    pub fn monomial(coef: f64, power: i32) -> Self {
        Phi::Monomial { coef, power }
    }

    pub fn custom(f: RealMap) -> Self {
        Phi::Custom(f)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        match self {
            Phi::Monomial { coef, power } => Ok(coef * r.powi(*power)),
            Phi::Custom(f) => f(r),
        }
    }
}

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> Result<f64>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol || depth >= 48 {
            if depth >= 48 && err.abs() > 15.0 * tol {
                return Err(Error::QuadratureFailure(format!(
                    "adaptive Simpson did not converge on [{a}, {b}]"
                )));
            }
            return Ok(left + right + err / 15.0);
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 0)
}

/// Build (Psi1, Psi2) from Phi. Psi1 is anchored so that Psi1(r_ref) = 0;
/// the constant is immaterial because only derivatives of Psi1 enter the
/// equation. Monomial Phi = a r^k with k >= 1 uses the closed form
/// Psi1 = a r^k / k; otherwise Psi1 is computed by adaptive quadrature of
/// Phi(r)/r from r_ref.
///
/// When Phi(0) != 0 the integrand is genuinely singular at r = 0; crossing
/// zero is reported as `QuadratureFailure` rather than silently regularized.
pub fn psi_from_phi(phi: &Phi, r_ref: f64) -> (RealMap, RealMap) {
    let psi2 = {
        let phi = phi.clone();
        Arc::new(move |r: f64| Ok(r * phi.eval(r)?)) as RealMap
    };
    let psi1: RealMap = match phi {
        Phi::Monomial { coef, power } if *power >= 1 => {
            let a = *coef;
            let k = *power;
            let anchor = a * r_ref.powi(k) / k as f64;
            Arc::new(move |r: f64| Ok(a * r.powi(k) / k as f64 - anchor))
        }
        _ => {
            let phi = phi.clone();
            Arc::new(move |r: f64| {
                let lo = r_ref.min(r);
                let hi = r_ref.max(r);
                if lo <= 0.0 && hi >= 0.0 {
                    let at_zero = phi.eval(0.0)?;
                    if at_zero.abs() > 1e-12 {
                        return Err(Error::QuadratureFailure(format!(
                            "Phi(0) = {at_zero} != 0: Phi(r)/r is singular at r = 0 \
                             and the integration range [{lo}, {hi}] crosses it"
                        )));
                    }
                }
                let phi_inner = phi.clone();
                let integrand = move |s: f64| -> Result<f64> {
                    if s == 0.0 {
                        // removable singularity: Phi(s)/s -> Phi'(0)
                        let h = 1e-7;
                        return Ok((phi_inner.eval(h)? - phi_inner.eval(-h)?) / (2.0 * h));
                    }
                    Ok(phi_inner.eval(s)? / s)
                };
                adaptive_simpson(&integrand, r_ref, r, 1e-11)
            })
        }
    };
    (psi1, psi2)
}

/// The 1D model: the ratio field u, the structure function Phi and the
/// derived Psi1, Psi2.
#[derive(Clone)]
pub struct Burgers1DModel {
    pub u: Scalar1D,
    pub phi: Phi,
    pub psi1: RealMap,
    pub psi2: RealMap,
    pub r_ref: f64,
}

impl Burgers1DModel {
    pub fn new(u: Scalar1D, phi: Phi, r_ref: f64) -> Result<Self> {
        let (psi1, psi2) = psi_from_phi(&phi, r_ref);
        Ok(Burgers1DModel { u, phi, psi1, psi2, r_ref })
    }

    pub fn u(&self, t: f64, x: f64) -> Result<f64> {
        (self.u)(t, x)
    }
}

/// u = b / sigma^2 pointwise; |sigma| < 1e-12 is a hard error.
pub fn u_from_coefficients(b: Scalar1D, sigma: Scalar1D) -> Scalar1D {
    Arc::new(move |t: f64, x: f64| {
        let s = sigma(t, x)?;
        if s.abs() < 1e-12 {
            return Err(Error::ZeroDiffusion { t, x });
        }
        Ok(b(t, x)? / (s * s))
    })
}

/// Residual of the time-reversed generalized Burgers equation,
/// R = du/dt + 1/2 d^2/dx^2 Psi1(u) + 1/2 d/dx Psi2(u),
/// with the outer derivatives applied by finite differences directly to
/// x -> Psi_i(u(t, x)).
pub fn burgers_residual(model: &Burgers1DModel, t: f64, x: f64, h: f64) -> Result<f64> {
    let dudt = fd_time_derivative(
        |t, xv: &VecD| model.u(t, xv.get(0)),
        t,
        &VecD::from_slice(&[x]),
        Some(h),
    )?;
    let p1 = |x: f64| -> Result<f64> { (model.psi1)(model.u(t, x)?) };
    let p2 = |x: f64| -> Result<f64> { (model.psi2)(model.u(t, x)?) };
    let d2_psi1 = (p1(x + h)? - 2.0 * p1(x)? + p1(x - h)?) / (h * h);
    let d_psi2 = (p2(x + h)? - p2(x - h)?) / (2.0 * h);
    Ok(dudt + 0.5 * d2_psi1 + 0.5 * d_psi2)
}

/// Stationary residual for time-homogeneous coefficients:
/// R = 1/2 d^2/dx^2 Psi1(u(x)) + 1/2 d/dx Psi2(u(x)). Zero characterizes the
/// harmonic (time-independent) case. `u` is evaluated at t = 0.
pub fn harmonic_residual(model: &Burgers1DModel, x: f64, h: f64) -> Result<f64> {
    let p1 = |x: f64| -> Result<f64> { (model.psi1)(model.u(0.0, x)?) };
    let p2 = |x: f64| -> Result<f64> { (model.psi2)(model.u(0.0, x)?) };
    let d2_psi1 = (p1(x + h)? - 2.0 * p1(x)? + p1(x - h)?) / (h * h);
    let d_psi2 = (p2(x + h)? - p2(x - h)?) / (2.0 * h);
    Ok(0.5 * d2_psi1 + 0.5 * d_psi2)
}

/// Maximum deviation |b(t,x) - Phi(u(t,x))| over samples: the structure
/// function must reproduce the drift on the ratio field.
pub fn phi_consistency(
    model: &Burgers1DModel,
    b: &Scalar1D,
    samples: &[(f64, f64)],
) -> Result<f64> {
    let mut max_dev = 0.0f64;
    for &(t, x) in samples {
        let dev = (b(t, x)? - model.phi.eval(model.u(t, x)?)?).abs();
        max_dev = max_dev.max(dev);
    }
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_field(v: f64) -> Scalar1D {
        Arc::new(move |_, _| Ok(v))
    }

    #[test]
    fn ratio_examples() {
        let u = u_from_coefficients(const_field(0.0), const_field(1.0));
        assert_eq!(u(0.0, 0.0).unwrap(), 0.0);

        // b = sigma0^2 g, sigma = sigma0 -> u = g
        let sigma0 = 1.7;
        let g = |t: f64, x: f64| (t + x).sin();
        let b: Scalar1D = Arc::new(move |t, x| Ok(sigma0 * sigma0 * g(t, x)));
        let u = u_from_coefficients(b, const_field(sigma0));
        assert!((u(0.3, 0.4).unwrap() - g(0.3, 0.4)).abs() <= 1e-14);

        let u = u_from_coefficients(const_field(2.0), const_field(2.0));
        assert_eq!(u(0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn ratio_rejects_zero_diffusion() {
        let u = u_from_coefficients(const_field(1.0), const_field(0.0));
        assert!(matches!(u(0.0, 0.0), Err(Error::ZeroDiffusion { .. })));
    }

    #[test]
    fn classical_psi_closed_forms() {
        // Phi(r) = sigma0^2 r -> Psi1 = sigma0^2 r, Psi2 = sigma0^2 r^2
        let s2 = 2.25;
        let (psi1, psi2) = psi_from_phi(&Phi::monomial(s2, 1), 0.0);
        for &r in &[0.3, 1.0, -2.0, 4.5] {
            assert!((psi1(r).unwrap() - s2 * r).abs() <= 1e-12);
            assert!((psi2(r).unwrap() - s2 * r * r).abs() <= 1e-12);
        }
    }

    #[test]
    fn porous_psi_closed_forms() {
        // Phi(r) = m r^m -> Psi1 = r^m, Psi2 = m r^(m+1)
        for m in [1i32, 2, 3, 5] {
            let (psi1, psi2) = psi_from_phi(&Phi::monomial(m as f64, m), 0.0);
            for &r in &[0.2, 0.9, 1.7] {
                assert!((psi1(r).unwrap() - r.powi(m)).abs() <= 1e-12);
                assert!((psi2(r).unwrap() - m as f64 * r.powi(m + 1)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn numeric_psi1_simple_integral() {
        // numeric path for Phi(r) = 3r anchored at 0: Psi1(2) = int_0^2 3 = 6
        let phi = Phi::custom(Arc::new(|r| Ok(3.0 * r)));
        let (psi1, _) = psi_from_phi(&phi, 0.0);
        assert!((psi1(2.0).unwrap() - 6.0).abs() <= 1e-8);
    }

    #[test]
    fn numeric_psi1_matches_closed_form_on_interval() {
        for m in [1i32, 2, 3] {
            let phi_numeric = Phi::custom({
                let mf = m as f64;
                Arc::new(move |r: f64| Ok(mf * r.powi(m)))
            });
            let (psi1_num, _) = psi_from_phi(&phi_numeric, 0.1);
            let (psi1_closed, _) = psi_from_phi(&Phi::monomial(m as f64, m), 0.1);
            let mut r = 0.1;
            while r <= 5.0 {
                let a = psi1_num(r).unwrap();
                let b = psi1_closed(r).unwrap();
                assert!((a - b).abs() <= 1e-7, "m={m} r={r}: {a} vs {b}");
                r += 0.1;
            }
        }
    }

    #[test]
    fn numeric_psi1_derivative_recovers_the_integrand() {
        // d/dr Psi1 = Phi(r)/r, checked by finite differences away from 0
        let phi = Phi::custom(Arc::new(|r: f64| Ok(r * r + r.sin())));
        let (psi1, _) = psi_from_phi(&phi, 0.0);
        let h = 1e-5;
        for &r in &[0.01, 0.3, 1.0, 2.5, -0.8] {
            let fd = (psi1(r + h).unwrap() - psi1(r - h).unwrap()) / (2.0 * h);
            let expected = (r * r + r.sin()) / r;
            assert!((fd - expected).abs() <= 1e-5, "r={r}: {fd} vs {expected}");
        }
    }

    #[test]
    fn singular_integrand_is_an_error() {
        // Phi(0) = 1 != 0 and the range crosses zero
        let phi = Phi::custom(Arc::new(|_| Ok(1.0)));
        let (psi1, _) = psi_from_phi(&phi, -1.0);
        assert!(matches!(psi1(1.0), Err(Error::QuadratureFailure(_))));
        // but staying away from zero is fine: int_1^2 1/r dr = ln 2
        let (psi1, _) = psi_from_phi(&phi, 1.0);
        assert!((psi1(2.0).unwrap() - std::f64::consts::LN_2).abs() <= 1e-9);
    }

    #[test]
    fn psi2_identity_is_exact() {
        let phi = Phi::custom(Arc::new(|r: f64| Ok(r.sin() + 2.0 * r)));
        let (_, psi2) = psi_from_phi(&phi, 0.0);
        for &r in &[0.0f64, 0.7, -1.3, 2.9] {
            let expected = r * (r.sin() + 2.0 * r);
            assert_eq!(psi2(r).unwrap(), expected);
        }
    }

    #[test]
    fn residual_constant_u_vanishes() {
        let model = Burgers1DModel::new(const_field_u(0.7), Phi::monomial(1.0, 1), 0.0).unwrap();
        let r = burgers_residual(&model, 0.5, 0.3, 1e-3).unwrap();
        assert!(r.abs() <= 1e-9, "{r}");
        let r = harmonic_residual(&model, 0.3, 1e-3).unwrap();
        assert!(r.abs() <= 1e-9, "{r}");
    }

    fn const_field_u(v: f64) -> Scalar1D {
        Arc::new(move |_, _| Ok(v))
    }

    #[test]
    fn bridge_ratio_solves_classical_equation() {
        // u(t,x) = -x / (sigma0^2 (t0 - t)) with Phi(r) = sigma0^2 r
        let s2 = 1.0;
        let t0 = 2.0;
        let u: Scalar1D = Arc::new(move |t, x| Ok(-x / (s2 * (t0 - t))));
        let model = Burgers1DModel::new(u, Phi::monomial(s2, 1), 0.0).unwrap();
        for &(t, x) in &[(0.0, 0.5), (0.4, -1.0), (0.8, 2.0)] {
            let r = burgers_residual(&model, t, x, 1e-3).unwrap();
            assert!(r.abs() <= 1e-4, "residual {r} at ({t}, {x})");
        }
    }

    #[test]
    fn harmonic_manufactured_failure() {
        // u(x) = x with classical Phi: R = 1/2 d/dx (s2 x^2) = s2 x
        let s2 = 1.0;
        let u: Scalar1D = Arc::new(|_, x| Ok(x));
        let model = Burgers1DModel::new(u, Phi::monomial(s2, 1), 0.0).unwrap();
        let r = harmonic_residual(&model, 1.0, 1e-4).unwrap();
        assert!((r - s2).abs() <= 1e-6, "{r}");
    }

    #[test]
    fn phi_consistency_on_classical_construction() {
        let s2 = 1.69;
        let u: Scalar1D = Arc::new(move |t, x: f64| Ok((x + t).cos()));
        let b: Scalar1D = Arc::new(move |t, x: f64| Ok(s2 * (x + t).cos()));
        let model = Burgers1DModel::new(u, Phi::monomial(s2, 1), 0.0).unwrap();
        let samples: Vec<(f64, f64)> = vec![(0.0, 0.1), (0.5, -0.9), (1.0, 2.2)];
        let dev = phi_consistency(&model, &b, &samples).unwrap();
        assert!(dev <= 1e-12);
    }
}
