//! Small dense linear algebra (dimension <= 8) and finite-difference
//! differentiation used by every other module.
//!
//! Vectors and matrices are stack-allocated with a runtime dimension, so the
//! hot simulation loops never touch the heap. All operations are pure.

use crate::error::{Error, Result};

/// Maximum state dimension supported by the stack-allocated types.
pub const MAX_DIM: usize = 8;

/// A d-dimensional state vector, d <= 8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecD {
    dim: usize,
    a: [f64; MAX_DIM],
}

impl VecD {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be in 1..=8");
        VecD { dim, a: [0.0; MAX_DIM] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = VecD::zeros(s.len());
        v.a[..s.len()].copy_from_slice(s);
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a[..self.dim]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i < self.dim);
        self.a[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        debug_assert!(i < self.dim);
        self.a[i] = v;
    }

    pub fn add(&self, other: &VecD) -> VecD {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.a[i] += other.a[i];
        }
        out
    }

    pub fn sub(&self, other: &VecD) -> VecD {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.a[i] -= other.a[i];
        }
        out
    }

    pub fn scale(&self, s: f64) -> VecD {
        let mut out = *self;
        for i in 0..self.dim {
            out.a[i] *= s;
        }
        out
    }

    pub fn dot(&self, other: &VecD) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += self.a[i] * other.a[i];
        }
        acc
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Infinity norm.
    pub fn inf_norm(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

/// A d x d matrix, row-major, d <= 8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatD {
    dim: usize,
    a: [f64; MAX_DIM * MAX_DIM],
}

impl MatD {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be in 1..=8");
        MatD { dim, a: [0.0; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = MatD::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Row-major construction from a flat slice of length dim * dim.
    pub fn from_rows(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        let mut m = MatD::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, rows[i * dim + j]);
            }
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = MatD::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.a[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.a[i * MAX_DIM + j] = v;
    }

    pub fn transpose(&self) -> MatD {
        let mut t = MatD::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn matmul(&self, other: &MatD) -> MatD {
        debug_assert_eq!(self.dim, other.dim);
        let mut c = MatD::zeros(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let aik = self.get(i, k);
                for j in 0..self.dim {
                    c.set(i, j, c.get(i, j) + aik * other.get(k, j));
                }
            }
        }
        c
    }

    pub fn matvec(&self, v: &VecD) -> VecD {
        debug_assert_eq!(self.dim, v.dim());
        let mut out = VecD::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.get(i, j) * v.get(j);
            }
            out.set(i, acc);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.get(i, j).is_finite()))
    }

    /// Maximum absolute row sum (infinity norm).
    pub fn row_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Inverse by Gaussian elimination with partial pivoting.
    ///
    /// Fails with `SingularMatrix` when a pivot magnitude falls below
    /// 1e-13 times the row norm of the input.
    pub fn inverse(&self) -> Result<MatD> {
        let d = self.dim;
        let threshold = 1e-13 * self.row_norm();
        // augmented [self | I], eliminated in place
        let mut m = *self;
        let mut inv = MatD::identity(d);
        for col in 0..d {
            // partial pivot
            let mut pivot_row = col;
            let mut pivot_mag = m.get(col, col).abs();
            for r in (col + 1)..d {
                let mag = m.get(r, col).abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag <= threshold {
                return Err(Error::SingularMatrix {
                    pivot: pivot_mag,
                    threshold,
                    context: None,
                });
            }
            if pivot_row != col {
                for j in 0..d {
                    let tmp = m.get(col, j);
                    m.set(col, j, m.get(pivot_row, j));
                    m.set(pivot_row, j, tmp);
                    let tmp = inv.get(col, j);
                    inv.set(col, j, inv.get(pivot_row, j));
                    inv.set(pivot_row, j, tmp);
                }
            }
            let pivot = m.get(col, col);
            for j in 0..d {
                m.set(col, j, m.get(col, j) / pivot);
                inv.set(col, j, inv.get(col, j) / pivot);
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let factor = m.get(r, col);
                if factor == 0.0 {
                    continue;
                }
                for j in 0..d {
                    m.set(r, j, m.get(r, j) - factor * m.get(col, j));
                    inv.set(r, j, inv.get(r, j) - factor * inv.get(col, j));
                }
            }
        }
        Ok(inv)
    }
}

fn fd_step(h: Option<f64>, default_rel: f64, scale: f64) -> f64 {
    h.unwrap_or(default_rel * scale.max(1.0))
}

fn check_finite(v: f64, context: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteValue { context: context.to_string() })
    }
}

/// Central-difference gradient of a scalar field, error O(h^2) for C^3 fields.
///
/// Default step: 1e-5 * max(1, |x|_inf).
pub fn fd_gradient<F>(f: F, t: f64, x: &VecD, h: Option<f64>) -> Result<VecD>
where
    F: Fn(f64, &VecD) -> Result<f64>,
{
    let h = fd_step(h, 1e-5, x.inf_norm());
    let mut g = VecD::zeros(x.dim());
    for i in 0..x.dim() {
        let mut xp = *x;
        xp.set(i, x.get(i) + h);
        let mut xm = *x;
        xm.set(i, x.get(i) - h);
        let fp = check_finite(f(t, &xp)?, "gradient stencil")?;
        let fm = check_finite(f(t, &xm)?, "gradient stencil")?;
        g.set(i, (fp - fm) / (2.0 * h));
    }
    Ok(g)
}

/// Central-difference Hessian, symmetric by construction (each off-diagonal
/// pair is computed once from the four-point mixed stencil).
///
/// Default step: 1e-4 * max(1, |x|_inf), larger than the gradient step since
/// second differences lose more precision to rounding.
pub fn fd_hessian<F>(f: F, t: f64, x: &VecD, h: Option<f64>) -> Result<MatD>
where
    F: Fn(f64, &VecD) -> Result<f64>,
{
    let h = fd_step(h, 1e-4, x.inf_norm());
    let d = x.dim();
    let mut hess = MatD::zeros(d);
    let f0 = check_finite(f(t, x)?, "hessian stencil")?;
    for i in 0..d {
        let mut xp = *x;
        xp.set(i, x.get(i) + h);
        let mut xm = *x;
        xm.set(i, x.get(i) - h);
        let fp = check_finite(f(t, &xp)?, "hessian stencil")?;
        let fm = check_finite(f(t, &xm)?, "hessian stencil")?;
        hess.set(i, i, (fp - 2.0 * f0 + fm) / (h * h));
        for j in (i + 1)..d {
            let mut xpp = xp;
            xpp.set(j, x.get(j) + h);
            let mut xpm = xp;
            xpm.set(j, x.get(j) - h);
            let mut xmp = xm;
            xmp.set(j, x.get(j) + h);
            let mut xmm = xm;
            xmm.set(j, x.get(j) - h);
            let fpp = check_finite(f(t, &xpp)?, "hessian stencil")?;
            let fpm = check_finite(f(t, &xpm)?, "hessian stencil")?;
            let fmp = check_finite(f(t, &xmp)?, "hessian stencil")?;
            let fmm = check_finite(f(t, &xmm)?, "hessian stencil")?;
            let mixed = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess.set(i, j, mixed);
            hess.set(j, i, mixed);
        }
    }
    Ok(hess)
}

/// Time derivative of a scalar field: central difference when t - h >= 0,
/// otherwise a second-order one-sided forward stencil.
pub fn fd_time_derivative<F>(f: F, t: f64, x: &VecD, h: Option<f64>) -> Result<f64>
where
    F: Fn(f64, &VecD) -> Result<f64>,
{
    let h = fd_step(h, 1e-5, t.abs());
    if t - h >= 0.0 {
        let fp = check_finite(f(t + h, x)?, "time stencil")?;
        let fm = check_finite(f(t - h, x)?, "time stencil")?;
        Ok((fp - fm) / (2.0 * h))
    } else {
        let f0 = check_finite(f(t, x)?, "time stencil")?;
        let f1 = check_finite(f(t + h, x)?, "time stencil")?;
        let f2 = check_finite(f(t + 2.0 * h, x)?, "time stencil")?;
        Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn inverse_identity() {
        let i3 = MatD::identity(3);
        assert_eq!(i3.inverse().unwrap(), i3);
    }

    #[test]
    fn inverse_diagonal() {
        let m = MatD::diagonal(&[2.0, 4.0]);
        let inv = m.inverse().unwrap();
        assert_eq!(inv, MatD::diagonal(&[0.5, 0.25]));
    }

    #[test]
    fn inverse_upper_triangular_multiplies_back() {
        let m = MatD::from_rows(2, &[1.0, 1.0, 0.0, 2.0]);
        let inv = m.inverse().unwrap();
        assert_close(inv.get(0, 0), 1.0, 1e-14);
        assert_close(inv.get(0, 1), -0.5, 1e-14);
        assert_close(inv.get(1, 0), 0.0, 1e-14);
        assert_close(inv.get(1, 1), 0.5, 1e-14);
        let prod = m.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                assert_close(prod.get(i, j), if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
    }

    #[test]
    fn inverse_rejects_singular() {
        let m = MatD::from_rows(2, &[1.0, 2.0, 2.0, 4.0]);
        match m.inverse() {
            Err(Error::SingularMatrix { .. }) => {}
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn trace_and_transpose() {
        assert_eq!(MatD::diagonal(&[1.0, 4.0]).trace(), 5.0);
        let m = MatD::from_rows(2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.transpose(), MatD::from_rows(2, &[0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn matvec_hand_value() {
        let m = MatD::diagonal(&[1.0, 2.0]);
        let v = VecD::from_slice(&[3.0, 4.0]);
        assert_eq!(m.matvec(&v), VecD::from_slice(&[3.0, 8.0]));
    }

    #[test]
    fn gradient_constant_field() {
        let x = VecD::from_slice(&[1.0, 2.0]);
        let g = fd_gradient(|_, _| Ok(7.0), 0.0, &x, None).unwrap();
        assert_eq!(g, VecD::zeros(2));
    }

    #[test]
    fn gradient_square() {
        let x = VecD::from_slice(&[3.0]);
        let g = fd_gradient(|_, x| Ok(x.get(0) * x.get(0)), 0.0, &x, None).unwrap();
        assert_close(g.get(0), 6.0, 1e-6);
    }

    #[test]
    fn gradient_product() {
        let x = VecD::from_slice(&[2.0, 5.0]);
        let g = fd_gradient(|_, x| Ok(x.get(0) * x.get(1)), 0.0, &x, None).unwrap();
        assert_close(g.get(0), 5.0, 1e-6);
        assert_close(g.get(1), 2.0, 1e-6);
    }

    #[test]
    fn hessian_linear_is_zero() {
        let x = VecD::from_slice(&[1.0, -2.0]);
        let h = fd_hessian(|_, x| Ok(3.0 * x.get(0) - x.get(1)), 0.0, &x, None).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_close(h.get(i, j), 0.0, 1e-6);
            }
        }
    }

    #[test]
    fn hessian_square_1d() {
        let x = VecD::from_slice(&[1.5]);
        let h = fd_hessian(|_, x| Ok(x.get(0) * x.get(0)), 0.0, &x, None).unwrap();
        assert_close(h.get(0, 0), 2.0, 1e-4);
    }

    #[test]
    fn hessian_mixed_product() {
        let x = VecD::from_slice(&[0.3, -0.7]);
        let h = fd_hessian(|_, x| Ok(x.get(0) * x.get(1)), 0.0, &x, None).unwrap();
        assert_close(h.get(0, 1), 1.0, 1e-4);
        assert_close(h.get(1, 0), 1.0, 1e-4);
        assert_eq!(h.get(0, 1), h.get(1, 0));
        assert_close(h.get(0, 0), 0.0, 1e-4);
    }

    #[test]
    fn time_derivative_cases() {
        let x = VecD::zeros(1);
        let d = fd_time_derivative(|_, _| Ok(4.0), 1.0, &x, None).unwrap();
        assert_eq!(d, 0.0);
        let d = fd_time_derivative(|t, _| Ok(t * t), 3.0, &x, None).unwrap();
        assert_close(d, 6.0, 1e-6);
        // one-sided at t = 0
        let d = fd_time_derivative(|t, _| Ok(-t), 0.0, &x, None).unwrap();
        assert_close(d, -1.0, 1e-6);
    }

    #[test]
    fn non_finite_stencil_is_reported() {
        let x = VecD::from_slice(&[0.0]);
        let r = fd_gradient(|_, x| Ok(1.0 / x.get(0)), 0.0, &x, None);
        assert!(matches!(r, Err(Error::NonFiniteValue { .. })) || r.unwrap().is_finite());
        let r = fd_gradient(|_, x| Ok((-x.get(0).abs() - 1.0).sqrt()), 0.0, &x, None);
        assert!(matches!(r, Err(Error::NonFiniteValue { .. })));
    }
}
