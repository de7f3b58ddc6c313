//! The time-reversed KPZ-type equation: pointwise residual evaluation, the
//! gradient-form necessary condition (symmetry of the Jacobian of a^{-1}b),
//! and a Cole-Hopf solver for constant sigma.

use crate::error::{Error, Result};
use crate::fields::{FieldBundle, Potential};
use crate::numerics::{MatD, VecD};
use crate::rng::GaussianStream;

/// Residual of dv/dt = -1/2 [ Tr(a Hess v) + |sigma^T grad v|^2 ]:
///
///   R = dv/dt + 1/2 [ Tr(a Hess v) + |sigma^T grad v|^2 ],
///
/// zero exactly when v solves the equation at (t, x).
pub fn kpz_residual(v: &Potential, fb: &FieldBundle, t: f64, x: &VecD) -> Result<f64> {
    let a = fb.eval_a(t, x)?;
    let grad = v.gradient(t, x)?;
    let hess = v.hessian(t, x)?;
    let dvdt = v.time_derivative(t, x)?;
    let trace_term = a.matmul(&hess).trace();
    let sigma_t_grad = fb.sigma(t, x)?.transpose().matvec(&grad);
    Ok(dvdt + 0.5 * (trace_term + sigma_t_grad.norm_sq()))
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone)]
pub struct BoxRegion {
    pub lo: VecD,
    pub hi: VecD,
}

impl BoxRegion {
    pub fn new(lo: VecD, hi: VecD) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch("box corners differ in dimension".into()));
        }
        for i in 0..lo.dim() {
            if lo.get(i) >= hi.get(i) || lo.get(i).is_nan() || hi.get(i).is_nan() {
                return Err(Error::ConfigError(format!(
                    "degenerate box on axis {}: [{}, {}]",
                    i + 1,
                    lo.get(i),
                    hi.get(i)
                )));
            }
        }
        Ok(BoxRegion { lo, hi })
    }

    pub fn centered(center: &VecD, half_width: f64) -> Self {
        let mut lo = *center;
        let mut hi = *center;
        for i in 0..center.dim() {
            lo.set(i, center.get(i) - half_width);
            hi.set(i, center.get(i) + half_width);
        }
        BoxRegion { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    /// Deterministic sample points keyed by (seed, sample index).
    pub fn sample_points(&self, seed: u64, n: usize) -> Vec<VecD> {
        let stream = GaussianStream::new(seed);
        (0..n as u64)
            .map(|s| {
                let mut x = VecD::zeros(self.dim());
                for k in 0..self.dim() {
                    x.set(k, stream.uniform_in(s, 0, k as u64, self.lo.get(k), self.hi.get(k)));
                }
                x
            })
            .collect()
    }
}

/// Result of the curl test on F = a^{-1} b.
#[derive(Debug, Clone)]
pub struct CurlReport {
    pub max_asym: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub n_samples: usize,
}

/// Necessary condition for gradient form: a^{-1} b = grad(v) for some v, so
/// the Jacobian of F = a^{-1} b must be symmetric. Reports the maximum
/// finite-difference asymmetry |dF_j/dx_i - dF_i/dx_j| over the sampled
/// points; passes iff it stays within `tol` (1e-4 is the right scale for
/// finite-difference fields, 1e-8 for analytic ones).
pub fn gradient_form_check(
    fb: &FieldBundle,
    t: f64,
    region: &BoxRegion,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CurlReport> {
    assert!(n_samples >= 1, "need at least one sample");
    let d = fb.dim();
    let f = |t: f64, x: &VecD| -> Result<VecD> {
        let a = fb.eval_a(t, x)?;
        let b = fb.drift(t, x)?;
        Ok(a.inverse()?.matvec(&b))
    };
    let mut max_asym = 0.0f64;
    for x in region.sample_points(seed, n_samples) {
        // Jacobian column by column: d/dx_i of the full vector F
        let h = 1e-5 * x.inf_norm().max(1.0);
        let mut jac = MatD::zeros(d);
        for i in 0..d {
            let mut xp = x;
            xp.set(i, x.get(i) + h);
            let mut xm = x;
            xm.set(i, x.get(i) - h);
            let fp = f(t, &xp)?;
            let fm = f(t, &xm)?;
            for j in 0..d {
                jac.set(i, j, (fp.get(j) - fm.get(j)) / (2.0 * h));
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                max_asym = max_asym.max((jac.get(i, j) - jac.get(j, i)).abs());
            }
        }
    }
    Ok(CurlReport { max_asym, tolerance: tol, pass: max_asym <= tol, n_samples })
}

// ---------------------------------------------------------------------------
// Grid fields and the Cole-Hopf solver
// ---------------------------------------------------------------------------

/// One spatial axis of a tensor grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
        if min >= max || min.is_nan() || max.is_nan() {
            return Err(Error::ConfigError(format!("axis range [{min}, {max}] is degenerate")));
        }
        if n_points < 3 {
            return Err(Error::ConfigError(format!(
                "need at least 3 grid points per axis, got {n_points}"
            )));
        }
        Ok(GridAxis { min, max, n_points })
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n_points - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }
}

/// Scalar values on a 1D or 2D tensor grid at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub axes: Vec<GridAxis>,
    pub values: Vec<f64>,
    pub t: f64,
}

impl GridField {
    pub fn from_fn(
        axes: Vec<GridAxis>,
        t: f64,
        f: impl Fn(&VecD) -> Result<f64>,
    ) -> Result<GridField> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::ConfigError(format!(
                "grid solver supports 1 or 2 spatial dimensions, got {}",
                axes.len()
            )));
        }
        let mut values = Vec::new();
        match axes.len() {
            1 => {
                for i in 0..axes[0].n_points {
                    values.push(f(&VecD::from_slice(&[axes[0].coord(i)]))?);
                }
            }
            _ => {
                for i in 0..axes[0].n_points {
                    for j in 0..axes[1].n_points {
                        values.push(f(&VecD::from_slice(&[axes[0].coord(i), axes[1].coord(j)]))?);
                    }
                }
            }
        }
        let field = GridField { axes, values, t };
        if !field.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue { context: "grid field construction".into() });
        }
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        match self.dim() {
            1 => i,
            _ => i * self.axes[1].n_points + j,
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reflected (ghost-node) index for zero-flux boundaries.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if i < 0 {
        (-i) as usize
    } else if i as usize >= n {
        2 * (n - 1) - i as usize
    } else {
        i as usize
    }
}

/// Solve the time-reversed equation backward from terminal data by the
/// Cole-Hopf transform w = e^v. With constant sigma, w satisfies
/// dw/dt = -1/2 Tr(a Hess w); in s = T - t this is the ordinary heat
/// equation, marched with an explicit central-difference scheme and
/// zero-flux boundaries.
///
/// `steps` is the number of internal time steps from t = T down to t = 0;
/// the step T/steps must satisfy the stability bound
/// ds <= 0.25 * dx_min^2 / max_i a_ii. Slices are returned at the requested
/// output times, each of which must land on the internal step grid.
///
/// Forward-in-t initial-value solving is ill-posed for this equation and is
/// not offered.
pub fn cole_hopf_solve(
    terminal: &GridField,
    sigma: &MatD,
    steps: usize,
    output_times: &[f64],
) -> Result<Vec<GridField>> {
    let horizon = terminal.t;
    if horizon <= 0.0 || !horizon.is_finite() {
        return Err(Error::ConfigError(format!(
            "terminal time must be positive, got {horizon}"
        )));
    }
    if sigma.dim() != terminal.dim() {
        return Err(Error::DimensionMismatch(format!(
            "sigma is {0}x{0} but the grid is {1}-dimensional",
            sigma.dim(),
            terminal.dim()
        )));
    }
    if steps == 0 {
        return Err(Error::ConfigError("steps must be >= 1".into()));
    }
    // a = sigma sigma^T
    let d = sigma.dim();
    let mut a = MatD::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += sigma.get(i, k) * sigma.get(j, k);
            }
            a.set(i, j, acc);
        }
    }
    let ds = horizon / steps as f64;
    let dx_min = terminal.axes.iter().map(|ax| ax.spacing()).fold(f64::INFINITY, f64::min);
    let a_max = (0..d).map(|i| a.get(i, i)).fold(0.0, f64::max);
    let bound = 0.25 * dx_min * dx_min / a_max;
    if ds > bound {
        return Err(Error::UnstableParameters { dt: ds, bound });
    }

    // output times must land on the internal grid
    let mut output_steps = Vec::with_capacity(output_times.len());
    for &t_out in output_times {
        if t_out < -1e-12 || t_out > horizon + 1e-12 {
            return Err(Error::ConfigError(format!(
                "output time {t_out} outside [0, {horizon}]"
            )));
        }
        let k = ((horizon - t_out) / ds).round();
        let snapped = horizon - k * ds;
        if (snapped - t_out).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::ConfigError(format!(
                "output time {t_out} does not land on the solver time grid (ds = {ds:.6e})"
            )));
        }
        output_steps.push(k as usize);
    }

    // normalize by the terminal max so w stays in a safe exponent range;
    // v is recovered by adding the shift back (the equation is invariant
    // under constant shifts of v)
    let shift = terminal.max_value();
    let mut w: Vec<f64> = terminal.values.iter().map(|v| (v - shift).exp()).collect();
    if w.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::NonPositiveW);
    }

    let mut out: Vec<GridField> = Vec::new();
    let mut record = |k: usize, w: &[f64]| {
        if output_steps.contains(&k) {
            out.push(GridField {
                axes: terminal.axes.clone(),
                values: w.iter().map(|x| x.ln() + shift).collect(),
                t: horizon - k as f64 * ds,
            });
        }
    };
    record(0, &w);

    let mut next = w.clone();
    match terminal.dim() {
        1 => {
            let n = terminal.axes[0].n_points;
            let dx = terminal.axes[0].spacing();
            let coeff = 0.5 * a.get(0, 0) * ds / (dx * dx);
            for k in 1..=steps {
                for i in 0..n {
                    let im = reflect(i as isize - 1, n);
                    let ip = reflect(i as isize + 1, n);
                    next[i] = w[i] + coeff * (w[im] - 2.0 * w[i] + w[ip]);
                }
                std::mem::swap(&mut w, &mut next);
                record(k, &w);
            }
        }
        _ => {
            let (nx, ny) = (terminal.axes[0].n_points, terminal.axes[1].n_points);
            let (dx, dy) = (terminal.axes[0].spacing(), terminal.axes[1].spacing());
            let cxx = 0.5 * a.get(0, 0) * ds / (dx * dx);
            let cyy = 0.5 * a.get(1, 1) * ds / (dy * dy);
            let cxy = 0.5 * 2.0 * a.get(0, 1) * ds / (4.0 * dx * dy);
            for k in 1..=steps {
                for i in 0..nx {
                    let im = reflect(i as isize - 1, nx);
                    let ip = reflect(i as isize + 1, nx);
                    for j in 0..ny {
                        let jm = reflect(j as isize - 1, ny);
                        let jp = reflect(j as isize + 1, ny);
                        let c = i * ny + j;
                        let lap = cxx * (w[im * ny + j] - 2.0 * w[c] + w[ip * ny + j])
                            + cyy * (w[i * ny + jm] - 2.0 * w[c] + w[i * ny + jp])
                            + cxy
                                * (w[ip * ny + jp] - w[ip * ny + jm] - w[im * ny + jp]
                                    + w[im * ny + jm]);
                        next[c] = w[c] + lap;
                    }
                }
                std::mem::swap(&mut w, &mut next);
                record(k, &w);
            }
        }
    }

    if w.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::NonPositiveW);
    }
    // return slices ordered from t = T down to t = 0
    out.sort_by(|a, b| b.t.partial_cmp(&a.t).unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldBundle;
    use crate::scenarios;
    use std::sync::Arc;

    #[test]
    fn residual_constant_potential() {
        let v = Potential::numeric(Arc::new(|_, _| Ok(4.2)));
        let fb = FieldBundle::constant(VecD::zeros(2), MatD::identity(2));
        let r = kpz_residual(&v, &fb, 0.3, &VecD::from_slice(&[1.0, -1.0])).unwrap();
        assert!(r.abs() <= 1e-9, "{r}");
    }

    #[test]
    fn residual_square_potential_hand_value() {
        // v = x^2, sigma = 1: R = 0 + 1/2 (2 + 4 x^2); at x = 1 -> 3
        let v = Potential::analytic(
            Arc::new(|_, x: &VecD| Ok(x.get(0) * x.get(0))),
            Arc::new(|_, x: &VecD| Ok(VecD::from_slice(&[2.0 * x.get(0)]))),
            Arc::new(|_, _| Ok(MatD::from_rows(1, &[2.0]))),
            Arc::new(|_, _| Ok(0.0)),
        );
        let fb = FieldBundle::constant(VecD::zeros(1), MatD::identity(1));
        let r = kpz_residual(&v, &fb, 0.0, &VecD::from_slice(&[1.0])).unwrap();
        assert!((r - 3.0).abs() <= 1e-10, "{r}");
    }

    #[test]
    fn residual_scaling_structure() {
        // R(2v) - 2 R(v) = |sigma^T grad v|^2 for any v
        let scen = scenarios::bridge(1, 1.0, 2.0);
        let v = scen.candidate.clone();
        let v2 = {
            let inner = v.clone();
            let inner_g = v.clone();
            let inner_h = v.clone();
            let inner_t = v.clone();
            Potential::analytic(
                Arc::new(move |t, x: &VecD| Ok(2.0 * inner.value(t, x)?)),
                Arc::new(move |t, x: &VecD| Ok(inner_g.gradient(t, x)?.scale(2.0))),
                Arc::new(move |t, x: &VecD| {
                    let h = inner_h.hessian(t, x)?;
                    let mut out = h;
                    for i in 0..h.dim() {
                        for j in 0..h.dim() {
                            out.set(i, j, 2.0 * h.get(i, j));
                        }
                    }
                    Ok(out)
                }),
                Arc::new(move |t, x: &VecD| Ok(2.0 * inner_t.time_derivative(t, x)?)),
            )
        };
        for &(t, xv) in &[(0.2, 0.7), (0.5, -1.3), (0.9, 0.1)] {
            let x = VecD::from_slice(&[xv]);
            let r1 = kpz_residual(&v, &scen.fb, t, &x).unwrap();
            let r2 = kpz_residual(&v2, &scen.fb, t, &x).unwrap();
            let grad = v.gradient(t, &x).unwrap();
            let sg = scen.fb.sigma(t, &x).unwrap().transpose().matvec(&grad);
            assert!(
                (r2 - 2.0 * r1 - sg.norm_sq()).abs() <= 1e-8,
                "scaling structure violated"
            );
        }
    }

    #[test]
    fn curl_check_rotational_fails_with_asym_2() {
        let scen = scenarios::rotational(1.0);
        let region = BoxRegion::centered(&VecD::from_slice(&[0.0, 0.0]), 2.0);
        let report = gradient_form_check(&scen.fb, 0.0, &region, 25, 7, 1e-4).unwrap();
        assert!(!report.pass);
        assert!((report.max_asym - 2.0).abs() <= 1e-4, "{}", report.max_asym);

        // weak rotation still fails: asym = 2 kappa >= 0.1 from kappa = 0.05
        let scen = scenarios::rotational(0.05);
        let report = gradient_form_check(&scen.fb, 0.0, &region, 25, 7, 1e-4).unwrap();
        assert!(!report.pass);
        assert!(report.max_asym >= 0.1 - 1e-9, "{}", report.max_asym);
    }

    #[test]
    fn curl_check_zero_drift_passes() {
        let fb = FieldBundle::constant(VecD::zeros(2), MatD::identity(2));
        let region = BoxRegion::centered(&VecD::zeros(2), 1.0);
        let report = gradient_form_check(&fb, 0.0, &region, 10, 7, 1e-8).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_asym, 0.0);
    }

    #[test]
    fn curl_check_gradient_drift_passes() {
        let scen = scenarios::bridge(2, 1.0, 2.0);
        let region = BoxRegion::centered(&VecD::zeros(2), 2.0);
        let report = gradient_form_check(&scen.fb, 0.0, &region, 20, 3, 1e-8).unwrap();
        assert!(report.pass, "asym = {}", report.max_asym);
    }

    #[test]
    fn cole_hopf_constant_terminal_stays_constant() {
        let axes = vec![GridAxis::new(-2.0, 2.0, 41).unwrap()];
        let terminal = GridField::from_fn(axes, 0.25, |_| Ok(0.0)).unwrap();
        let slices =
            cole_hopf_solve(&terminal, &MatD::identity(1), 500, &[0.25, 0.125, 0.0]).unwrap();
        assert_eq!(slices.len(), 3);
        for s in &slices {
            for v in &s.values {
                assert!(v.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cole_hopf_recovers_linear_solution() {
        // terminal v(T,x) = x - T/2 evolves back to v(0,x) = x
        let t_end = 0.5;
        let axes = vec![GridAxis::new(-5.0, 5.0, 201).unwrap()];
        let terminal =
            GridField::from_fn(axes, t_end, |x| Ok(x.get(0) - 0.5 * t_end)).unwrap();
        let slices = cole_hopf_solve(&terminal, &MatD::identity(1), 801, &[0.0]).unwrap();
        let v0 = &slices[0];
        let ax = v0.axes[0];
        // compare on the centered half of the domain: the closed form is a
        // free-space solution, so the reflecting boundary contaminates a
        // strip near each edge
        let margin = (ax.max - ax.min) / 4.0;
        let mut sup = 0.0f64;
        for i in 0..ax.n_points {
            let x = ax.coord(i);
            if x >= ax.min + margin && x <= ax.max - margin {
                sup = sup.max((v0.values[i] - x).abs());
            }
        }
        assert!(sup <= 1e-3, "sup error {sup}");
    }

    #[test]
    fn cole_hopf_max_principle_exact() {
        let t_end = 0.5;
        let axes = vec![GridAxis::new(-5.0, 5.0, 201).unwrap()];
        let terminal = GridField::from_fn(axes, t_end, |x| Ok((-x.get(0).abs()).sin())).unwrap();
        let wmin = terminal.values.iter().map(|v| v.exp()).fold(f64::INFINITY, f64::min);
        let wmax = terminal.values.iter().map(|v| v.exp()).fold(f64::NEG_INFINITY, f64::max);
        let outputs: Vec<f64> = (0..=10).map(|k| t_end * k as f64 / 10.0).collect();
        let slices = cole_hopf_solve(&terminal, &MatD::identity(1), 810, &outputs).unwrap();
        for s in &slices {
            for v in &s.values {
                let w = v.exp();
                assert!(w >= wmin - 1e-12 && w <= wmax + 1e-12);
            }
        }
    }

    #[test]
    fn cole_hopf_rejects_unstable_steps() {
        let axes = vec![GridAxis::new(-1.0, 1.0, 101).unwrap()];
        let terminal = GridField::from_fn(axes, 1.0, |_| Ok(0.0)).unwrap();
        match cole_hopf_solve(&terminal, &MatD::identity(1), 10, &[0.0]) {
            Err(Error::UnstableParameters { .. }) => {}
            other => panic!("expected UnstableParameters, got {other:?}"),
        }
    }

    #[test]
    fn cole_hopf_rejects_underflowing_terminal() {
        let axes = vec![GridAxis::new(-1.0, 1.0, 11).unwrap()];
        let terminal = GridField::from_fn(axes, 0.01, |x| Ok(-800.0 * x.get(0).abs())).unwrap();
        match cole_hopf_solve(&terminal, &MatD::identity(1), 2000, &[0.0]) {
            Err(Error::NonPositiveW) => {}
            other => panic!("expected NonPositiveW, got {other:?}"),
        }
    }

    #[test]
    fn cole_hopf_2d_cross_terms_match_heat_kernel() {
        // terminal data: log-density of N(0, c0 I). Marching backward over
        // a duration s yields the log-density of N(0, c0 I + s a), valid for
        // any constant SPD a including off-diagonal entries.
        let t_end = 0.5;
        let sigma = MatD::from_rows(2, &[1.0, 0.4, 0.0, 0.8]);
        let mut a = MatD::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    acc += sigma.get(i, k) * sigma.get(j, k);
                }
                a.set(i, j, acc);
            }
        }
        let c0 = 1.5;
        let log_gauss = |cov: &MatD, x: &VecD| {
            let det = cov.get(0, 0) * cov.get(1, 1) - cov.get(0, 1) * cov.get(1, 0);
            let q = x.dot(&cov.inverse().unwrap().matvec(x));
            -0.5 * q - 0.5 * (std::f64::consts::TAU * std::f64::consts::TAU * det).ln()
        };
        let cov0 = MatD::diagonal(&[c0, c0]);
        let mut cov_t = cov0;
        for i in 0..2 {
            for j in 0..2 {
                cov_t.set(i, j, cov0.get(i, j) + t_end * a.get(i, j));
            }
        }
        let sup_error = |n_points: usize, steps: usize| {
            let axes = vec![
                GridAxis::new(-6.0, 6.0, n_points).unwrap(),
                GridAxis::new(-6.0, 6.0, n_points).unwrap(),
            ];
            let terminal =
                GridField::from_fn(axes, t_end, |x| Ok(log_gauss(&cov0, x))).unwrap();
            let slices = cole_hopf_solve(&terminal, &sigma, steps, &[0.0]).unwrap();
            let v0 = &slices[0];
            let (ax, ay) = (v0.axes[0], v0.axes[1]);
            let margin = (ax.max - ax.min) / 4.0;
            let mut sup = 0.0f64;
            for i in 0..ax.n_points {
                for j in 0..ay.n_points {
                    let x = VecD::from_slice(&[ax.coord(i), ay.coord(j)]);
                    if x.inf_norm() <= ax.max - margin {
                        sup = sup.max((v0.values[v0.idx(i, j)] - log_gauss(&cov_t, &x)).abs());
                    }
                }
            }
            sup
        };
        let coarse = sup_error(61, 60);
        let fine = sup_error(121, 240);
        assert!(coarse <= 2e-2, "coarse sup error {coarse}");
        // second-order scheme: halving dx (and quartering ds) should cut the
        // error by about 4; allow 3 for safety
        assert!(fine <= coarse / 3.0, "no second-order contraction: {coarse} -> {fine}");
    }

    #[test]
    fn cole_hopf_2d_diagonal_max_principle() {
        let axes = vec![GridAxis::new(-2.0, 2.0, 41).unwrap(), GridAxis::new(-2.0, 2.0, 41).unwrap()];
        let terminal =
            GridField::from_fn(axes, 0.1, |x| Ok(-(x.get(0).powi(2) + 0.5 * x.get(1).powi(2))))
                .unwrap();
        let sigma = MatD::diagonal(&[1.0, 0.7]);
        let slices = cole_hopf_solve(&terminal, &sigma, 50, &[0.0]).unwrap();
        let v0 = &slices[0];
        assert!(v0.min_value() >= terminal.min_value() - 1e-10);
        assert!(v0.max_value() <= terminal.max_value() + 1e-10);
    }
}
