//! Configuration file schema (TOML) and its validation into runnable
//! scenario objects.

use girsanov_lab::burgers1d::{Burgers1DModel, Phi, Scalar1D};
use girsanov_lab::error::Error;
use girsanov_lab::expr::{self, ExprAst};
use girsanov_lab::fields::{FieldBundle, Potential};
use girsanov_lab::scenarios::{self, Scenario};
use girsanov_lab::verify::Thresholds;
use girsanov_lab::{MatD, VecD};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub dimension: Option<usize>,
    pub horizon: f64,
    pub dt: Option<f64>,
    pub dt_list: Option<Vec<f64>>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub x0: Option<Vec<f64>>,
    pub scenario: Option<ScenarioSection>,
    pub fields: Option<FieldsSection>,
    pub grid: Option<GridSection>,
    pub burgers: Option<BurgersSection>,
    pub curl: Option<CurlSection>,
    pub thresholds: Option<ThresholdsSection>,
    /// Tolerance for the burgers-check quantitative gate.
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub c: Option<Vec<f64>>,
    pub sigma0: Option<f64>,
    /// Pinning time of the bridge potential; must exceed the horizon.
    pub t_pin: Option<f64>,
    pub kappa: Option<f64>,
    pub theta: Option<f64>,
    pub m: Option<u32>,
    pub u0: Option<f64>,
    /// Dimension for scenarios that support several (linear, bridge).
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSection {
    pub b: Vec<String>,
    pub sigma: Vec<Vec<String>>,
    pub v: String,
    pub v_grad: Option<Vec<String>>,
    pub v_hess: Option<Vec<Vec<String>>>,
    pub v_dt: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub n_points: Vec<usize>,
    pub steps: usize,
    pub output_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersSection {
    /// Monomial structure function coef * r^power ...
    pub phi_coef: Option<f64>,
    pub phi_power: Option<i32>,
    /// ... or an expression in x1 (x1 stands for the ratio value r).
    pub phi: Option<String>,
    /// Ratio field u(t, x1); defaults to b / sigma^2 from the bundle.
    pub u: Option<String>,
    pub x_min: f64,
    pub x_max: f64,
    pub n_samples: usize,
    pub t_samples: Option<Vec<f64>>,
    pub h: Option<f64>,
    /// Evaluate the stationary (time-homogeneous) residual instead.
    pub stationary: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurlSection {
    pub half_width: Option<f64>,
    pub n_samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsSection {
    pub tau_abs: Option<f64>,
    pub tau_rel: Option<f64>,
    pub order_min: Option<f64>,
    pub order_floor: Option<f64>,
    pub floor_mult: Option<f64>,
    pub exact_rms: Option<f64>,
    pub max_blowup_frac: Option<f64>,
    pub curl_fail_asym: Option<f64>,
    pub curl_tol: Option<f64>,
}

impl ThresholdsSection {
    fn build(&self) -> Thresholds {
        let d = Thresholds::default();
        Thresholds {
            tau_abs: self.tau_abs.unwrap_or(d.tau_abs),
            tau_rel: self.tau_rel.unwrap_or(d.tau_rel),
            order_min: self.order_min.unwrap_or(d.order_min),
            order_floor: self.order_floor.unwrap_or(d.order_floor),
            floor_mult: self.floor_mult.unwrap_or(d.floor_mult),
            exact_rms: self.exact_rms.unwrap_or(d.exact_rms),
            max_blowup_frac: self.max_blowup_frac.unwrap_or(d.max_blowup_frac),
            curl_fail_asym: self.curl_fail_asym.unwrap_or(d.curl_fail_asym),
            curl_tol: self.curl_tol.unwrap_or(d.curl_tol),
        }
    }
}

/// Validated configuration, ready to run.
pub struct Config {
    pub scenario: Scenario,
    pub horizon: f64,
    pub dt: Option<f64>,
    pub dt_list: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub grid: Option<GridSection>,
    pub burgers_model: Option<Burgers1DModel>,
    pub burgers_section: Option<BurgersSection>,
    pub curl_half_width: f64,
    pub curl_samples: usize,
    pub thresholds: Thresholds,
    pub residual_tol: f64,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::ConfigError(msg.into())
}

fn parse_expr(field: &str, src: &str, dim: usize) -> Result<ExprAst, Error> {
    let ast = expr::parse(src)
        .map_err(|e| cfg_err(format!("{field}: {e} (in expression `{src}`)")))?;
    if ast.max_coord() > dim {
        return Err(cfg_err(format!(
            "{field}: expression `{src}` references x{} but the dimension is {dim}",
            ast.max_coord()
        )));
    }
    Ok(ast)
}

fn matd_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<MatD, Error> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(cfg_err(format!("{field}: expected a square matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(MatD::from_rows(d, &flat))
}

fn build_scenario(section: &ScenarioSection, horizon: f64) -> Result<Scenario, Error> {
    match section.name.as_str() {
        "linear" => {
            let default = scenarios::linear_default();
            match (&section.sigma, &section.c) {
                (None, None) => Ok(default),
                (Some(sigma), Some(c)) => {
                    let sigma = matd_from_rows("scenario.sigma", sigma)?;
                    if c.len() != sigma.dim() {
                        return Err(cfg_err("scenario.c length must match sigma dimension"));
                    }
                    Ok(scenarios::linear(sigma, VecD::from_slice(c)))
                }
                _ => Err(cfg_err("scenario `linear` needs both sigma and c (or neither)")),
            }
        }
        "bridge" => {
            let dim = section.dimension.unwrap_or(1);
            let sigma0 = section.sigma0.unwrap_or(1.0);
            let t_pin = section.t_pin.unwrap_or(2.0);
            if t_pin <= horizon {
                return Err(cfg_err(format!(
                    "scenario.t_pin = {t_pin} must exceed the horizon T = {horizon}"
                )));
            }
            Ok(scenarios::bridge(dim, sigma0, t_pin))
        }
        "rotational" => Ok(scenarios::rotational(section.kappa.unwrap_or(1.0))),
        "ou1d" => Ok(scenarios::ou1d(
            section.theta.unwrap_or(1.0),
            section.sigma0.unwrap_or(1.0),
        )),
        "porous1d" => Ok(scenarios::porous1d(
            section.m.unwrap_or(2),
            section.u0.unwrap_or(0.8),
        )),
        other => Err(cfg_err(format!(
            "unknown scenario `{other}` (known: linear, bridge, rotational, ou1d, porous1d)"
        ))),
    }
}

fn build_explicit(fields: &FieldsSection, dim: usize) -> Result<Scenario, Error> {
    if fields.b.len() != dim {
        return Err(cfg_err(format!(
            "fields.b has {} entries but the dimension is {dim}",
            fields.b.len()
        )));
    }
    if fields.sigma.len() != dim || fields.sigma.iter().any(|r| r.len() != dim) {
        return Err(cfg_err(format!("fields.sigma must be a {dim}x{dim} matrix of expressions")));
    }

    let b_asts: Vec<ExprAst> = fields
        .b
        .iter()
        .enumerate()
        .map(|(i, s)| parse_expr(&format!("fields.b[{i}]"), s, dim))
        .collect::<Result<_, _>>()?;
    let mut sigma_asts: Vec<ExprAst> = Vec::with_capacity(dim * dim);
    for (i, row) in fields.sigma.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            sigma_asts.push(parse_expr(&format!("fields.sigma[{i}][{j}]"), s, dim)?);
        }
    }
    let sigma_constant = sigma_asts.iter().all(|a| a.is_constant());
    let v_ast = parse_expr("fields.v", &fields.v, dim)?;

    let drift = {
        let b_asts = b_asts.clone();
        Arc::new(move |t: f64, x: &VecD| {
            let mut out = VecD::zeros(x.dim());
            for (i, ast) in b_asts.iter().enumerate() {
                out.set(i, expr::eval(ast, t, x)?);
            }
            Ok(out)
        })
    };
    let sigma = {
        let sigma_asts = sigma_asts.clone();
        Arc::new(move |t: f64, x: &VecD| {
            let d = x.dim();
            let mut m = MatD::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    m.set(i, j, expr::eval(&sigma_asts[i * d + j], t, x)?);
                }
            }
            Ok(m)
        })
    };
    let fb = FieldBundle::new(dim, drift, sigma);

    let mut candidate = Potential::numeric({
        let v_ast = v_ast.clone();
        Arc::new(move |t: f64, x: &VecD| expr::eval(&v_ast, t, x))
    });
    if let Some(grads) = &fields.v_grad {
        if grads.len() != dim {
            return Err(cfg_err(format!("fields.v_grad needs {dim} entries")));
        }
        let asts: Vec<ExprAst> = grads
            .iter()
            .enumerate()
            .map(|(i, s)| parse_expr(&format!("fields.v_grad[{i}]"), s, dim))
            .collect::<Result<_, _>>()?;
        candidate = candidate.with_gradient(Arc::new(move |t: f64, x: &VecD| {
            let mut g = VecD::zeros(x.dim());
            for (i, ast) in asts.iter().enumerate() {
                g.set(i, expr::eval(ast, t, x)?);
            }
            Ok(g)
        }));
    }
    if let Some(hess) = &fields.v_hess {
        if hess.len() != dim || hess.iter().any(|r| r.len() != dim) {
            return Err(cfg_err(format!("fields.v_hess must be {dim}x{dim}")));
        }
        let mut asts = Vec::with_capacity(dim * dim);
        for (i, row) in hess.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                asts.push(parse_expr(&format!("fields.v_hess[{i}][{j}]"), s, dim)?);
            }
        }
        candidate = candidate.with_hessian(Arc::new(move |t: f64, x: &VecD| {
            let d = x.dim();
            let mut m = MatD::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    m.set(i, j, expr::eval(&asts[i * d + j], t, x)?);
                }
            }
            Ok(m)
        }));
    }
    if let Some(dt_src) = &fields.v_dt {
        let ast = parse_expr("fields.v_dt", dt_src, dim)?;
        candidate = candidate
            .with_time_derivative(Arc::new(move |t: f64, x: &VecD| expr::eval(&ast, t, x)));
    }

    let constant_sigma = if sigma_constant {
        Some(fb.sigma(0.0, &VecD::zeros(dim))?)
    } else {
        None
    };

    Ok(Scenario {
        name: "explicit".into(),
        dim,
        fb,
        candidate,
        x0: VecD::zeros(dim),
        constant_sigma,
        burgers: None,
    })
}

fn build_burgers_model(
    section: &BurgersSection,
    scen: &Scenario,
) -> Result<Burgers1DModel, Error> {
    if scen.dim != 1 {
        return Err(cfg_err("burgers-check requires a one-dimensional scenario"));
    }
    let phi = match (&section.phi, section.phi_coef, section.phi_power) {
        (Some(expr_src), None, None) => {
            let ast = parse_expr("burgers.phi", expr_src, 1)?;
            Phi::custom(Arc::new(move |r: f64| {
                expr::eval(&ast, 0.0, &VecD::from_slice(&[r]))
            }))
        }
        (None, Some(coef), Some(power)) => Phi::monomial(coef, power),
        (None, None, None) => match &scen.burgers {
            Some(model) => model.phi.clone(),
            None => {
                return Err(cfg_err(
                    "no structure function: set burgers.phi or burgers.phi_coef/phi_power",
                ))
            }
        },
        _ => {
            return Err(cfg_err(
                "set either burgers.phi or both burgers.phi_coef and burgers.phi_power",
            ))
        }
    };
    let u: Scalar1D = match &section.u {
        Some(src) => {
            let ast = parse_expr("burgers.u", src, 1)?;
            Arc::new(move |t: f64, x: f64| expr::eval(&ast, t, &VecD::from_slice(&[x])))
        }
        None => match &scen.burgers {
            Some(model) => model.u.clone(),
            None => {
                // fall back to b / sigma^2 from the bundle
                let fb = scen.fb.clone();
                girsanov_lab::burgers1d::u_from_coefficients(
                    Arc::new(move |t, x| Ok(fb.drift(t, &VecD::from_slice(&[x]))?.get(0))),
                    {
                        let fb = scen.fb.clone();
                        Arc::new(move |t, x| Ok(fb.sigma(t, &VecD::from_slice(&[x]))?.get(0, 0)))
                    },
                )
            }
        },
    };
    Burgers1DModel::new(u, phi, 0.0)
}

impl Config {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Config, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        let raw: RawConfig =
            toml::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Config::from_raw(raw, seed_override)
    }

    pub fn from_raw(raw: RawConfig, seed_override: Option<u64>) -> Result<Config, Error> {
        if raw.horizon <= 0.0 || !raw.horizon.is_finite() {
            return Err(cfg_err(format!("horizon must be positive, got {}", raw.horizon)));
        }

        let mut scenario = match (&raw.scenario, &raw.fields) {
            (Some(s), None) => build_scenario(s, raw.horizon)?,
            (None, Some(f)) => {
                let dim = raw.dimension.ok_or_else(|| {
                    cfg_err("explicit fields require a top-level `dimension`")
                })?;
                if dim == 0 || dim > girsanov_lab::numerics::MAX_DIM {
                    return Err(cfg_err(format!("dimension must be in 1..=8, got {dim}")));
                }
                build_explicit(f, dim)?
            }
            (Some(_), Some(_)) => {
                return Err(cfg_err("config must set exactly one of [scenario] and [fields], got both"))
            }
            (None, None) => {
                return Err(cfg_err("config must set exactly one of [scenario] and [fields]"))
            }
        };
        if let Some(dim) = raw.dimension {
            if dim != scenario.dim {
                return Err(cfg_err(format!(
                    "dimension = {dim} conflicts with scenario `{}` (dimension {})",
                    scenario.name, scenario.dim
                )));
            }
        }
        if let Some(x0) = &raw.x0 {
            if x0.len() != scenario.dim {
                return Err(cfg_err(format!(
                    "x0 has {} entries but the dimension is {}",
                    x0.len(),
                    scenario.dim
                )));
            }
            scenario.x0 = VecD::from_slice(x0);
        }

        // dt / dt_list validation against the horizon
        if let Some(dt) = raw.dt {
            girsanov_lab::sde::TimeGrid::from_dt(raw.horizon, dt)
                .map_err(|_| cfg_err(format!("dt = {dt} does not divide the horizon T = {}", raw.horizon)))?;
        }
        let dt_list = raw.dt_list.clone().unwrap_or_else(|| vec![1e-2, 5e-3, 2.5e-3]);
        for &dt in &dt_list {
            girsanov_lab::sde::TimeGrid::from_dt(raw.horizon, dt).map_err(|_| {
                cfg_err(format!("dt_list entry {dt} does not divide the horizon T = {}", raw.horizon))
            })?;
        }

        let burgers_model = match &raw.burgers {
            Some(section) => Some(build_burgers_model(section, &scenario)?),
            None => scenario.burgers.clone(),
        };

        let curl = raw.curl.clone().unwrap_or(CurlSection { half_width: None, n_samples: None });
        Ok(Config {
            horizon: raw.horizon,
            dt: raw.dt,
            dt_list,
            n_paths: raw.n_paths.unwrap_or(200),
            seed: seed_override.or(raw.seed).unwrap_or(0),
            grid: raw.grid.clone(),
            burgers_model,
            burgers_section: raw.burgers.clone(),
            curl_half_width: curl.half_width.unwrap_or(2.0),
            curl_samples: curl.n_samples.unwrap_or(100),
            thresholds: raw.thresholds.clone().unwrap_or_default().build(),
            residual_tol: raw.residual_tol.unwrap_or(1e-3),
            scenario,
        })
    }
}
