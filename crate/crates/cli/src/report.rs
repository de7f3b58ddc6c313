//! Structured run report (TOML) and CSV helpers. Every CSV has a header row
//! and floats are printed with 17 significant digits so values round-trip.

use girsanov_lab::girsanov::MartingaleCheck;
use girsanov_lab::kpz::CurlReport;
use girsanov_lab::verify::{RefinementStudy, Thresholds, VerificationReport};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Round-trip-safe float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub scenario: String,
    pub seed: u64,
    pub runtime_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curl: Option<CurlSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub martingale: Option<MartingaleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burgers: Option<BurgersSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdsSection>,
}

impl RunReport {
    pub fn new(command: &str, scenario: &str, seed: u64) -> Self {
        RunReport {
            command: command.into(),
            scenario: scenario.into(),
            seed,
            runtime_seconds: 0.0,
            verdict: None,
            study: None,
            curl: None,
            martingale: None,
            simulate: None,
            burgers: None,
            solver: None,
            thresholds: None,
        }
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<()> {
        let text = toml::to_string_pretty(self).expect("report serialization");
        std::fs::write(out_dir.join("report.toml"), text)
    }
}

#[derive(Serialize)]
pub struct VerdictReport {
    pub verdict: String,
    pub explanation: String,
    pub scope_note: String,
}

#[derive(Serialize)]
pub struct StudyReport {
    pub n_paths: usize,
    pub zhat_rms: f64,
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_order: Option<f64>,
    pub pairwise_orders: Vec<f64>,
    pub levels: Vec<LevelReport>,
}

#[derive(Serialize)]
pub struct LevelReport {
    pub dt: f64,
    pub steps: usize,
    pub rms_t: f64,
    pub max_abs: f64,
    pub mean_t: f64,
    pub blowups: usize,
}

impl StudyReport {
    pub fn from_study(study: &RefinementStudy) -> Self {
        StudyReport {
            n_paths: study.n_paths,
            zhat_rms: study.zhat_rms,
            exact: study.exact,
            fit_order: study.fit_order,
            pairwise_orders: study.pairwise_orders.clone(),
            levels: study
                .levels
                .iter()
                .map(|l| LevelReport {
                    dt: l.dt,
                    steps: l.steps,
                    rms_t: l.rms_t,
                    max_abs: l.max_abs,
                    mean_t: l.mean_t,
                    blowups: l.blowups,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct CurlSection {
    pub max_asym: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub n_samples: usize,
}

impl CurlSection {
    pub fn from_report(curl: &CurlReport) -> Self {
        CurlSection {
            max_asym: curl.max_asym,
            tolerance: curl.tolerance,
            pass: curl.pass,
            n_samples: curl.n_samples,
        }
    }
}

#[derive(Serialize)]
pub struct MartingaleSection {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub pass: bool,
}

impl MartingaleSection {
    pub fn from_check(c: &MartingaleCheck) -> Self {
        MartingaleSection { mean: c.mean, stderr: c.stderr, n_paths: c.n_paths, pass: c.pass }
    }
}

#[derive(Serialize)]
pub struct SimulateSection {
    pub n_paths: usize,
    pub steps: usize,
    pub dt: f64,
    pub blowups: usize,
    pub blown_path_ids: Vec<u64>,
}

#[derive(Serialize)]
pub struct BurgersSection {
    pub n_samples: usize,
    pub max_abs_residual: f64,
    pub residual_tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_consistency_max_dev: Option<f64>,
    pub stationary: bool,
}

#[derive(Serialize)]
pub struct SolverSection {
    pub steps: usize,
    pub internal_dt: f64,
    pub output_times: Vec<f64>,
    pub files: Vec<String>,
    pub max_principle_exact: bool,
}

#[derive(Serialize)]
pub struct ThresholdsSection {
    pub tau_abs: f64,
    pub tau_rel: f64,
    pub order_min: f64,
    pub order_floor: f64,
    pub floor_mult: f64,
    pub exact_rms: f64,
    pub max_blowup_frac: f64,
    pub curl_fail_asym: f64,
    pub curl_tol: f64,
}

impl ThresholdsSection {
    pub fn from_thresholds(t: &Thresholds) -> Self {
        ThresholdsSection {
            tau_abs: t.tau_abs,
            tau_rel: t.tau_rel,
            order_min: t.order_min,
            order_floor: t.order_floor,
            floor_mult: t.floor_mult,
            exact_rms: t.exact_rms,
            max_blowup_frac: t.max_blowup_frac,
            curl_fail_asym: t.curl_fail_asym,
            curl_tol: t.curl_tol,
        }
    }
}

pub fn verdict_section(report: &VerificationReport) -> VerdictReport {
    VerdictReport {
        verdict: report.verdict.to_string(),
        explanation: report.explanation.clone(),
        scope_note: report.scope_note.to_string(),
    }
}
