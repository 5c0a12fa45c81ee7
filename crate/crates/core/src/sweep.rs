//! `(t, p)` grids for the gradient-flow solver and `p` grids for the inverse
//! baseline, with CSV output.
//!
//! `p` counts the phases of both branches together, so each branch gets
//! `p/2` phases and a polynomial of degree at most `p/2 - 1`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::approx::{chebyshev_fit_default, parity_degree, Parity, TargetFunction};
use crate::error::{QgfaError, Result};
use crate::fem::{make_cantilever_problem, make_tensile_problem, FemInput, SpdSystem, SpdSystemJson};
use crate::flow::{relative_error, solve_direct};
use crate::qcirc::{prepare_programs, run_qgfa_in, Mode, QgfaContext};
use crate::qmia::{prepare_inverse, run_qmia_in};
use crate::qsp::{find_phases_with, fit_report, response_report, ResponseReport, SolverOptions};
use crate::softabs::{smoothing_epsilon, EpsilonChoice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    /// `"tensile"` or `"cantilever"`.
    Named(String),
    /// FEM input or assembled system JSON.
    File { file: PathBuf },
}

impl ProblemSpec {
    pub fn load(&self) -> Result<SpdSystem> {
        match self {
            ProblemSpec::Named(name) => match name.as_str() {
                "tensile" => Ok(make_tensile_problem()),
                "cantilever" => Ok(make_cantilever_problem()),
                other => Err(QgfaError::param(format!("unknown built-in problem {other:?}"))),
            },
            ProblemSpec::File { file } => load_system_file(file),
        }
    }
}

/// Reads either a mesh description (assembled on the fly) or a system JSON.
pub fn load_system_file(path: &Path) -> Result<SpdSystem> {
    let text = std::fs::read_to_string(path).map_err(|e| QgfaError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("nodes").is_some() {
        let input: FemInput = serde_json::from_value(value)?;
        input.build()
    } else {
        let json: SpdSystemJson = serde_json::from_value(value)?;
        SpdSystem::from_json(&json)
    }
}

/// Optional response table written next to the sweep CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpec {
    /// `g1`, `g2tilde` or `ginv`.
    pub target: String,
    #[serde(default)]
    pub t: f64,
    pub degree: usize,
    #[serde(default = "default_response_grid")]
    pub grid: usize,
    /// Solve phases instead of evaluating the fitted polynomial.
    #[serde(default)]
    pub phases: bool,
}

fn default_response_grid() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub problem: ProblemSpec,
    pub t_values: Vec<f64>,
    pub p_values: Vec<usize>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_epsilon_apx")]
    pub epsilon_apx: f64,
    #[serde(default = "default_true")]
    pub qmia: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_phase_tol")]
    pub phase_tol: f64,
    #[serde(default)]
    pub response: Option<ResponseSpec>,
}

fn default_mode() -> Mode {
    Mode::IdealPolynomial
}
fn default_eta() -> f64 {
    1e-6
}
fn default_epsilon_apx() -> f64 {
    1e-3
}
fn default_true() -> bool {
    true
}
fn default_timeout() -> f64 {
    300.0
}
fn default_phase_tol() -> f64 {
    1e-10
}

impl SweepConfig {
    /// Full-size default grids in ideal mode.
    pub fn default_grid(problem: ProblemSpec) -> Self {
        Self {
            problem,
            t_values: vec![100.0, 300.0, 500.0, 1000.0, 2000.0, 3000.0],
            p_values: vec![500, 1000, 2000, 3000, 4000],
            mode: Mode::IdealPolynomial,
            eta: default_eta(),
            epsilon_apx: default_epsilon_apx(),
            qmia: true,
            seed: 0,
            output: None,
            timeout_secs: default_timeout(),
            phase_tol: default_phase_tol(),
            response: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_values.is_empty() || self.p_values.is_empty() {
            return Err(QgfaError::param("sweep grids must be non-empty"));
        }
        if let Some(t) = self.t_values.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(QgfaError::param(format!("invalid time {t}")));
        }
        if let Some(p) = self.p_values.iter().find(|p| **p % 2 != 0 || **p < 2) {
            return Err(QgfaError::param(format!("phase count {p} must be even and at least 2")));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(QgfaError::param("eta must lie in (0, 1)"));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(QgfaError::param("timeout must be positive"));
        }
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QgfaError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Per-branch degree for a total of `p` phases.
pub fn branch_degree(p: usize) -> Option<usize> {
    (p / 2).checked_sub(1).and_then(|d| parity_degree(d, Parity::Even))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub p: usize,
    pub degree: usize,
    pub r: f64,
    pub success_probability: f64,
    pub sup_err_g1: f64,
    pub sup_err_g2: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QmiaRow {
    pub p: usize,
    pub degree: usize,
    pub r_inv: f64,
    pub success_probability: f64,
    pub sup_error: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub kappa: f64,
    pub spectral_norm: f64,
    pub dim: usize,
    pub mode: Mode,
    pub eta: f64,
    pub epsilon_apx: f64,
    pub seed: u64,
    pub epsilon_smooth: Vec<(f64, Option<EpsilonChoice>)>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub qmia_rows: Vec<QmiaRow>,
    pub response: Option<ResponseReport>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn best_r(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.r).filter(|r| r.is_finite()).reduce(f64::min)
    }

    pub fn best_r_inv(&self) -> Option<f64> {
        self.qmia_rows.iter().map(|r| r.r_inv).filter(|r| r.is_finite()).reduce(f64::min)
    }
}

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

struct Shared<'a> {
    ctx: &'a QgfaContext,
    u_star: &'a DVector<f64>,
    config: &'a SweepConfig,
    kappa: f64,
}

fn phase_options(config: &SweepConfig) -> Option<SolverOptions> {
    match config.mode {
        Mode::IdealPolynomial => None,
        Mode::Circuit => Some(SolverOptions {
            tol: config.phase_tol,
            max_iter: 500,
            deadline: Some(Instant::now() + Duration::from_secs_f64(config.timeout_secs)),
        }),
    }
}

fn qgfa_cell(sh: &Shared, t: f64, p: usize) -> SweepRow {
    let degree = branch_degree(p).unwrap_or(0);
    let mut row = SweepRow {
        t,
        p,
        degree,
        r: f64::NAN,
        success_probability: f64::NAN,
        sup_err_g1: f64::NAN,
        sup_err_g2: f64::NAN,
        error: None,
    };
    let res = (|| -> Result<()> {
        let (p1, p2) = prepare_programs(sh.kappa, t, degree, sh.config.eta, phase_options(sh.config))?;
        row.sup_err_g1 = p1.fit.sup_error;
        row.sup_err_g2 = p2.fit.sup_error;
        let out = run_qgfa_in(sh.ctx, &p1, &p2, t, sh.config.mode)?;
        row.r = relative_error(&out.u(), sh.u_star)?;
        row.success_probability = out.success_probability;
        Ok(())
    })();
    if let Err(e) = res {
        row.error = Some(e.to_string());
    }
    row
}

fn qmia_cell(sh: &Shared, p: usize) -> QmiaRow {
    let mut row = QmiaRow {
        p,
        degree: parity_degree(p.saturating_sub(1), Parity::Odd).unwrap_or(0),
        r_inv: f64::NAN,
        success_probability: f64::NAN,
        sup_error: f64::NAN,
        error: None,
    };
    let res = (|| -> Result<()> {
        let prog = prepare_inverse(
            sh.kappa,
            sh.config.epsilon_apx,
            p.saturating_sub(1),
            phase_options(sh.config),
        )?;
        row.sup_error = prog.fit.sup_error;
        let out = run_qmia_in(sh.ctx, &prog, sh.config.mode)?;
        row.r_inv = relative_error(&out.u(), sh.u_star)?;
        row.success_probability = out.success_probability;
        Ok(())
    })();
    if let Err(e) = res {
        row.error = Some(e.to_string());
    }
    row
}

fn run_response(spec: &ResponseSpec, kappa: f64, config: &SweepConfig) -> Result<ResponseReport> {
    let target = match spec.target.as_str() {
        "g1" | "g2tilde" | "g2" => {
            let eps = smoothing_epsilon(kappa, spec.t, config.eta)?.chosen;
            if spec.target == "g1" {
                TargetFunction::G1 { t: spec.t, epsilon_smooth: eps }
            } else {
                TargetFunction::G2Tilde { t: spec.t, epsilon_smooth: eps }
            }
        }
        "ginv" => TargetFunction::Ginv {
            kappa,
            epsilon_apx: config.epsilon_apx,
        },
        other => return Err(QgfaError::param(format!("unknown response target {other:?}"))),
    };
    let fit = chebyshev_fit_default(&target, spec.degree)?;
    if spec.phases {
        let opts = SolverOptions {
            tol: config.phase_tol,
            max_iter: 500,
            deadline: Some(Instant::now() + Duration::from_secs_f64(config.timeout_secs)),
        };
        response_report(&find_phases_with(&fit, opts)?, &target, spec.grid)
    } else {
        fit_report(&fit, spec.grid)
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let start = Instant::now();
    let system = config.problem.load()?;
    let ctx = QgfaContext::new(&system)?;
    let u_star = solve_direct(&system)?;
    let sh = Shared {
        ctx: &ctx,
        u_star: &u_star,
        config,
        kappa: system.kappa,
    };

    let cells: Vec<(f64, usize)> = config
        .t_values
        .iter()
        .flat_map(|&t| config.p_values.iter().map(move |&p| (t, p)))
        .collect();
    let rows = par_map(&cells, |&(t, p)| qgfa_cell(&sh, t, p));
    let qmia_rows = if config.qmia {
        par_map(&config.p_values, |&p| qmia_cell(&sh, p))
    } else {
        Vec::new()
    };
    let response = match &config.response {
        Some(spec) => Some(run_response(spec, system.kappa, config)?),
        None => None,
    };

    let epsilon_smooth = config
        .t_values
        .iter()
        .map(|&t| {
            let choice = if t > 0.0 {
                smoothing_epsilon(system.kappa, t, config.eta).ok()
            } else {
                None
            };
            (t, choice)
        })
        .collect();
    Ok(SweepResult {
        rows,
        qmia_rows,
        response,
        metadata: SweepMetadata {
            kappa: system.kappa,
            spectral_norm: system.spectral_norm,
            dim: system.dim(),
            mode: config.mode,
            eta: config.eta,
            epsilon_apx: config.epsilon_apx,
            seed: config.seed,
            epsilon_smooth,
            elapsed_secs: start.elapsed().as_secs_f64(),
        },
    })
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "NaN".to_string()
    }
}

pub const SWEEP_HEADER: &str = "t,p,R,success_prob,sup_err_g1,sup_err_g2";
pub const QMIA_HEADER: &str = "p,R_inv";
pub const RESPONSE_HEADER: &str = "x,target,response,abs_error";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(r.t),
            r.p,
            num(r.r),
            num(r.success_probability),
            num(r.sup_err_g1),
            num(r.sup_err_g2)
        );
    }
    s
}

pub fn qmia_csv(rows: &[QmiaRow]) -> String {
    let mut s = format!("{QMIA_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{}", r.p, num(r.r_inv));
    }
    s
}

pub fn response_csv(report: &ResponseReport) -> String {
    let mut s = format!("{RESPONSE_HEADER}\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{},{}", num(r.x), num(r.target), num(r.response), num(r.abs_error));
    }
    s
}

fn sibling(prefix: &Path, suffix: &str) -> PathBuf {
    let stem = prefix.with_extension("");
    let mut name = stem.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    stem.with_file_name(name)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| QgfaError::io(path, e))
}

/// Writes `<prefix>.csv`, `<prefix>_qmia.csv`, `<prefix>_meta.json` and,
/// if present, `<prefix>_response.csv`. Returns the paths written.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<Vec<PathBuf>> {
    let main = sibling(path, ".csv");
    let qmia = sibling(path, "_qmia.csv");
    let meta = sibling(path, "_meta.json");
    write(&main, &sweep_csv(&result.rows))?;
    write(&qmia, &qmia_csv(&result.qmia_rows))?;
    let errors: Vec<_> = result
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| serde_json::json!({"t": r.t, "p": r.p, "error": e})))
        .chain(
            result
                .qmia_rows
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| serde_json::json!({"p": r.p, "error": e}))),
        )
        .collect();
    let meta_json = serde_json::json!({ "metadata": result.metadata, "errors": errors });
    write(&meta, &serde_json::to_string_pretty(&meta_json)?)?;
    let mut written = vec![main, qmia, meta];
    if let Some(rep) = &result.response {
        let resp = sibling(path, "_response.csv");
        write(&resp, &response_csv(rep))?;
        written.push(resp);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            t_values: vec![0.0, 20.0, 60.0],
            p_values: vec![40, 80],
            ..SweepConfig::default_grid(ProblemSpec::Named("cantilever".into()))
        }
    }

    #[test]
    fn branch_degrees() {
        assert_eq!(branch_degree(3000), Some(1498));
        assert_eq!(branch_degree(400), Some(198));
        assert_eq!(branch_degree(4), Some(0));
        assert_eq!(branch_degree(2), Some(0));
        assert_eq!(branch_degree(0), None);
    }

    #[test]
    fn config_validation() {
        let mut c = tiny_config();
        assert!(c.validate().is_ok());
        c.p_values = vec![41];
        assert!(c.validate().is_err());
        c.p_values = vec![];
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.t_values = vec![-1.0];
        assert!(c.validate().is_err());
        let text = r#"{"problem": "tensile", "t_values": [1], "p_values": [10]}"#;
        let c: SweepConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.mode, Mode::IdealPolynomial);
        assert_eq!(c.eta, 1e-6);
        let text = r#"{"problem": {"file": "x.json"}, "t_values": [1], "p_values": [10], "mode": "circuit"}"#;
        let c: SweepConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.problem, ProblemSpec::File { file: "x.json".into() });
        assert!(ProblemSpec::Named("beam".into()).load().is_err());
    }

    #[test]
    fn zero_time_rows_equal_hot_start_error() {
        let c = tiny_config();
        let res = run_sweep(&c).unwrap();
        assert_eq!(res.rows.len(), 6);
        let sys = make_cantilever_problem();
        let u_star = solve_direct(&sys).unwrap();
        let r0 = relative_error(&sys.hot_start, &u_star).unwrap();
        for row in res.rows.iter().filter(|r| r.t == 0.0) {
            assert!((row.r - r0).abs() < 1e-12);
        }
        assert_eq!(res.qmia_rows.len(), 2);
        assert!(res.rows.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn sweep_is_deterministic() {
        let c = tiny_config();
        let a = run_sweep(&c).unwrap();
        let b = run_sweep(&c).unwrap();
        assert_eq!(sweep_csv(&a.rows), sweep_csv(&b.rows));
        assert_eq!(qmia_csv(&a.qmia_rows), qmia_csv(&b.qmia_rows));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![SweepRow {
            t: 0.1,
            p: 10,
            degree: 4,
            r: 1.0 / 3.0,
            success_probability: 2f64.sqrt() / 7.0,
            sup_err_g1: 1e-300,
            sup_err_g2: 123456.789,
            error: None,
        }];
        let text = sweep_csv(&rows);
        let line = text.lines().nth(1).unwrap();
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v, vec![0.1, 10.0, 1.0 / 3.0, 2f64.sqrt() / 7.0, 1e-300, 123456.789]);
        assert_eq!(sweep_csv(&[]), format!("{SWEEP_HEADER}\n"));
    }

    #[test]
    fn errors_become_rows() {
        let mut c = tiny_config();
        c.mode = Mode::Circuit;
        c.timeout_secs = 1e-9;
        c.qmia = false;
        let res = run_sweep(&c).unwrap();
        assert!(res.rows.iter().filter(|r| r.t > 0.0).all(|r| r.error.is_some() && r.r.is_nan()));
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny_config();
        c.response = Some(ResponseSpec {
            target: "g2tilde".into(),
            t: 20.0,
            degree: 30,
            grid: 50,
            phases: true,
        });
        let res = run_sweep(&c).unwrap();
        let paths = emit_csv(&res, &dir.path().join("out.csv")).unwrap();
        assert_eq!(paths.len(), 4);
        let main = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(main.lines().count(), 1 + 6);
        let resp = std::fs::read_to_string(dir.path().join("out_response.csv")).unwrap();
        assert_eq!(resp.lines().count(), 51);
        assert!(emit_csv(&res, Path::new("/nonexistent/dir/out")).is_err());
    }
}
