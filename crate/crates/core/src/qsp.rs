//! Symmetric QSP phase factors for bounded definite-parity polynomials.
//!
//! Stored phases use the reflection convention
//!
//! ```text
//! P(x) = Re ⟨0| e^{iφ₀Z} R(x) e^{iφ₁Z} R(x) ⋯ R(x) e^{iφₙZ} |0⟩,
//! R(x) = [[x, √(1-x²)], [√(1-x²), -x]]
//! ```
//!
//! which is what the block-encoded circuit realises when `R` is replaced by
//! a Hermitian block encoding. The solver itself works in the `W_x`
//! convention, where the phases are symmetric, and converts at the end.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx::{chebyshev_nodes, ChebyshevFit, Parity, TargetFunction};
use crate::error::{QgfaError, Result};

pub const CONVENTION: &str = "reflection-zrot-re";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSequence {
    /// `φ₀ … φₙ`, `n` = polynomial degree.
    pub phases: Vec<f64>,
    pub convention: String,
    pub parity: Parity,
    pub target: TargetFunction,
    pub safety: f64,
    /// Sup error against the fitted polynomial on the check grid.
    pub residual: f64,
}

impl PhaseSequence {
    pub fn degree(&self) -> usize {
        self.phases.len() - 1
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| QgfaError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QgfaError::io(path, e))?;
        let seq: PhaseSequence = serde_json::from_str(&text)?;
        if seq.convention != CONVENTION {
            return Err(QgfaError::param(format!(
                "unsupported phase convention {:?}",
                seq.convention
            )));
        }
        if seq.phases.is_empty() {
            return Err(QgfaError::param("phase sequence is empty"));
        }
        Ok(seq)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub deadline: Option<Instant>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            deadline: None,
        }
    }
}

type C = Complex64;
type Row = [C; 2];

fn rz_row(v: Row, phi: f64) -> Row {
    let e = C::from_polar(1.0, phi);
    [v[0] * e, v[1] * e.conj()]
}

fn reflect_row(v: Row, x: f64, s: f64) -> Row {
    [v[0] * x + v[1] * s, v[0] * s - v[1] * x]
}

/// `⟨0| e^{iφ₀Z} R e^{iφ₁Z} ⋯ R e^{iφₙZ}` as a row vector.
fn response_row(phases: &[f64], x: f64) -> Row {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut v = rz_row([C::new(1.0, 0.0), C::new(0.0, 0.0)], phases[0]);
    for &phi in &phases[1..] {
        v = rz_row(reflect_row(v, x, s), phi);
    }
    v
}

/// Polynomial realised by `phases` at `x`.
pub fn qsp_response_phases(phases: &[f64], x: f64) -> f64 {
    response_row(phases, x)[0].re
}

pub fn qsp_response(seq: &PhaseSequence, x: f64) -> f64 {
    qsp_response_phases(&seq.phases, x)
}

/// Full 2×2 unitary `e^{iφ₀Z} R ⋯ R e^{iφₙZ}`, row-major.
pub fn qsp_unitary(phases: &[f64], x: f64) -> [[C; 2]; 2] {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut top = rz_row([C::new(1.0, 0.0), C::new(0.0, 0.0)], phases[0]);
    let mut bottom = rz_row([C::new(0.0, 0.0), C::new(1.0, 0.0)], phases[0]);
    for &phi in &phases[1..] {
        top = rz_row(reflect_row(top, x, s), phi);
        bottom = rz_row(reflect_row(bottom, x, s), phi);
    }
    [top, bottom]
}

/// `W_x`-convention response with its derivatives with respect to every
/// phase.
fn wx_response_and_grad(phases: &[f64], x: f64, grad: &mut [f64]) -> f64 {
    let n = phases.len() - 1;
    let s = (1.0 - x * x).max(0.0).sqrt();
    let is = C::new(0.0, s);
    let w_row = |v: Row| -> Row { [v[0] * x + v[1] * is, v[0] * is + v[1] * x] };
    let w_col = |v: Row| -> Row { [v[0] * x + v[1] * is, v[0] * is + v[1] * x] };

    // rows[j] = ⟨0| A₀ W A₁ ⋯ W, i.e. everything left of A_j.
    let mut rows = Vec::with_capacity(n + 1);
    let mut r: Row = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    rows.push(r);
    for &phi in &phases[..n] {
        r = w_row(rz_row(r, phi));
        rows.push(r);
    }
    // Right-to-left: c = A_j W A_{j+1} ⋯ A_n |0⟩.
    let mut c: Row = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    let mut value = 0.0;
    for j in (0..=n).rev() {
        c = rz_row(c, phases[j]);
        let rj = rows[j];
        let d = rj[0] * c[0] - rj[1] * c[1];
        grad[j] = -d.im;
        if j == 0 {
            value = (rj[0] * c[0] + rj[1] * c[1]).re;
        }
        c = w_col(c);
    }
    value
}

fn expand_symmetric(psi: &[f64], n: usize) -> Vec<f64> {
    (0..=n).map(|j| psi[j.min(n - j)]).collect()
}

/// `W_x` phases to the reflection convention used for storage.
fn wx_to_reflection(phi: &[f64]) -> Vec<f64> {
    let n = phi.len() - 1;
    phi.iter()
        .enumerate()
        .map(|(j, &p)| {
            if j == 0 {
                p - FRAC_PI_4 + n as f64 * FRAC_PI_2
            } else if j == n {
                p - FRAC_PI_4
            } else {
                p - FRAC_PI_2
            }
        })
        .collect()
}

/// Sup of `|response - fit|` over a Chebyshev grid on `[0, 1]`.
pub fn phase_residual(phases: &[f64], fit: &ChebyshevFit) -> f64 {
    let n = 4 * (phases.len() + 1).max(64);
    chebyshev_nodes(n)
        .into_iter()
        .filter(|&x| x >= 0.0)
        .map(|x| (qsp_response_phases(phases, x) - fit.eval(x)).abs())
        .fold(0.0, f64::max)
}

pub fn find_phases(fit: &ChebyshevFit, tol: f64) -> Result<PhaseSequence> {
    find_phases_with(
        fit,
        SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

/// Newton iteration on the symmetric half of the phases, matching the
/// polynomial at the positive Chebyshev nodes of its reduced degree.
pub fn find_phases_with(fit: &ChebyshevFit, opts: SolverOptions) -> Result<PhaseSequence> {
    if !(opts.tol >= 1e-14) {
        return Err(QgfaError::param(format!("tolerance {} too small", opts.tol)));
    }
    let n = fit.degree;
    let finish = |phases: Vec<f64>| -> Result<PhaseSequence> {
        let residual = phase_residual(&phases, fit);
        if residual > opts.tol {
            return Err(QgfaError::PhaseSolver {
                iterations: opts.max_iter,
                residual,
            });
        }
        Ok(PhaseSequence {
            phases,
            convention: CONVENTION.to_string(),
            parity: fit.parity,
            target: fit.target,
            safety: fit.safety,
            residual,
        })
    };
    if n == 0 {
        let c = fit.coefficients[0];
        if c.abs() > 1.0 {
            return Err(QgfaError::param("constant polynomial exceeds 1"));
        }
        return finish(vec![c.acos()]);
    }

    let m = (n + 2) / 2;
    let nodes: Vec<f64> = (1..=m)
        .map(|j| ((2 * j - 1) as f64 * std::f64::consts::PI / (4 * m) as f64).cos())
        .collect();
    let target: Vec<f64> = nodes.iter().map(|&x| fit.eval(x)).collect();

    let mut psi = vec![0.0; m];
    psi[0] = FRAC_PI_4;
    let mut grad = vec![0.0; n + 1];

    let evaluate = |psi: &[f64], grad: &mut [f64], jac: Option<&mut DMatrix<f64>>| -> DVector<f64> {
        let phi = expand_symmetric(psi, n);
        let mut r = DVector::zeros(m);
        let mut jac = jac;
        for (i, &x) in nodes.iter().enumerate() {
            r[i] = wx_response_and_grad(&phi, x, grad) - target[i];
            if let Some(j) = jac.as_deref_mut() {
                for k in 0..m {
                    let mirror = n - k;
                    j[(i, k)] = if mirror == k { grad[k] } else { grad[k] + grad[mirror] };
                }
            }
        }
        r
    };

    let mut jac = DMatrix::zeros(m, m);
    let mut r = evaluate(&psi, &mut grad, Some(&mut jac));
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if r.amax() <= 1e-15 {
            break;
        }
        if let Some(deadline) = opts.deadline {
            if Instant::now() > deadline {
                return Err(QgfaError::Timeout(format!(
                    "phase solve for degree {n} after {iterations} iterations"
                )));
            }
        }
        iterations += 1;
        let step = match jac.clone().lu().solve(&(-&r)) {
            Some(s) => s,
            None => break,
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = psi.iter().zip(step.iter()).map(|(p, s)| p + alpha * s).collect();
            let rt = evaluate(&trial, &mut grad, None);
            if rt.norm() < r.norm() {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        let Some(trial) = accepted else { break };
        let small_step = alpha * step.amax() <= 1e-12;
        psi = trial;
        r = evaluate(&psi, &mut grad, Some(&mut jac));
        if small_step {
            break;
        }
    }

    let phases = wx_to_reflection(&expand_symmetric(&psi, n));
    let residual = phase_residual(&phases, fit);
    if residual > opts.tol {
        return Err(QgfaError::PhaseSolver {
            iterations,
            residual,
        });
    }
    finish(phases)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseRow {
    pub x: f64,
    pub target: f64,
    pub response: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseReport {
    pub rows: Vec<ResponseRow>,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
}

impl ResponseReport {
    fn from_rows(rows: Vec<ResponseRow>) -> Self {
        let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
        let mean_abs_error = rows.iter().map(|r| r.abs_error).sum::<f64>() / rows.len() as f64;
        Self {
            rows,
            max_abs_error,
            mean_abs_error,
        }
    }

    /// Row with the largest error among `x ≥ x_min`.
    pub fn worst_from(&self, x_min: f64) -> Option<&ResponseRow> {
        self.rows
            .iter()
            .filter(|r| r.x >= x_min)
            .max_by(|a, b| a.abs_error.total_cmp(&b.abs_error))
    }
}

fn uniform(grid: usize) -> impl Iterator<Item = f64> {
    let grid = grid.max(2);
    (0..grid).map(move |i| i as f64 / (grid - 1) as f64)
}

/// Response against `safety · f` on a uniform grid over `[0, 1]`.
pub fn response_report(seq: &PhaseSequence, f: &TargetFunction, grid: usize) -> Result<ResponseReport> {
    let mut rows = Vec::new();
    for x in uniform(grid) {
        let target = seq.safety * crate::approx::eval_target(f, x)?;
        let response = qsp_response(seq, x);
        rows.push(ResponseRow {
            x,
            target,
            response,
            abs_error: (response - target).abs(),
        });
    }
    Ok(ResponseReport::from_rows(rows))
}

/// Same table with the fitted polynomial standing in for the phases.
pub fn fit_report(fit: &ChebyshevFit, grid: usize) -> Result<ResponseReport> {
    let mut rows = Vec::new();
    for x in uniform(grid) {
        let target = fit.safety * crate::approx::eval_target(&fit.target, x)?;
        let response = fit.eval(x);
        rows.push(ResponseRow {
            x,
            target,
            response,
            abs_error: (response - target).abs(),
        });
    }
    Ok(ResponseReport::from_rows(rows))
}
