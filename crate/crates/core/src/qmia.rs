//! Matrix-inverse baseline: one transformation branch realising a truncated
//! `1/x` on the block-encoded matrix.

use nalgebra::DVector;
use serde::Serialize;

use crate::approx::{chebyshev_fit_default, parity_degree, Parity, TargetFunction};
use crate::error::{QgfaError, Result};
use crate::fem::SpdSystem;
use crate::flow::relative_error;
use crate::qcirc::{block_encode, qet_apply, Mode, QgfaContext, QspProgram};
use crate::qsp::{find_phases_with, SolverOptions};

#[derive(Debug, Clone, Serialize)]
pub struct QmiaOutput {
    pub u_inv: Vec<f64>,
    pub success_probability: f64,
    pub be_calls: usize,
    pub degree: usize,
    pub mode: Mode,
}

impl QmiaOutput {
    pub fn u(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.u_inv)
    }
}

/// Inverse-target fit (and optionally phases) of the largest odd degree
/// not exceeding `max_degree`.
pub fn prepare_inverse(
    kappa: f64,
    epsilon_apx: f64,
    max_degree: usize,
    phases: Option<SolverOptions>,
) -> Result<QspProgram> {
    let degree = parity_degree(max_degree, Parity::Odd)
        .ok_or_else(|| QgfaError::param("inverse polynomial needs degree at least 1"))?;
    let fit = chebyshev_fit_default(&TargetFunction::Ginv { kappa, epsilon_apx }, degree)?;
    let phases = match phases {
        Some(opts) => Some(find_phases_with(&fit, opts)?),
        None => None,
    };
    Ok(QspProgram { fit, phases })
}

pub fn run_qmia(system: &SpdSystem, program: &QspProgram, mode: Mode) -> Result<QmiaOutput> {
    run_qmia_in(&QgfaContext::new(system)?, program, mode)
}

/// `u = P(K̃) f / ‖K‖` with the safety factor divided back out.
pub fn run_qmia_in(ctx: &QgfaContext, program: &QspProgram, mode: Mode) -> Result<QmiaOutput> {
    let fit = &program.fit;
    if !matches!(fit.target, TargetFunction::Ginv { .. }) {
        return Err(QgfaError::param(format!("inverse branch cannot realise {}", fit.target)));
    }
    let f = &ctx.normalized.load;
    if f.norm() == 0.0 {
        return Err(QgfaError::param("load vector vanishes"));
    }
    let (u, be_calls) = match mode {
        Mode::IdealPolynomial => (ctx.eig.apply_fn(f, |l| fit.eval_unscaled(l)), 0),
        Mode::Circuit => {
            let phases = program
                .phases
                .as_ref()
                .ok_or_else(|| QgfaError::param("circuit mode needs phases"))?;
            let be = block_encode(&ctx.normalized)?;
            let r = qet_apply(phases, &be, f)?;
            (r.output / fit.safety, r.be_calls)
        }
    };
    let success_probability = (u.norm() * fit.safety / f.norm()).powi(2);
    Ok(QmiaOutput {
        u_inv: u.iter().take(ctx.dim).copied().collect(),
        success_probability,
        be_calls,
        degree: fit.degree,
        mode,
    })
}

/// `‖u_inv - u*‖ / ‖u*‖`.
pub fn relative_error_inv(u_inv: &DVector<f64>, u_star: &DVector<f64>) -> Result<f64> {
    relative_error(u_inv, u_star)
}
