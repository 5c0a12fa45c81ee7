//! Statevector simulation of the two-branch eigenvalue-transformation
//! circuit.
//!
//! Qubits are little-endian in the order QSP ancilla (bit 0), block-encoding
//! ancillas, system register, LCU ancilla (top bit). The block encoding is the
//! Hermitian dilation `[[K̃, S], [S, -K̃]]` with `S = √(I - K̃²)`, indexed
//! ancilla-major.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx::{chebyshev_fit_default, ChebyshevFit, TargetFunction};
use crate::error::{QgfaError, Result};
use crate::fem::{pad_to_power_of_two, SpdSystem};
use crate::flow::EigenSystem;
use crate::qsp::{find_phases_with, PhaseSequence, SolverOptions};
use crate::softabs::smoothing_epsilon;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitLayout {
    pub n_sys: usize,
    pub m_be: usize,
}

impl CircuitLayout {
    pub fn new(n_sys: usize, m_be: usize) -> Self {
        Self { n_sys, m_be }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_sys + self.m_be + 2
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn sys_dim(&self) -> usize {
        1 << self.n_sys
    }

    pub const QSP: usize = 0;

    pub fn be_mask(&self) -> usize {
        ((1 << self.m_be) - 1) << 1
    }

    pub fn sys_shift(&self) -> usize {
        1 + self.m_be
    }

    pub fn lcu(&self) -> usize {
        1 + self.m_be + self.n_sys
    }

    fn index(&self, qsp: usize, be: usize, sys: usize, lcu: usize) -> usize {
        qsp | (be << 1) | (sys << self.sys_shift()) | (lcu << self.lcu())
    }
}

/// Unitary whose top-left block is `K / normalization`.
#[derive(Debug, Clone)]
pub struct BlockEncoding {
    /// Ancilla-major: row `a·dim + i` is ancilla `a`, system row `i`.
    pub unitary: DMatrix<f64>,
    pub normalization: f64,
    pub m_be: usize,
}

impl BlockEncoding {
    pub fn sys_dim(&self) -> usize {
        self.unitary.nrows() >> self.m_be
    }

    pub fn top_left(&self) -> DMatrix<f64> {
        let n = self.sys_dim();
        self.unitary.view((0, 0), (n, n)).into_owned()
    }
}

fn log2_exact(n: usize) -> Result<usize> {
    if n.is_power_of_two() {
        Ok(n.trailing_zeros() as usize)
    } else {
        Err(QgfaError::param(format!("dimension {n} is not a power of two")))
    }
}

pub fn block_encode(system: &SpdSystem) -> Result<BlockEncoding> {
    let n = system.dim();
    log2_exact(n)?;
    let norm = system.spectral_norm;
    let kt = &system.matrix / norm;
    let eig = EigenSystem::new(&kt);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if top > 1.0 + 1e-12 {
        return Err(QgfaError::BlockEncoding(format!(
            "normalised matrix has eigenvalue {top}"
        )));
    }
    let s = eig.matrix_fn(|l| (1.0 - l * l).max(0.0).sqrt());
    let mut u = DMatrix::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&kt);
    u.view_mut((0, n), (n, n)).copy_from(&s);
    u.view_mut((n, 0), (n, n)).copy_from(&s);
    u.view_mut((n, n), (n, n)).copy_from(&(-&kt));
    let dev = (u.transpose() * &u - DMatrix::identity(2 * n, 2 * n)).amax();
    if dev > 1e-10 {
        return Err(QgfaError::BlockEncoding(format!("unitarity deviation {dev:e}")));
    }
    Ok(BlockEncoding {
        unitary: u,
        normalization: norm,
        m_be: 1,
    })
}

/// Orthogonal matrix whose first column is `v / ‖v‖`.
pub fn state_prep(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(QgfaError::param("cannot prepare the zero vector"));
    }
    let n = v.len();
    let vh = v / norm;
    let sign = if vh[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = -&vh * sign;
    w[0] += 1.0;
    let ww = w.norm_squared();
    let mut h = DMatrix::identity(n, n);
    if ww > 1e-30 {
        h -= &w * w.transpose() * (2.0 / ww);
    }
    Ok(h * sign)
}

/// Amplitudes over the full register with a block-encoding call counter.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub layout: CircuitLayout,
    pub amps: Vec<C>,
    pub be_calls: usize,
}

impl StateVector {
    pub fn zero(layout: CircuitLayout) -> Self {
        let mut amps = vec![C::new(0.0, 0.0); layout.dim()];
        amps[0] = C::new(1.0, 0.0);
        Self {
            layout,
            amps,
            be_calls: 0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_1q(&mut self, qubit: usize, g: [[C; 2]; 2]) {
        let bit = 1 << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = g[0][0] * a + g[0][1] * b;
                self.amps[i | bit] = g[1][0] * a + g[1][1] * b;
            }
        }
    }

    pub fn apply_hadamard(&mut self, qubit: usize) {
        let h = C::new(FRAC_1_SQRT_2, 0.0);
        self.apply_1q(qubit, [[h, h], [h, -h]]);
    }

    /// `X` on `target` when every block-encoding ancilla is `|0⟩`.
    pub fn apply_cx_on_be_zero(&mut self, target: usize) {
        let bit = 1 << target;
        let mask = self.layout.be_mask();
        for i in 0..self.amps.len() {
            if i & bit == 0 && i & mask == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    /// `e^{-iφZ}` on `target`, with `φ` selected by the LCU qubit.
    pub fn apply_rz_by_lcu(&mut self, target: usize, phi: [f64; 2]) {
        let lcu = self.layout.lcu();
        for (i, a) in self.amps.iter_mut().enumerate() {
            let p = phi[(i >> lcu) & 1];
            let z = if (i >> target) & 1 == 0 { -p } else { p };
            *a *= C::from_polar(1.0, z);
        }
    }

    /// Block-encoding unitary on (BE, system).
    pub fn apply_block_encoding(&mut self, be: &BlockEncoding) {
        let lay = self.layout;
        let n = lay.sys_dim();
        let na = 1 << lay.m_be;
        let mut buf = vec![C::new(0.0, 0.0); na * n];
        for lcu in 0..2 {
            for qsp in 0..2 {
                for a in 0..na {
                    for s in 0..n {
                        buf[a * n + s] = self.amps[lay.index(qsp, a, s, lcu)];
                    }
                }
                for a in 0..na {
                    for s in 0..n {
                        let row = a * n + s;
                        let mut acc = C::new(0.0, 0.0);
                        for (col, b) in buf.iter().enumerate() {
                            acc += *b * be.unitary[(row, col)];
                        }
                        self.amps[lay.index(qsp, a, s, lcu)] = acc;
                    }
                }
            }
        }
        self.be_calls += 1;
    }

    /// System-register unitary applied when the LCU qubit equals `lcu`.
    pub fn apply_sys_controlled(&mut self, lcu: usize, w: &DMatrix<f64>) {
        let lay = self.layout;
        let n = lay.sys_dim();
        let na = 1 << lay.m_be;
        let mut buf = vec![C::new(0.0, 0.0); n];
        for qsp in 0..2 {
            for a in 0..na {
                for (s, b) in buf.iter_mut().enumerate() {
                    *b = self.amps[lay.index(qsp, a, s, lcu)];
                }
                for r in 0..n {
                    let mut acc = C::new(0.0, 0.0);
                    for (c, b) in buf.iter().enumerate() {
                        acc += *b * w[(r, c)];
                    }
                    self.amps[lay.index(qsp, a, r, lcu)] = acc;
                }
            }
        }
    }

    /// System amplitudes with QSP, BE and LCU all `|0⟩`.
    pub fn project_all_zero(&self) -> DVector<C> {
        let lay = self.layout;
        DVector::from_fn(lay.sys_dim(), |s, _| self.amps[lay.index(0, 0, s, 0)])
    }

    /// `[[re, im], …]` for debugging dumps.
    pub fn to_json(&self) -> serde_json::Value {
        let amps: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        serde_json::json!({
            "n_qubits": self.layout.n_qubits(),
            "ordering": "little-endian: qsp, be, system, lcu",
            "amplitudes": amps,
            "be_calls": self.be_calls,
        })
    }
}

fn real_rotation(c: f64, s: f64) -> [[C; 2]; 2] {
    [
        [C::new(c, 0.0), C::new(-s, 0.0)],
        [C::new(s, 0.0), C::new(c, 0.0)],
    ]
}

/// Phase gates and block-encoding calls of both branches, sharing every
/// block-encoding application; QSP ancilla prepared and read in `|+⟩`.
fn run_sequence(state: &mut StateVector, be: &BlockEncoding, phases: [&[f64]; 2]) {
    let n = phases[0].len() - 1;
    let q = CircuitLayout::QSP;
    state.apply_hadamard(q);
    for j in (0..=n).rev() {
        state.apply_cx_on_be_zero(q);
        state.apply_rz_by_lcu(q, [phases[0][j], phases[1][j]]);
        state.apply_cx_on_be_zero(q);
        if j > 0 {
            state.apply_block_encoding(be);
        }
    }
    state.apply_hadamard(q);
}

#[derive(Debug, Clone)]
pub struct QetResult {
    pub output: DVector<f64>,
    pub max_imag: f64,
    pub success_probability: f64,
    pub be_calls: usize,
}

/// Single-branch transformation `Re P(K̃) ψ` read from the post-selected
/// amplitudes.
pub fn qet_apply(phases: &PhaseSequence, be: &BlockEncoding, psi: &DVector<f64>) -> Result<QetResult> {
    let n = be.sys_dim();
    if psi.len() != n {
        return Err(QgfaError::Dimension {
            expected: n,
            got: psi.len(),
        });
    }
    let layout = CircuitLayout::new(log2_exact(n)?, be.m_be);
    let mut state = StateVector::zero(layout);
    let scale = psi.norm();
    if scale > 0.0 {
        state.apply_sys_controlled(0, &state_prep(psi)?);
    }
    run_sequence(&mut state, be, [&phases.phases, &phases.phases]);
    let a = state.project_all_zero();
    Ok(QetResult {
        output: a.map(|c| c.re * scale),
        max_imag: a.iter().fold(0.0f64, |m, c| m.max(c.im.abs())),
        success_probability: a.norm_squared(),
        be_calls: state.be_calls,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Circuit,
    IdealPolynomial,
}

impl std::str::FromStr for Mode {
    type Err = QgfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circuit" => Ok(Mode::Circuit),
            "ideal" | "ideal_polynomial" => Ok(Mode::IdealPolynomial),
            other => Err(QgfaError::param(format!("unknown mode {other:?}"))),
        }
    }
}

/// A fitted polynomial and, for circuit runs, its phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QspProgram {
    pub fit: ChebyshevFit,
    pub phases: Option<PhaseSequence>,
}

impl QspProgram {
    pub fn residual(&self) -> f64 {
        self.phases.as_ref().map_or(0.0, |p| p.residual)
    }
}

/// Fits (and optionally phases) for both branches at `(t, degree)`.
///
/// `t = 0` yields the constant 1 on both branches.
pub fn prepare_programs(
    kappa: f64,
    t: f64,
    degree: usize,
    eta: f64,
    phases: Option<SolverOptions>,
) -> Result<(QspProgram, QspProgram)> {
    let (f1, f2, degree) = if t == 0.0 {
        let one = TargetFunction::Constant { value: 1.0 };
        (one, one, 0)
    } else {
        let eps = smoothing_epsilon(kappa, t, eta)?.chosen;
        (
            TargetFunction::G1 { t, epsilon_smooth: eps },
            TargetFunction::G2Tilde { t, epsilon_smooth: eps },
            degree,
        )
    };
    let build = |f: TargetFunction| -> Result<QspProgram> {
        let fit = chebyshev_fit_default(&f, degree)?;
        let phases = match phases {
            Some(opts) => Some(find_phases_with(&fit, opts)?),
            None => None,
        };
        Ok(QspProgram { fit, phases })
    };
    Ok((build(f1)?, build(f2)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct QgfaOutput {
    /// Reconstructed `u(t)`, same slot order as the input system.
    pub u_qc: Vec<f64>,
    pub success_probability: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Block-encoding applications; shared by both branches.
    pub be_calls: usize,
    pub mode: Mode,
    pub degree: usize,
    /// Largest imaginary part left in the projected amplitudes.
    pub max_imag: f64,
}

impl QgfaOutput {
    pub fn u(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.u_qc)
    }
}

pub fn success_probability(output: &QgfaOutput) -> f64 {
    output.success_probability
}

fn target_time(f: &TargetFunction) -> Option<f64> {
    match *f {
        TargetFunction::G1 { t, .. } | TargetFunction::G2Tilde { t, .. } => Some(t),
        _ => None,
    }
}

fn check_programs(p1: &QspProgram, p2: &QspProgram, t: f64) -> Result<()> {
    match p1.fit.target {
        TargetFunction::G1 { .. } | TargetFunction::Constant { .. } => {}
        other => return Err(QgfaError::param(format!("first branch cannot realise {other}"))),
    }
    match p2.fit.target {
        TargetFunction::G2Tilde { .. } | TargetFunction::Constant { .. } => {}
        other => return Err(QgfaError::param(format!("second branch cannot realise {other}"))),
    }
    for f in [&p1.fit.target, &p2.fit.target] {
        if let Some(tf) = target_time(f) {
            if (tf - t).abs() > 1e-12 * t.abs().max(1.0) {
                return Err(QgfaError::param(format!("branch time {tf} differs from t = {t}")));
            }
        }
    }
    Ok(())
}

/// Everything `run_qgfa` needs from the system, computed once.
#[derive(Debug, Clone)]
pub struct QgfaContext {
    /// `K̃ = K/‖K‖` padded to a power of two with an identity block.
    pub normalized: SpdSystem,
    pub eig: EigenSystem,
    pub spectral_norm: f64,
    pub dim: usize,
}

impl QgfaContext {
    pub fn new(system: &SpdSystem) -> Result<Self> {
        let normalized = pad_to_power_of_two(&system.normalized());
        let eig = EigenSystem::new_spd(&normalized.matrix)?;
        Ok(Self {
            normalized,
            eig,
            spectral_norm: system.spectral_norm,
            dim: system.dim(),
        })
    }

    /// `(‖u(0)‖, t‖f‖/‖K‖)`.
    pub fn weights(&self, t: f64) -> (f64, f64) {
        let alpha = self.normalized.hot_start.norm();
        let beta = t * self.normalized.load.norm();
        (alpha, beta)
    }
}

pub fn run_qgfa(system: &SpdSystem, p1: &QspProgram, p2: &QspProgram, t: f64, mode: Mode) -> Result<QgfaOutput> {
    run_qgfa_in(&QgfaContext::new(system)?, p1, p2, t, mode)
}

pub fn run_qgfa_in(ctx: &QgfaContext, p1: &QspProgram, p2: &QspProgram, t: f64, mode: Mode) -> Result<QgfaOutput> {
    Ok(run_qgfa_state(ctx, p1, p2, t, mode)?.0)
}

/// As [`run_qgfa_in`], also returning the final statevector in circuit mode.
pub fn run_qgfa_state(
    ctx: &QgfaContext,
    p1: &QspProgram,
    p2: &QspProgram,
    t: f64,
    mode: Mode,
) -> Result<(QgfaOutput, Option<StateVector>)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(QgfaError::param(format!("time must be nonnegative, got {t}")));
    }
    check_programs(p1, p2, t)?;
    let (alpha, beta) = ctx.weights(t);
    if alpha == 0.0 && beta == 0.0 {
        return Err(QgfaError::param("both the hot start and the load vanish"));
    }
    let sys = &ctx.normalized;
    let a1 = alpha / p1.fit.safety;
    let b2 = beta / p2.fit.safety;
    let total = a1 + b2;
    let unit = |v: &DVector<f64>| -> DVector<f64> {
        let n = v.norm();
        if n > 0.0 {
            v / n
        } else {
            v.clone()
        }
    };
    let (u0h, fh) = (unit(&sys.hot_start), unit(&sys.load));

    let (u, max_imag, be_calls, degree, state) = match mode {
        Mode::IdealPolynomial => {
            let mut u = ctx.eig.apply_fn(&u0h, |l| p1.fit.eval_unscaled(l)) * alpha;
            if beta > 0.0 {
                u += ctx.eig.apply_fn(&fh, |l| p2.fit.eval_unscaled(l)) * beta;
            }
            (u, 0.0, 0, p1.fit.degree.max(p2.fit.degree), None)
        }
        Mode::Circuit => {
            let (Some(ph1), Some(ph2)) = (&p1.phases, &p2.phases) else {
                return Err(QgfaError::param("circuit mode needs phases for both branches"));
            };
            if ph1.phases.len() != ph2.phases.len() {
                return Err(QgfaError::param(format!(
                    "branch degrees differ ({} vs {})",
                    ph1.degree(),
                    ph2.degree()
                )));
            }
            let be = block_encode(sys)?;
            let layout = CircuitLayout::new(log2_exact(sys.dim())?, be.m_be);
            let mut state = StateVector::zero(layout);
            let (c, s) = ((a1 / total).sqrt(), (b2 / total).sqrt());
            state.apply_1q(layout.lcu(), real_rotation(c, s));
            if alpha > 0.0 {
                state.apply_sys_controlled(0, &state_prep(&u0h)?);
            }
            if beta > 0.0 {
                state.apply_sys_controlled(1, &state_prep(&fh)?);
            }
            run_sequence(&mut state, &be, [&ph1.phases, &ph2.phases]);
            state.apply_1q(layout.lcu(), real_rotation(c, -s));
            let a = state.project_all_zero();
            let u = a.map(|z| z.re) * total;
            let max_imag = a.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
            let calls = state.be_calls;
            (u, max_imag, calls, ph1.degree(), Some(state))
        }
    };
    let success_probability = (u.norm() / total).powi(2);
    Ok((
        QgfaOutput {
            u_qc: u.iter().take(ctx.dim).copied().collect(),
            success_probability,
            alpha,
            beta,
            be_calls,
            mode,
            degree,
            max_imag,
        },
        state,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::chebyshev_fit;
    use crate::fem::make_cantilever_problem;
    use crate::qsp::find_phases;

    fn small_system() -> SpdSystem {
        let k = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.1, 0.0, 0.05, //
            0.1, 0.6, 0.1, 0.0, //
            0.0, 0.1, 0.4, 0.1, //
            0.05, 0.0, 0.1, 0.3,
        ]);
        SpdSystem::new(
            k,
            DVector::from_vec(vec![0.2, -0.1, 0.4, 0.3]),
            DVector::from_vec(vec![0.1, 0.0, -0.2, 0.05]),
        )
        .unwrap()
    }

    #[test]
    fn scalar_dilation() {
        let s = SpdSystem::new(DMatrix::identity(2, 2) * 0.5, DVector::zeros(2), DVector::zeros(2)).unwrap();
        let s = SpdSystem {
            spectral_norm: 1.0,
            ..s
        };
        let be = block_encode(&s).unwrap();
        assert!((be.unitary[(0, 2)] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((be.unitary[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn block_encoding_contains_matrix() {
        let s = small_system();
        let be = block_encode(&s).unwrap();
        let u = &be.unitary;
        assert!((u.transpose() * u - DMatrix::identity(8, 8)).amax() < 1e-12);
        assert!((be.top_left() - &s.matrix / s.spectral_norm).amax() < 1e-12);
        let bad = SpdSystem {
            spectral_norm: 0.5,
            ..s
        };
        assert!(matches!(block_encode(&bad), Err(QgfaError::BlockEncoding(_))));
        assert!(block_encode(&make_cantilever_problem()).is_ok());
    }

    #[test]
    fn state_prep_first_column() {
        for v in [
            DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.3, -1.2, 0.4, 2.0]),
            DVector::from_vec(vec![-0.3, 1.2, 0.0, 0.1]),
        ] {
            let w = state_prep(&v).unwrap();
            let vh = &v / v.norm();
            assert!((w.column(0) - &vh).amax() < 1e-14);
            assert!((w.transpose() * &w - DMatrix::identity(4, 4)).amax() < 1e-14);
        }
        assert_eq!(state_prep(&DVector::from_vec(vec![2.0, 0.0])).unwrap(), DMatrix::identity(2, 2));
        assert!(state_prep(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn qet_constant_scales_state() {
        let s = small_system();
        let be = block_encode(&s).unwrap();
        let fit = chebyshev_fit(&TargetFunction::Constant { value: 0.6 }, 0, 10).unwrap();
        let seq = find_phases(&fit, 1e-12).unwrap();
        let psi = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
        let r = qet_apply(&seq, &be, &psi).unwrap();
        assert!((r.output - &psi * 0.6).amax() < 1e-14);
        assert!((r.success_probability - 0.36).abs() < 1e-14);
        assert_eq!(r.be_calls, 0);
    }

    #[test]
    fn qet_matches_eigen_oracle() {
        let s = small_system();
        let be = block_encode(&s).unwrap();
        let f = TargetFunction::G2Tilde { t: 8.0, epsilon_smooth: 0.05 };
        let fit = chebyshev_fit(&f, 30, 300).unwrap();
        let seq = find_phases(&fit, 1e-12).unwrap();
        let eig = EigenSystem::new(&(&s.matrix / s.spectral_norm));
        let psi = DVector::from_vec(vec![0.3, -0.7, 0.2, 0.4]);
        let r = qet_apply(&seq, &be, &psi).unwrap();
        let oracle = eig.apply_fn(&psi, |l| fit.eval(l));
        assert!((&r.output - oracle).amax() < 1e-8);
        assert!(r.max_imag < 1e-10);
        assert_eq!(r.be_calls, 30);

        let v = eig.eigenvectors.column(1).into_owned();
        let rv = qet_apply(&seq, &be, &v).unwrap();
        assert!((rv.output - &v * fit.eval(eig.eigenvalues[1])).amax() < 1e-8);
    }

    #[test]
    fn circuit_matches_ideal_on_small_system() {
        let s = small_system();
        let t = 6.0;
        let (p1, p2) = prepare_programs(s.kappa, t, 24, 1e-6, Some(SolverOptions::default())).unwrap();
        let ctx = QgfaContext::new(&s).unwrap();
        let (c, state) = run_qgfa_state(&ctx, &p1, &p2, t, Mode::Circuit).unwrap();
        let i = run_qgfa_in(&ctx, &p1, &p2, t, Mode::IdealPolynomial).unwrap();
        assert!((c.u() - i.u()).amax() < 1e-9);
        assert!((c.success_probability - i.success_probability).abs() < 1e-9);
        assert_eq!(c.be_calls, 24);
        assert!((state.unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_time_returns_hot_start() {
        let s = small_system();
        let (p1, p2) = prepare_programs(s.kappa, 0.0, 10, 1e-6, Some(SolverOptions::default())).unwrap();
        for mode in [Mode::Circuit, Mode::IdealPolynomial] {
            let out = run_qgfa(&s, &p1, &p2, 0.0, mode).unwrap();
            assert_eq!(out.beta, 0.0);
            assert!((out.u() - &s.hot_start).amax() < 1e-12);
        }
    }

    #[test]
    fn mismatched_programs_rejected() {
        let s = small_system();
        let (p1, p2) = prepare_programs(s.kappa, 5.0, 10, 1e-6, None).unwrap();
        assert!(run_qgfa(&s, &p1, &p2, 6.0, Mode::IdealPolynomial).is_err());
        assert!(run_qgfa(&s, &p2, &p1, 5.0, Mode::IdealPolynomial).is_err());
        assert!(run_qgfa(&s, &p1, &p2, 5.0, Mode::Circuit).is_err());
        assert!("ideal".parse::<Mode>().is_ok() && "bogus".parse::<Mode>().is_err());
    }
}
