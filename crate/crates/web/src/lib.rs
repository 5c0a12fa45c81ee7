//! Browser bindings: soft-abs smoothing, realised QSP responses and
//! gradient-flow convergence on the built-in FEM problems.

use wasm_bindgen::prelude::*;

use qgfa_core::approx::{chebyshev_fit_default, eval_target, parity_degree, Parity, TargetFunction};
use qgfa_core::fem::{make_cantilever_problem, make_tensile_problem, SpdSystem};
use qgfa_core::flow::{error_bound, relative_error, solve_direct, Flow};
use qgfa_core::qcirc::{prepare_programs, run_qgfa_in, Mode, QgfaContext};
use qgfa_core::qsp::{find_phases, qsp_response};
use qgfa_core::softabs::{smoothing_epsilon, SoftAbs};
use qgfa_core::{QgfaError, Result};

const MAX_DEMO_DEGREE: usize = 600;

fn js(e: QgfaError) -> JsError {
    JsError::new(&e.to_string())
}

fn problem(name: &str) -> Result<SpdSystem> {
    match name {
        "tensile" => Ok(make_tensile_problem()),
        "cantilever" => Ok(make_cantilever_problem()),
        other => Err(QgfaError::param(format!("unknown problem {other:?}"))),
    }
}

fn check_points(n: usize) -> Result<()> {
    if (2..=20_000).contains(&n) {
        Ok(())
    } else {
        Err(QgfaError::param(format!("point count {n} outside [2, 20000]")))
    }
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SmoothingCurve {
    epsilon_g1: f64,
    epsilon_g2: f64,
    epsilon: f64,
    x: Vec<f64>,
    abs: Vec<f64>,
    smooth: Vec<f64>,
}

#[wasm_bindgen]
impl SmoothingCurve {
    #[wasm_bindgen(getter)]
    pub fn epsilon_g1(&self) -> f64 {
        self.epsilon_g1
    }
    #[wasm_bindgen(getter)]
    pub fn epsilon_g2(&self) -> f64 {
        self.epsilon_g2
    }
    #[wasm_bindgen(getter)]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn abs(&self) -> Vec<f64> {
        self.abs.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn smooth(&self) -> Vec<f64> {
        self.smooth.clone()
    }
}

/// Smoothed `|x|` on `[-4/κ, 4/κ]` for the ε that meets `η` at `(κ, t)`.
pub fn smoothing_curve(kappa: f64, t: f64, eta: f64, n: usize) -> Result<SmoothingCurve> {
    check_points(n)?;
    let choice = smoothing_epsilon(kappa, t, eta)?;
    let sa = SoftAbs::new(choice.chosen)?;
    let half = 4.0 / kappa;
    let x: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    Ok(SmoothingCurve {
        epsilon_g1: choice.epsilon_g1,
        epsilon_g2: choice.epsilon_g2,
        epsilon: choice.chosen,
        abs: x.iter().map(|v| v.abs()).collect(),
        smooth: x.iter().map(|&v| sa.value(v)).collect(),
        x,
    })
}

#[wasm_bindgen(js_name = smoothingCurve)]
pub fn smoothing_curve_js(kappa: f64, t: f64, eta: f64, n: usize) -> std::result::Result<SmoothingCurve, JsError> {
    smoothing_curve(kappa, t, eta, n).map_err(js)
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct ResponseCurve {
    degree: usize,
    safety: f64,
    sup_error: f64,
    residual: f64,
    max_abs_error: f64,
    x: Vec<f64>,
    target: Vec<f64>,
    response: Vec<f64>,
}

#[wasm_bindgen]
impl ResponseCurve {
    #[wasm_bindgen(getter)]
    pub fn degree(&self) -> usize {
        self.degree
    }
    #[wasm_bindgen(getter)]
    pub fn safety(&self) -> f64 {
        self.safety
    }
    #[wasm_bindgen(getter)]
    pub fn sup_error(&self) -> f64 {
        self.sup_error
    }
    #[wasm_bindgen(getter)]
    pub fn residual(&self) -> f64 {
        self.residual
    }
    #[wasm_bindgen(getter)]
    pub fn max_abs_error(&self) -> f64 {
        self.max_abs_error
    }
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn target(&self) -> Vec<f64> {
        self.target.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn response(&self) -> Vec<f64> {
        self.response.clone()
    }
}

/// Fits `target` (`g1`, `g2tilde`, `ginv`), solves its phases and samples
/// the realised response on `[0, 1]`. The degree is rounded down to the
/// target's parity.
pub fn response_curve(target: &str, kappa: f64, t: f64, degree: usize, n: usize) -> Result<ResponseCurve> {
    check_points(n)?;
    if degree > MAX_DEMO_DEGREE {
        return Err(QgfaError::param(format!("degree capped at {MAX_DEMO_DEGREE} in the demo")));
    }
    let (f, parity) = match target {
        "g1" | "g2tilde" => {
            let eps = smoothing_epsilon(kappa, t, 1e-6)?.chosen;
            let f = if target == "g1" {
                TargetFunction::G1 { t, epsilon_smooth: eps }
            } else {
                TargetFunction::G2Tilde { t, epsilon_smooth: eps }
            };
            (f, Parity::Even)
        }
        "ginv" => (TargetFunction::Ginv { kappa, epsilon_apx: 1e-3 }, Parity::Odd),
        other => return Err(QgfaError::param(format!("unknown target {other:?}"))),
    };
    let degree = parity_degree(degree, parity).ok_or_else(|| QgfaError::param("degree too small"))?;
    let fit = chebyshev_fit_default(&f, degree)?;
    let seq = find_phases(&fit, 1e-10)?;
    let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let target = x.iter().map(|&v| eval_target(&f, v)).collect::<Result<Vec<_>>>()?;
    let response: Vec<f64> = x.iter().map(|&v| qsp_response(&seq, v) / fit.safety).collect();
    let floor = f.accuracy_floor();
    let max_abs_error = x
        .iter()
        .zip(target.iter().zip(&response))
        .filter(|(v, _)| **v >= floor)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ResponseCurve {
        degree,
        safety: fit.safety,
        sup_error: fit.sup_error,
        residual: seq.residual,
        max_abs_error,
        x,
        target,
        response,
    })
}

#[wasm_bindgen(js_name = responseCurve)]
pub fn response_curve_js(
    target: &str,
    kappa: f64,
    t: f64,
    degree: usize,
    n: usize,
) -> std::result::Result<ResponseCurve, JsError> {
    response_curve(target, kappa, t, degree, n).map_err(js)
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Convergence {
    kappa: f64,
    degree: usize,
    t: Vec<f64>,
    classical: Vec<f64>,
    qgfa: Vec<f64>,
    bound: Vec<f64>,
}

#[wasm_bindgen]
impl Convergence {
    #[wasm_bindgen(getter)]
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    #[wasm_bindgen(getter)]
    pub fn degree(&self) -> usize {
        self.degree
    }
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    /// Relative error of the exact flow.
    #[wasm_bindgen(getter)]
    pub fn classical(&self) -> Vec<f64> {
        self.classical.clone()
    }
    /// Relative error of the polynomial solver at the chosen degree.
    #[wasm_bindgen(getter)]
    pub fn qgfa(&self) -> Vec<f64> {
        self.qgfa.clone()
    }
    /// `e^{-t/κ}‖δ(0)‖/‖u*‖`.
    #[wasm_bindgen(getter)]
    pub fn bound(&self) -> Vec<f64> {
        self.bound.clone()
    }
}

/// Relative error against the direct solve along `steps` times in
/// `(0, t_max]`, for the exact flow and for the polynomial solver with
/// `degree` per branch.
pub fn flow_convergence(name: &str, degree: usize, t_max: f64, steps: usize) -> Result<Convergence> {
    check_points(steps + 1)?;
    if degree > 4 * MAX_DEMO_DEGREE {
        return Err(QgfaError::param(format!("degree capped at {} in the demo", 4 * MAX_DEMO_DEGREE)));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(QgfaError::param("t_max must be positive"));
    }
    let degree = parity_degree(degree, Parity::Even).unwrap_or(0);
    let system = problem(name)?;
    let flow = Flow::new(&system)?;
    let ctx = QgfaContext::new(&system)?;
    let u_star = solve_direct(&system)?;
    let delta0 = (&system.hot_start - &u_star).norm();
    let mut out = Convergence {
        kappa: system.kappa,
        degree,
        t: Vec::with_capacity(steps),
        classical: Vec::with_capacity(steps),
        qgfa: Vec::with_capacity(steps),
        bound: Vec::with_capacity(steps),
    };
    for i in 1..=steps {
        let t = t_max * i as f64 / steps as f64;
        let (p1, p2) = prepare_programs(system.kappa, t, degree, 1e-6, None)?;
        let q = run_qgfa_in(&ctx, &p1, &p2, t, Mode::IdealPolynomial)?;
        out.t.push(t);
        out.classical.push(flow.at(t)?.delta_norm / u_star.norm());
        out.qgfa.push(relative_error(&q.u(), &u_star)?);
        out.bound.push(error_bound(delta0, system.kappa, t) / u_star.norm());
    }
    Ok(out)
}

#[wasm_bindgen(js_name = flowConvergence)]
pub fn flow_convergence_js(
    problem: &str,
    degree: usize,
    t_max: f64,
    steps: usize,
) -> std::result::Result<Convergence, JsError> {
    flow_convergence(problem, degree, t_max, steps).map_err(js)
}
