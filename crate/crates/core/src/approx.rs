//! Scalar targets for eigenvalue transformation and their bounded
//! Chebyshev interpolants.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QgfaError, Result};
use crate::softabs::SoftAbs;

/// Margin kept below 1 by every stored polynomial.
pub const SAFETY_MARGIN: f64 = 1e-4;

/// `(1 - e^{-y}) / y`, continuous through `y = 0`.
pub fn one_minus_exp_ratio(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 - y / 2.0 + y * y / 6.0 - y * y * y / 24.0
    } else {
        -(-y).exp_m1() / y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_degree(degree: usize) -> Parity {
        if degree.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn matches(self, degree: usize) -> bool {
        Parity::of_degree(degree) == self
    }
}

/// Largest degree `≤ max_degree` with the requested parity.
pub fn parity_degree(max_degree: usize, parity: Parity) -> Option<usize> {
    if parity.matches(max_degree) {
        Some(max_degree)
    } else {
        max_degree.checked_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TargetFunction {
    /// `e^{-s(x,ε) t}`
    G1 { t: f64, epsilon_smooth: f64 },
    /// `(1 - e^{-s t}) / (s t)`
    G2Tilde { t: f64, epsilon_smooth: f64 },
    /// `(1 - (1 - x²)^b) / x` with `b = κ² log10(κ/ϵ)`
    Ginv { kappa: f64, epsilon_apx: f64 },
    Constant { value: f64 },
}

impl TargetFunction {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TargetFunction::G1 { t, epsilon_smooth } | TargetFunction::G2Tilde { t, epsilon_smooth } => {
                t > 0.0 && t.is_finite() && epsilon_smooth > 0.0 && epsilon_smooth.is_finite()
            }
            TargetFunction::Ginv { kappa, epsilon_apx } => {
                kappa >= 1.0 && kappa.is_finite() && epsilon_apx > 0.0 && epsilon_apx < 1.0
            }
            TargetFunction::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(QgfaError::param(format!("invalid target parameters: {self}")))
        }
    }

    pub fn parity(&self) -> Parity {
        match self {
            TargetFunction::Ginv { .. } => Parity::Odd,
            _ => Parity::Even,
        }
    }

    /// Region where accuracy is required: `[1/κ, 1]` for the inverse,
    /// `[0, 1]` otherwise.
    pub fn accuracy_floor(&self) -> f64 {
        match *self {
            TargetFunction::Ginv { kappa, .. } => 1.0 / kappa,
            _ => 0.0,
        }
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        match *self {
            TargetFunction::G1 { t, epsilon_smooth } => {
                (-SoftAbs::new_unchecked(epsilon_smooth).value(x) * t).exp()
            }
            TargetFunction::G2Tilde { t, epsilon_smooth } => {
                one_minus_exp_ratio(SoftAbs::new_unchecked(epsilon_smooth).value(x) * t)
            }
            TargetFunction::Ginv { kappa, epsilon_apx } => {
                if x == 0.0 {
                    0.0
                } else {
                    let b = ginv_exponent(kappa, epsilon_apx);
                    -(b * (-x * x).ln_1p()).exp_m1() / x
                }
            }
            TargetFunction::Constant { value } => value,
        }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFunction::G1 { t, epsilon_smooth } => write!(f, "g1(t={t}, eps={epsilon_smooth})"),
            TargetFunction::G2Tilde { t, epsilon_smooth } => {
                write!(f, "g2tilde(t={t}, eps={epsilon_smooth})")
            }
            TargetFunction::Ginv { kappa, epsilon_apx } => write!(f, "ginv(kappa={kappa}, eps={epsilon_apx})"),
            TargetFunction::Constant { value } => write!(f, "constant({value})"),
        }
    }
}

pub fn eval_target(f: &TargetFunction, x: f64) -> Result<f64> {
    f.validate()?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(QgfaError::Domain(x));
    }
    Ok(f.eval_unchecked(x))
}

/// Exponent `b = κ² log10(κ/ϵ)` of the truncated inverse.
pub fn ginv_exponent(kappa: f64, epsilon_apx: f64) -> f64 {
    kappa * kappa * (kappa / epsilon_apx).log10()
}

/// Degree rule for the inverse polynomial.
pub fn qmia_degree(kappa: f64, epsilon_apx: f64) -> Result<usize> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(QgfaError::param(format!("kappa must be >= 1, got {kappa}")));
    }
    if !(epsilon_apx > 0.0 && epsilon_apx < 1.0) {
        return Err(QgfaError::param(format!("epsilon must lie in (0, 1), got {epsilon_apx}")));
    }
    let b = ginv_exponent(kappa, epsilon_apx);
    Ok((b * (4.0 * b / epsilon_apx).log10()).sqrt().ceil() as usize)
}

/// Bounded Chebyshev interpolant. `coefficients` already include `safety`;
/// entries of the wrong parity are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevFit {
    pub target: TargetFunction,
    pub degree: usize,
    pub parity: Parity,
    pub coefficients: Vec<f64>,
    pub safety: f64,
    /// Max deviation of the unscaled polynomial from the target.
    pub sup_error: f64,
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

impl ChebyshevFit {
    /// Stored (scaled) polynomial, parity exact.
    pub fn eval(&self, x: f64) -> f64 {
        let v = clenshaw(&self.coefficients, x.abs());
        if self.parity == Parity::Odd && x < 0.0 {
            -v
        } else {
            v
        }
    }

    /// Polynomial approximating the target itself.
    pub fn eval_unscaled(&self, x: f64) -> f64 {
        self.eval(x) / self.safety
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| QgfaError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QgfaError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// First-kind Chebyshev nodes `cos(π(k+½)/n)`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| (PI * (k as f64 + 0.5) / n as f64).cos()).collect()
}

/// Interpolation coefficients at `n` first-kind nodes.
fn interpolate(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    // cos(jπ(2k+1)/(2n)) indexed by j(2k+1) mod 4n.
    let table: Vec<f64> = (0..4 * n).map(|m| (PI * m as f64 / (2 * n) as f64).cos()).collect();
    let mut c: Vec<f64> = (0..n)
        .map(|j| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * table[(j * (2 * k + 1)) % (4 * n)])
                .sum();
            2.0 * s / n as f64
        })
        .collect();
    c[0] /= 2.0;
    c
}

/// `max |p|` over `[-1, 1]`: a uniform grid in `θ = arccos x` followed by
/// golden-section refinement of the largest local maxima.
fn polynomial_peak(fit: &ChebyshevFit) -> f64 {
    let m = 8 * fit.degree + 16;
    let theta = |i: usize| 0.5 * PI * i as f64 / m as f64;
    let vals: Vec<f64> = (0..=m).map(|i| fit.eval(theta(i).cos()).abs()).collect();
    let grid_max = vals.iter().copied().fold(0.0, f64::max);
    let mut peak = grid_max;
    for i in 0..=m {
        let left = if i == 0 { vals[1] } else { vals[i - 1] };
        let right = if i == m { vals[m - 1] } else { vals[i + 1] };
        if vals[i] < 0.95 * grid_max || vals[i] < left || vals[i] < right {
            continue;
        }
        let g = |t: f64| fit.eval(t.cos()).abs();
        let (mut a, mut b) = (theta(i.saturating_sub(1)), theta((i + 1).min(m)));
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
        let (mut gc, mut gd) = (g(c), g(d));
        for _ in 0..40 {
            if gc > gd {
                b = d;
                d = c;
                gd = gc;
                c = b - r * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + r * (b - a);
                gd = g(d);
            }
        }
        peak = peak.max(gc).max(gd);
    }
    peak
}

/// Interpolates `f` at `degree + 1` Chebyshev nodes, drops the wrong-parity
/// coefficients and rescales so that `|p| ≤ 1 - 1e-4`.
///
/// `grid_size` uniformly spaced points on `[0, 1]` measure `sup_error`.
pub fn chebyshev_fit(f: &TargetFunction, degree: usize, grid_size: usize) -> Result<ChebyshevFit> {
    f.validate()?;
    let parity = f.parity();
    if !parity.matches(degree) {
        return Err(QgfaError::param(format!(
            "degree {degree} does not match the {parity:?} parity of {f}"
        )));
    }
    let values: Vec<f64> = chebyshev_nodes(degree + 1)
        .into_iter()
        .map(|x| f.eval_unchecked(x))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(QgfaError::FitQuality {
            sup_error: f64::INFINITY,
        });
    }
    let mut coefficients = interpolate(&values);
    for (k, c) in coefficients.iter_mut().enumerate() {
        if !parity.matches(k) {
            *c = 0.0;
        }
    }
    let mut fit = ChebyshevFit {
        target: *f,
        degree,
        parity,
        coefficients,
        safety: 1.0,
        sup_error: 0.0,
    };

    let grid = grid_size.max(2);
    let floor = f.accuracy_floor();
    let mut sup_error: f64 = 0.0;
    for i in 0..grid {
        let x = i as f64 / (grid - 1) as f64;
        if x >= floor {
            sup_error = sup_error.max((fit.eval(x) - f.eval_unchecked(x)).abs());
        }
    }
    let peak = polynomial_peak(&fit);
    if !(sup_error.is_finite() && peak.is_finite()) {
        return Err(QgfaError::FitQuality { sup_error });
    }

    let safety = if peak > 0.0 {
        (1.0 - SAFETY_MARGIN) / peak
    } else {
        1.0
    }
    .min(1.0);
    fit.coefficients.iter_mut().for_each(|c| *c *= safety);
    fit.safety = safety;
    fit.sup_error = sup_error;
    Ok(fit)
}

/// Fit with the default validation grid of `10·degree` points.
pub fn chebyshev_fit_default(f: &TargetFunction, degree: usize) -> Result<ChebyshevFit> {
    chebyshev_fit(f, degree, (10 * degree).max(1000))
}
