//! Soft absolute value `s(x, ε) = ε ln(2 cosh(x/ε))` and the smoothing
//! parameter solver.
//!
//! Everything is evaluated in the factored form `|x| + ε ln(1 + e^{-2|x|/ε})`,
//! which never forms `e^{x/ε}` and therefore cannot overflow for small `ε`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::approx::one_minus_exp_ratio;
use crate::error::{QgfaError, Result};

/// Which gradient-flow target a relative-error budget refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `e^{-xt}`, acting on the initial vector.
    G1,
    /// `(1 - e^{-xt}) / (xt)`, acting on the load.
    G2,
}

impl FromStr for Branch {
    type Err = QgfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g1" => Ok(Branch::G1),
            "g2" | "g2tilde" => Ok(Branch::G2),
            other => Err(QgfaError::param(format!("unknown branch `{other}`"))),
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::G1 => f.write_str("g1"),
            Branch::G2 => f.write_str("g2"),
        }
    }
}

/// Smoothing parameter together with the budget and spectrum it was chosen for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub epsilon_smooth: f64,
    pub eta: f64,
    pub kappa: f64,
}

impl SmoothingParams {
    pub fn new(epsilon_smooth: f64, eta: f64, kappa: f64) -> Result<Self> {
        check_epsilon(epsilon_smooth)?;
        check_eta(eta)?;
        check_kappa(kappa)?;
        Ok(Self {
            epsilon_smooth,
            eta,
            kappa,
        })
    }
}

/// Validated smoothing parameter. The methods are the unchecked kernels
/// behind the free functions of this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftAbs {
    epsilon: f64,
}

impl SoftAbs {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon })
    }

    pub(crate) fn new_unchecked(epsilon: f64) -> Self {
        Self { epsilon }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        x.abs() + self.error(x)
    }

    /// `Δ(x, ε) = s(x, ε) - |x|`.
    #[inline]
    pub fn error(&self, x: f64) -> f64 {
        self.epsilon * (-2.0 * x.abs() / self.epsilon).exp().ln_1p()
    }

    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        (x / self.epsilon).tanh()
    }
}

pub fn soft_abs(x: f64, epsilon_smooth: f64) -> Result<f64> {
    Ok(SoftAbs::new(epsilon_smooth)?.value(x))
}

pub fn soft_abs_error(x: f64, epsilon_smooth: f64) -> Result<f64> {
    Ok(SoftAbs::new(epsilon_smooth)?.error(x))
}

pub fn soft_abs_grad(x: f64, epsilon_smooth: f64) -> Result<f64> {
    Ok(SoftAbs::new(epsilon_smooth)?.grad(x))
}

/// Relative error that smoothing `|x|` introduces into the chosen target
/// at time `t`.
///
/// `r1 = 1 - e^{-Δ t}` and `r2 = 1 - g̃2(s)/g̃2(|x|)`, with `g̃2(y) = (1 - e^{-yt})/(yt)`.
pub fn relative_target_error(x: f64, epsilon_smooth: f64, t: f64, which: Branch) -> Result<f64> {
    if !(x > 0.0) {
        return Err(QgfaError::param(format!("x must be positive, got {x}")));
    }
    check_time(t)?;
    let sa = SoftAbs::new(epsilon_smooth)?;
    Ok(relative_error_unchecked(&sa, x, t, which))
}

fn relative_error_unchecked(sa: &SoftAbs, x: f64, t: f64, which: Branch) -> f64 {
    match which {
        Branch::G1 => -(-sa.error(x) * t).exp_m1(),
        Branch::G2 => {
            let exact = one_minus_exp_ratio(x.abs() * t);
            let smoothed = one_minus_exp_ratio(sa.value(x) * t);
            (exact - smoothed) / exact
        }
    }
}

/// Solves `r_which(1/κ, ε) = η` for `ε` by bisection.
///
/// Both relative errors increase monotonically with `ε`, so the root is
/// bracketed by `[1e-12, 1/κ]`; the upper end is doubled until the sign
/// changes.
pub fn solve_epsilon(kappa: f64, t: f64, eta: f64, which: Branch) -> Result<f64> {
    check_kappa(kappa)?;
    check_time(t)?;
    check_eta(eta)?;
    let x = 1.0 / kappa;
    let residual = |eps: f64| relative_error_unchecked(&SoftAbs { epsilon: eps }, x, t, which) - eta;

    let mut lo = 1e-12;
    let mut hi = 1.0 / kappa;
    let r_lo = residual(lo);
    let mut r_hi = residual(hi);
    let mut widenings = 0;
    while r_hi < 0.0 && widenings < 64 {
        hi *= 2.0;
        r_hi = residual(hi);
        widenings += 1;
    }
    if !(r_lo <= 0.0 && r_hi >= 0.0) {
        return Err(QgfaError::Bracket {
            lo,
            hi,
            residual_lo: r_lo,
            residual_hi: r_hi,
        });
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Roots of both budgets and the one the solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonChoice {
    pub epsilon_g1: f64,
    pub epsilon_g2: f64,
    pub chosen: f64,
}

/// Smoothing parameter shared by both branches: the larger of the two roots.
pub fn smoothing_epsilon(kappa: f64, t: f64, eta: f64) -> Result<EpsilonChoice> {
    let epsilon_g1 = solve_epsilon(kappa, t, eta, Branch::G1)?;
    let epsilon_g2 = solve_epsilon(kappa, t, eta, Branch::G2)?;
    Ok(EpsilonChoice {
        epsilon_g1,
        epsilon_g2,
        chosen: epsilon_g1.max(epsilon_g2),
    })
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(QgfaError::param(format!(
            "smoothing parameter must be positive, got {eps}"
        )))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(QgfaError::param(format!("eta must lie in (0, 1), got {eta}")))
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa >= 1.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(QgfaError::param(format!("kappa must be >= 1, got {kappa}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(QgfaError::param(format!("t must be positive, got {t}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn value_at_origin_is_eps_ln2() {
        for eps in [1e-6, 0.05, 0.3, 2.0] {
            assert!((soft_abs(0.0, eps).unwrap() - eps * LN_2).abs() < 1e-15 * eps.max(1.0));
            assert!((soft_abs_error(0.0, eps).unwrap() - eps * LN_2).abs() < 1e-16);
        }
    }

    #[test]
    fn tiny_epsilon_does_not_overflow() {
        assert_eq!(soft_abs(1.0, 0.05).unwrap(), 1.0);
        let v = soft_abs(0.7, 1e-300).unwrap();
        assert_eq!(v, 0.7);
    }

    #[test]
    fn error_at_half_matches_direct_formula() {
        // 0.01 * ln(1 + e^{-100}) ≈ 0.01 * e^{-100}
        let expected = 0.01 * (-100f64).exp();
        let got = soft_abs_error(0.5, 0.01).unwrap();
        assert!((got - expected).abs() <= 1e-15 * expected);
    }

    #[test]
    fn error_decays_like_leading_exponential() {
        let eps = 0.02;
        for x in [0.2, 0.3, 0.5] {
            let d = soft_abs_error(x, eps).unwrap();
            let lead = eps * (-2.0 * x / eps).exp();
            assert!(((d - lead) / lead).abs() < 1e-8);
        }
    }

    #[test]
    fn grad_values() {
        assert_eq!(soft_abs_grad(0.0, 0.1).unwrap(), 0.0);
        assert!((soft_abs_grad(1.0, 0.1).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(soft_abs(0.1, 0.0).is_err());
        assert!(soft_abs(0.1, -1.0).is_err());
        assert!(soft_abs_grad(0.1, f64::NAN).is_err());
        assert!(relative_target_error(-0.1, 0.01, 1.0, Branch::G1).is_err());
        assert!(solve_epsilon(0.5, 1.0, 1e-6, Branch::G1).is_err());
        assert!(solve_epsilon(10.0, 1.0, 1.5, Branch::G1).is_err());
        assert!("g3".parse::<Branch>().is_err());
        assert_eq!("G2tilde".parse::<Branch>().unwrap(), Branch::G2);
    }

    #[test]
    fn relative_error_vanishes_without_smoothing_error() {
        // Far from the origin Δ underflows to zero.
        let r = relative_target_error(0.9, 1e-3, 10.0, Branch::G1).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn r1_identity_with_soft_abs_error() {
        for &(x, eps, t) in &[(0.03, 0.004, 370.0), (0.1, 0.05, 12.0), (0.5, 0.2, 3.0)] {
            let r1 = relative_target_error(x, eps, t, Branch::G1).unwrap();
            let d = soft_abs_error(x, eps).unwrap();
            assert!((r1 - (1.0 - (-d * t).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn solved_epsilon_hits_budget() {
        let (kappa, t, eta) = (37.018, 370.18, 1e-6);
        for which in [Branch::G1, Branch::G2] {
            let eps = solve_epsilon(kappa, t, eta, which).unwrap();
            let r = relative_target_error(1.0 / kappa, eps, t, which).unwrap();
            assert!((r - eta).abs() <= 1e-10, "{which}: {r}");
        }
    }

    #[test]
    fn g1_root_inverts_closed_form() {
        let (kappa, t, eta) = (32.136, 500.0, 1e-6);
        let eps = solve_epsilon(kappa, t, eta, Branch::G1).unwrap();
        let target = -(-eta).ln_1p() / t;
        let d = soft_abs_error(1.0 / kappa, eps).unwrap();
        assert!(((d - target) / target).abs() < 1e-9);
    }

    #[test]
    fn chosen_epsilon_is_larger_root() {
        let c = smoothing_epsilon(32.136, 500.0, 1e-6).unwrap();
        assert_eq!(c.chosen, c.epsilon_g1.max(c.epsilon_g2));
        assert!(c.epsilon_g2 > c.epsilon_g1);
    }

    proptest! {
        #[test]
        fn uniform_bound_and_evenness(x in -5.0f64..5.0, eps in 1e-4f64..2.0) {
            let sa = SoftAbs::new(eps).unwrap();
            let d = sa.error(x);
            prop_assert!(sa.value(x) >= x.abs());
            prop_assert!(d >= 0.0 && d <= eps * LN_2 * (1.0 + 1e-15));
            prop_assert_eq!(sa.value(x), sa.value(-x));
        }

        #[test]
        fn error_strictly_decreasing(a in 0.0f64..0.2, gap in 1e-3f64..0.2, eps in 0.01f64..0.5) {
            let sa = SoftAbs::new(eps).unwrap();
            prop_assert!(sa.error(a) > sa.error(a + gap));
        }

        #[test]
        fn grad_matches_central_difference(x in -2.0f64..2.0, eps in 0.05f64..1.0) {
            let sa = SoftAbs::new(eps).unwrap();
            let h = 1e-5 * eps;
            let fd = (sa.value(x + h) - sa.value(x - h)) / (2.0 * h);
            let g = sa.grad(x);
            prop_assume!(g.abs() > 1e-3);
            prop_assert!(((fd - g) / g).abs() < 1e-6);
        }
    }
}
