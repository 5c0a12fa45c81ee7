//! Exact gradient flow `du/dt = f - K u` through the eigenbasis of `K`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::approx::one_minus_exp_ratio;
use crate::error::{QgfaError, Result};
use crate::fem::SpdSystem;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    /// Like [`EigenSystem::new`] but rejects non-positive spectra.
    pub fn new_spd(matrix: &DMatrix<f64>) -> Result<Self> {
        let e = Self::new(matrix);
        let lo = e.eigenvalues[0];
        if !(lo > 0.0) {
            return Err(QgfaError::NotSpd { min_eigenvalue: lo });
        }
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn kappa(&self) -> f64 {
        self.eigenvalues[self.dim() - 1] / self.eigenvalues[0]
    }

    /// `g(K) v = V diag(g(λ)) Vᵀ v`.
    pub fn apply_fn(&self, v: &DVector<f64>, g: impl Fn(f64) -> f64) -> DVector<f64> {
        let mut coords = self.eigenvectors.tr_mul(v);
        for (c, &l) in coords.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= g(l);
        }
        &self.eigenvectors * coords
    }

    /// `g(K)` as a dense matrix.
    pub fn matrix_fn(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &l) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= g(l);
        }
        scaled * self.eigenvectors.transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub u_t: DVector<f64>,
    pub t: f64,
    pub delta_norm: f64,
}

/// `(1 - e^{-λt}) / λ`, finite at `λ t → 0`.
pub fn phi(lambda: f64, t: f64) -> f64 {
    t * one_minus_exp_ratio(lambda * t)
}

/// Cached eigendecomposition and minimiser of one system.
#[derive(Debug, Clone)]
pub struct Flow {
    pub eig: EigenSystem,
    pub load: DVector<f64>,
    pub hot_start: DVector<f64>,
    pub u_star: DVector<f64>,
}

impl Flow {
    pub fn new(system: &SpdSystem) -> Result<Self> {
        let eig = EigenSystem::new_spd(&system.matrix)?;
        let u_star = eig.apply_fn(&system.load, |l| 1.0 / l);
        Ok(Self {
            eig,
            load: system.load.clone(),
            hot_start: system.hot_start.clone(),
            u_star,
        })
    }

    pub fn at(&self, t: f64) -> Result<FlowSolution> {
        self.from(&self.hot_start, t)
    }

    /// Flow restarted from an arbitrary `u0`.
    pub fn from(&self, u0: &DVector<f64>, t: f64) -> Result<FlowSolution> {
        check_time(t)?;
        if u0.len() != self.eig.dim() {
            return Err(QgfaError::Dimension {
                expected: self.eig.dim(),
                got: u0.len(),
            });
        }
        let v = &self.eig.eigenvectors;
        let a = v.tr_mul(u0);
        let b = v.tr_mul(&self.load);
        let coords = DVector::from_fn(self.eig.dim(), |i, _| {
            let l = self.eig.eigenvalues[i];
            (-l * t).exp() * a[i] + phi(l, t) * b[i]
        });
        let u_t = v * coords;
        let delta_norm = (&u_t - &self.u_star).norm();
        Ok(FlowSolution { u_t, t, delta_norm })
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(QgfaError::param(format!("time must be nonnegative, got {t}")))
    }
}

fn check_dim(system: &SpdSystem, u: &DVector<f64>) -> Result<()> {
    if u.len() == system.dim() {
        Ok(())
    } else {
        Err(QgfaError::Dimension {
            expected: system.dim(),
            got: u.len(),
        })
    }
}

/// `½ uᵀ K u - uᵀ f`.
pub fn energy(system: &SpdSystem, u: &DVector<f64>) -> Result<f64> {
    check_dim(system, u)?;
    Ok(0.5 * u.dot(&(&system.matrix * u)) - u.dot(&system.load))
}

/// `K u - f`.
pub fn energy_gradient(system: &SpdSystem, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(system, u)?;
    Ok(&system.matrix * u - &system.load)
}

/// `u* = K⁻¹ f` by Cholesky.
pub fn solve_direct(system: &SpdSystem) -> Result<DVector<f64>> {
    let chol = system
        .matrix
        .clone()
        .cholesky()
        .ok_or_else(|| QgfaError::Singular("Cholesky factorisation failed".into()))?;
    let u = chol.solve(&system.load);
    let residual = (&system.matrix * &u - &system.load).norm();
    if residual > 1e-10 * system.load.norm().max(f64::MIN_POSITIVE) {
        return Err(QgfaError::Singular(format!("residual {residual:e} after solve")));
    }
    Ok(u)
}

pub fn gradient_flow(system: &SpdSystem, t: f64) -> Result<FlowSolution> {
    check_time(t)?;
    Flow::new(system)?.at(t)
}

/// `e^{-t/κ} ‖δ(0)‖`.
pub fn error_bound(delta0_norm: f64, kappa: f64, t: f64) -> f64 {
    (-t / kappa).exp() * delta0_norm
}

/// Smallest `t` for which the decay bound guarantees `‖δ(t)‖ ≤ ζ`;
/// zero when already converged.
pub fn select_time(kappa: f64, zeta: f64, delta0_norm: f64) -> Result<f64> {
    if !(kappa >= 1.0 && zeta > 0.0 && delta0_norm >= 0.0) {
        return Err(QgfaError::param(format!(
            "select_time needs kappa >= 1 and zeta > 0 (kappa={kappa}, zeta={zeta})"
        )));
    }
    if zeta >= delta0_norm {
        return Ok(0.0);
    }
    Ok(-kappa * (zeta / delta0_norm).ln())
}

/// `‖u - u*‖ / ‖u*‖`.
pub fn relative_error(u_approx: &DVector<f64>, u_star: &DVector<f64>) -> Result<f64> {
    if u_approx.len() != u_star.len() {
        return Err(QgfaError::Dimension {
            expected: u_star.len(),
            got: u_approx.len(),
        });
    }
    let norm = u_star.norm();
    if norm == 0.0 {
        return Err(QgfaError::param("reference solution has zero norm"));
    }
    Ok((u_approx - u_star).norm() / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::make_tensile_problem;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(k: f64, f: f64, u0: f64) -> SpdSystem {
        SpdSystem::new(
            DMatrix::from_element(1, 1, k),
            DVector::from_element(1, f),
            DVector::from_element(1, u0),
        )
        .unwrap()
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize, kappa: f64) -> SpdSystem {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = a.qr().q();
        let lambdas = DVector::from_fn(n, |i, _| {
            if i == 0 {
                1.0 / kappa
            } else if i == n - 1 {
                1.0
            } else {
                rng.gen_range(1.0 / kappa..1.0)
            }
        });
        let k = &q * DMatrix::from_diagonal(&lambdas) * q.transpose();
        let k = (&k + k.transpose()) * 0.5;
        let f = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let u0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        SpdSystem::new(k, f, u0).unwrap()
    }

    #[test]
    fn scalar_closed_form() {
        let s = scalar(2.0, 4.0, 0.0);
        let sol = gradient_flow(&s, 1.0).unwrap();
        assert!((sol.u_t[0] - 2.0 * (1.0 - (-2.0f64).exp())).abs() < 1e-14);
        assert!((sol.u_t[0] - 1.72933).abs() < 1e-5);
        assert!((solve_direct(&s).unwrap()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_system_solves_to_load() {
        let f = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let s = SpdSystem::new(DMatrix::identity(3, 3), f.clone(), DVector::zeros(3)).unwrap();
        assert!((solve_direct(&s).unwrap() - f).amax() < 1e-15);
    }

    #[test]
    fn tensile_dirichlet_slots_pass_through() {
        let s = make_tensile_problem();
        let u = solve_direct(&s).unwrap();
        let um = s.to_mesh_order(&u);
        for (slot, &dof) in s.dof_map.iter().enumerate().take(s.n_dirichlet) {
            assert!((um[dof] - s.load[slot]).abs() < 1e-12);
        }
        assert!(s.load.iter().any(|&v| v == 0.1));
    }

    #[test]
    fn energy_minimum_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_spd(&mut rng, 6, 20.0);
        let u_star = solve_direct(&s).unwrap();
        let min = -0.5 * s.load.dot(&u_star);
        assert!((energy(&s, &u_star).unwrap() - min).abs() < 1e-12);
        assert_eq!(energy(&s, &DVector::zeros(6)).unwrap(), 0.0);

        let u = DVector::from_fn(6, |i, _| 0.3 * i as f64 - 0.7);
        let g = energy_gradient(&s, &u).unwrap();
        let h = 1e-6;
        for i in 0..6 {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (energy(&s, &up).unwrap() - energy(&s, &dn).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
        assert!(energy(&s, &DVector::zeros(5)).is_err());
    }

    #[test]
    fn eigensystem_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_spd(&mut rng, 10, 50.0);
        let e = EigenSystem::new_spd(&s.matrix).unwrap();
        let v = &e.eigenvectors;
        assert!((v.transpose() * v - DMatrix::identity(10, 10)).amax() < 1e-10);
        assert!((e.matrix_fn(|l| l) - &s.matrix).amax() < 1e-10);
        assert!(e.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
        assert!((e.kappa() - 50.0).abs() < 1e-8);
    }

    #[test]
    fn limits_of_the_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_spd(&mut rng, 8, 30.0);
        let flow = Flow::new(&s).unwrap();
        assert!((flow.at(0.0).unwrap().u_t - &s.hot_start).amax() < 1e-14);
        let late = flow.at(100.0 * s.kappa).unwrap();
        assert!(relative_error(&late.u_t, &flow.u_star).unwrap() < 1e-12);
        assert!(flow.at(-1.0).is_err());
    }

    #[test]
    fn phi_series_is_continuous() {
        let t = 3.0;
        for l in [1e-7f64, 3.33e-5, 3.34e-5, 1e-3] {
            let closed = -(-l * t).exp_m1() / l;
            assert!((phi(l, t) - closed).abs() < 1e-12 * t);
        }
        assert_eq!(phi(0.0, t), t);
    }

    #[test]
    fn bound_and_time_selection() {
        assert_eq!(error_bound(2.0, 5.0, 0.0), 2.0);
        assert!((error_bound(2.0, 5.0, 5.0 * 2f64.ln()) - 1.0).abs() < 1e-15);
        assert!((select_time(5.0, 1.0 / 1f64.exp(), 1.0).unwrap() - 5.0).abs() < 1e-14);
        let t = select_time(37.018, (-10.0f64).exp(), 1.0).unwrap();
        assert!((t - 370.18).abs() < 1e-9);
        assert_eq!(select_time(5.0, 2.0, 1.0).unwrap(), 0.0);
        assert!(select_time(5.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn relative_error_examples() {
        let u = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(relative_error(&u, &u).unwrap(), 0.0);
        assert_eq!(relative_error(&(&u * 2.0), &u).unwrap(), 1.0);
        let v = DVector::from_vec(vec![3.0 + 0.1, 4.0]);
        assert!((relative_error(&v, &u).unwrap() - 0.02).abs() < 1e-15);
        assert!(relative_error(&u, &DVector::zeros(2)).is_err());
        assert!(relative_error(&u, &DVector::zeros(3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn flow_properties(seed in any::<u64>(), n in 2usize..16, kappa in 2.0f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_spd(&mut rng, n, kappa);
            let flow = Flow::new(&s).unwrap();
            let d0 = (&s.hot_start - &flow.u_star).norm();
            let scale = flow.u_star.norm().max(s.hot_start.norm());

            let mut last = energy(&s, &s.hot_start).unwrap();
            for t in [kappa / 2.0, kappa, 5.0 * kappa] {
                let sol = flow.at(t).unwrap();
                prop_assert!(sol.delta_norm <= error_bound(d0, s.kappa, t) * (1.0 + 1e-10) + 1e-14);
                let e = energy(&s, &sol.u_t).unwrap();
                prop_assert!(e <= last + 1e-12);
                last = e;
            }

            let (t1, t2) = (0.3 * kappa, 1.1 * kappa);
            let direct = flow.at(t1 + t2).unwrap().u_t;
            let mid = flow.at(t1).unwrap().u_t;
            let restarted = flow.from(&mid, t2).unwrap().u_t;
            prop_assert!((direct - restarted).norm() <= 1e-10 * scale);

            let fixed = flow.from(&flow.u_star, 2.0 * kappa).unwrap().u_t;
            prop_assert!((fixed - &flow.u_star).norm() <= 1e-12 * flow.u_star.norm().max(1.0));

            let zeta = 1e-3 * d0;
            let t = select_time(s.kappa, zeta, d0).unwrap();
            prop_assert!(flow.at(t).unwrap().delta_norm <= zeta * (1.0 + 1e-9));
        }
    }
}
