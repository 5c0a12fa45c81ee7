//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qgfa_core::approx::{chebyshev_fit_default, TargetFunction};
use qgfa_core::fem::{make_cantilever_problem, make_tensile_problem, pad_to_power_of_two, FemInput, SpdSystem};
use qgfa_core::flow::{gradient_flow, select_time, solve_direct, EigenSystem, Flow};
use qgfa_core::qcirc::{prepare_programs, run_qgfa_in, Mode, QgfaContext};
use qgfa_core::qsp::{find_phases_with, response_report, SolverOptions};
use qgfa_core::softabs::{relative_target_error, smoothing_epsilon, solve_epsilon, Branch, SoftAbs};
use qgfa_core::sweep::{run_sweep, ProblemSpec, SweepConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target
}

fn condition_numbers() -> Outcome {
    let start = Instant::now();
    let tensile = make_tensile_problem();
    let cantilever = make_cantilever_problem();
    let elapsed = start.elapsed();
    let ok = within(tensile.kappa, 32.136, 0.01)
        && within(cantilever.kappa, 37.018, 0.01)
        && elapsed < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "kappa tensile {:.4} (want 32.136 ±1%), cantilever {:.4} (want 37.018 ±1%), {:.3}s",
            tensile.kappa,
            cantilever.kappa,
            elapsed.as_secs_f64()
        ),
    )
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize, kappa: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    let mut eigs: Vec<f64> = (0..n)
        .map(|_| (-rng.gen_range(0.0..1.0) * kappa.ln()).exp())
        .collect();
    eigs[0] = 1.0 / kappa;
    eigs[1] = 1.0;
    let d = DMatrix::from_diagonal(&DVector::from_vec(eigs));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

fn classical_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst_decay: f64 = 0.0;
    let mut worst_semigroup: f64 = 0.0;
    let mut worst_fixed: f64 = 0.0;
    let mut worst_select: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=32);
        let kappa = rng.gen_range(2.0..100.0);
        let k = random_spd(&mut rng, n, kappa);
        let f = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let u0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let system = SpdSystem::new(k, f, u0).expect("random system is SPD");
        let flow = Flow::new(&system).unwrap();
        let kappa = flow.eig.kappa();
        let delta0 = (&system.hot_start - &flow.u_star).norm();
        let scale = flow.u_star.norm().max(system.hot_start.norm());

        for t in [kappa / 2.0, kappa, 5.0 * kappa] {
            let sol = flow.at(t).unwrap();
            let bound = (-t / kappa).exp() * delta0;
            worst_decay = worst_decay.max((sol.delta_norm - bound) / scale);
        }
        let (t1, t2) = (0.3 * kappa, 0.9 * kappa);
        let direct = flow.at(t1 + t2).unwrap().u_t;
        let chained = flow.from(&flow.at(t1).unwrap().u_t, t2).unwrap().u_t;
        worst_semigroup = worst_semigroup.max((direct - chained).amax() / scale);
        let fixed = flow.from(&flow.u_star, 3.0 * kappa).unwrap().u_t;
        worst_fixed = worst_fixed.max((fixed - &flow.u_star).amax() / scale);

        let zeta = 1e-3 * delta0;
        let t_star = select_time(kappa, zeta, delta0).unwrap();
        worst_select = worst_select.max(flow.at(t_star).unwrap().delta_norm / zeta);
    }
    let elapsed = start.elapsed();
    let ok = worst_decay <= 1e-10
        && worst_semigroup <= 1e-10
        && worst_fixed <= 1e-10
        && worst_select <= 1.0 + 1e-10
        && elapsed < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "100 systems: decay excess {worst_decay:.2e}, semigroup {worst_semigroup:.2e}, fixed point {worst_fixed:.2e}, \
             max ‖δ(t*)‖/ζ {worst_select:.6}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn soft_abs_suite() -> Outcome {
    let start = Instant::now();
    let mut bound_ok = true;
    let mut even_ok = true;
    let mut monotone_ok = true;
    let mut worst_grad: f64 = 0.0;
    for eps in [1e-6, 1e-4, 1e-3, 4.8e-3, 1e-2, 0.1, 1.0] {
        let sa = SoftAbs::new(eps).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=4000 {
            let x = 2.0 * i as f64 / 4000.0;
            let d = sa.error(x);
            bound_ok &= d <= eps * std::f64::consts::LN_2 * (1.0 + 1e-15) && d >= 0.0;
            even_ok &= sa.value(x) == sa.value(-x) && sa.grad(x) == -sa.grad(-x);
            monotone_ok &= d <= prev;
            prev = d;
        }
        for i in 1..=400 {
            let x = eps * (i as f64 / 40.0 - 5.0) + 1e-3 * i as f64;
            let h = 1e-5 * eps;
            let fd = (sa.value(x + h) - sa.value(x - h)) / (2.0 * h);
            let g = sa.grad(x);
            let err = if g == 0.0 { fd.abs() } else { (g - fd).abs() / g.abs() };
            worst_grad = worst_grad.max(err);
        }
    }
    let eta = 1e-6;
    let mut worst_residual: f64 = 0.0;
    for kappa in [32.136, 37.018, 100.0] {
        for t in [kappa, 10.0 * kappa, 100.0, 500.0, 3000.0] {
            for branch in [Branch::G1, Branch::G2] {
                let eps = solve_epsilon(kappa, t, eta, branch).unwrap();
                let r = relative_target_error(1.0 / kappa, eps, t, branch).unwrap();
                worst_residual = worst_residual.max((r - eta).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = bound_ok
        && even_ok
        && monotone_ok
        && worst_grad <= 1e-6
        && worst_residual <= 1e-10
        && elapsed < Duration::from_secs(5);
    outcome(
        ok,
        format!(
            "bound {bound_ok}, even {even_ok}, monotone {monotone_ok}, grad rel err {worst_grad:.2e}, \
             solve_epsilon residual {worst_residual:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn qsp_fidelity() -> Outcome {
    let start = Instant::now();
    let kappa = 37.018;
    let t = 10.0 * kappa;
    let eps = smoothing_epsilon(kappa, t, 1e-6).unwrap().chosen;
    let opts = || SolverOptions {
        deadline: Some(Instant::now() + Duration::from_secs(300)),
        ..SolverOptions::default()
    };
    let report = |f: TargetFunction, degree: usize| {
        let fit = chebyshev_fit_default(&f, degree)?;
        let seq = find_phases_with(&fit, opts())?;
        response_report(&seq, &f, 2000)
    };
    let g1 = report(TargetFunction::G1 { t, epsilon_smooth: eps }, 200);
    let g2 = report(TargetFunction::G2Tilde { t, epsilon_smooth: eps }, 200);
    let ginv = report(TargetFunction::Ginv { kappa, epsilon_apx: 1e-3 }, 201);
    let elapsed = start.elapsed();
    match (g1, g2, ginv) {
        (Ok(g1), Ok(g2), Ok(ginv)) => {
            let worst = ginv.worst_from(1.0 / kappa).map_or(f64::NAN, |r| r.x);
            let localized = (1.0 / kappa..=2.0 / kappa).contains(&worst);
            let ok = g2.max_abs_error <= 1e-3
                && g1.max_abs_error <= 5e-2
                && localized
                && elapsed < Duration::from_secs(300);
            outcome(
                ok,
                format!(
                    "degree 200: g2tilde max err {:.3e} (≤ 1e-3), g1 max err {:.3e} (≤ 5e-2); \
                     ginv degree 201 worst x {worst:.4} in [{:.4}, {:.4}]: {localized}; {:.1}s",
                    g2.max_abs_error,
                    g1.max_abs_error,
                    1.0 / kappa,
                    2.0 / kappa,
                    elapsed.as_secs_f64()
                ),
            )
        }
        (a, b, c) => outcome(
            false,
            format!("phase solve failed: {:?} {:?} {:?}", a.err(), b.err(), c.err()),
        ),
    }
}

fn circuit_equivalence() -> Outcome {
    let start = Instant::now();
    let system = make_cantilever_problem();
    let t = system.kappa;
    let degree = 100;
    let ctx = QgfaContext::new(&system).unwrap();
    let qubits = 1 + 1 + system.dim().trailing_zeros() as usize + 1;
    let (p1, p2) = prepare_programs(system.kappa, t, degree, 1e-6, Some(SolverOptions::default())).unwrap();
    let circ = run_qgfa_in(&ctx, &p1, &p2, t, Mode::Circuit).unwrap();
    let ideal = run_qgfa_in(&ctx, &p1, &p2, t, Mode::IdealPolynomial).unwrap();
    let exact = gradient_flow(&system, t).unwrap().u_t;
    let u_star_norm = solve_direct(&system).unwrap().norm();
    let (alpha, beta) = ctx.weights(t);

    let a1 = alpha / p1.fit.safety;
    let b2 = beta / p2.fit.safety;
    let circ_gap = (circ.u() - ideal.u()).norm() / u_star_norm;
    let circ_bound = (a1 * p1.residual() + b2 * p2.residual()) / u_star_norm;
    let flow_gap = (ideal.u() - &exact).norm() / u_star_norm;
    let flow_bound = (alpha * p1.fit.sup_error + beta * p2.fit.sup_error) / u_star_norm;
    let elapsed = start.elapsed();
    let ok = system.dim() == 16
        && qubits == 7
        && circ_gap <= circ_bound
        && flow_gap <= flow_bound
        && circ.be_calls == degree
        && elapsed < Duration::from_secs(120);
    outcome(
        ok,
        format!(
            "{} dofs, {qubits} qubits; circuit-ideal {circ_gap:.2e} ≤ {circ_bound:.2e}; \
             ideal-flow {flow_gap:.2e} ≤ {flow_bound:.2e}; block-encoding calls {}; {:.2}s",
            system.dim(),
            circ.be_calls,
            elapsed.as_secs_f64()
        ),
    )
}

fn spot_values() -> Outcome {
    let start = Instant::now();
    let config = SweepConfig {
        t_values: vec![100.0, 300.0, 500.0, 1000.0],
        ..SweepConfig::default_grid(ProblemSpec::Named("tensile".into()))
    };
    let result = run_sweep(&config).unwrap();
    let spot = result
        .rows
        .iter()
        .find(|r| r.t == 500.0 && r.p == 3000)
        .map_or(f64::NAN, |r| r.r);
    let best = result.best_r().unwrap_or(f64::NAN);
    let best_inv = result.best_r_inv().unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    let ok = spot <= 1e-4
        && (1e-4..=1e-2).contains(&best_inv)
        && best < best_inv
        && elapsed < Duration::from_secs(300);
    outcome(
        ok,
        format!(
            "R(t=500, p=3000) {spot:.3e} (≤ 1e-4); best QMIA R_inv {best_inv:.3e} with eps 1e-3 (in [1e-4, 1e-2]); \
             best QGFA R {best:.3e}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn padding_and_reconstruction() -> Outcome {
    let start = Instant::now();
    let mesh = qgfa_core::fem::build_mesh_rect(3, 2, 1.5, 1.0).unwrap();
    let mut input = FemInput {
        nodes: mesh.nodes.clone(),
        elements: mesh.elements.clone(),
        ..qgfa_core::fem::tensile_input()
    };
    input.dirichlet.clear();
    input.loads.clear();
    for (a, &[x, y]) in mesh.nodes.iter().enumerate() {
        if x == 0.0 {
            input.dirichlet.insert(2 * a, 0.0);
            if y == 0.0 {
                input.dirichlet.insert(2 * a + 1, 0.0);
            }
        }
        if x == 1.5 {
            input.dirichlet.insert(2 * a, 0.05);
            input.loads.insert(2 * a + 1, -0.01);
        }
    }
    let system = input.build().unwrap();
    let padded = pad_to_power_of_two(&system);
    let u = solve_direct(&system).unwrap();
    let u_pad = solve_direct(&padded).unwrap();
    let pad_gap = (u_pad.rows(0, system.dim()) - &u).amax() / u.amax();

    let t = 2.0 * system.kappa;
    let (p1, p2) = prepare_programs(system.kappa, t, 60, 1e-6, None).unwrap();
    let no_load = system.clone().with_load(DVector::zeros(system.dim())).unwrap();
    let no_start = system.clone().with_hot_start(DVector::zeros(system.dim())).unwrap();

    let branch_gap = |s: &SpdSystem, use_start: bool| -> f64 {
        let ctx = QgfaContext::new(s).unwrap();
        let out = run_qgfa_in(&ctx, &p1, &p2, t, Mode::IdealPolynomial).unwrap();
        let eig = EigenSystem::new(&(&s.matrix / s.spectral_norm));
        let want = if use_start {
            let fit = &p1.fit;
            let (alpha, _) = ctx.weights(t);
            eig.apply_fn(&(&s.hot_start / alpha), |l| fit.eval_unscaled(l)) * alpha
        } else {
            let fit = &p2.fit;
            let (_, beta) = ctx.weights(t);
            let f_hat = &s.load / s.load.norm();
            eig.apply_fn(&f_hat, |l| fit.eval_unscaled(l)) * beta
        };
        (out.u() - &want).amax() / want.amax()
    };
    let start_gap = branch_gap(&no_load, true);
    let load_gap = branch_gap(&no_start, false);
    let elapsed = start.elapsed();
    let ok = system.dim() != padded.dim()
        && pad_gap <= 1e-12
        && start_gap <= 1e-10
        && load_gap <= 1e-10
        && elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "dim {} padded to {}: solution gap {pad_gap:.2e}; f = 0 branch {start_gap:.2e}, u(0) = 0 branch {load_gap:.2e}; {:.2}s",
            system.dim(),
            padded.dim(),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("condition numbers", condition_numbers),
        ("classical oracle suite", classical_oracles),
        ("soft-abs suite", soft_abs_suite),
        ("QSP fidelity", qsp_fidelity),
        ("circuit vs oracle equivalence", circuit_equivalence),
        ("spot values", spot_values),
        ("padding and reconstruction", padding_and_reconstruction),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
