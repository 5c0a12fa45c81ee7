use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qgfa_core::approx::{chebyshev_fit_default, TargetFunction};
use qgfa_core::fem::{cantilever_input, tensile_input, FemInput, SpdSystem};
use qgfa_core::flow::{relative_error, solve_direct};
use qgfa_core::qcirc::{prepare_programs, run_qgfa_state, Mode, QgfaContext};
use qgfa_core::qmia::{prepare_inverse, run_qmia_in};
use qgfa_core::qsp::{find_phases_with, response_report, PhaseSequence, SolverOptions};
use qgfa_core::softabs::smoothing_epsilon;
use qgfa_core::sweep::{
    branch_degree, emit_csv, load_system_file, response_csv, run_sweep, ProblemSpec, SweepConfig,
};
use qgfa_core::{QgfaError, Result};

#[derive(Parser)]
#[command(name = "qgfa", version, about = "Gradient-flow linear solver on a simulated QSP circuit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ProblemArgs {
    /// Built-in problem.
    #[arg(long, value_enum, conflicts_with = "system")]
    problem: Option<Builtin>,
    /// Mesh JSON or assembled system JSON.
    #[arg(long)]
    system: Option<PathBuf>,
}

impl ProblemArgs {
    fn load(&self) -> Result<SpdSystem> {
        match (&self.system, self.problem) {
            (Some(path), _) => load_system_file(path),
            (None, b) => ProblemSpec::Named(b.unwrap_or(Builtin::Tensile).name().into()).load(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Tensile,
    Cantilever,
}

impl Builtin {
    fn name(self) -> &'static str {
        match self {
            Builtin::Tensile => "tensile",
            Builtin::Cantilever => "cantilever",
        }
    }

    fn input(self) -> FemInput {
        match self {
            Builtin::Tensile => tensile_input(),
            Builtin::Cantilever => cantilever_input(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Classical,
    Qgfa,
    Qmia,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    G1,
    G2tilde,
    Ginv,
    Constant,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a mesh into an SPD system and report its condition number.
    Assemble {
        #[arg(long, value_enum, conflicts_with = "input")]
        problem: Option<Builtin>,
        /// Mesh JSON.
        #[arg(long)]
        input: Option<PathBuf>,
        /// System JSON destination.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the mesh description of a built-in problem.
        #[arg(long)]
        dump_input: Option<PathBuf>,
    },
    /// Solve the system and report the relative error against a direct solve.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value = "classical")]
        method: Method,
        #[arg(long, default_value_t = 500.0)]
        t: f64,
        /// Total phase count across both branches.
        #[arg(long, default_value_t = 400)]
        p: usize,
        #[arg(long, default_value = "ideal")]
        mode: Mode,
        #[arg(long, default_value_t = 1e-6)]
        eta: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon_apx: f64,
        /// Solution JSON destination.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Final statevector JSON (circuit mode).
        #[arg(long)]
        dump_state: Option<PathBuf>,
    },
    /// Run a sweep config and write its CSVs.
    Sweep {
        config: PathBuf,
        /// Output prefix; overrides the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit a target and solve for its phase factors.
    Phases {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        degree: usize,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1e-6)]
        eta: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon_apx: f64,
        #[arg(long, default_value_t = 1.0)]
        value: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Tabulate the realised response of a phase file.
    Response {
        phases: PathBuf,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| QgfaError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| QgfaError::io("<stdout>", e))
        }
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    emit(None, &format!("{}\n", serde_json::to_string_pretty(v)?))
}

fn assemble(
    problem: Option<Builtin>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    dump_input: Option<PathBuf>,
) -> Result<()> {
    let fem = match &input {
        Some(path) => FemInput::read_json(path)?,
        None => problem.unwrap_or(Builtin::Tensile).input(),
    };
    if let Some(p) = &dump_input {
        emit(Some(p), &serde_json::to_string_pretty(&fem)?)?;
    }
    let system = fem.build()?;
    if let Some(p) = &output {
        system.write_json(p)?;
    }
    print_json(&json!({
        "dim": system.dim(),
        "kappa": system.kappa,
        "kappa_free_block": system.free_block_kappa(),
        "spectral_norm": system.spectral_norm,
        "n_dirichlet": system.n_dirichlet,
    }))
}

#[allow(clippy::too_many_arguments)]
fn solve(
    problem: &ProblemArgs,
    method: Method,
    t: f64,
    p: usize,
    mode: Mode,
    eta: f64,
    epsilon_apx: f64,
    output: Option<PathBuf>,
    dump_state: Option<PathBuf>,
) -> Result<()> {
    let system = problem.load()?;
    let u_star = solve_direct(&system)?;
    let opts = match mode {
        Mode::Circuit => Some(SolverOptions::default()),
        Mode::IdealPolynomial => None,
    };
    let (u, mut report) = match method {
        Method::Classical => {
            let residual = (&system.matrix * &u_star - &system.load).norm() / system.load.norm().max(f64::MIN_POSITIVE);
            (u_star.clone(), json!({ "method": "classical", "residual": residual }))
        }
        Method::Qgfa => {
            if !p.is_multiple_of(2) {
                return Err(QgfaError::param(format!("phase count {p} must be even")));
            }
            let degree = branch_degree(p).ok_or_else(|| QgfaError::param("phase count must be at least 2"))?;
            let ctx = QgfaContext::new(&system)?;
            let (p1, p2) = prepare_programs(system.kappa, t, degree, eta, opts)?;
            let (out, state) = run_qgfa_state(&ctx, &p1, &p2, t, mode)?;
            if let (Some(path), Some(state)) = (&dump_state, &state) {
                emit(Some(path), &serde_json::to_string(&state.to_json())?)?;
            }
            let eps = if t > 0.0 { Some(smoothing_epsilon(system.kappa, t, eta)?) } else { None };
            let report = json!({
                "method": "qgfa",
                "t": t,
                "p": p,
                "degree": out.degree,
                "epsilon_smooth": eps,
                "alpha": out.alpha,
                "beta": out.beta,
                "success_probability": out.success_probability,
                "be_calls": out.be_calls,
                "sup_err_g1": p1.fit.sup_error,
                "sup_err_g2": p2.fit.sup_error,
                "phase_residuals": [p1.residual(), p2.residual()],
                "max_imag": out.max_imag,
            });
            (out.u(), report)
        }
        Method::Qmia => {
            let ctx = QgfaContext::new(&system)?;
            let prog = prepare_inverse(system.kappa, epsilon_apx, p.saturating_sub(1), opts)?;
            let out = run_qmia_in(&ctx, &prog, mode)?;
            let report = json!({
                "method": "qmia",
                "p": p,
                "degree": out.degree,
                "epsilon_apx": epsilon_apx,
                "success_probability": out.success_probability,
                "be_calls": out.be_calls,
                "sup_error": prog.fit.sup_error,
                "phase_residual": prog.residual(),
            });
            (out.u(), report)
        }
    };
    let r = relative_error(&u, &u_star)?;
    report["R"] = json!(r);
    report["kappa"] = json!(system.kappa);
    report["mode"] = json!(mode);
    if let Some(path) = &output {
        let body = json!({ "u": u.as_slice(), "u_mesh_order": system.to_mesh_order(&u).as_slice() });
        emit(Some(path), &serde_json::to_string_pretty(&body)?)?;
    }
    print_json(&report)
}

fn sweep(config: &Path, output: Option<PathBuf>) -> Result<()> {
    let mut cfg = SweepConfig::read_json(config)?;
    if output.is_some() {
        cfg.output = output;
    }
    let result = run_sweep(&cfg)?;
    let written = match &cfg.output {
        Some(prefix) => emit_csv(&result, prefix)?,
        None => {
            emit(None, &qgfa_core::sweep::sweep_csv(&result.rows))?;
            Vec::new()
        }
    };
    let failed = result.rows.iter().filter(|r| r.error.is_some()).count()
        + result.qmia_rows.iter().filter(|r| r.error.is_some()).count();
    let summary = json!({
        "kappa": result.metadata.kappa,
        "cells": result.rows.len(),
        "failed": failed,
        "best_R": result.best_r(),
        "best_R_inv": result.best_r_inv(),
        "elapsed_secs": result.metadata.elapsed_secs,
        "files": written,
    });
    eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn phases(
    target: Target,
    degree: usize,
    t: f64,
    kappa: f64,
    eta: f64,
    epsilon_apx: f64,
    value: f64,
    tol: f64,
    output: Option<PathBuf>,
) -> Result<()> {
    let f = match target {
        Target::G1 | Target::G2tilde => {
            let eps = smoothing_epsilon(kappa, t, eta)?.chosen;
            if matches!(target, Target::G1) {
                TargetFunction::G1 { t, epsilon_smooth: eps }
            } else {
                TargetFunction::G2Tilde { t, epsilon_smooth: eps }
            }
        }
        Target::Ginv => TargetFunction::Ginv { kappa, epsilon_apx },
        Target::Constant => TargetFunction::Constant { value },
    };
    let fit = chebyshev_fit_default(&f, degree)?;
    let seq = find_phases_with(&fit, SolverOptions { tol, ..SolverOptions::default() })?;
    eprintln!("degree {} residual {:.3e} sup_error {:.3e}", seq.degree(), seq.residual, fit.sup_error);
    match &output {
        Some(p) => seq.write_json(p),
        None => emit(None, &format!("{}\n", serde_json::to_string_pretty(&seq)?)),
    }
}

fn response(path: &Path, grid: usize, output: Option<PathBuf>) -> Result<()> {
    let seq = PhaseSequence::read_json(path)?;
    let report = response_report(&seq, &seq.target, grid)?;
    eprintln!("max_abs_error {:.6e}", report.max_abs_error);
    emit(output.as_deref(), &response_csv(&report))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Assemble { problem, input, output, dump_input } => assemble(problem, input, output, dump_input),
        Command::Solve { problem, method, t, p, mode, eta, epsilon_apx, output, dump_state } => {
            solve(&problem, method, t, p, mode, eta, epsilon_apx, output, dump_state)
        }
        Command::Sweep { config, output } => sweep(&config, output),
        Command::Phases { target, degree, t, kappa, eta, epsilon_apx, value, tol, output } => {
            phases(target, degree, t, kappa, eta, epsilon_apx, value, tol, output)
        }
        Command::Response { phases, grid, output } => response(&phases, grid, output),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
