//! Runs a compiled problem through the core library.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spps_core::basis::{
    assemble_schrodinger_basis_with, assemble_sl_basis_with, solve_bvp, solve_ivp, AssemblyOptions,
    BasisPair, Solution, DEFAULT_TAIL_TOLERANCE,
};
use spps_core::grid::{make_grid, sample, Grid};
use spps_core::particular::{accept_user_g0, build_g0, G0Options, SlCoefficients};
use spps_core::powers::{schrodinger_formal_powers, FormalPowerTable};
use spps_core::report::compare_with;
use spps_core::rk45::Rk45Equation;
use spps_core::spectral::{characteristic_polynomial, find_eigenvalues, EigenResult};

use crate::bench::{BenchRow, Case};
use crate::error::AppError;
use crate::problem::{Coefficient, Compiled, Equation};

/// How relative errors are normalised, recorded in every sidecar.
pub const RELATIVE_ERROR_DEFINITION: &str = "max_j |u_j - exact_j| / max_j |exact_j|";

/// Command-line settings that take precedence over the problem file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub n_powers: Option<usize>,
    pub grid_m: Option<usize>,
    pub omega: Option<Complex64>,
    pub tail_tolerance: Option<f64>,
}

/// The JSON sidecar written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub equation: Option<String>,
    #[serde(rename = "N")]
    pub n_powers: Option<usize>,
    pub m: Option<usize>,
    pub interval_a: Option<f64>,
    pub omega: Option<[f64; 2]>,
    /// A-priori bound on the omitted series terms (`null` if unbounded).
    pub tail_bound: Option<f64>,
    pub truncation_estimate: Option<f64>,
    pub reliability_radius: Option<f64>,
    pub g0_residual: Option<f64>,
    pub max_abs_error: Option<f64>,
    pub max_rel_error: Option<f64>,
    pub relative_error: String,
    pub rows: usize,
    pub wall_time_ms: f64,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Metadata {
            command: command.to_string(),
            equation: None,
            n_powers: None,
            m: None,
            interval_a: None,
            omega: None,
            tail_bound: None,
            truncation_estimate: None,
            reliability_radius: None,
            g0_residual: None,
            max_abs_error: None,
            max_rel_error: None,
            relative_error: RELATIVE_ERROR_DEFINITION.to_string(),
            rows: 0,
            wall_time_ms: 0.0,
        }
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// The formal powers of a problem, with the particular solution when the
/// equation is in Sturm–Liouville form.
struct Setup {
    grid: Arc<Grid>,
    table: FormalPowerTable,
    sl: Option<SlCoefficients>,
    n_powers: usize,
    tail: AssemblyOptions,
}

impl Setup {
    fn basis(&self, omega: Complex64) -> Result<BasisPair, AppError> {
        Ok(match &self.sl {
            None => assemble_schrodinger_basis_with(&self.table, omega, &self.tail)?,
            Some(sl) => assemble_sl_basis_with(&self.table, omega, &sl.g0, &sl.dg0, &self.tail)?,
        })
    }

    fn describe(&self, meta: &mut Metadata, problem: &Compiled) {
        meta.equation = Some(problem.equation.name().to_string());
        meta.n_powers = Some(self.n_powers);
        meta.m = Some(self.grid.m());
        meta.interval_a = Some(self.grid.a());
        meta.g0_residual = self.sl.as_ref().map(|sl| sl.residual);
    }
}

fn grid_and_powers(
    problem: &Compiled,
    ov: &Overrides,
) -> Result<(Arc<Grid>, usize, AssemblyOptions), AppError> {
    let m = ov.grid_m.unwrap_or(problem.grid_m);
    let n = ov.n_powers.unwrap_or(problem.n_powers);
    let tail_tolerance = ov.tail_tolerance.unwrap_or(DEFAULT_TAIL_TOLERANCE);
    if !(tail_tolerance.is_finite() && tail_tolerance > 0.0) {
        return Err(AppError::invalid(
            "tail tolerance must be finite and positive",
        ));
    }
    Ok((
        make_grid(problem.interval_a, m)?,
        n,
        AssemblyOptions { tail_tolerance },
    ))
}

fn sl_coefficients(
    grid: &Arc<Grid>,
    p: &Coefficient,
    q: &Coefficient,
    g0: Option<&Coefficient>,
) -> Result<SlCoefficients, AppError> {
    let at = |c: &Coefficient| {
        let c = c.clone();
        move |x: f64| c.eval(x)
    };
    Ok(match g0 {
        Some(g0) => accept_user_g0(
            &sample(at(p), grid)?,
            &sample(at(q), grid)?,
            &sample(at(g0), grid)?,
            &sample(at(&g0.derivative()), grid)?,
        )?,
        None => build_g0(grid, &at(p), &at(q), &G0Options::default())?,
    })
}

/// Setup for the IVP and BVP commands, with the spectral parameter to use.
fn solve_setup(problem: &Compiled, ov: &Overrides) -> Result<(Setup, Complex64), AppError> {
    let (grid, n, tail) = grid_and_powers(problem, ov)?;
    let omega = ov.omega.or(problem.omega);
    let one = Complex64::new(1.0, 0.0);
    let schrodinger = |q: &Coefficient| -> Result<FormalPowerTable, AppError> {
        let q = q.clone();
        Ok(schrodinger_formal_powers(
            &sample(move |x| q.eval(x), &grid)?,
            n,
        )?)
    };
    let (table, sl, omega) = match problem.equation {
        Equation::Schrodinger => {
            if omega.is_some_and(|w| w != one) {
                return Err(AppError::invalid(
                    "schrodinger problems have no spectral parameter; use helmholtz_like",
                ));
            }
            reject_g0(problem)?;
            (schrodinger(&problem.q)?, None, one)
        }
        Equation::HelmholtzLike => {
            reject_g0(problem)?;
            (schrodinger(&problem.q)?, None, omega.unwrap_or(one))
        }
        Equation::SturmLiouville => {
            let sl = sl_coefficients(&grid, &problem.p, &problem.q, problem.g0.as_ref())?;
            (sl.formal_powers(n)?, Some(sl), omega.unwrap_or(one))
        }
    };
    Ok((
        Setup {
            grid,
            table,
            sl,
            n_powers: n,
            tail,
        },
        omega,
    ))
}

fn reject_g0(problem: &Compiled) -> Result<(), AppError> {
    if problem.g0.is_some() {
        return Err(AppError::invalid(format!(
            "g0 is not used when solving {} problems",
            problem.equation.name()
        )));
    }
    Ok(())
}

pub struct SolveOutcome {
    pub solution: Solution,
    pub meta: Metadata,
}

pub fn run_ivp(problem: &Compiled, ov: &Overrides) -> Result<SolveOutcome, AppError> {
    run_solve(problem, ov, "solve-ivp")
}

pub fn run_bvp(problem: &Compiled, ov: &Overrides) -> Result<SolveOutcome, AppError> {
    run_solve(problem, ov, "solve-bvp")
}

fn run_solve(problem: &Compiled, ov: &Overrides, command: &str) -> Result<SolveOutcome, AppError> {
    let start = Instant::now();
    let task = if command == "solve-ivp" {
        Ok(problem.ivp()?)
    } else {
        Err(problem.bvp()?)
    };
    let (setup, omega) = solve_setup(problem, ov)?;
    let basis = setup.basis(omega)?;
    let solution = match task {
        Ok(ivp) => solve_ivp(&basis, &ivp)?,
        Err(bvp) => solve_bvp(&basis, &bvp)?,
    };
    let mut meta = Metadata::new(command);
    setup.describe(&mut meta, problem);
    meta.omega = Some([omega.re, omega.im]);
    meta.tail_bound = finite(setup.table.tail_bound(omega.norm(), setup.n_powers + 1));
    meta.truncation_estimate = finite(basis.truncation_estimate);
    meta.rows = solution.u.len();
    if let Some(exact) = &problem.exact {
        let r = compare_with(&solution.u, |x| exact.eval(x))?;
        meta.max_abs_error = Some(r.max_abs_error);
        meta.max_rel_error = Some(r.max_rel_error);
    }
    meta.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SolveOutcome { solution, meta })
}

pub struct EigenOutcome {
    pub eigenvalues: Vec<EigenResult>,
    pub meta: Metadata,
}

/// Eigenvalues `λ = ω²` with `|ω| <= max_abs_omega`.
///
/// A `schrodinger` problem is read as `u'' - q u = λ u`, the Sturm–Liouville
/// form with `p = 1` and potential `-q`, so the energy of `-u'' + q u = E u`
/// is `E = -λ`. For `helmholtz_like`, `λ = ω²` in `-u'' + ω² q u = 0`.
pub fn run_eig(problem: &Compiled, ov: &Overrides) -> Result<EigenOutcome, AppError> {
    let start = Instant::now();
    let (bc, max_abs_omega) = problem.eig()?;
    let (grid, n, tail) = grid_and_powers(problem, ov)?;
    let setup = match problem.equation {
        Equation::HelmholtzLike => {
            reject_g0(problem)?;
            let q = problem.q.clone();
            let table = schrodinger_formal_powers(&sample(move |x| q.eval(x), &grid)?, n)?;
            Setup {
                grid,
                table,
                sl: None,
                n_powers: n,
                tail,
            }
        }
        Equation::Schrodinger | Equation::SturmLiouville => {
            let q = match problem.equation {
                Equation::Schrodinger => problem.q.negated(),
                _ => problem.q.clone(),
            };
            let sl = sl_coefficients(&grid, &problem.p, &q, problem.g0.as_ref())?;
            Setup {
                table: sl.formal_powers(n)?,
                grid,
                sl: Some(sl),
                n_powers: n,
                tail,
            }
        }
    };
    let phi = characteristic_polynomial(&setup.table, &bc, setup.sl.as_ref())?;
    let eigenvalues = find_eigenvalues(&phi, max_abs_omega)?;
    let mut meta = Metadata::new("eig");
    setup.describe(&mut meta, problem);
    meta.tail_bound = finite(setup.table.tail_bound(max_abs_omega, setup.n_powers + 1));
    meta.reliability_radius = finite(phi.reliability_radius);
    meta.rows = eigenvalues.len();
    meta.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(EigenOutcome { eigenvalues, meta })
}

/// SPPS against the best Runge–Kutta tolerance on a problem with an `exact`
/// solution and an IVP task.
pub fn run_bench(
    problem: &Compiled,
    ov: &Overrides,
    label: &str,
) -> Result<(Vec<BenchRow>, Metadata), AppError> {
    let start = Instant::now();
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| AppError::invalid("bench needs an `exact` solution"))?;
    let ivp = problem.ivp()?;
    let (grid, n, _) = grid_and_powers(problem, ov)?;
    let omega = match problem.equation {
        Equation::Schrodinger => Complex64::new(1.0, 0.0),
        _ => ov
            .omega
            .or(problem.omega)
            .unwrap_or(Complex64::new(1.0, 0.0)),
    };
    let exact_fn = move |x: f64| exact.eval(x);
    let case = Case {
        problem: label.to_string(),
        c: None,
        a: grid.a(),
        grid_m: grid.m(),
        n_powers: n,
        exact: &exact_fn,
    };
    let spps = || {
        let (setup, omega) = solve_setup(problem, ov)?;
        let basis = setup.basis(omega)?;
        Ok::<_, AppError>(solve_ivp(&basis, &ivp)?)
    };
    let (p, q) = (problem.p.clone(), problem.q.clone());
    let p_fn = move |x: f64| p.eval(x);
    let q_fn = {
        let q = q.clone();
        move |x: f64| q.eval(x)
    };
    let w2 = omega * omega;
    let q_scaled = move |x: f64| w2 * q.eval(x);
    let rk = match problem.equation {
        Equation::Schrodinger => Rk45Equation::Schrodinger { q: &q_fn },
        Equation::HelmholtzLike => Rk45Equation::Schrodinger { q: &q_scaled },
        Equation::SturmLiouville => Rk45Equation::SturmLiouville {
            p: &p_fn,
            q: &q_fn,
            omega,
        },
    };
    let rows = case.run(spps, &rk, &ivp).to_vec();
    let mut meta = Metadata::new("bench");
    meta.equation = Some(problem.equation.name().to_string());
    meta.n_powers = Some(n);
    meta.m = Some(grid.m());
    meta.interval_a = Some(grid.a());
    meta.omega = Some([omega.re, omega.im]);
    meta.rows = rows.len();
    meta.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((rows, meta))
}

/// Samples of `u'` next to `u`, for output.
pub fn solution_rows(s: &Solution) -> impl Iterator<Item = (f64, Complex64, Complex64)> + '_ {
    let nodes = s.u.grid().nodes();
    (0..s.u.len()).map(move |j| (nodes[j], s.u[j], s.du[j]))
}
