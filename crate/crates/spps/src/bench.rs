//! SPPS against the Runge–Kutta baseline on problems with closed-form
//! solutions.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spps_core::basis::{assemble_schrodinger_basis, solve_ivp, IvpSpec, Solution};
use spps_core::grid::{make_grid, sample, Grid, SampledFunction};
use spps_core::powers::schrodinger_formal_powers;
use spps_core::report::{compare, ErrorReport};
use spps_core::rk45::{rk45_solve, Rk45Equation};

/// Tolerances tried for the Runge–Kutta baseline; the best one is reported.
pub const RK_TOLERANCES: [f64; 11] = [
    1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13,
];

/// One line of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: String,
    pub c: Option<f64>,
    pub method: String,
    #[serde(rename = "N")]
    pub n_powers: Option<usize>,
    pub m: usize,
    pub tol: Option<f64>,
    pub max_abs: Option<f64>,
    pub max_rel: Option<f64>,
    pub wall_ms: f64,
    /// Empty unless the method failed on this problem.
    pub error: Option<String>,
}

impl BenchRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    /// `q ≡ -c²`, `u = cos(cx) - sin(cx)/c`.
    NegativeSquare,
    /// `q ≡ c²`, `u = cosh(cx) - sinh(cx)/c`.
    PositiveSquare,
    /// `q = c²x² + c`, `u = e^{cx²/2} (1 - ∫₀ˣ e^{-ct²} dt)`.
    Quadratic,
}

impl Potential {
    pub fn label(self) -> &'static str {
        match self {
            Potential::NegativeSquare => "q=-c^2",
            Potential::PositiveSquare => "q=c^2",
            Potential::Quadratic => "q=c^2x^2+c",
        }
    }

    pub fn q(self, c: f64, x: f64) -> f64 {
        match self {
            Potential::NegativeSquare => -c * c,
            Potential::PositiveSquare => c * c,
            Potential::Quadratic => c * c * x * x + c,
        }
    }

    /// Solution with `u(0) = 1`, `u'(0) = -1`.
    pub fn exact(self, c: f64, x: f64) -> f64 {
        match self {
            Potential::NegativeSquare => (c * x).cos() - (c * x).sin() / c,
            Potential::PositiveSquare => (c * x).cosh() - (c * x).sinh() / c,
            Potential::Quadratic => {
                let integral = 0.5 * (std::f64::consts::PI / c).sqrt() * libm::erf(c.sqrt() * x);
                (0.5 * c * x * x).exp() * (1.0 - integral)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub potential: Potential,
    pub c: f64,
    pub n_powers: usize,
    /// Simpson's error grows like `(c h)^4`, so larger `c` gets a finer grid.
    pub grid_m: usize,
}

/// The six experiments, on `[0, 1]` with `u(0) = 1`, `u'(0) = -1`.
pub fn experiment_configs() -> Vec<ExperimentConfig> {
    use Potential::*;
    let row = |potential, c, n_powers, grid_m| ExperimentConfig {
        potential,
        c,
        n_powers,
        grid_m,
    };
    vec![
        row(NegativeSquare, 1.0, 56, 10_000),
        row(NegativeSquare, 10.0, 56, 20_000),
        row(PositiveSquare, 1.0, 50, 10_000),
        row(PositiveSquare, 10.0, 50, 20_000),
        row(Quadratic, 1.0, 58, 10_000),
        row(Quadratic, 30.0, 58, 40_000),
    ]
}

/// Worker count: `SPPS_THREADS` if set to a positive integer, otherwise the
/// available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("SPPS_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_paper_experiments() -> Vec<BenchRow> {
    run_configs(&experiment_configs(), worker_threads())
}

/// Runs each configuration with both methods. Rows come back in
/// configuration order (SPPS first) whatever the thread count.
pub fn run_configs(configs: &[ExperimentConfig], threads: usize) -> Vec<BenchRow> {
    parallel_map(configs, threads, run_config)
        .into_iter()
        .flatten()
        .collect()
}

pub fn run_config(cfg: &ExperimentConfig) -> [BenchRow; 2] {
    let ExperimentConfig {
        potential,
        c,
        n_powers,
        grid_m,
    } = *cfg;
    let q = move |x: f64| Complex64::new(potential.q(c, x), 0.0);
    let exact = move |x: f64| Complex64::new(potential.exact(c, x), 0.0);
    let ivp = IvpSpec::real(1.0, -1.0);
    let case = Case {
        problem: potential.label().to_string(),
        c: Some(c),
        a: 1.0,
        grid_m,
        n_powers,
        exact: &exact,
    };
    let spps = || {
        let grid = make_grid(1.0, grid_m)?;
        let table = schrodinger_formal_powers(&sample(q, &grid)?, n_powers)?;
        let basis = assemble_schrodinger_basis(&table, Complex64::new(1.0, 0.0))?;
        solve_ivp(&basis, &ivp)
    };
    let rk = Rk45Equation::Schrodinger { q: &q };
    case.run(spps, &rk, &ivp)
}

/// A problem with a known solution, for [`Case::run`].
pub struct Case<'a> {
    pub problem: String,
    pub c: Option<f64>,
    pub a: f64,
    pub grid_m: usize,
    pub n_powers: usize,
    pub exact: &'a dyn Fn(f64) -> Complex64,
}

impl Case<'_> {
    /// Times `spps` (all setup included) and the best Runge–Kutta tolerance.
    pub fn run<E: std::fmt::Display>(
        &self,
        spps: impl FnOnce() -> Result<Solution, E>,
        rk: &Rk45Equation<'_>,
        ivp: &IvpSpec,
    ) -> [BenchRow; 2] {
        let spps_row = {
            let start = Instant::now();
            let sol = spps();
            let wall_ms = elapsed_ms(start);
            let mut row = self.row("spps", Some(self.n_powers), None, wall_ms);
            let report = sol
                .map_err(|e| e.to_string())
                .and_then(|s| self.compare(&s.u).map_err(|e| e.to_string()));
            match report {
                Ok(r) => row.fill(&r),
                Err(e) => row.error = Some(e),
            }
            row
        };
        let rk_row = match make_grid(self.a, self.grid_m) {
            Ok(grid) => self.best_rk(&grid, rk, ivp),
            Err(e) => {
                let mut row = self.row("rk45", None, None, 0.0);
                row.error = Some(e.to_string());
                row
            }
        };
        [spps_row, rk_row]
    }

    fn best_rk(&self, grid: &Arc<Grid>, rk: &Rk45Equation<'_>, ivp: &IvpSpec) -> BenchRow {
        let mut best: Option<(f64, ErrorReport, f64)> = None;
        let mut last_err = None;
        for &tol in &RK_TOLERANCES {
            let start = Instant::now();
            let res = rk45_solve(grid, rk, ivp, tol);
            let wall_ms = elapsed_ms(start);
            match res.and_then(|s| self.compare(&s.u)) {
                Ok(r) => {
                    if best.is_none_or(|(_, b, _)| r.max_abs_error < b.max_abs_error) {
                        best = Some((tol, r, wall_ms));
                    }
                }
                Err(e) => last_err = Some(e.to_string()),
            }
        }
        match best {
            Some((tol, r, wall_ms)) => {
                let mut row = self.row("rk45", None, Some(tol), wall_ms);
                row.fill(&r);
                row
            }
            None => {
                let mut row = self.row("rk45", None, None, 0.0);
                row.error = last_err;
                row
            }
        }
    }

    fn compare(&self, u: &SampledFunction) -> spps_core::Result<ErrorReport> {
        let exact = sample(self.exact, u.grid())?;
        compare(u, &exact)
    }

    fn row(&self, method: &str, n: Option<usize>, tol: Option<f64>, wall_ms: f64) -> BenchRow {
        BenchRow {
            problem: self.problem.clone(),
            c: self.c,
            method: method.to_string(),
            n_powers: n,
            m: self.grid_m,
            tol,
            max_abs: None,
            max_rel: None,
            wall_ms,
            error: None,
        }
    }
}

impl BenchRow {
    fn fill(&mut self, r: &ErrorReport) {
        self.max_abs = Some(r.max_abs_error);
        self.max_rel = Some(r.max_rel_error);
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Applies `f` to every item on up to `threads` scoped workers and returns
/// the results in input order.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let workers = threads.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new(items.iter().map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot is filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_satisfy_the_initial_data() {
        for cfg in experiment_configs() {
            let (p, c) = (cfg.potential, cfg.c);
            let h = 1e-6;
            assert!((p.exact(c, 0.0) - 1.0).abs() < 1e-15);
            let du0 = (p.exact(c, h) - p.exact(c, -h)) / (2.0 * h);
            assert!((du0 + 1.0).abs() < 1e-7, "{:?} {c}: {du0}", p);
        }
    }

    #[test]
    fn closed_forms_solve_the_equation() {
        // -u'' + q u = 0 by central differences at a few interior points
        for cfg in experiment_configs() {
            let (p, c) = (cfg.potential, cfg.c);
            for x in [0.2, 0.5, 0.8] {
                let h = 1e-4;
                let u = |t| p.exact(c, t);
                let d2 = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
                let res = -d2 + p.q(c, x) * u(x);
                let scale = p.q(c, x).abs() * u(x).abs() + 1.0;
                assert!(res.abs() < 1e-5 * scale, "{:?} c={c} x={x}: {res}", p);
            }
        }
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..37).collect();
        for threads in [1, 2, 5, 64] {
            assert_eq!(
                parallel_map(&items, threads, |&i| i * i),
                items.iter().map(|i| i * i).collect::<Vec<_>>()
            );
        }
        assert!(parallel_map(&[] as &[usize], 4, |&i| i).is_empty());
    }

    #[test]
    fn small_row() {
        let cfg = ExperimentConfig {
            potential: Potential::NegativeSquare,
            c: 1.0,
            n_powers: 40,
            grid_m: 2000,
        };
        let [spps, rk] = run_config(&cfg);
        assert!(spps.is_ok() && rk.is_ok());
        assert_eq!((spps.method.as_str(), rk.method.as_str()), ("spps", "rk45"));
        assert!(spps.max_abs.unwrap() < 1e-10);
        assert!(RK_TOLERANCES.contains(&rk.tol.unwrap()));
        assert!(spps.tol.is_none() && rk.n_powers.is_none());
    }
}
