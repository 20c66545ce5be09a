//! Dormand–Prince 4(5) reference integrator with PI step control and the
//! standard 4th-order continuous extension.
//!
//! This is the independent baseline the series solver is checked and
//! benchmarked against; it shares no code with the quadrature path.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{IvpSpec, Solution};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Supported tolerance range for [`rk45_solve`].
pub const TOLERANCE_RANGE: (f64, f64) = (1e-13, 1e-3);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk45Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step length.
    pub max_step: f64,
}

impl Rk45Options {
    pub fn with_tolerance(tol: f64) -> Self {
        Rk45Options {
            rtol: tol,
            atol: tol,
            max_steps: 5_000_000,
            max_step: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Rk45Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(x, y)` from `x = 0` and reports the state at every
/// entry of `outputs` (non-decreasing, starting at or after 0).
///
/// The returned vector is row-major, `outputs.len() * y0.len()` long.
pub fn integrate_dense<F>(
    mut f: F,
    y0: &[f64],
    outputs: &[f64],
    opts: &Rk45Options,
) -> Result<(Vec<f64>, Rk45Stats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut out = vec![0.0; outputs.len() * dim];
    let mut stats = Rk45Stats::default();
    let x_end = outputs.last().copied().unwrap_or(0.0);

    let mut x = 0.0;
    let mut y = y0.to_vec();
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= x {
        out[next_out * dim..(next_out + 1) * dim].copy_from_slice(&y);
        next_out += 1;
    }
    if next_out == outputs.len() {
        return Ok((out, stats));
    }

    let mut k = [
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    ];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut cont = [
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    ];

    f(x, &y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, x, &y, &k[0], x_end, opts, &mut stats).min(opts.max_step);
    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;

    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepBudgetExhausted {
                max_steps: opts.max_steps,
                x,
            });
        }
        if h <= 10.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Err(Error::StepSizeUnderflow { x });
        }
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }

        let [k1, k2, k3, k4, k5, k6, k7] = &mut k;
        for i in 0..dim {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(x + C2 * h, &tmp, k2);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(x + C3 * h, &tmp, k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(x + C4 * h, &tmp, k4);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(x + C5 * h, &tmp, k5);
        for i in 0..dim {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let x_new = if last { x_end } else { x + h };
        f(x_new, &tmp, k6);
        for i in 0..dim {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(x_new, &y_new, k7);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..dim {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sk) * (e / sk);
        }
        let err = libm::sqrt(err / dim as f64);
        if !err.is_finite() {
            h *= 0.2;
            stats.rejected += 1;
            rejected_last = true;
            continue;
        }

        let fac11 = libm::pow(err, EXPO1);
        if err <= 1.0 {
            for i in 0..dim {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                cont[0][i] = y[i];
                cont[1][i] = dy;
                cont[2][i] = bspl;
                cont[3][i] = dy - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next_out < outputs.len() && (outputs[next_out] <= x_new || last) {
                let theta = ((outputs[next_out] - x) / h).clamp(0.0, 1.0);
                let theta1 = 1.0 - theta;
                let row = &mut out[next_out * dim..(next_out + 1) * dim];
                for i in 0..dim {
                    row[i] = cont[0][i]
                        + theta
                            * (cont[1][i]
                                + theta1
                                    * (cont[2][i] + theta * (cont[3][i] + theta1 * cont[4][i])));
                }
                next_out += 1;
            }
            stats.accepted += 1;
            core::mem::swap(&mut y, &mut y_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            x = x_new;
            if last || next_out == outputs.len() {
                return Ok((out, stats));
            }
            let mut fac = fac11 / libm::pow(err_old, BETA);
            fac = (fac / SAFE).clamp(0.1, 5.0);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            rejected_last = false;
            h = h_new.min(opts.max_step);
        } else {
            h /= (fac11 / SAFE).min(5.0);
            stats.rejected += 1;
            rejected_last = true;
        }
    }
}

fn initial_step<F>(
    f: &mut F,
    x: f64,
    y: &[f64],
    f0: &[f64],
    x_end: f64,
    opts: &Rk45Options,
    stats: &mut Rk45Stats,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    let span = (x_end - x).abs();
    let norm = |v: &[f64]| {
        let s: f64 = v
            .iter()
            .zip(y)
            .map(|(vi, yi)| {
                let sk = opts.atol + opts.rtol * yi.abs();
                (vi / sk) * (vi / sk)
            })
            .sum();
        libm::sqrt(s / dim as f64)
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(yi, fi)| yi + h0 * fi).collect();
    let mut f1 = vec![0.0; dim];
    f(x + h0, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
    let d2 = norm(&diff);
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        libm::pow(0.01 / dmax, 0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Which second-order equation [`rk45_solve`] integrates.
#[derive(Clone, Copy)]
pub enum Rk45Equation<'a> {
    /// `-u'' + q u = 0`, integrated as `u' = v`, `v' = q u`.
    Schrodinger { q: &'a dyn Fn(f64) -> Complex64 },
    /// `(p u')' + q u = ω² u`, integrated as `u' = v / p`,
    /// `v' = (ω² - q) u` with `v = p u'`.
    SturmLiouville {
        p: &'a dyn Fn(f64) -> Complex64,
        q: &'a dyn Fn(f64) -> Complex64,
        omega: Complex64,
    },
}

/// Solves the initial value problem on the nodes of `grid` with
/// `rtol = atol = tol`.
pub fn rk45_solve(
    grid: &Arc<Grid>,
    equation: &Rk45Equation<'_>,
    ivp: &IvpSpec,
    tol: f64,
) -> Result<Solution> {
    rk45_solve_with_stats(grid, equation, ivp, tol).map(|(s, _)| s)
}

pub fn rk45_solve_with_stats(
    grid: &Arc<Grid>,
    equation: &Rk45Equation<'_>,
    ivp: &IvpSpec,
    tol: f64,
) -> Result<(Solution, Rk45Stats)> {
    rk45_solve_with(grid, equation, ivp, &Rk45Options::with_tolerance(tol))
}

/// Like [`rk45_solve_with_stats`] with explicit options. Both tolerances must
/// lie in [`TOLERANCE_RANGE`].
pub fn rk45_solve_with(
    grid: &Arc<Grid>,
    equation: &Rk45Equation<'_>,
    ivp: &IvpSpec,
    opts: &Rk45Options,
) -> Result<(Solution, Rk45Stats)> {
    let (lo, hi) = TOLERANCE_RANGE;
    for tol in [opts.rtol, opts.atol] {
        if !(lo..=hi).contains(&tol) {
            return Err(Error::ToleranceOutOfRange { tol });
        }
    }
    let p_at = |x: f64| match equation {
        Rk45Equation::Schrodinger { .. } => Complex64::new(1.0, 0.0),
        Rk45Equation::SturmLiouville { p, .. } => p(x),
    };
    let rhs = |x: f64, s: &[f64], ds: &mut [f64]| {
        let u = Complex64::new(s[0], s[1]);
        let v = Complex64::new(s[2], s[3]);
        let (du, dv) = match equation {
            Rk45Equation::Schrodinger { q } => (v, q(x) * u),
            Rk45Equation::SturmLiouville { p, q, omega } => (v / p(x), (omega * omega - q(x)) * u),
        };
        ds[0] = du.re;
        ds[1] = du.im;
        ds[2] = dv.re;
        ds[3] = dv.im;
    };
    let v0 = ivp.du0 * p_at(0.0);
    let y0 = [ivp.u0.re, ivp.u0.im, v0.re, v0.im];
    let (states, stats) = integrate_dense(rhs, &y0, grid.nodes(), opts)?;
    let mut u = Vec::with_capacity(grid.len());
    let mut du = Vec::with_capacity(grid.len());
    for (j, &x) in grid.nodes().iter().enumerate() {
        let s = &states[4 * j..4 * j + 4];
        u.push(Complex64::new(s[0], s[1]));
        du.push(Complex64::new(s[2], s[3]) / p_at(x));
    }
    Ok((
        Solution {
            u: SampledFunction::new(grid.clone(), u)?,
            du: SampledFunction::new(grid.clone(), du)?,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn max_err(s: &SampledFunction, exact: impl Fn(f64) -> f64) -> f64 {
        s.grid()
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &x)| (s[j] - Complex64::new(exact(x), 0.0)).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn free_particle_is_exact() {
        let g = make_grid(1.0, 100).unwrap();
        let q = |_: f64| Complex64::new(0.0, 0.0);
        let s = rk45_solve(
            &g,
            &Rk45Equation::Schrodinger { q: &q },
            &IvpSpec::real(0.0, 1.0),
            1e-8,
        )
        .unwrap();
        assert!(max_err(&s.u, |x| x) < 1e-14);
        assert!(max_err(&s.du, |_| 1.0) < 1e-14);
    }

    #[test]
    fn oscillator_within_tolerance() {
        let g = make_grid(1.0, 1000).unwrap();
        let q = |_: f64| Complex64::new(-1.0, 0.0);
        let s = rk45_solve(
            &g,
            &Rk45Equation::Schrodinger { q: &q },
            &IvpSpec::real(1.0, -1.0),
            1e-10,
        )
        .unwrap();
        assert!(max_err(&s.u, |x| libm::cos(x) - libm::sin(x)) <= 1e-8);
    }

    #[test]
    fn tolerance_range_enforced() {
        let g = make_grid(1.0, 10).unwrap();
        let q = |_: f64| Complex64::new(0.0, 0.0);
        let eq = Rk45Equation::Schrodinger { q: &q };
        let ivp = IvpSpec::real(1.0, 0.0);
        assert_eq!(
            rk45_solve(&g, &eq, &ivp, 1e-14).unwrap_err().kind(),
            "tolerance_out_of_range"
        );
        assert!(rk45_solve(&g, &eq, &ivp, 1e-2).is_err());
    }

    #[test]
    fn sturm_liouville_system() {
        // ((1+x) u')' = ω² u with ω = 0, u(0) = 0, u'(0) = 1: u = ln(1+x)
        let g = make_grid(1.0, 200).unwrap();
        let p = |x: f64| Complex64::new(1.0 + x, 0.0);
        let q = |_: f64| Complex64::new(0.0, 0.0);
        let eq = Rk45Equation::SturmLiouville {
            p: &p,
            q: &q,
            omega: Complex64::new(0.0, 0.0),
        };
        let s = rk45_solve(&g, &eq, &IvpSpec::real(0.0, 1.0), 1e-12).unwrap();
        assert!(max_err(&s.u, libm::log1p) < 1e-10);
        assert!(max_err(&s.du, |x| 1.0 / (1.0 + x)) < 1e-10);
    }

    #[test]
    fn dense_output_hits_every_node() {
        let g = make_grid(2.0, 37).unwrap();
        let (states, stats) = integrate_dense(
            |_, y, dy| dy[0] = y[0],
            &[1.0],
            g.nodes(),
            &Rk45Options::with_tolerance(1e-10),
        )
        .unwrap();
        assert_eq!(states.len(), g.len());
        assert!(stats.accepted > 0);
        for (s, &x) in states.iter().zip(g.nodes()) {
            assert!((s - libm::exp(x)).abs() < 1e-8 * libm::exp(x));
        }
    }

    #[test]
    fn max_step_bounds_the_step_length() {
        let g = make_grid(1.0, 50).unwrap();
        let opts = Rk45Options {
            max_step: 0.01,
            ..Rk45Options::with_tolerance(1e-6)
        };
        let (_, stats) =
            integrate_dense(|_, y, dy| dy[0] = y[0], &[1.0], g.nodes(), &opts).unwrap();
        assert!(stats.accepted >= 100);
    }
}
