//! Nonvanishing particular solution `g0` of `(p g0')' + q g0 = 0` and the
//! auxiliary `g = sqrt(p) g0`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{assemble_schrodinger_basis_with, AssemblyOptions, IvpSpec};
use crate::error::{Error, Result};
use crate::grid::{same_grid, sample, Grid, SampledFunction};
use crate::powers::{
    check_nonvanishing, schrodinger_formal_powers, sl_formal_powers, FormalPowerTable,
    DEFAULT_N_POWERS, MAX_N_POWERS,
};
use crate::rk45::{rk45_solve_with, Rk45Equation, Rk45Options};

/// Tolerance of the Runge–Kutta integration used when `p` is not constant.
pub const G0_RK_TOLERANCE: f64 = 1e-13;

/// Relative residual tolerance for `(p g0')' + q g0 = 0`.
pub const RESIDUAL_RELATIVE: f64 = 1e-9;

/// Coefficients and particular solution of `(p u')' + q u = ω² u`.
#[derive(Debug, Clone)]
pub struct SlCoefficients {
    pub p: SampledFunction,
    pub q: SampledFunction,
    pub g0: SampledFunction,
    pub dg0: SampledFunction,
    pub g: SampledFunction,
    /// Residual of `(p g0')' + q g0` at interior nodes.
    pub residual: f64,
}

impl SlCoefficients {
    /// Formal powers with weights `g0²` and `g⁻²`.
    pub fn formal_powers(&self, n_max: usize) -> Result<FormalPowerTable> {
        sl_formal_powers(&self.g0, &self.g, n_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G0Options {
    /// Formal powers used when `p` is constant.
    pub n_powers: usize,
    pub rk_tolerance: f64,
}

impl Default for G0Options {
    fn default() -> Self {
        G0Options {
            n_powers: DEFAULT_N_POWERS,
            rk_tolerance: G0_RK_TOLERANCE,
        }
    }
}

/// Builds `g0` for the given coefficients.
///
/// For constant `p = p0` the equation is `-g0'' + (-q/p0) g0 = 0` (note the
/// sign flip between the two conventions), which is solved by the
/// Schrödinger formal powers at `ω = 1`. Otherwise the system
/// `g0' = v/p`, `v' = -q g0` is integrated with the Runge–Kutta baseline.
///
/// Of the two fundamental solutions `u1` and `u1 + i u2` the one with the
/// larger ratio `min|g0| / max|g0|` is returned; for real coefficients the
/// complex combination never vanishes since the Wronskian is nonzero.
pub fn build_g0(
    grid: &Arc<Grid>,
    p: &dyn Fn(f64) -> Complex64,
    q: &dyn Fn(f64) -> Complex64,
    opts: &G0Options,
) -> Result<SlCoefficients> {
    let p_s = sample(p, grid)?;
    let q_s = sample(q, grid)?;
    check_nonvanishing(&p_s, "p")?;
    let p0 = p_s.first();
    let constant_p = p_s.values().iter().all(|&v| v == p0);

    let (u1, du1, u2, du2) = if constant_p {
        let q_tilde = q_s.map(|v| -v / p0);
        let table = table_for_unit_omega(&q_tilde, opts.n_powers)?;
        let b = assemble_schrodinger_basis_with(
            &table,
            Complex64::new(1.0, 0.0),
            &AssemblyOptions {
                tail_tolerance: 1e-14,
            },
        )?;
        (b.u1, b.du1, b.u2, b.du2)
    } else {
        let eq = Rk45Equation::SturmLiouville {
            p,
            q,
            omega: Complex64::new(0.0, 0.0),
        };
        // Steps no longer than the grid spacing, so that every node comes from
        // a short interpolation and the sampled g0' stays smooth.
        let rk = Rk45Options {
            max_step: grid.h(),
            ..Rk45Options::with_tolerance(opts.rk_tolerance)
        };
        let (s1, _) = rk45_solve_with(grid, &eq, &IvpSpec::real(1.0, 0.0), &rk)?;
        let (s2, _) = rk45_solve_with(
            grid,
            &eq,
            &IvpSpec::new(Complex64::new(0.0, 0.0), p0.inv()),
            &rk,
        )?;
        (s1.u, s1.du, s2.u, s2.du)
    };

    let i = Complex64::new(0.0, 1.0);
    let combo = SampledFunction::linear_combination(&u1, Complex64::new(1.0, 0.0), &u2, i)?;
    let dcombo = SampledFunction::linear_combination(&du1, Complex64::new(1.0, 0.0), &du2, i)?;
    let (g0, dg0) = if spread(&u1) >= spread(&combo) {
        (u1, du1)
    } else {
        (combo, dcombo)
    };
    package(p_s, q_s, g0, dg0)
}

/// Validates a user-supplied `g0` (with its derivative) and packages it.
pub fn accept_user_g0(
    p: &SampledFunction,
    q: &SampledFunction,
    g0: &SampledFunction,
    dg0: &SampledFunction,
) -> Result<SlCoefficients> {
    for f in [q, g0, dg0] {
        if !same_grid(p.grid(), f.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    check_nonvanishing(p, "p")?;
    package(p.clone(), q.clone(), g0.clone(), dg0.clone())
}

fn package(
    p: SampledFunction,
    q: SampledFunction,
    g0: SampledFunction,
    dg0: SampledFunction,
) -> Result<SlCoefficients> {
    check_nonvanishing(&g0, "g0")?;
    let residual = residual(&p, &q, &g0, &dg0);
    let tolerance = RESIDUAL_RELATIVE * (1.0 + q.max_abs() * g0.max_abs());
    if !(residual <= tolerance) {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance,
        });
    }
    let root = continuous_sqrt(p.values());
    let g: Vec<Complex64> = root.iter().zip(g0.values()).map(|(s, v)| s * v).collect();
    let g = SampledFunction::new(p.grid().clone(), g)?;
    Ok(SlCoefficients {
        p,
        q,
        g0,
        dg0,
        g,
        residual,
    })
}

fn table_for_unit_omega(q: &SampledFunction, n_powers: usize) -> Result<FormalPowerTable> {
    let table = schrodinger_formal_powers(q, n_powers)?;
    let needed = table.required_powers(1.0, 1e-16);
    if needed > table.n_max() && n_powers < MAX_N_POWERS {
        return schrodinger_formal_powers(q, needed.min(MAX_N_POWERS));
    }
    Ok(table)
}

fn spread(f: &SampledFunction) -> f64 {
    let max = f.max_abs();
    if max == 0.0 {
        return 0.0;
    }
    f.min_abs().1 / max
}

/// Max of `|(p g0')' + q g0|` over nodes `2..m-2`, with the outer derivative
/// taken by the fourth-order centered difference.
pub fn residual(
    p: &SampledFunction,
    q: &SampledFunction,
    g0: &SampledFunction,
    dg0: &SampledFunction,
) -> f64 {
    let n = p.len();
    if n < 5 {
        return 0.0;
    }
    let h = p.grid().h();
    let flux: Vec<Complex64> = (0..n).map(|j| p[j] * dg0[j]).collect();
    (2..n - 2)
        .map(|j| {
            let d =
                (flux[j - 2] - flux[j - 1] * 8.0 + flux[j + 1] * 8.0 - flux[j + 2]) / (12.0 * h);
            (d + q[j] * g0[j]).norm()
        })
        .fold(0.0, f64::max)
}

/// Principal square root at each node, with the sign flipped wherever that
/// keeps the value closer to the previous node.
pub fn continuous_sqrt(values: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(values.len());
    for v in values {
        let mut s = v.sqrt();
        if let Some(prev) = out.last() {
            if (s + prev).norm() < (s - prev).norm() {
                s = -s;
            }
        }
        out.push(s);
    }
    out
}
