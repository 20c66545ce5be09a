//! Error reports comparing a computed solution with a reference.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{same_grid, SampledFunction};

/// Denominator floor of the relative error.
pub const RELATIVE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub max_abs_error: f64,
    /// `max_abs_error / max_j |exact_j|`, a uniform relative error that stays
    /// meaningful near zeros of the solution.
    pub max_rel_error: f64,
    pub n_powers_used: usize,
    pub grid_m: usize,
    pub wall_time_ms: f64,
}

/// Compares two functions sampled on the same grid. `n_powers_used` and
/// `wall_time_ms` are left at zero for the caller to fill in.
pub fn compare(candidate: &SampledFunction, exact: &SampledFunction) -> Result<ErrorReport> {
    if !same_grid(candidate.grid(), exact.grid()) {
        return Err(Error::GridMismatch);
    }
    let (abs, scale) = candidate
        .values()
        .iter()
        .zip(exact.values())
        .fold((0.0, 0.0), |(e, s): (f64, f64), (c, x)| {
            (e.max((c - x).norm()), s.max(x.norm()))
        });
    Ok(ErrorReport {
        max_abs_error: abs,
        max_rel_error: abs / scale.max(RELATIVE_FLOOR),
        n_powers_used: 0,
        grid_m: candidate.grid().m(),
        wall_time_ms: 0.0,
    })
}

/// [`compare`] against a closed form evaluated at the nodes.
pub fn compare_with(
    candidate: &SampledFunction,
    exact: impl Fn(f64) -> Complex64,
) -> Result<ErrorReport> {
    let reference = crate::grid::sample(exact, candidate.grid())?;
    compare(candidate, &reference)
}
