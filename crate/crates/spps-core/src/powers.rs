//! Formal powers: the recurrent integral families `X̃^(n)` and `X^(n)`.
//!
//! Columns are stored normalized, `Y^(n) = X^(n) / n!`, which turns the
//! recurrence `X^(n) = n ∫ X^(n-1) w` into the plain antiderivative
//! `Y^(n) = ∫_0^x Y^(n-1) w`. The weight alternates between two functions
//! `A` and `B`:
//!
//! | variant          | `A`     | `B`     |
//! |------------------|---------|---------|
//! | Schrödinger      | `q`     | `1`     |
//! | Sturm–Liouville  | `g0²`   | `g⁻²`   |
//!
//! `ỹ[n]` uses `A` for odd `n` and `B` for even `n`; `y[n]` the other way
//! round.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::grid::{cumulative_simpson_dd, same_grid, Grid, SampledFunction};

/// Default number of formal powers `N`.
pub const DEFAULT_N_POWERS: usize = 64;
/// Largest supported `N`.
pub const MAX_N_POWERS: usize = 200;
/// Relative threshold for the nonvanishing checks on `g0` and `g`.
pub const VANISH_RELATIVE: f64 = 1e-12;

/// Which equation the table belongs to, with the functions that define its
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// `-u'' + q u = 0` (and `-u'' + ω² q u = 0`).
    Schrodinger { q: SampledFunction },
    /// `(p u')' + q u = ω² u` through a particular solution `g0` and
    /// `g = sqrt(p) g0`.
    SturmLiouville {
        g0: SampledFunction,
        g: SampledFunction,
    },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Schrodinger { .. } => "schrodinger",
            Variant::SturmLiouville { .. } => "sturm-liouville",
        }
    }
}

/// Normalized formal powers `ỹ[n] = X̃^(n)/n!` and `y[n] = X^(n)/n!` for
/// `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct FormalPowerTable {
    grid: Arc<Grid>,
    n_max: usize,
    y_tilde: Vec<SampledFunction>,
    y: Vec<SampledFunction>,
    // low-order parts of the double-double columns
    y_tilde_lo: Vec<Vec<Complex64>>,
    y_lo: Vec<Vec<Complex64>>,
    variant: Variant,
    weight_a: Vec<Complex64>,
    weight_b: Vec<Complex64>,
    sup_a: f64,
    sup_b: f64,
    weight_bound: f64,
    tail_constant: f64,
}

fn check_n(n_max: usize) -> Result<()> {
    if !(1..=MAX_N_POWERS).contains(&n_max) {
        return Err(Error::PowersOutOfRange {
            min: 1,
            max: MAX_N_POWERS,
            got: n_max,
        });
    }
    Ok(())
}

fn check_finite(f: &SampledFunction, what: &'static str) -> Result<()> {
    match f.values().iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// Fails when some node of `f` is below `VANISH_RELATIVE * max|f|`.
pub(crate) fn check_nonvanishing(f: &SampledFunction, what: &'static str) -> Result<()> {
    let scale = f.max_abs();
    let (index, magnitude) = f.min_abs();
    if scale == 0.0 || magnitude < VANISH_RELATIVE * scale {
        return Err(Error::Vanishing {
            what,
            index,
            magnitude,
        });
    }
    Ok(())
}

/// Formal powers for `-u'' + q u = 0`.
pub fn schrodinger_formal_powers(q: &SampledFunction, n_max: usize) -> Result<FormalPowerTable> {
    check_n(n_max)?;
    check_finite(q, "potential q")?;
    let weight_a = q.values().to_vec();
    let weight_b = vec![Complex64::new(1.0, 0.0); q.len()];
    let sup_q = q.max_abs();
    let a = q.grid().a();
    let variant = Variant::Schrodinger { q: q.clone() };
    let mut table = build(q.grid().clone(), n_max, variant, weight_a, weight_b);
    table.weight_bound = sup_q.max(1.0);
    table.tail_constant = libm::sqrt(sup_q) * a;
    Ok(table)
}

/// Formal powers for the Sturm–Liouville form, from a nonvanishing
/// particular solution `g0` and `g = sqrt(p) g0`.
pub fn sl_formal_powers(
    g0: &SampledFunction,
    g: &SampledFunction,
    n_max: usize,
) -> Result<FormalPowerTable> {
    check_n(n_max)?;
    if !same_grid(g0.grid(), g.grid()) {
        return Err(Error::GridMismatch);
    }
    check_finite(g0, "g0")?;
    check_finite(g, "g")?;
    check_nonvanishing(g0, "g0")?;
    check_nonvanishing(g, "g")?;
    let weight_a: Vec<Complex64> = g0.values().iter().map(|v| v * v).collect();
    let weight_b: Vec<Complex64> = g.values().iter().map(|v| (v * v).inv()).collect();
    let variant = Variant::SturmLiouville {
        g0: g0.clone(),
        g: g.clone(),
    };
    let mut table = build(g0.grid().clone(), n_max, variant, weight_a, weight_b);
    table.weight_bound = table.sup_a.max(table.sup_b);
    table.tail_constant = table.weight_bound * table.grid.a();
    Ok(table)
}

fn build(
    grid: Arc<Grid>,
    n_max: usize,
    variant: Variant,
    weight_a: Vec<Complex64>,
    weight_b: Vec<Complex64>,
) -> FormalPowerTable {
    let len = grid.len();
    let zero = Complex64::new(0.0, 0.0);
    let one = SampledFunction::constant(grid.clone(), Complex64::new(1.0, 0.0));
    let mut y_tilde = Vec::with_capacity(n_max + 1);
    let mut y = Vec::with_capacity(n_max + 1);
    let mut y_tilde_lo = Vec::with_capacity(n_max + 1);
    let mut y_lo = Vec::with_capacity(n_max + 1);
    y_tilde.push(one.clone());
    y.push(one);
    y_tilde_lo.push(vec![zero; len]);
    y_lo.push(vec![zero; len]);
    let mut prev_t = vec![Cdd::from_c64(Complex64::new(1.0, 0.0)); len];
    let mut prev_y = prev_t.clone();
    let mut next = vec![Cdd::default(); len];
    for n in 1..=n_max {
        let (wt, wy) = if n % 2 == 1 {
            (&weight_a, &weight_b)
        } else {
            (&weight_b, &weight_a)
        };
        for (prev, w, hi_out, lo_out) in [
            (&mut prev_t, wt, &mut y_tilde, &mut y_tilde_lo),
            (&mut prev_y, wy, &mut y, &mut y_lo),
        ] {
            cumulative_simpson_dd(|j| prev[j].mul_c64(w[j]), grid.h(), grid.m(), &mut next);
            core::mem::swap(prev, &mut next);
            hi_out.push(SampledFunction::from_parts(
                grid.clone(),
                prev.iter().map(|v| v.hi()).collect(),
            ));
            lo_out.push(prev.iter().map(|v| v.lo()).collect());
        }
    }
    let sup = |w: &[Complex64]| w.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let sup_a = sup(&weight_a);
    let sup_b = sup(&weight_b);
    FormalPowerTable {
        grid,
        n_max,
        y_tilde,
        y,
        y_tilde_lo,
        y_lo,
        variant,
        weight_a,
        weight_b,
        sup_a,
        sup_b,
        weight_bound: 0.0,
        tail_constant: 0.0,
    }
}

impl FormalPowerTable {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Highest computed index `N`.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn is_schrodinger(&self) -> bool {
        matches!(self.variant, Variant::Schrodinger { .. })
    }

    /// `X̃^(n)/n!`.
    pub fn y_tilde(&self, n: usize) -> &SampledFunction {
        &self.y_tilde[n]
    }

    /// `X^(n)/n!`.
    pub fn y(&self, n: usize) -> &SampledFunction {
        &self.y[n]
    }

    pub(crate) fn y_tilde_dd(&self, n: usize, j: usize) -> Cdd {
        Cdd::from_parts(self.y_tilde[n][j], self.y_tilde_lo[n][j])
    }

    pub(crate) fn y_dd(&self, n: usize, j: usize) -> Cdd {
        Cdd::from_parts(self.y[n][j], self.y_lo[n][j])
    }

    /// Recurrence weight that produced `ỹ[n]` (so `ỹ[n]' = ỹ[n-1] * w`).
    pub fn y_tilde_weight(&self, n: usize) -> &[Complex64] {
        if n % 2 == 1 {
            &self.weight_a
        } else {
            &self.weight_b
        }
    }

    /// Recurrence weight that produced `y[n]`.
    pub fn y_weight(&self, n: usize) -> &[Complex64] {
        if n % 2 == 1 {
            &self.weight_b
        } else {
            &self.weight_a
        }
    }

    /// `q` for Schrödinger tables, `g0²` for Sturm–Liouville ones.
    pub fn weight_a(&self) -> &[Complex64] {
        &self.weight_a
    }

    /// `1` for Schrödinger tables, `g⁻²` for Sturm–Liouville ones.
    pub fn weight_b(&self) -> &[Complex64] {
        &self.weight_b
    }

    /// `W`: `max(1, sup|q|)` or `max(sup|g0|², sup|g⁻²|)`. Every column obeys
    /// `max|ỹ[n]|, max|y[n]| <= (W a)^n / n!`.
    pub fn weight_bound(&self) -> f64 {
        self.weight_bound
    }

    /// `c = sqrt(max|q|) a` for Schrödinger tables (even columns obey
    /// `max|ỹ[n]| <= c^n / n!`); `W a` for Sturm–Liouville tables.
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// Growth rate `r` such that the assembled series terms at `ω` are
    /// bounded by `(|ω| r)^n / n!`.
    pub fn tail_rate(&self) -> f64 {
        self.tail_constant
    }

    /// A-priori remainder bound, see [`tail_bound`].
    pub fn tail_bound(&self, omega_abs: f64, n_from: usize) -> f64 {
        tail_bound(self, omega_abs, n_from)
    }

    /// Smallest `N'` with `tail_bound(omega_abs, N'+1) <= threshold`,
    /// capped at 1000.
    pub fn required_powers(&self, omega_abs: f64, threshold: f64) -> usize {
        (1..=1000)
            .find(|&n| self.tail_bound(omega_abs, n + 1) <= threshold)
            .unwrap_or(1000)
    }

    /// A-posteriori estimate of the discarded remainder in the assembled
    /// series (values and derivatives) at `|ω|`.
    ///
    /// Extrapolates the decay of the last computed terms geometrically over
    /// two index steps and never exceeds the a-priori [`tail_bound`].
    pub fn truncation_estimate(&self, omega_abs: f64) -> f64 {
        let prior = self.tail_bound(omega_abs, self.n_max + 1);
        let n = self.n_max;
        if n < 3 {
            return prior;
        }
        let term = |k: usize| self.term_magnitude(omega_abs, k);
        let mut total = 0.0;
        let mut worst_ratio: f64 = 0.0;
        for last in [n, n - 1] {
            let t_last = term(last);
            if t_last == 0.0 {
                continue;
            }
            let t_prev = term(last - 2);
            if t_prev == 0.0 {
                return prior;
            }
            worst_ratio = worst_ratio.max(t_last / t_prev);
            total += t_last;
        }
        if worst_ratio >= 0.5 {
            return prior;
        }
        let estimate = total * worst_ratio / (1.0 - worst_ratio);
        estimate.min(prior)
    }

    /// Magnitude of the `k`-th assembled term (value plus derivative).
    fn term_magnitude(&self, omega_abs: f64, k: usize) -> f64 {
        let (col, exponent) = if k.is_multiple_of(2) {
            (&self.y_tilde, k)
        } else if self.is_schrodinger() {
            (&self.y, k - 1)
        } else {
            (&self.y, k)
        };
        let power = libm::pow(omega_abs, exponent as f64);
        let value = col[k].max_abs();
        let deriv = if k > 0 {
            col[k - 1].max_abs() * self.sup_b
        } else {
            0.0
        };
        power * (value + deriv)
    }
}

/// `Σ_{n >= n_from} (omega_abs * r)^n / n!` with `r = table.tail_rate()`;
/// saturates to `+inf` on overflow.
pub fn tail_bound(table: &FormalPowerTable, omega_abs: f64, n_from: usize) -> f64 {
    exp_tail(omega_abs * table.tail_rate(), n_from)
}

/// `Σ_{n >= n_from} rho^n / n!`.
///
/// Terms come from the log-gamma closed form and are summed backwards from
/// an upper index that depends only on `rho` (for `n_from` below it), so the
/// result is non-increasing in `n_from` in floating point as well.
pub fn exp_tail(rho: f64, n_from: usize) -> f64 {
    if rho.is_nan() || rho < 0.0 {
        return f64::NAN;
    }
    if rho == 0.0 {
        return if n_from == 0 { 1.0 } else { 0.0 };
    }
    if rho.is_infinite() || (rho > 800.0 && (n_from as f64) < rho) {
        return f64::INFINITY;
    }
    let k0 = libm::ceil(2.0 * rho) as usize + 50;
    let last = n_from.max(k0) + 200;
    let ln_rho = libm::log(rho);
    let mut sum = 0.0;
    for k in (n_from..=last).rev() {
        let kf = k as f64;
        sum += libm::exp(kf * ln_rho - libm::lgamma(kf + 1.0));
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample_real};

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn zero_potential_collapses_to_monomials_of_degree_one() {
        let g = make_grid(1.0, 100).unwrap();
        let q = sample_real(|_| 0.0, &g).unwrap();
        let t = schrodinger_formal_powers(&q, 10).unwrap();
        for n in 1..=10 {
            assert_eq!(t.y_tilde(n).max_abs(), 0.0);
        }
        for (j, &x) in g.nodes().iter().enumerate() {
            assert!((t.y(1)[j].re - x).abs() < 1e-15);
        }
        for n in 2..=10 {
            assert_eq!(t.y(n).max_abs(), 0.0);
        }
    }

    #[test]
    fn unit_potential_gives_monomials() {
        let g = make_grid(1.0, 2000).unwrap();
        let q = sample_real(|_| 1.0, &g).unwrap();
        let t = schrodinger_formal_powers(&q, 20).unwrap();
        for n in 0..=20 {
            for (j, &x) in g.nodes().iter().enumerate().step_by(97) {
                let exact = libm::pow(x, n as f64) / factorial(n);
                assert!((t.y_tilde(n)[j].re - exact).abs() < 1e-14, "n={n} j={j}");
                assert!((t.y(n)[j].re - exact).abs() < 1e-14, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn negative_unit_potential_gives_cosine_series() {
        let g = make_grid(1.0, 2000).unwrap();
        let q = sample_real(|_| -1.0, &g).unwrap();
        let t = schrodinger_formal_powers(&q, 30).unwrap();
        for n in 0..=30usize {
            let sign = if n.div_ceil(2) % 2 == 0 { 1.0 } else { -1.0 };
            let exact = sign / factorial(n);
            assert!((t.y_tilde(n).last().re - exact).abs() < 1e-14, "n={n}");
        }
        let cos1: f64 = (0..=30).step_by(2).map(|n| t.y_tilde(n).last().re).sum();
        assert!((cos1 - libm::cos(1.0)).abs() < 1e-14);
    }

    #[test]
    fn sl_with_unit_weights_gives_monomials() {
        let g = make_grid(1.0, 4000).unwrap();
        let one = sample_real(|_| 1.0, &g).unwrap();
        let t = sl_formal_powers(&one, &one, 12).unwrap();
        for n in 0..=12 {
            let exact = 1.0 / factorial(n);
            assert!((t.y_tilde(n).last().re - exact).abs() < 1e-14);
            assert!((t.y(n).last().re - exact).abs() < 1e-14);
        }
        assert_eq!(t.weight_bound(), 1.0);
    }

    #[test]
    fn column_zero_is_one_regardless_of_weights() {
        let g = make_grid(2.0, 100).unwrap();
        let g0 = sample_real(|x| 2.0 + libm::sin(x), &g).unwrap();
        let gg = sample_real(|x| 1.0 + x * x, &g).unwrap();
        let t = sl_formal_powers(&g0, &gg, 5).unwrap();
        assert!(t
            .y_tilde(0)
            .values()
            .iter()
            .all(|v| *v == Complex64::new(1.0, 0.0)));
        assert!(t
            .y(0)
            .values()
            .iter()
            .all(|v| *v == Complex64::new(1.0, 0.0)));
        for n in 1..=5 {
            assert_eq!(t.y_tilde(n).first(), Complex64::new(0.0, 0.0));
            assert_eq!(t.y(n).first(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn vanishing_g0_is_rejected() {
        let g = make_grid(1.0, 10).unwrap();
        let g0 = sample_real(|x| x - 0.5, &g).unwrap();
        let one = sample_real(|_| 1.0, &g).unwrap();
        let err = sl_formal_powers(&g0, &one, 4).unwrap_err();
        assert_eq!(err.kind(), "vanishing");
        assert_eq!(err.module(), "particular-solution");
    }

    #[test]
    fn n_max_range_is_enforced() {
        let g = make_grid(1.0, 10).unwrap();
        let q = sample_real(|_| 1.0, &g).unwrap();
        assert!(schrodinger_formal_powers(&q, 0).is_err());
        assert!(schrodinger_formal_powers(&q, MAX_N_POWERS + 1).is_err());
    }

    #[test]
    fn normalized_matches_unnormalized_recurrence() {
        let g = make_grid(1.5, 600).unwrap();
        let q = sample_real(|x| 1.0 + x - 2.0 * x * x, &g).unwrap();
        let t = schrodinger_formal_powers(&q, 12).unwrap();
        // unnormalized X^(n) = n ∫ X^(n-1) w, computed independently
        let mut x_tilde = sample_real(|_| 1.0, &g).unwrap();
        let mut x_plain = x_tilde.clone();
        for n in 1..=12 {
            let (wt, wy): (&dyn Fn(usize) -> Complex64, &dyn Fn(usize) -> Complex64) = if n % 2 == 1
            {
                (&|j| q[j], &|_| Complex64::new(1.0, 0.0))
            } else {
                (&|_| Complex64::new(1.0, 0.0), &|j| q[j])
            };
            let nt = x_tilde.map(|v| v);
            let prod_t = SampledFunction::new(
                g.clone(),
                (0..g.len()).map(|j| nt[j] * wt(j) * n as f64).collect(),
            )
            .unwrap();
            let prod_y = SampledFunction::new(
                g.clone(),
                (0..g.len())
                    .map(|j| x_plain[j] * wy(j) * n as f64)
                    .collect(),
            )
            .unwrap();
            x_tilde = crate::grid::cumulative_integral(&prod_t);
            x_plain = crate::grid::cumulative_integral(&prod_y);
            let f = factorial(n);
            for j in (1..g.len()).step_by(37) {
                let a = t.y_tilde(n)[j] * f;
                let b = x_tilde[j];
                assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-300), "n={n}");
                let a = t.y(n)[j] * f;
                let b = x_plain[j];
                assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-300), "n={n}");
            }
        }
    }

    #[test]
    fn tail_bound_examples() {
        let g = make_grid(1.0, 10).unwrap();
        let q = sample_real(|_| 1.0, &g).unwrap();
        let t = schrodinger_formal_powers(&q, 4).unwrap();
        assert_eq!(t.tail_bound(0.0, 1), 0.0);
        // oracle: direct summation of 1/n! for n >= 60 using exact f64 factorials
        let mut oracle = 0.0;
        for n in 60..=140 {
            oracle += 1.0 / factorial(n);
        }
        let b = t.tail_bound(1.0, 60);
        assert!(b <= 1e-80 && b >= 1.0 / factorial(60));
        assert!((b - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn tail_bound_is_monotone_and_saturates() {
        for rho in [0.5, 3.0, 40.0, 700.0] {
            let mut prev = f64::INFINITY;
            for n in 0..300 {
                let b = exp_tail(rho, n);
                assert!(b <= prev, "rho={rho} n={n}");
                prev = b;
            }
        }
        assert_eq!(exp_tail(2000.0, 10), f64::INFINITY);
        assert!((exp_tail(1.0, 0) - core::f64::consts::E).abs() < 1e-15);
    }
}
