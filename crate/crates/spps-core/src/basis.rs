//! Assembly of the solution basis `(u1, u2)` from a formal power table, and
//! initial/boundary value solves by superposition.
//!
//! Derivatives are never obtained by differencing: each column satisfies
//! `Y^(n)' = Y^(n-1) w_n`, so `u'` is assembled term by term from the
//! previous column and the recurrence weight.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::grid::{same_grid, SampledFunction};
use crate::powers::FormalPowerTable;

/// Default relative tolerance for the truncation gate.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

const SINGULAR_RELATIVE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Assembly fails when the estimated truncation remainder exceeds
    /// `tail_tolerance * max(1, |ω|) * max(1, max|S1|, max|S2|)`, where
    /// `S1`, `S2` are the assembled power series.
    pub tail_tolerance: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `u1(0)=1, u1'(0)=0, u2(0)=0, u2'(0)=1`; Wronskian ≡ 1.
    Schrodinger,
    /// `u1 = g0 S1`, `u2 = g0 S2`; `p` times the Wronskian ≡ ω.
    SturmLiouville,
}

/// Two solutions and their derivatives on a grid, at a fixed `ω`.
#[derive(Debug, Clone)]
pub struct BasisPair {
    pub u1: SampledFunction,
    pub u2: SampledFunction,
    pub du1: SampledFunction,
    pub du2: SampledFunction,
    pub omega: Complex64,
    pub kind: BasisKind,
    /// Truncation estimate that passed the gate.
    pub truncation_estimate: f64,
}

impl BasisPair {
    /// `u1 u2' - u1' u2` at every node.
    pub fn wronskian(&self) -> Vec<Complex64> {
        (0..self.u1.len())
            .map(|j| self.u1[j] * self.du2[j] - self.du1[j] * self.u2[j])
            .collect()
    }
}

/// Initial data `u(0)`, `u'(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvpSpec {
    pub u0: Complex64,
    pub du0: Complex64,
}

impl IvpSpec {
    pub fn new(u0: Complex64, du0: Complex64) -> Self {
        IvpSpec { u0, du0 }
    }

    pub fn real(u0: f64, du0: f64) -> Self {
        IvpSpec::new(Complex64::new(u0, 0.0), Complex64::new(du0, 0.0))
    }
}

/// `alpha u + beta u' = gamma` at one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryForm {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl BoundaryForm {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64) -> Result<Self> {
        if alpha == Complex64::new(0.0, 0.0) && beta == Complex64::new(0.0, 0.0) {
            return Err(Error::TrivialBoundaryForm);
        }
        Ok(BoundaryForm { alpha, beta, gamma })
    }

    pub fn dirichlet(value: f64) -> Self {
        BoundaryForm {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            gamma: Complex64::new(value, 0.0),
        }
    }

    pub fn neumann(value: f64) -> Self {
        BoundaryForm {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
            gamma: Complex64::new(value, 0.0),
        }
    }

    fn apply(&self, u: Complex64, du: Complex64) -> Complex64 {
        self.alpha * u + self.beta * du
    }

    pub(crate) fn validate(&self) -> Result<()> {
        BoundaryForm::new(self.alpha, self.beta, self.gamma).map(|_| ())
    }
}

/// Boundary forms at `x = 0` (`left`) and `x = a` (`right`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpSpec {
    pub left: BoundaryForm,
    pub right: BoundaryForm,
}

impl BvpSpec {
    pub fn is_homogeneous(&self) -> bool {
        self.left.gamma == Complex64::new(0.0, 0.0) && self.right.gamma == Complex64::new(0.0, 0.0)
    }
}

/// A solution and its derivative.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: SampledFunction,
    pub du: SampledFunction,
}

/// Basis for `-u'' + ω² q u = 0`: `u1 = Σ_even ω^n ỹ[n]`,
/// `u2 = Σ_odd ω^(n-1) y[n]`. At `ω = 1` this solves `-u'' + q u = 0`.
pub fn assemble_schrodinger_basis(table: &FormalPowerTable, omega: Complex64) -> Result<BasisPair> {
    assemble_schrodinger_basis_with(table, omega, &AssemblyOptions::default())
}

pub fn assemble_schrodinger_basis_with(
    table: &FormalPowerTable,
    omega: Complex64,
    opts: &AssemblyOptions,
) -> Result<BasisPair> {
    if !table.is_schrodinger() {
        return Err(Error::VariantMismatch {
            expected: "schrodinger",
        });
    }
    let series = assemble_series(table, omega, 1)?;
    let estimate = gate(table, omega, &series, opts)?;
    let grid = table.grid().clone();
    Ok(BasisPair {
        u1: SampledFunction::from_parts(grid.clone(), series.s1),
        u2: SampledFunction::from_parts(grid.clone(), series.s2),
        du1: SampledFunction::from_parts(grid.clone(), series.ds1),
        du2: SampledFunction::from_parts(grid, series.ds2),
        omega,
        kind: BasisKind::Schrodinger,
        truncation_estimate: estimate,
    })
}

/// Basis for `(p u')' + q u = ω² u`: `u1 = g0 Σ_even ω^n ỹ[n]`,
/// `u2 = g0 Σ_odd ω^n y[n]`; derivatives by the product rule.
pub fn assemble_sl_basis(
    table: &FormalPowerTable,
    omega: Complex64,
    g0: &SampledFunction,
    dg0: &SampledFunction,
) -> Result<BasisPair> {
    assemble_sl_basis_with(table, omega, g0, dg0, &AssemblyOptions::default())
}

pub fn assemble_sl_basis_with(
    table: &FormalPowerTable,
    omega: Complex64,
    g0: &SampledFunction,
    dg0: &SampledFunction,
    opts: &AssemblyOptions,
) -> Result<BasisPair> {
    if table.is_schrodinger() {
        return Err(Error::VariantMismatch {
            expected: "sturm-liouville",
        });
    }
    if !same_grid(table.grid(), g0.grid()) || !same_grid(table.grid(), dg0.grid()) {
        return Err(Error::GridMismatch);
    }
    let series = assemble_series(table, omega, 0)?;
    let estimate = gate(table, omega, &series, opts)?;
    let len = g0.len();
    let mut u1 = Vec::with_capacity(len);
    let mut u2 = Vec::with_capacity(len);
    let mut du1 = Vec::with_capacity(len);
    let mut du2 = Vec::with_capacity(len);
    for j in 0..len {
        let (g, dg) = (g0[j], dg0[j]);
        u1.push(g * series.s1[j]);
        u2.push(g * series.s2[j]);
        du1.push(dg * series.s1[j] + g * series.ds1[j]);
        du2.push(dg * series.s2[j] + g * series.ds2[j]);
    }
    let grid = table.grid().clone();
    Ok(BasisPair {
        u1: SampledFunction::from_parts(grid.clone(), u1),
        u2: SampledFunction::from_parts(grid.clone(), u2),
        du1: SampledFunction::from_parts(grid.clone(), du1),
        du2: SampledFunction::from_parts(grid, du2),
        omega,
        kind: BasisKind::SturmLiouville,
        truncation_estimate: estimate,
    })
}

struct Series {
    s1: Vec<Complex64>,
    s2: Vec<Complex64>,
    ds1: Vec<Complex64>,
    ds2: Vec<Complex64>,
}

/// Sums `S1 = Σ_even ω^n ỹ[n]`, `S2 = Σ_odd ω^(n - shift) y[n]` and their
/// derivatives `S' = B Σ ω^e Y[n-1]`.
fn assemble_series(table: &FormalPowerTable, omega: Complex64, shift: usize) -> Result<Series> {
    let len = table.grid().len();
    let n_max = table.n_max();
    let w = Cdd::from_c64(omega);
    let mut powers = Vec::with_capacity(n_max + 1);
    let mut p = Cdd::from_c64(Complex64::new(1.0, 0.0));
    for _ in 0..=n_max {
        powers.push(p);
        p = p.mul(w);
    }
    let b = table.weight_b();
    let mut s1 = Vec::with_capacity(len);
    let mut s2 = Vec::with_capacity(len);
    let mut ds1 = Vec::with_capacity(len);
    let mut ds2 = Vec::with_capacity(len);
    for j in 0..len {
        let mut acc = [Cdd::default(); 4];
        // high to low so the small terms are accumulated first
        for n in (0..=n_max).rev() {
            if n % 2 == 0 {
                let wn = powers[n];
                acc[0] = acc[0].add(wn.mul(table.y_tilde_dd(n, j)));
                if n >= 2 {
                    acc[2] = acc[2].add(wn.mul(table.y_tilde_dd(n - 1, j)));
                }
            } else {
                let wn = powers[n - shift];
                acc[1] = acc[1].add(wn.mul(table.y_dd(n, j)));
                acc[3] = acc[3].add(wn.mul(table.y_dd(n - 1, j)));
            }
        }
        let round = |z: Cdd| z.hi() + z.lo();
        s1.push(round(acc[0]));
        s2.push(round(acc[1]));
        ds1.push(round(acc[2].mul_c64(b[j])));
        ds2.push(round(acc[3].mul_c64(b[j])));
    }
    for (what, v) in [("u1", &s1), ("u2", &s2), ("u1'", &ds1), ("u2'", &ds2)] {
        if let Some(index) = v.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { what, index });
        }
    }
    Ok(Series { s1, s2, ds1, ds2 })
}

fn gate(
    table: &FormalPowerTable,
    omega: Complex64,
    series: &Series,
    opts: &AssemblyOptions,
) -> Result<f64> {
    let omega_abs = omega.norm();
    let magnitude = series
        .s1
        .iter()
        .chain(&series.s2)
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    let threshold = opts.tail_tolerance * omega_abs.max(1.0) * magnitude;
    let estimate = table.truncation_estimate(omega_abs);
    if estimate > threshold {
        return Err(Error::TruncationUnreachable {
            omega_abs,
            estimate,
            threshold,
            required_n: table.required_powers(omega_abs, threshold),
        });
    }
    Ok(estimate)
}

/// A 2x2 linear system `M c = rhs` together with its singularity measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwo {
    pub matrix: [[Complex64; 2]; 2],
    pub rhs: [Complex64; 2],
}

impl TwoByTwo {
    pub fn det(&self) -> Complex64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Hadamard bound `|row0| |row1| >= |det|`.
    pub fn scale(&self) -> f64 {
        let row = |r: &[Complex64; 2]| libm::hypot(r[0].norm(), r[1].norm());
        row(&self.matrix[0]) * row(&self.matrix[1])
    }

    pub fn solve(&self) -> Result<[Complex64; 2]> {
        let det = self.det();
        let scale = self.scale();
        let det_abs = det.norm();
        if scale == 0.0 || det_abs < SINGULAR_RELATIVE * scale {
            return Err(Error::SingularSystem {
                det_abs,
                condition: if det_abs == 0.0 {
                    f64::INFINITY
                } else {
                    scale / det_abs
                },
            });
        }
        let m = &self.matrix;
        let [r0, r1] = self.rhs;
        Ok([
            (r0 * m[1][1] - m[0][1] * r1) / det,
            (m[0][0] * r1 - m[1][0] * r0) / det,
        ])
    }
}

fn combine(basis: &BasisPair, c: [Complex64; 2]) -> Solution {
    let grid = basis.u1.grid().clone();
    let len = grid.len();
    let u = (0..len)
        .map(|j| c[0] * basis.u1[j] + c[1] * basis.u2[j])
        .collect();
    let du = (0..len)
        .map(|j| c[0] * basis.du1[j] + c[1] * basis.du2[j])
        .collect();
    Solution {
        u: SampledFunction::from_parts(grid.clone(), u),
        du: SampledFunction::from_parts(grid, du),
    }
}

/// The system matching `u(0)`, `u'(0)`.
pub fn ivp_system(basis: &BasisPair, spec: &IvpSpec) -> TwoByTwo {
    TwoByTwo {
        matrix: [
            [basis.u1.first(), basis.u2.first()],
            [basis.du1.first(), basis.du2.first()],
        ],
        rhs: [spec.u0, spec.du0],
    }
}

/// Solves the initial value problem. For the Schrödinger basis the
/// coefficients are exactly `(u(0), u'(0))`.
pub fn solve_ivp(basis: &BasisPair, spec: &IvpSpec) -> Result<Solution> {
    let c = match basis.kind {
        BasisKind::Schrodinger => [spec.u0, spec.du0],
        BasisKind::SturmLiouville => ivp_system(basis, spec).solve()?,
    };
    Ok(combine(basis, c))
}

/// The system `B0[u] = γ0`, `Ba[u] = γa` for `u = A u1 + B u2`.
pub fn boundary_system(basis: &BasisPair, spec: &BvpSpec) -> TwoByTwo {
    let (l, r) = (&spec.left, &spec.right);
    TwoByTwo {
        matrix: [
            [
                l.apply(basis.u1.first(), basis.du1.first()),
                l.apply(basis.u2.first(), basis.du2.first()),
            ],
            [
                r.apply(basis.u1.last(), basis.du1.last()),
                r.apply(basis.u2.last(), basis.du2.last()),
            ],
        ],
        rhs: [l.gamma, r.gamma],
    }
}

/// Solves the two-point boundary value problem; a singular system means
/// `ω²` is an eigenvalue of the homogeneous problem.
pub fn solve_bvp(basis: &BasisPair, spec: &BvpSpec) -> Result<Solution> {
    spec.left.validate()?;
    spec.right.validate()?;
    let c = boundary_system(basis, spec).solve()?;
    Ok(combine(basis, c))
}
