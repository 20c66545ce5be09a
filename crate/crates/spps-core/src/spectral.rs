//! Eigenvalue problems as polynomial root finding in `ω`.
//!
//! With homogeneous separated boundary forms the characteristic function
//! `Φ(ω) = B0[u1] Ba[u2] - B0[u2] Ba[u1]` of the truncated basis is a
//! polynomial whose coefficients come straight from the endpoint values of the
//! formal powers. Its zeros inside the reliability radius are the eigen-`ω`,
//! and `λ = ω²`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{BasisKind, BoundaryForm, BvpSpec};
use crate::error::{Error, Result};
use crate::grid::same_grid;
use crate::particular::SlCoefficients;
use crate::powers::{exp_tail, FormalPowerTable};
use crate::roots::{horner, polynomial_roots};

/// Tail level defining the reliability radius.
pub const RELIABILITY_TAIL: f64 = 1e-10;
/// Roots with `|Φ(ω)|` above this, relative to the largest term
/// `|c_k| |ω|^k`, are discarded.
pub const RESIDUAL_RELATIVE: f64 = 1e-10;
/// Relative tolerance for merging eigenvalues `λ = ω²`.
pub const DEDUPE_RELATIVE: f64 = 1e-9;
/// Scaled coefficients below this fraction of the largest are trimmed from
/// the top before root finding.
const TRIM_RELATIVE: f64 = 1e-17;

/// Characteristic function as a polynomial in `ω`, together with the four
/// boundary factor polynomials it is built from.
#[derive(Debug, Clone)]
pub struct OmegaPolynomial {
    /// Coefficients by ascending power of `ω`.
    pub coeffs: Vec<Complex64>,
    /// Largest `|ω|` with `tail_bound(|ω|, N + 1) <= 1e-10`.
    pub reliability_radius: f64,
    kind: BasisKind,
    n_max: usize,
    left: [Vec<Complex64>; 2],
    right: [Vec<Complex64>; 2],
}

/// One eigenvalue of the homogeneous boundary value problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenResult {
    /// Canonical root: `Re ω > 0`, or `Im ω > 0` on the imaginary axis.
    pub omega: Complex64,
    pub lambda: Complex64,
    /// `|Φ(ω)|` after refinement.
    pub residual: f64,
    /// Number of refined roots merged into this eigenvalue.
    pub multiplicity_hint: usize,
}

impl OmegaPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Horner evaluation of the expanded coefficients.
    pub fn eval(&self, omega: Complex64) -> Complex64 {
        horner(&self.coeffs, omega).0
    }

    /// `Φ(ω)` and `Φ'(ω)` from the boundary factors, i.e. evaluated from the
    /// table columns rather than the product coefficients.
    pub fn eval_from_table(&self, omega: Complex64) -> (Complex64, Complex64) {
        let (l1, dl1) = horner(&self.left[0], omega);
        let (l2, dl2) = horner(&self.left[1], omega);
        let (r1, dr1) = horner(&self.right[0], omega);
        let (r2, dr2) = horner(&self.right[1], omega);
        (l1 * r2 - l2 * r1, dl1 * r2 + l1 * dr2 - dl2 * r1 - l2 * dr1)
    }

    /// `max_k |c_k| |ω|^k`, the natural size of `Φ(ω)`.
    pub fn term_scale(&self, omega_abs: f64) -> f64 {
        let mut p = 1.0;
        let mut best: f64 = 0.0;
        for c in &self.coeffs {
            best = best.max(c.norm() * p);
            p *= omega_abs;
        }
        best
    }

    /// Whether `ω = 0` is a genuine eigenvalue, checked against the `ω = 0`
    /// basis directly.
    ///
    /// For the Sturm–Liouville basis `u2` vanishes identically at `ω = 0`,
    /// so `Φ(0) = 0` always; the independent solution there is
    /// `lim u2/ω = g0 y[1]`, whose determinant is the coefficient of `ω`.
    pub fn zero_is_eigenvalue(&self) -> bool {
        let k = match self.kind {
            BasisKind::Schrodinger => 0,
            BasisKind::SturmLiouville => 1,
        };
        let at = |f: &[Complex64], i: usize| f.get(i).copied().unwrap_or_default();
        let m = [
            [at(&self.left[0], 0), at(&self.left[1], k)],
            [at(&self.right[0], 0), at(&self.right[1], k)],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let row = |r: &[Complex64; 2]| libm::hypot(r[0].norm(), r[1].norm());
        let scale = row(&m[0]) * row(&m[1]);
        scale > 0.0 && det.norm() <= RESIDUAL_RELATIVE * scale
    }
}

/// Largest `r` with `tail_bound(r, N + 1) <= 1e-10`; infinite when the
/// tail rate is zero.
pub fn reliability_radius(table: &FormalPowerTable) -> f64 {
    let rate = table.tail_rate();
    if rate == 0.0 {
        return f64::INFINITY;
    }
    let n = table.n_max() + 1;
    let ok = |rho: f64| exp_tail(rho, n) <= RELIABILITY_TAIL;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo / rate
}

/// Builds `Φ(ω)` for homogeneous boundary forms (`γ` is ignored).
///
/// Sturm–Liouville tables need the coefficients `extras` for `g0` and `g0'`.
pub fn characteristic_polynomial(
    table: &FormalPowerTable,
    bc: &BvpSpec,
    extras: Option<&SlCoefficients>,
) -> Result<OmegaPolynomial> {
    bc.left.validate()?;
    bc.right.validate()?;
    let n_max = table.n_max();
    if n_max < 2 {
        return Err(Error::PowersOutOfRange {
            min: 2,
            max: crate::powers::MAX_N_POWERS,
            got: n_max,
        });
    }
    let kind = if table.is_schrodinger() {
        BasisKind::Schrodinger
    } else {
        BasisKind::SturmLiouville
    };
    let g = match (kind, extras) {
        (BasisKind::Schrodinger, _) => None,
        (BasisKind::SturmLiouville, Some(sl)) => {
            if !same_grid(table.grid(), sl.g0.grid()) {
                return Err(Error::GridMismatch);
            }
            Some(sl)
        }
        (BasisKind::SturmLiouville, None) => {
            return Err(Error::VariantMismatch {
                expected: "schrodinger",
            })
        }
    };
    let last = table.grid().m();
    let endpoint = |form: &BoundaryForm, j: usize| {
        let (g0, dg0) = match g {
            Some(sl) => (sl.g0[j], sl.dg0[j]),
            None => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        };
        boundary_factors(table, kind, form, j, g0, dg0)
    };
    let left = endpoint(&bc.left, 0);
    let right = endpoint(&bc.right, last);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
    for (i, a) in left[0].iter().enumerate() {
        for (k, b) in right[1].iter().enumerate() {
            coeffs[i + k] += a * b;
        }
    }
    for (i, a) in left[1].iter().enumerate() {
        for (k, b) in right[0].iter().enumerate() {
            coeffs[i + k] -= a * b;
        }
    }
    if coeffs.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::DegenerateCharacteristic);
    }
    while coeffs.len() > 1 && coeffs[coeffs.len() - 1].norm() == 0.0 {
        coeffs.pop();
    }
    Ok(OmegaPolynomial {
        coeffs,
        reliability_radius: reliability_radius(table),
        kind,
        n_max,
        left,
        right,
    })
}

/// Coefficients in `ω` of `B[u1]` and `B[u2]` at node `j`.
fn boundary_factors(
    table: &FormalPowerTable,
    kind: BasisKind,
    form: &BoundaryForm,
    j: usize,
    g0: Complex64,
    dg0: Complex64,
) -> [Vec<Complex64>; 2] {
    let n_max = table.n_max();
    let b = table.weight_b()[j];
    let zero = Complex64::new(0.0, 0.0);
    let mut f1 = vec![zero; n_max + 1];
    let mut f2 = vec![zero; n_max + 1];
    for n in 0..=n_max {
        if n % 2 == 0 {
            let v = table.y_tilde(n)[j];
            let dv = if n >= 2 {
                b * table.y_tilde(n - 1)[j]
            } else {
                zero
            };
            f1[n] = form.alpha * g0 * v + form.beta * (dg0 * v + g0 * dv);
        } else {
            let v = table.y(n)[j];
            let dv = b * table.y(n - 1)[j];
            let power = match kind {
                BasisKind::Schrodinger => n - 1,
                BasisKind::SturmLiouville => n,
            };
            f2[power] = form.alpha * g0 * v + form.beta * (dg0 * v + g0 * dv);
        }
    }
    [f1, f2]
}

/// Eigenvalues with `|ω| <= max_abs_omega`.
///
/// Candidates are the companion-matrix roots of the truncated polynomial
/// (rescaled to the search disc), refined by Newton's method on the
/// table-based `Φ` until `|Φ|` stops decreasing. Roots whose residual
/// exceeds `1e-10 max_k |c_k| |ω|^k` are discarded, and `±ω` pairs are
/// merged on `λ`.
pub fn find_eigenvalues(phi: &OmegaPolynomial, max_abs_omega: f64) -> Result<Vec<EigenResult>> {
    if !(max_abs_omega <= phi.reliability_radius) {
        return Err(Error::OutsideReliabilityRadius {
            requested: max_abs_omega,
            radius: phi.reliability_radius,
        });
    }
    let mut found = Vec::new();
    if phi.zero_is_eigenvalue() {
        let (res, _) = phi.eval_from_table(Complex64::new(0.0, 0.0));
        found.push(EigenResult {
            omega: Complex64::new(0.0, 0.0),
            lambda: Complex64::new(0.0, 0.0),
            residual: res.norm(),
            multiplicity_hint: 1,
        });
    }
    if max_abs_omega <= 0.0 {
        return Ok(found);
    }
    let tiny = 1e-8 * max_abs_omega;
    for z in candidate_roots(phi, max_abs_omega)? {
        let omega = z;
        if omega.norm() <= tiny || omega.norm() > 1.5 * max_abs_omega {
            continue;
        }
        let (omega, residual) = refine(phi, omega);
        let abs = omega.norm();
        if abs <= tiny || abs > max_abs_omega {
            continue;
        }
        if !(residual <= RESIDUAL_RELATIVE * phi.term_scale(abs)) {
            continue;
        }
        let omega = canonical(omega);
        let lambda = omega * omega;
        match found.iter_mut().find(|r| same_lambda(r.lambda, lambda)) {
            Some(r) => {
                r.multiplicity_hint += 1;
                if residual < r.residual {
                    r.omega = omega;
                    r.lambda = lambda;
                    r.residual = residual;
                }
            }
            None => found.push(EigenResult {
                omega,
                lambda,
                residual,
                multiplicity_hint: 1,
            }),
        }
    }
    found.sort_by(|a, b| {
        a.lambda
            .norm()
            .total_cmp(&b.lambda.norm())
            .then(a.lambda.re.total_cmp(&b.lambda.re))
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    Ok(found)
}

/// Raw candidate roots of `Φ` (or `Φ/ω` for the Sturm–Liouville basis) from
/// the companion matrix of the polynomial rescaled by `scale`.
pub fn candidate_roots(phi: &OmegaPolynomial, scale: f64) -> Result<Vec<Complex64>> {
    let mut c: &[Complex64] = &phi.coeffs;
    if phi.kind == BasisKind::SturmLiouville && !c.is_empty() {
        c = &c[1..];
    }
    let scale = if scale > 0.0 && scale.is_finite() {
        scale
    } else {
        1.0
    };
    let mut p = 1.0;
    let mut scaled: Vec<Complex64> = c
        .iter()
        .map(|a| {
            let v = a * p;
            p *= scale;
            v
        })
        .collect();
    let max = scaled.iter().map(|v| v.norm()).fold(0.0, f64::max);
    while scaled.len() > 1 && scaled[scaled.len() - 1].norm() < TRIM_RELATIVE * max {
        scaled.pop();
    }
    Ok(polynomial_roots(&scaled)?
        .into_iter()
        .map(|z| z * scale)
        .collect())
}

fn refine(phi: &OmegaPolynomial, mut omega: Complex64) -> (Complex64, f64) {
    let (mut f, mut df) = phi.eval_from_table(omega);
    let mut best = f.norm();
    for _ in 0..100 {
        if best == 0.0 || df.norm() == 0.0 {
            break;
        }
        let next = omega - f / df;
        let (nf, ndf) = phi.eval_from_table(next);
        if !(nf.norm() < best) {
            break;
        }
        omega = next;
        f = nf;
        df = ndf;
        best = nf.norm();
    }
    (omega, best)
}

fn canonical(omega: Complex64) -> Complex64 {
    let on_axis = omega.re.abs() <= 1e-12 * omega.norm();
    if (on_axis && omega.im < 0.0) || (!on_axis && omega.re < 0.0) {
        -omega
    } else if on_axis {
        Complex64::new(0.0, omega.im)
    } else {
        omega
    }
}

fn same_lambda(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= DEDUPE_RELATIVE * a.norm().max(b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{assemble_sl_basis, boundary_system};
    use crate::grid::{make_grid, sample_real};
    use crate::particular::{build_g0, G0Options};
    use crate::powers::schrodinger_formal_powers;
    use core::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn dirichlet() -> BvpSpec {
        BvpSpec {
            left: BoundaryForm::dirichlet(0.0),
            right: BoundaryForm::dirichlet(0.0),
        }
    }

    fn sl_problem(q: f64, m: usize, n: usize) -> (SlCoefficients, FormalPowerTable) {
        let g = make_grid(1.0, m).unwrap();
        let sl = build_g0(&g, &|_| c(1.0), &move |_| c(q), &G0Options::default()).unwrap();
        let t = sl.formal_powers(n).unwrap();
        (sl, t)
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn free_dirichlet_is_truncated_sinh() {
        let (sl, t) = sl_problem(0.0, 2000, 30);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        assert_eq!(phi.coeffs[0], c(0.0));
        assert!((phi.coeffs[1] - c(1.0)).norm() < 1e-15);
        for (k, a) in phi.coeffs.iter().enumerate() {
            let expected = if k % 2 == 1 { 1.0 / factorial(k) } else { 0.0 };
            let err = (a - c(expected)).norm();
            // quadrature error of the columns, all coefficients are <= 1
            assert!(err <= 1e-14, "{k}: {err:e} vs {expected:e}");
        }
        assert!(phi.degree() <= t.n_max() + 1);
    }

    #[test]
    fn neumann_dirichlet_is_truncated_cosh() {
        let (sl, t) = sl_problem(0.0, 2000, 40);
        let bc = BvpSpec {
            left: BoundaryForm::neumann(0.0),
            right: BoundaryForm::dirichlet(0.0),
        };
        let phi = characteristic_polynomial(&t, &bc, Some(&sl)).unwrap();
        // Φ = -ω cosh ω
        let w = Complex64::new(0.3, 0.8);
        let expected = -w * w.cosh();
        assert!((phi.eval(w) - expected).norm() < 1e-14);
        let eig = find_eigenvalues(&phi, 9.0).unwrap();
        let got: Vec<f64> = eig.iter().map(|e| e.omega.im).collect();
        let want: Vec<f64> = (0..3).map(|k| (k as f64 + 0.5) * PI).collect();
        assert_eq!(got.len(), want.len(), "{eig:?}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9 * w);
        }
    }

    #[test]
    fn horner_matches_direct_summation() {
        let (sl, t) = sl_problem(-2.0, 2000, 40);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        for w in [Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5), c(4.0)] {
            let direct: Complex64 = phi
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * w.powu(k as u32))
                .sum();
            let scale: f64 = phi
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a.norm() * w.norm().powi(k as i32))
                .sum();
            assert!((phi.eval(w) - direct).norm() <= 1e-13 * scale);
            let (from_table, _) = phi.eval_from_table(w);
            assert!((phi.eval(w) - from_table).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn free_dirichlet_eigenvalues() {
        let (sl, t) = sl_problem(0.0, 10_000, 64);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        assert!(phi.reliability_radius >= 16.0);
        let eig = find_eigenvalues(&phi, 16.0).unwrap();
        assert_eq!(eig.len(), 5, "{eig:?}");
        for (k, e) in eig.iter().enumerate() {
            let exact = -((k + 1) as f64 * PI).powi(2);
            assert!((e.lambda - c(exact)).norm() <= 1e-8 * exact.abs());
            assert!(e.multiplicity_hint >= 1);
        }
    }

    #[test]
    fn no_roots_below_the_first_eigenvalue() {
        let (sl, t) = sl_problem(0.0, 2000, 64);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        assert!(!phi.zero_is_eigenvalue());
        assert!(find_eigenvalues(&phi, 3.0).unwrap().is_empty());
    }

    #[test]
    fn shifted_potential() {
        // u'' + u = ω² u, Dirichlet: ω² = 1 - k²π²
        let (sl, t) = sl_problem(1.0, 10_000, 64);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        let r = phi.reliability_radius.min(16.0);
        let eig = find_eigenvalues(&phi, r).unwrap();
        assert!(!eig.is_empty());
        for (k, e) in eig.iter().enumerate() {
            let exact = 1.0 - ((k + 1) as f64 * PI).powi(2);
            assert!((e.lambda - c(exact)).norm() <= 1e-8 * exact.abs(), "{e:?}");
        }
    }

    #[test]
    fn genuine_zero_eigenvalue_is_reported() {
        // Neumann-Neumann with q = 0: constants solve it, λ = 0
        let (sl, t) = sl_problem(0.0, 2000, 40);
        let bc = BvpSpec {
            left: BoundaryForm::neumann(0.0),
            right: BoundaryForm::neumann(0.0),
        };
        let phi = characteristic_polynomial(&t, &bc, Some(&sl)).unwrap();
        assert!(phi.zero_is_eigenvalue());
        let eig = find_eigenvalues(&phi, 4.0).unwrap();
        assert_eq!(eig.len(), 2, "{eig:?}");
        assert_eq!(eig[0].lambda, c(0.0));
        assert!((eig[1].lambda - c(-PI * PI)).norm() < 1e-8 * PI * PI);
    }

    #[test]
    fn roots_pair_up_and_are_stable_under_more_powers() {
        let (sl, t) = sl_problem(3.0, 4000, 64);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        let r = phi.reliability_radius.min(12.0);
        let raw = candidate_roots(&phi, r).unwrap();
        let eig = find_eigenvalues(&phi, r).unwrap();
        assert!(!eig.is_empty());
        for e in &eig {
            let near = |w: Complex64| raw.iter().any(|z| (z - w).norm() < 1e-6 * w.norm());
            assert!(near(e.omega) && near(-e.omega));
            let (plus, _) = phi.eval_from_table(e.omega);
            let (minus, _) = phi.eval_from_table(-e.omega);
            assert!((plus + minus).norm() <= 1e-10 * phi.term_scale(e.omega.norm()));
        }
        let t2 = sl.formal_powers(72).unwrap();
        let phi2 = characteristic_polynomial(&t2, &dirichlet(), Some(&sl)).unwrap();
        let eig2 = find_eigenvalues(&phi2, r).unwrap();
        assert_eq!(eig.len(), eig2.len());
        for (a, b) in eig.iter().zip(&eig2) {
            assert!((a.omega - b.omega).norm() <= 1e-9, "{a:?} {b:?}");
        }
    }

    #[test]
    fn eigenvalues_make_the_boundary_system_singular() {
        let (sl, t) = sl_problem(3.0, 4000, 64);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        for e in find_eigenvalues(&phi, phi.reliability_radius.min(12.0)).unwrap() {
            let b = assemble_sl_basis(&t, e.omega, &sl.g0, &sl.dg0).unwrap();
            let sys = boundary_system(&b, &dirichlet());
            assert!(sys.det().norm() <= 1e-8 * sys.scale());
        }
    }

    #[test]
    fn helmholtz_form_eigenvalues() {
        // -u'' + ω² q u = 0 with q = -1: u'' = -ω² u, Dirichlet gives ω = kπ
        let g = make_grid(1.0, 4000).unwrap();
        let q = sample_real(|_| -1.0, &g).unwrap();
        let t = schrodinger_formal_powers(&q, 64).unwrap();
        let phi = characteristic_polynomial(&t, &dirichlet(), None).unwrap();
        let eig = find_eigenvalues(&phi, 10.0).unwrap();
        assert_eq!(eig.len(), 3, "{eig:?}");
        for (k, e) in eig.iter().enumerate() {
            let w = (k + 1) as f64 * PI;
            assert!((e.omega - c(w)).norm() < 1e-9 * w);
        }
    }

    #[test]
    fn radius_and_error_cases() {
        let (sl, t) = sl_problem(0.0, 200, 64);
        let phi = characteristic_polynomial(&t, &dirichlet(), Some(&sl)).unwrap();
        let r = phi.reliability_radius;
        assert!(t.tail_bound(r, 65) <= 1e-10);
        assert!(t.tail_bound(r * 1.001, 65) > 1e-10);
        assert_eq!(
            find_eigenvalues(&phi, r * 2.0).unwrap_err().kind(),
            "outside_reliability_radius"
        );
        assert_eq!(
            characteristic_polynomial(&t, &dirichlet(), None)
                .unwrap_err()
                .kind(),
            "variant_mismatch"
        );
        let small = sl.formal_powers(1).unwrap();
        assert!(characteristic_polynomial(&small, &dirichlet(), Some(&sl)).is_err());
    }
}
