//! Roots of complex polynomials as eigenvalues of the balanced companion
//! matrix, computed by shifted QR on the Hessenberg form.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// QR sweeps allowed per eigenvalue before giving up.
const ITERATIONS_PER_ROOT: usize = 60;

/// Value and derivative of `Σ coeffs[k] z^k` by Horner's rule.
pub fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of `Σ coeffs[k] z^k` (ascending powers), with multiplicity.
///
/// Trailing zero coefficients lower the degree; leading zero coefficients
/// give exact roots at the origin.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let top = match coeffs.iter().rposition(|c| *c != zero) {
        Some(k) => k,
        None => return Ok(Vec::new()),
    };
    let low = coeffs.iter().position(|c| *c != zero).unwrap_or(0);
    let mut roots = vec![zero; low];
    let c = &coeffs[low..=top];
    let n = c.len() - 1;
    match n {
        0 => return Ok(roots),
        1 => {
            roots.push(-c[0] / c[1]);
            return Ok(roots);
        }
        _ => {}
    }
    let lead = c[n];
    let mut h = vec![vec![zero; n]; n];
    for (j, entry) in h[0].iter_mut().enumerate() {
        *entry = -c[n - 1 - j] / lead;
    }
    for i in 1..n {
        h[i][i - 1] = Complex64::new(1.0, 0.0);
    }
    balance(&mut h);
    roots.extend(hessenberg_eigenvalues(h)?);
    Ok(roots)
}

fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Parlett–Reinsch balancing by powers of two; a diagonal similarity, so the
/// Hessenberg structure and the eigenvalues are preserved exactly.
fn balance(h: &mut [Vec<Complex64>]) {
    const RADIX: f64 = 2.0;
    let n = h.len();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(h[j][i]);
                    r += abs1(h[i][j]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for v in h[i].iter_mut() {
                    *v *= inv;
                }
                for row in h.iter_mut() {
                    row[i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Givens rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = libm::hypot(na, nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift QR with
/// Wilkinson shifts, deflation and occasional exceptional shifts.
fn hessenberg_eigenvalues(mut h: Vec<Vec<Complex64>>) -> Result<Vec<Complex64>> {
    let n = h.len();
    let mut eig = Vec::with_capacity(n);
    let mut total = 0usize;
    let cap = ITERATIONS_PER_ROOT * n;
    let mut hi = n - 1;
    let mut its = 0usize;
    let norm = h
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| abs1(*v))
        .fold(0.0, f64::max);
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig.push(h[0][0]);
            break;
        }
        // look for a negligible subdiagonal entry
        let mut l = hi;
        while l > 0 {
            let mut s = abs1(h[l - 1][l - 1]) + abs1(h[l][l]);
            if s == 0.0 {
                s = norm;
            }
            if abs1(h[l][l - 1]) <= f64::EPSILON * s {
                h[l][l - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig.push(h[hi][hi]);
            hi -= 1;
            its = 0;
            continue;
        }
        if total >= cap {
            return Err(Error::RootFinderDiverged { iterations: total });
        }
        total += 1;
        its += 1;

        let shift = if its.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[hi][hi] + Complex64::new(0.75 * abs1(h[hi][hi - 1]), 0.0)
        } else {
            let a = h[hi - 1][hi - 1];
            let b = h[hi - 1][hi];
            let c = h[hi][hi - 1];
            let d = h[hi][hi];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let mid = (a + d) * 0.5;
            let l1 = mid + disc;
            let l2 = mid - disc;
            if (l1 - d).norm() < (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        for k in l..=hi {
            h[k][k] -= shift;
        }
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            rot.push((c, s));
            for j in k..=hi {
                let x = h[k][j];
                let y = h[k + 1][j];
                h[k][j] = x * c + s * y;
                h[k + 1][j] = -s.conj() * x + y * c;
            }
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            let last = (k + 2).min(hi);
            for row in h.iter_mut().take(last + 1).skip(l) {
                let x = row[k];
                let y = row[k + 1];
                row[k] = x * c + y * s.conj();
                row[k + 1] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[k][k] += shift;
        }
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
        let mut p = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![c(0.0, 0.0); p.len() + 1];
            for (k, &a) in p.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            p = next;
        }
        p
    }

    fn assert_same_set(found: &[Complex64], expected: &[Complex64], tol: f64) {
        assert_eq!(found.len(), expected.len());
        let mut used = vec![false; found.len()];
        for e in expected {
            let (k, d) = found
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, f)| (k, (f - e).norm()))
                .fold(
                    (usize::MAX, f64::INFINITY),
                    |b, x| if x.1 < b.1 { x } else { b },
                );
            assert!(d < tol, "root {e} missed by {d}");
            used[k] = true;
        }
    }

    #[test]
    fn real_and_complex_roots() {
        let expected = [c(1.0, 0.0), c(2.0, 0.0), c(-3.0, 0.0)];
        let r = polynomial_roots(&from_roots(&expected)).unwrap();
        assert_same_set(&r, &expected, 1e-12);

        let r = polynomial_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_same_set(&r, &[c(0.0, 1.0), c(0.0, -1.0)], 1e-14);
    }

    #[test]
    fn roots_of_unity() {
        let n = 24;
        let mut p = vec![c(0.0, 0.0); n + 1];
        p[0] = c(-1.0, 0.0);
        p[n] = c(1.0, 0.0);
        let expected: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI * k as f64 / n as f64))
            .collect();
        assert_same_set(&polynomial_roots(&p).unwrap(), &expected, 1e-12);
    }

    #[test]
    fn complex_coefficients_and_zero_roots() {
        let expected = [c(0.5, -1.5), c(-2.0, 0.25), c(0.0, 3.0)];
        let mut p = from_roots(&expected);
        p.insert(0, c(0.0, 0.0));
        p.push(c(0.0, 0.0));
        let mut all = expected.to_vec();
        all.push(c(0.0, 0.0));
        assert_same_set(&polynomial_roots(&p).unwrap(), &all, 1e-12);
    }

    #[test]
    fn widely_scaled_coefficients() {
        // roots spread over six orders of magnitude
        let expected: Vec<Complex64> = (0..8)
            .map(|k| c(libm::pow(6.0, k as f64) * 1e-2, 0.1))
            .collect();
        let p = from_roots(&expected);
        let r = polynomial_roots(&p).unwrap();
        for e in &expected {
            let best = r
                .iter()
                .map(|f| (f - e).norm() / e.norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "{e}: {best}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(polynomial_roots(&[]).unwrap().is_empty());
        assert!(polynomial_roots(&[c(3.0, 0.0)]).unwrap().is_empty());
        assert_eq!(
            polynomial_roots(&[c(2.0, 0.0), c(4.0, 0.0)]).unwrap(),
            vec![c(-0.5, 0.0)]
        );
    }

    #[test]
    fn horner_matches_direct_sum() {
        let p = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0), c(2.0, -1.0)];
        let z = c(0.7, -0.4);
        let (v, d) = horner(&p, z);
        let direct: Complex64 = p
            .iter()
            .enumerate()
            .map(|(k, a)| a * z.powu(k as u32))
            .sum();
        let ddirect: Complex64 = p
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| a * z.powu(k as u32 - 1) * k as f64)
            .sum();
        assert!((v - direct).norm() < 1e-14);
        assert!((d - ddirect).norm() < 1e-14);
    }
}
