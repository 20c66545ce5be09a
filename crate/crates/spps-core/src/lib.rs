//! Spectral parameter power series (SPPS) solvers for
//! `(p u')' + q u = ω² u` and `-u'' + q u = 0` on `[0, a]`.
//!
//! The general solution is a power series in the spectral parameter whose
//! coefficients, the *formal powers*, are computed once by recurrent
//! integration. Initial and boundary value problems are then solved by
//! superposition, and eigenvalue problems reduce to polynomial root finding
//! in `ω`.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use num_complex::Complex64;
//! use spps_core::{grid, powers, basis};
//!
//! let g = grid::make_grid(1.0, 2000).unwrap();
//! let q = grid::sample_real(|_| -1.0, &g).unwrap();
//! let table = powers::schrodinger_formal_powers(&q, 40).unwrap();
//! let b = basis::assemble_schrodinger_basis(&table, Complex64::new(1.0, 0.0)).unwrap();
//! let u = basis::solve_ivp(&b, &basis::IvpSpec::real(1.0, -1.0)).unwrap().u;
//! assert!((u.last().re - (1f64.cos() - 1f64.sin())).abs() < 1e-12);
//! ```

#![cfg_attr(not(test), no_std)]
// Index loops mirror the recurrences; `!(a <= b)` comparisons are meant to
// reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod basis;
mod dd;
pub mod error;
pub mod grid;
pub mod particular;
pub mod powers;
pub mod report;
pub mod rk45;
pub mod roots;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
