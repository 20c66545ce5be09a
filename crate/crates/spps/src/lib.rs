//! Problem files, a coefficient expression language, benchmarks and the
//! `spps` command line on top of `spps-core`.

pub mod bench;
pub mod cli;
pub mod error;
pub mod expr;
pub mod problem;
pub mod solve;

pub use error::AppError;
