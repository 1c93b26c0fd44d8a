//! Self-contained numeric primitives: dense symmetric linear algebra and the
//! quantile functions the rest of the crate is built on.
//!
//! Everything here is deterministic: no randomized pivoting, fixed sweep
//! order in the eigensolver, and a fixed tie policy in the quantiles, so
//! identical inputs produce bit-identical outputs.

mod jacobi;
mod matrix;
mod quantile;
pub(crate) mod special;

pub use jacobi::{cholesky, sym_eigen, sym_sqrt, EigenDecomposition};
pub use matrix::{Matrix, SymMatrix};
pub use quantile::{empirical_quantile, normal_cdf, normal_quantile, order_stat_index};
