//! Bump hunting toolkit: box peeling and covering over labelled point clouds.
//!
//! The crate locates rectangular regions ("boxes") of the input space in which
//! the mean of a response variable is unusually high.  Two search strategies are
//! provided: the classic greedy peel/paste/cover loop ([`prim`]) and a
//! closed-form central-quantile shortcut ([`fastprim`]) that is most effective
//! after rotating the data onto its principal components ([`pca`]).  Supporting
//! modules supply the numeric kernels ([`numkernel`]), synthetic data
//! ([`datagen`]) and a Monte-Carlo benchmark harness ([`bench`]).
//!
//! All numeric code is generic over the scalar type through the [`Real`] trait;
//! concrete `f64` aliases for the main types are exported at the crate root.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod fastprim;
pub mod numkernel;
pub mod pca;
pub mod prim;
mod scalar;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Real;

/// `f64` instantiations of the main types, for callers that do not need
/// scalar genericity.
pub type Matrix64 = numkernel::Matrix<f64>;
pub type SymMatrix64 = numkernel::SymMatrix<f64>;
pub type EigenDecomposition64 = numkernel::EigenDecomposition<f64>;
pub type Dataset64 = datagen::Dataset<f64>;
pub type MixtureConfig64 = datagen::MixtureConfig<f64>;
pub type GaussianJointModel64 = datagen::GaussianJointModel<f64>;
pub type RotationModel64 = pca::RotationModel<f64>;
pub type LinearRule64 = pca::LinearRule<f64>;
pub type AxisBox64 = prim::AxisBox<f64>;
pub type BoxStats64 = prim::BoxStats<f64>;
pub type BoxTrace64 = prim::BoxTrace<f64>;
pub type PrimConfig64 = prim::PrimConfig<f64>;
pub type FastPrimConfig64 = fastprim::FastPrimConfig<f64>;
