//! Synthetic data generation and dataset IO.
//!
//! The central object is [`Dataset`]: an `n x p` predictor matrix, a response
//! vector and optional component labels.  Datasets are produced by
//! [`sample_mixture`] (a Gaussian-target / uniform-noise mixture), derived by
//! [`standardized_means`] (batch means, a central-limit normalizer for
//! non-Gaussian inputs) or read from CSV files.

mod csv_io;
mod mixture;
mod moments;
mod rng;

pub use csv_io::{load_csv, save_csv};
pub use mixture::{
    build_covariance, sample_mixture, CovarianceBuild, GaussianComponent, MixtureConfig,
    MixtureDraw, NoiseBounds, ResponseSpec,
};
pub use moments::{conditional_moments, ConditionalMoments, GaussianJointModel};
pub use rng::{derive_rng, derive_seed};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::scalar::Real;

/// A labelled point cloud: predictors `x` (`n` rows, `p` columns), response
/// `z`, and optional integer labels (`0` marks noise rows, `1..=G` the
/// generating target component).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset<T> {
    x: Matrix<T>,
    z: Vec<T>,
    labels: Option<Vec<u32>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Matrix<T>, z: Vec<T>, labels: Option<Vec<u32>>) -> Result<Self> {
        if z.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                context: "response length",
                expected: x.rows(),
                actual: z.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != x.rows() {
                return Err(Error::DimensionMismatch {
                    context: "label length",
                    expected: x.rows(),
                    actual: l.len(),
                });
            }
        }
        if !x.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("dataset entries must be finite".into()));
        }
        Ok(Dataset { x, z, labels })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// Number of predictor dimensions.
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.x.row(i)
    }

    /// Mean of the response over all rows.
    pub fn response_mean(&self) -> T {
        self.z.iter().copied().sum::<T>() / T::of(self.n() as f64)
    }

    /// Dataset with the same response/labels but new predictors (used by the
    /// principal-component rotation).
    pub fn with_predictors(&self, x: Matrix<T>) -> Result<Self> {
        Dataset::new(x, self.z.clone(), self.labels.clone())
    }
}

/// Batch-mean transform: splits the rows into `floor(n / m)` consecutive
/// disjoint batches of size `m` and returns one row per batch holding
/// `sqrt(m) * (batch mean - grand mean)`, where the grand mean is taken over
/// the rows that fall into complete batches.
///
/// Output covariance matches input covariance in expectation, while batch
/// means are approximately Gaussian for large `m`; `m = 1` reduces to
/// centering.  Leftover rows beyond the last complete batch are dropped.
pub fn standardized_means<T: Real>(x: &Matrix<T>, m: usize) -> Result<Matrix<T>> {
    if m == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    let batches = x.rows() / m;
    if batches == 0 {
        return Err(Error::TooFewPoints {
            context: "standardized means",
            needed: m,
            available: x.rows(),
        });
    }
    let p = x.cols();
    let usable = batches * m;
    let mut grand = vec![T::zero(); p];
    for i in 0..usable {
        for (j, g) in grand.iter_mut().enumerate() {
            *g += x[(i, j)];
        }
    }
    let inv_usable = T::of(usable as f64).recip();
    for g in grand.iter_mut() {
        *g *= inv_usable;
    }

    let scale = T::of(m as f64).sqrt();
    let inv_m = T::of(m as f64).recip();
    let mut out = Matrix::zeros(batches, p);
    for b in 0..batches {
        for j in 0..p {
            let mut mean = T::zero();
            for i in b * m..(b + 1) * m {
                mean += x[(i, j)];
            }
            mean *= inv_m;
            out[(b, j)] = scale * (mean - grand[j]);
        }
    }
    Ok(out)
}
