use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Jointly Gaussian model of a response `Z` and predictors with diagonal
/// covariance `diag(lambda)` (the identity for standardized inputs, the
/// eigenvalues after a principal-component rotation).
///
/// Stored are the response mean and variance plus the cross-covariances
/// `cov(Z, X_j)`; predictor means are taken to be zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianJointModel<T> {
    pub response_mean: T,
    pub response_variance: T,
    pub cross_covariance: Vec<T>,
    pub predictor_variances: Vec<T>,
}

/// Conditional response moments at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMoments<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Real> GaussianJointModel<T> {
    /// Model over standardized predictors (unit variances).
    pub fn standard(response_mean: T, response_variance: T, cross_covariance: Vec<T>) -> Self {
        let p = cross_covariance.len();
        GaussianJointModel {
            response_mean,
            response_variance,
            cross_covariance,
            predictor_variances: vec![T::one(); p],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cross_covariance.len() != self.predictor_variances.len() {
            return Err(Error::DimensionMismatch {
                context: "cross-covariance length",
                expected: self.predictor_variances.len(),
                actual: self.cross_covariance.len(),
            });
        }
        if !(self.response_variance > T::zero()) {
            return Err(Error::InvalidConfig(
                "response variance must be positive".into(),
            ));
        }
        for (j, (&s, &l)) in self
            .cross_covariance
            .iter()
            .zip(&self.predictor_variances)
            .enumerate()
        {
            if l <= T::zero() && s != T::zero() {
                return Err(Error::SingularModel(format!(
                    "predictor {j} has variance {l} but nonzero cross-covariance {s}"
                )));
            }
        }
        Ok(())
    }

    /// Conditional variance `var(Z) - sum_j cov(Z, X_j)^2 / lambda_j`; it does
    /// not depend on the evaluation point.
    pub fn conditional_variance(&self) -> Result<T> {
        self.validate()?;
        let mut explained = T::zero();
        for (&s, &l) in self.cross_covariance.iter().zip(&self.predictor_variances) {
            if s != T::zero() {
                explained += s * s / l;
            }
        }
        let variance = self.response_variance - explained;
        if variance < T::of(-1e-12) {
            return Err(Error::SingularModel(format!(
                "implied joint covariance is not positive semidefinite \
                 (conditional variance {variance})"
            )));
        }
        Ok(variance.max(T::zero()))
    }
}

/// Mean and variance of the response conditional on the predictors taking
/// the given values: `E[Z | x] = mu_Z + sum_j cov(Z, X_j) / lambda_j * x_j`,
/// with constant conditional variance.
pub fn conditional_moments<T: Real>(
    model: &GaussianJointModel<T>,
    point: &[T],
) -> Result<ConditionalMoments<T>> {
    let variance = model.conditional_variance()?;
    if point.len() != model.cross_covariance.len() {
        return Err(Error::DimensionMismatch {
            context: "conditional moment point",
            expected: model.cross_covariance.len(),
            actual: point.len(),
        });
    }
    let mut mean = model.response_mean;
    for ((&s, &l), &x) in model
        .cross_covariance
        .iter()
        .zip(&model.predictor_variances)
        .zip(point)
    {
        if s != T::zero() {
            mean += s / l * x;
        }
    }
    Ok(ConditionalMoments { mean, variance })
}
