use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{sym_eigen, sym_sqrt, Matrix, SymMatrix};
use crate::scalar::Real;

use super::rng::derive_rng;
use super::Dataset;

/// Covariance assembled from variances and a correlation matrix, with a
/// record of whether a positive-semidefiniteness repair was applied.
#[derive(Debug, Clone)]
pub struct CovarianceBuild<T> {
    pub matrix: SymMatrix<T>,
    pub repaired: bool,
}

const PSD_REPAIR_EPS: f64 = 1e-8;

/// Builds `Sigma = V^(1/2) R V^(1/2)` from per-dimension variances and a
/// correlation matrix `R`.
///
/// `R` must have a unit diagonal and entries in `[-1, 1]` (to `1e-12`).  If
/// the assembled matrix has an eigenvalue below `1e-8`, all eigenvalues are
/// clipped up to that floor and the matrix reassembled; the repair is flagged
/// in the result.
pub fn build_covariance<T: Real>(
    variances: &[T],
    correlation: &SymMatrix<T>,
) -> Result<CovarianceBuild<T>> {
    let p = variances.len();
    if p == 0 {
        return Err(Error::EmptyInput("variances"));
    }
    if correlation.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "correlation dimension",
            expected: p,
            actual: correlation.dim(),
        });
    }
    for (j, &v) in variances.iter().enumerate() {
        if !(v.is_finite() && v > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "variance {j} must be positive and finite, got {v}"
            )));
        }
    }
    let tol = T::of(1e-12);
    for i in 0..p {
        if (correlation[(i, i)] - T::one()).abs() > tol {
            return Err(Error::InvalidConfig(format!(
                "correlation diagonal entry {i} must be 1, got {}",
                correlation[(i, i)]
            )));
        }
        for j in 0..p {
            if correlation[(i, j)].abs() > T::one() + tol {
                return Err(Error::InvalidConfig(format!(
                    "correlation entry ({i}, {j}) outside [-1, 1]: {}",
                    correlation[(i, j)]
                )));
            }
        }
    }

    let sd: Vec<T> = variances.iter().map(|&v| v.sqrt()).collect();
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = correlation[(i, j)] * sd[i] * sd[j];
        }
    }
    let sigma = SymMatrix::new(m)?;

    let eig = sym_eigen(&sigma)?;
    let floor = T::of(PSD_REPAIR_EPS);
    let min_eig = *eig
        .values
        .last()
        .expect("at least one eigenvalue");
    if min_eig >= floor {
        return Ok(CovarianceBuild {
            matrix: sigma,
            repaired: false,
        });
    }

    let mut scaled = eig.vectors.clone();
    for (j, &lambda) in eig.values.iter().enumerate() {
        let clipped = lambda.max(floor);
        for i in 0..p {
            scaled[(i, j)] = scaled[(i, j)] * clipped;
        }
    }
    let repaired = scaled.matmul(&eig.vectors.transpose())?;
    Ok(CovarianceBuild {
        matrix: SymMatrix::new(repaired)?,
        repaired: true,
    })
}

/// Response distribution attached to one target component.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseSpec<T> {
    /// `Normal(mu, sigma^2)` response.
    Continuous { mu: T, sigma: T },
    /// Constant class value.
    Fixed { value: T },
}

/// One Gaussian target component of the mixture.
#[derive(Debug, Clone)]
pub struct GaussianComponent<T> {
    pub mean: Vec<T>,
    pub covariance: SymMatrix<T>,
    pub response: ResponseSpec<T>,
}

/// Bounds of the uniform noise component.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseBounds<T> {
    /// The same `[a, b]` interval in every dimension.
    Fixed { a: T, b: T },
    /// Per-dimension bounds from the empirical min/max of the target rows of
    /// the same draw.
    FromTargets,
}

/// Configuration of the Gaussian/uniform mixture sampler.
///
/// Each of the `n` rows comes from a Gaussian target component with
/// probability `weight` (components equally likely) and otherwise from
/// uniform noise on a box, with response fixed at zero and label `0`.
#[derive(Debug, Clone)]
pub struct MixtureConfig<T> {
    pub n: usize,
    pub weight: T,
    pub components: Vec<GaussianComponent<T>>,
    pub noise_bounds: NoiseBounds<T>,
}

impl<T: Real> MixtureConfig<T> {
    pub fn validate(&self) -> Result<usize> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("sample size must be positive".into()));
        }
        if !(self.weight >= T::zero() && self.weight <= T::one()) {
            return Err(Error::InvalidConfig(format!(
                "mixture weight must lie in [0, 1], got {}",
                self.weight
            )));
        }
        if self.components.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one target component required".into(),
            ));
        }
        let p = self.components[0].mean.len();
        if p == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        for (g, c) in self.components.iter().enumerate() {
            if c.mean.len() != p {
                return Err(Error::DimensionMismatch {
                    context: "component mean length",
                    expected: p,
                    actual: c.mean.len(),
                });
            }
            if c.covariance.dim() != p {
                return Err(Error::DimensionMismatch {
                    context: "component covariance dimension",
                    expected: p,
                    actual: c.covariance.dim(),
                });
            }
            if let ResponseSpec::Continuous { sigma, .. } = c.response {
                if !(sigma >= T::zero()) {
                    return Err(Error::InvalidConfig(format!(
                        "component {g} response sigma must be nonnegative"
                    )));
                }
            }
        }
        if let NoiseBounds::Fixed { a, b } = self.noise_bounds {
            if !(a < b) {
                return Err(Error::InvalidConfig(format!(
                    "noise bounds must satisfy a < b, got a = {a}, b = {b}"
                )));
            }
        }
        if self.weight == T::zero() && matches!(self.noise_bounds, NoiseBounds::FromTargets) {
            return Err(Error::InvalidConfig(
                "noise bounds cannot be derived from targets when the target weight is zero"
                    .into(),
            ));
        }
        Ok(p)
    }
}

/// A sampled mixture together with the noise bounds actually used
/// (empty when no noise row was drawn).
#[derive(Debug, Clone)]
pub struct MixtureDraw<T> {
    pub dataset: Dataset<T>,
    pub noise_bounds: Vec<(T, T)>,
}

/// Draws a dataset from the mixture.  Identical `(config, seed)` pairs
/// reproduce the dataset bit for bit.
///
/// Draw order is fixed: one pass assigns every row a source (consuming one
/// uniform, then for target rows a component index, `p` normals and the
/// response draw), then noise rows are filled in row order (`p` uniforms
/// each).  The two-pass scheme lets [`NoiseBounds::FromTargets`] use the
/// min/max of the target rows of the same draw.
pub fn sample_mixture<T: Real>(config: &MixtureConfig<T>, seed: u64) -> Result<MixtureDraw<T>> {
    let p = config.validate()?;
    let n = config.n;
    let g = config.components.len();
    let roots: Vec<Matrix<T>> = config
        .components
        .iter()
        .map(|c| sym_sqrt(&c.covariance).map(SymMatrix::into_matrix))
        .collect::<Result<_>>()?;

    let mut rng = derive_rng(seed, &[]);
    let weight = config.weight.as_f64();
    let mut x = Matrix::zeros(n, p);
    let mut z = vec![T::zero(); n];
    let mut labels = vec![0u32; n];
    let mut noise_rows: Vec<usize> = Vec::new();
    let mut normals = vec![T::zero(); p];

    for i in 0..n {
        let u: f64 = rng.gen();
        if u < weight {
            let which = if g == 1 { 0 } else { rng.gen_range(0..g) };
            let component = &config.components[which];
            for value in normals.iter_mut() {
                let draw: f64 = rng.sample(StandardNormal);
                *value = T::of(draw);
            }
            let shift = roots[which].mul_vec(&normals)?;
            for j in 0..p {
                x[(i, j)] = component.mean[j] + shift[j];
            }
            z[i] = match component.response {
                ResponseSpec::Continuous { mu, sigma } => {
                    let draw: f64 = rng.sample(StandardNormal);
                    mu + sigma * T::of(draw)
                }
                ResponseSpec::Fixed { value } => value,
            };
            labels[i] = (which + 1) as u32;
        } else {
            noise_rows.push(i);
        }
    }

    let noise_bounds: Vec<(T, T)> = if noise_rows.is_empty() {
        Vec::new()
    } else {
        match config.noise_bounds {
            NoiseBounds::Fixed { a, b } => vec![(a, b); p],
            NoiseBounds::FromTargets => {
                let target_count = n - noise_rows.len();
                if target_count == 0 {
                    return Err(Error::TooFewPoints {
                        context: "noise bounds from target rows",
                        needed: 1,
                        available: 0,
                    });
                }
                let mut bounds = vec![(T::infinity(), T::neg_infinity()); p];
                for i in 0..n {
                    if labels[i] == 0 {
                        continue;
                    }
                    for (j, b) in bounds.iter_mut().enumerate() {
                        b.0 = b.0.min(x[(i, j)]);
                        b.1 = b.1.max(x[(i, j)]);
                    }
                }
                bounds
            }
        }
    };

    for &i in &noise_rows {
        for (j, &(a, b)) in noise_bounds.iter().enumerate() {
            let u: f64 = rng.gen();
            x[(i, j)] = a + (b - a) * T::of(u);
        }
        // Noise carries a null response and label 0; both already set.
    }

    Ok(MixtureDraw {
        dataset: Dataset::new(x, z, Some(labels))?,
        noise_bounds,
    })
}
