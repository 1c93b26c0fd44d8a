//! Population-level references for a Gaussian bump.
//!
//! For a centered normal with covariance `sigma`, the region of probability
//! content `beta'` with the highest density is the concentration ellipsoid
//! `{x : x' sigma^{-1} x <= q}` with `q` the chi-square quantile at `beta'`.
//! The smallest axis-aligned box containing it — in the eigenvector frame of
//! `sigma` — has half-widths `sqrt(lambda_j * q)`.  Benchmarks use these as
//! the "true" bump against which sample boxes are judged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::special::{gamma_p, ln_gamma};
use crate::numkernel::{sym_eigen, Matrix, SymMatrix};
use crate::prim::AxisBox;
use crate::scalar::Real;

/// Quantile of the chi-square distribution with `df` degrees of freedom,
/// found by bisection on the regularized incomplete gamma function.
pub fn chi2_quantile(df: f64, q: f64) -> Result<f64> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::Domain(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!(
            "quantile level must lie in (0, 1), got {q}"
        )));
    }
    let cdf = |x: f64| gamma_p(0.5 * df, 0.5 * x);
    // Bracket the root: the mean + a generous multiple of the SD usually
    // suffices; double until the CDF passes q.
    let mut hi = df + 10.0 * (2.0 * df).sqrt() + 10.0;
    let mut guard = 0;
    while cdf(hi)? < q {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::NonConvergence {
                routine: "chi2_quantile bracket",
                iterations: guard,
            });
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Natural log of the volume of the unit ball in `p` dimensions,
/// `pi^(p/2) / Gamma(p/2 + 1)`.
pub fn unit_ball_log_volume(p: usize) -> f64 {
    let half_p = 0.5 * p as f64;
    half_p * std::f64::consts::PI.ln() - ln_gamma(half_p + 1.0)
}

/// Concentration ellipsoid of a centered Gaussian at content `beta'`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EllipsoidBump<T> {
    pub center: Vec<T>,
    /// Axis directions: column `j` is the `j`-th principal direction.
    pub axes: Matrix<T>,
    /// Semi-axis lengths, descending.
    pub semi_axes: Vec<T>,
    /// Probability content.
    pub content: T,
}

impl<T: Real> EllipsoidBump<T> {
    /// Log-volume: `ln(unit ball volume) + sum(ln r_j)`.
    pub fn log_volume(&self) -> T {
        let mut acc = T::of(unit_ball_log_volume(self.semi_axes.len()));
        for &r in &self.semi_axes {
            acc += r.ln();
        }
        acc
    }
}

/// The concentration ellipsoid at content `beta_prime` together with its
/// circumscribing box in the principal-axis frame (half-widths
/// `sqrt(lambda_j * q)`, the smallest axis-aligned box containing the
/// ellipsoid — and the box/ellipsoid volume ratio `2^p / pi_p` is at least
/// one, with equality only at `p = 1`).
pub fn population_bump_box<T: Real>(
    sigma: &SymMatrix<T>,
    beta_prime: T,
) -> Result<(EllipsoidBump<T>, AxisBox<T>)> {
    if !(beta_prime > T::zero() && beta_prime < T::one()) {
        return Err(Error::Domain(format!(
            "content must lie in (0, 1), got {beta_prime}"
        )));
    }
    let p = sigma.dim();
    let eigen = sym_eigen(sigma)?;
    if eigen.values.iter().any(|v| *v <= T::zero() || !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let q = T::of(chi2_quantile(p as f64, beta_prime.as_f64())?);
    let semi_axes: Vec<T> = eigen.values.iter().map(|&l| (l * q).sqrt()).collect();
    debug_assert!(
        (p as f64) * std::f64::consts::LN_2 >= unit_ball_log_volume(p) - 1e-12,
        "circumscribing box cannot be smaller than its ellipsoid"
    );
    let lower: Vec<T> = semi_axes.iter().map(|&r| -r).collect();
    let bounds = AxisBox::new(lower, semi_axes.clone())?;
    let bump = EllipsoidBump {
        center: vec![T::zero(); p],
        axes: eigen.vectors,
        semi_axes,
        content: beta_prime,
    };
    Ok((bump, bounds))
}
