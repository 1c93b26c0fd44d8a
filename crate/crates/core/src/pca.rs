//! Principal-component rotation of predictor space.
//!
//! [`fit_rotation`] centers the predictors and diagonalizes their sample
//! covariance; [`rotate`] maps a dataset into the leading components; and
//! [`box_to_input_rule`] translates an axis-aligned box in component space
//! back into half-space constraints on the original predictors, since an
//! axis-aligned box in the rotated frame is a slanted slab intersection in
//! the input frame.

use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::numkernel::{sym_eigen, Matrix, SymMatrix};
use crate::prim::AxisBox;
use crate::scalar::Real;

/// A fitted rotation: center, eigenvectors, and eigenvalues of the sample
/// covariance, plus the number of leading components kept.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RotationModel<T> {
    /// Predictor means subtracted before rotating.
    pub center: Vec<T>,
    /// Eigenvector matrix; column `j` is the axis of component `j`.
    pub gamma: Matrix<T>,
    /// Eigenvalues in descending order (component variances).
    pub lambda: Vec<T>,
    /// Components kept by [`rotate`].
    pub p_prime: usize,
}

impl<T: Real> RotationModel<T> {
    /// Full predictor dimension.
    pub fn p(&self) -> usize {
        self.gamma.rows()
    }

    /// Projects one input-space row onto the first `p_prime` components.
    pub fn project(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.p() {
            return Err(Error::DimensionMismatch {
                context: "rotation input",
                expected: self.p(),
                actual: row.len(),
            });
        }
        let mut out = vec![T::zero(); self.p_prime];
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for i in 0..self.p() {
                acc += self.gamma[(i, j)] * (row[i] - self.center[i]);
            }
            *o = acc;
        }
        Ok(out)
    }
}

/// Sample covariance matrix of the predictors (divisor `n - 1`).
pub fn sample_covariance<T: Real>(data: &Dataset<T>) -> Result<SymMatrix<T>> {
    let n = data.n();
    let p = data.p();
    if n < 2 {
        return Err(Error::TooFewPoints {
            context: "covariance estimate",
            needed: 2,
            available: n,
        });
    }
    let inv_n = T::of(n as f64).recip();
    let mut means = vec![T::zero(); p];
    for i in 0..n {
        for (j, m) in means.iter_mut().enumerate() {
            *m += data.x()[(i, j)];
        }
    }
    for m in &mut means {
        *m *= inv_n;
    }
    let denom = T::of((n - 1) as f64).recip();
    let mut cov = Matrix::zeros(p, p);
    for i in 0..n {
        for j in 0..p {
            let dj = data.x()[(i, j)] - means[j];
            for k in j..p {
                cov[(j, k)] += dj * (data.x()[(i, k)] - means[k]);
            }
        }
    }
    for j in 0..p {
        for k in j..p {
            let v = cov[(j, k)] * denom;
            cov[(j, k)] = v;
            cov[(k, j)] = v;
        }
    }
    SymMatrix::new(cov)
}

/// Fits the rotation on a dataset, keeping the `p_prime` leading components.
pub fn fit_rotation<T: Real>(data: &Dataset<T>, p_prime: usize) -> Result<RotationModel<T>> {
    if p_prime == 0 || p_prime > data.p() {
        return Err(Error::InvalidConfig(format!(
            "kept components must lie in 1..={}, got {p_prime}",
            data.p()
        )));
    }
    let n = data.n();
    let p = data.p();
    let cov = sample_covariance(data)?;
    let eig = sym_eigen(&cov)?;
    let inv_n = T::of(n as f64).recip();
    let mut center = vec![T::zero(); p];
    for i in 0..n {
        for (j, c) in center.iter_mut().enumerate() {
            *c += data.x()[(i, j)];
        }
    }
    for c in &mut center {
        *c *= inv_n;
    }
    Ok(RotationModel {
        center,
        gamma: eig.vectors,
        lambda: eig.values,
        p_prime,
    })
}

/// Maps a dataset into the model's leading components, carrying the
/// response (and labels) along unchanged.
pub fn rotate<T: Real>(model: &RotationModel<T>, data: &Dataset<T>) -> Result<Dataset<T>> {
    let n = data.n();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        rows.push(model.project(data.row(i))?);
    }
    let x = Matrix::from_rows(&rows)?;
    Dataset::new(x, data.z().to_vec(), data.labels().map(<[u32]>::to_vec))
}

/// One linear constraint `lower <= coefficients . x <= upper` on the
/// original predictors; an open side is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint<T> {
    pub coefficients: Vec<T>,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

/// Conjunction of linear constraints describing a rotated box in input
/// space.
///
/// Serializes as just the constraint list.  A rule built by
/// [`box_to_input_rule`] additionally keeps the fitted center and the raw
/// component bounds, so [`LinearRule::contains`] reproduces the arithmetic
/// of [`RotationModel::project`] bit for bit and agrees exactly with the
/// component-space box on every point.  A rule read back from JSON has only
/// the affine form and evaluates that directly — the same region up to the
/// last floating-point digit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearRule<T> {
    pub constraints: Vec<LinearConstraint<T>>,
    #[serde(skip)]
    centered: Option<CenteredForm<T>>,
}

/// Pre-fold version of the constraints: raw component bounds plus the
/// center to subtract, one bound pair per (kept) constraint.
#[derive(Debug, Clone, PartialEq)]
struct CenteredForm<T> {
    center: Vec<T>,
    bounds: Vec<(Option<T>, Option<T>)>,
}

impl<T: Real> LinearRule<T> {
    /// Wraps ready-made affine constraints (no exact centered form).
    pub fn from_constraints(constraints: Vec<LinearConstraint<T>>) -> Self {
        LinearRule {
            constraints,
            centered: None,
        }
    }

    /// Whether the point satisfies every constraint (closed intervals).
    pub fn contains(&self, row: &[T]) -> bool {
        match &self.centered {
            Some(form) => self
                .constraints
                .iter()
                .zip(&form.bounds)
                .all(|(c, &(lower, upper))| {
                    // Same accumulation order as `RotationModel::project`,
                    // so boundary points cannot flip membership.
                    let mut acc = T::zero();
                    for (i, &g) in c.coefficients.iter().enumerate() {
                        acc += g * (row[i] - form.center[i]);
                    }
                    lower.is_none_or(|l| acc >= l) && upper.is_none_or(|u| acc <= u)
                }),
            None => self.constraints.iter().all(|c| {
                let v: T = c
                    .coefficients
                    .iter()
                    .zip(row)
                    .map(|(&a, &x)| a * x)
                    .sum();
                c.lower.is_none_or(|l| v >= l) && c.upper.is_none_or(|u| v <= u)
            }),
        }
    }
}

/// Rewrites a component-space box as constraints on the original
/// predictors.
///
/// A bound `l_j <= y_j <= u_j` on component `j` becomes
/// `l_j + g_j.c <= g_j.x <= u_j + g_j.c` with `g_j` the j-th eigenvector
/// and `c` the center; the centering shift folds into the interval so the
/// rule needs only one dot product per constraint.  Components with both
/// sides unbounded emit no constraint.
pub fn box_to_input_rule<T: Real>(
    model: &RotationModel<T>,
    bounds: &AxisBox<T>,
) -> Result<LinearRule<T>> {
    if bounds.dim() != model.p_prime {
        return Err(Error::DimensionMismatch {
            context: "component box",
            expected: model.p_prime,
            actual: bounds.dim(),
        });
    }
    let p = model.p();
    let mut constraints = Vec::new();
    let mut raw_bounds = Vec::new();
    for j in 0..model.p_prime {
        let lower_open = !bounds.lower()[j].is_finite();
        let upper_open = !bounds.upper()[j].is_finite();
        if lower_open && upper_open {
            continue;
        }
        let coefficients: Vec<T> = (0..p).map(|i| model.gamma[(i, j)]).collect();
        let shift: T = coefficients
            .iter()
            .zip(&model.center)
            .map(|(&g, &c)| g * c)
            .sum();
        constraints.push(LinearConstraint {
            coefficients,
            lower: (!lower_open).then(|| bounds.lower()[j] + shift),
            upper: (!upper_open).then(|| bounds.upper()[j] + shift),
        });
        raw_bounds.push((
            (!lower_open).then(|| bounds.lower()[j]),
            (!upper_open).then(|| bounds.upper()[j]),
        ));
    }
    Ok(LinearRule {
        constraints,
        centered: Some(CenteredForm {
            center: model.center.clone(),
            bounds: raw_bounds,
        }),
    })
}
