use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::matrix::{Matrix, SymMatrix};

/// Eigendecomposition of a symmetric matrix: `A = V diag(values) V'`.
///
/// Eigenvalues are sorted in descending order; `vectors` holds the matching
/// eigenvectors as columns.  Each eigenvector is normalized so that its
/// largest-magnitude component is positive (first such component on exact
/// magnitude ties), which pins an otherwise arbitrary sign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> EigenDecomposition<T> {
    /// Rebuilds `V diag(values) V'`, mainly for testing.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] = scaled[(i, j)] * self.values[j];
            }
        }
        scaled.matmul(&self.vectors.transpose()).expect("square")
    }
}

const MAX_SWEEPS: usize = 100;

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Converges when the sum of absolute off-diagonal entries falls below
/// `1e-14` relative to the initial Frobenius norm; errors with
/// [`Error::NonConvergence`] after 100 sweeps.  The sweep order is fixed, so
/// the result is deterministic for identical input.
pub fn sym_eigen<T: Real>(m: &SymMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let tol = T::of(1e-14) * a.frobenius_norm().max(T::min_positive_value());

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[(p, q)].abs();
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            routine: "jacobi eigendecomposition",
            iterations: MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the sweep output order among exactly tied eigenvalues.
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .expect("finite eigenvalues")
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(a[(src, src)]);
        let mut max_abs = T::zero();
        let mut max_idx = 0;
        for i in 0..n {
            let c = v[(i, src)].abs();
            if c > max_abs {
                max_abs = c;
                max_idx = i;
            }
        }
        let flip = v[(max_idx, src)] < T::zero();
        for i in 0..n {
            let val = v[(i, src)];
            vectors[(i, dst)] = if flip { -val } else { val };
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// One Jacobi rotation zeroing `a[(p, q)]`, accumulating into `v`.
fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let half = T::of(0.5);
    let theta = (a[(q, q)] - a[(p, p)]) * half / apq;
    // Smaller-magnitude root of t^2 + 2 theta t - 1 = 0.
    let t = if theta.abs() > T::of(1e150) {
        (theta * T::of(2.0)).recip()
    } else {
        let sign = if theta >= T::zero() { T::one() } else { -T::one() };
        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = (t * t + T::one()).sqrt().recip();
    let s = t * c;
    let tau = s / (T::one() + c);

    let app = a[(p, p)];
    let aqq = a[(q, q)];
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();

    let n = a.rows();
    for i in 0..n {
        if i != p && i != q {
            let aip = a[(i, p)];
            let aiq = a[(i, q)];
            a[(i, p)] = aip - s * (aiq + tau * aip);
            a[(i, q)] = aiq + s * (aip - tau * aiq);
            a[(p, i)] = a[(i, p)];
            a[(q, i)] = a[(i, q)];
        }
    }
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip - s * (viq + tau * vip);
        v[(i, q)] = viq + s * (vip - tau * viq);
    }
}

const PSD_EIGEN_FLOOR: f64 = -1e-10;

/// Symmetric square root `A^(1/2)` via the eigendecomposition.
///
/// Eigenvalues in `[-1e-10, 0)` are treated as rounding noise and clipped to
/// zero; anything more negative is rejected as not positive semidefinite.
pub fn sym_sqrt<T: Real>(m: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let eig = sym_eigen(m)?;
    let n = m.dim();
    let floor = T::of(PSD_EIGEN_FLOOR);
    let mut scaled = eig.vectors.clone();
    for (j, &lambda) in eig.values.iter().enumerate() {
        if lambda < floor {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: lambda.as_f64(),
            });
        }
        let root = lambda.max(T::zero()).sqrt();
        for i in 0..n {
            scaled[(i, j)] = scaled[(i, j)] * root;
        }
    }
    let product = scaled.matmul(&eig.vectors.transpose())?;
    SymMatrix::new(product)
}

/// Lower-triangular Cholesky factor `L` with `L L' = A`.
///
/// Errors with [`Error::NotPositiveDefinite`] when a pivot is not strictly
/// positive.
pub fn cholesky<T: Real>(m: &SymMatrix<T>) -> Result<Matrix<T>> {
    let n = m.dim();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[(i, j)];
            for k in 0..j {
                sum = sum - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= T::zero() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}
