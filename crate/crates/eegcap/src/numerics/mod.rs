//! Shared linear-algebra kernels: symmetric matrices, Cholesky factorization,
//! PSD log-determinants, noise whitening, a Jacobi eigensolver, PCA, and the
//! digamma function.
//!
//! Everything here is a pure function of its inputs and safe to call
//! concurrently. Matrices are dense `f64`; the target scale is a few hundred
//! dimensions at most.

mod pca;
mod special;

pub use pca::{pca_reduce, PcaModel, PcaTarget};
pub use special::digamma;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Dense symmetric matrix. Construction validates squareness and symmetry
/// (within `1e-12` relative to the largest entry) and then symmetrizes, so
/// downstream code can rely on exact `m[i][j] == m[j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Symmetry validation tolerance, relative to the largest absolute entry.
    const SYM_RTOL: f64 = 1e-12;

    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square with dim >= 1, got {r}x{c}"
            )));
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = Self::SYM_RTOL * scale;
        for i in 0..r {
            for j in (i + 1)..r {
                let d = (data[[i, j]] - data[[j, i]]).abs();
                if d > tol {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i},{j}): |{} - {}| > {tol:e}",
                        data[[i, j]],
                        data[[j, i]]
                    )));
                }
            }
        }
        let mut data = data;
        for i in 0..r {
            for j in (i + 1)..r {
                let avg = 0.5 * (data[[i, j]] + data[[j, i]]);
                data[[i, j]] = avg;
                data[[j, i]] = avg;
            }
        }
        Ok(SymMatrix { data })
    }

    /// Builds from the lower triangle of `f(i, j)`; symmetric by construction.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "SymMatrix dim must be >= 1");
        let mut data = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                data[[i, j]] = v;
                data[[j, i]] = v;
            }
        }
        SymMatrix { data }
    }

    /// Wraps an array that is symmetric by construction (no validation).
    pub(crate) fn from_symmetric_unchecked(data: Array2<f64>) -> Self {
        SymMatrix { data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Self::from_fn(dim, |i, j| if i == j { c } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * c,
        }
    }

    /// `B * self * B^T` for a rectangular `B`; symmetric by construction.
    pub fn congruence(&self, b: &Array2<f64>) -> Result<SymMatrix> {
        if b.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "congruence: B has {} columns, matrix dim is {}",
                b.ncols(),
                self.dim()
            )));
        }
        let m = b.dot(&self.data).dot(&b.t());
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (out[[i, j]] + out[[j, i]]);
                out[[i, j]] = avg;
                out[[j, i]] = avg;
            }
        }
        Ok(SymMatrix { data: out })
    }
}

/// Lower-triangular Cholesky factor `L` with `m = L L^T`.
///
/// A pivot at or below `1e-12 * trace / dim` fails the factorization, which
/// doubles as the positive-definiteness check for every caller.
pub fn cholesky(m: &SymMatrix) -> Result<Array2<f64>> {
    let n = m.dim();
    let tol = 1e-12 * m.trace() / n as f64;
    let a = m.as_array();
    let mut l: Array2<f64> = Array2::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= tol {
            return Err(Error::NotPositiveDefinite {
                context: format!("pivot {d:e} at index {j} is below tolerance {tol:e}"),
            });
        }
        let dj = d.sqrt();
        l[[j, j]] = dj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / dj;
        }
    }
    Ok(l)
}

/// `ln det(m)` for symmetric positive definite `m`, via Cholesky
/// (`ln det = 2 sum ln L_kk`), never the determinant itself.
pub fn logdet_psd(m: &SymMatrix) -> Result<f64> {
    let l = cholesky(m)?;
    Ok(2.0 * (0..m.dim()).map(|k| l[[k, k]].ln()).sum::<f64>())
}

/// Solves `L X = B` for lower-triangular `L` (column-wise forward substitution).
fn forward_substitute(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let m = b.ncols();
    let mut x = b.clone();
    for col in 0..m {
        for i in 0..n {
            let mut s = x[[i, col]];
            for k in 0..i {
                s -= l[[i, k]] * x[[k, col]];
            }
            x[[i, col]] = s / l[[i, i]];
        }
    }
    x
}

/// Solves `m X = B` for symmetric positive definite `m` via Cholesky.
pub fn cholesky_solve(m: &SymMatrix, rhs: &Array2<f64>) -> Result<Array2<f64>> {
    if rhs.nrows() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky_solve: rhs has {} rows, matrix dim is {}",
            rhs.nrows(),
            m.dim()
        )));
    }
    let l = cholesky(m)?;
    let u = forward_substitute(&l, rhs);
    // Back substitution with L^T.
    let n = l.nrows();
    let cols = u.ncols();
    let mut x = u;
    for col in 0..cols {
        for i in (0..n).rev() {
            let mut s = x[[i, col]];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[[k, col]];
            }
            x[[i, col]] = s / l[[i, i]];
        }
    }
    Ok(x)
}

/// `L^-1 * signal * L^-T` where `noise = L L^T`.
///
/// Rewrites quadratic forms in `noise^-1` so downstream eigenvalue work stays
/// on symmetric matrices. The eigenvalues of the result are the generalized
/// eigenvalues of `(signal, noise)`.
pub fn whiten_by(noise: &SymMatrix, signal: &SymMatrix) -> Result<SymMatrix> {
    if noise.dim() != signal.dim() {
        return Err(Error::DimensionMismatch(format!(
            "whiten_by: noise dim {} vs signal dim {}",
            noise.dim(),
            signal.dim()
        )));
    }
    let l = cholesky(noise)?;
    let m1 = forward_substitute(&l, signal.as_array()); // L^-1 S
    let m2 = forward_substitute(&l, &m1.t().to_owned()); // L^-1 S^T L^-T = W^T
    let n = m2.nrows();
    let mut w = m2;
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (w[[i, j]] + w[[j, i]]);
            w[[i, j]] = avg;
            w[[j, i]] = avg;
        }
    }
    Ok(SymMatrix::from_symmetric_unchecked(w))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in nonincreasing order and the matrix whose column `j`
/// is the eigenvector for eigenvalue `j`. Deterministic: fixed sweep order,
/// no randomization.
pub fn sym_eigen(m: &SymMatrix) -> (Vec<f64>, Array2<f64>) {
    let n = m.dim();
    let mut a = m.as_array().clone();
    let mut v: Array2<f64> = Array2::eye(n);
    if n == 1 {
        return (vec![a[[0, 0]]], v);
    }

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = 1e-14 * frob.max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 64;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= stop / (n as f64) {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, new_col]] = v[[k, old_col]];
        }
    }
    (eigenvalues, vectors)
}
