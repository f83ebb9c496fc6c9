//! Analytic mutual information of the Gaussian sensor channel.
//!
//! For jointly Gaussian source and sensor variables the per-sample mutual
//! information is `1/2 log2 det(I + A Sigma_X A^T Sigma_eps^-1)`. The product
//! matrix is non-symmetric and poorly conditioned at high electrode counts,
//! so the computation goes through noise whitening instead: the eigenvalues
//! of `L^-1 (A Sigma_X A^T) L^-T` (with `Sigma_eps = L L^T`) are the channel
//! SNR eigenvalues, and the MI is `sum log2(1 + lambda_i) / 2`, which is
//! algebraically the same quantity.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::{sym_eigen, whiten_by, SymMatrix};

/// Eigenvalues below this are numerical zeros of a rank-deficient channel.
const EIGENVALUE_CLAMP: f64 = 1e-12;

/// Analytic channel capacity and the spectrum behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Mutual information in bits per sample.
    pub mi_bits: f64,
    /// Channel SNR eigenvalues, nonincreasing, clamped at zero.
    pub channel_eigenvalues: Vec<f64>,
}

/// Stationary covariance of `n_l` independent AR(1) latents:
/// `(1 / (1 - rho^2)) I`.
pub fn latent_stationary_cov(rho: f64, n_l: usize) -> Result<SymMatrix> {
    if rho.abs() >= 1.0 || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "AR(1) stationary covariance requires |rho| < 1, got {rho}"
        )));
    }
    if n_l == 0 {
        return Err(Error::InvalidArgument("n_l must be >= 1".into()));
    }
    Ok(SymMatrix::scaled_identity(n_l, 1.0 / (1.0 - rho * rho)))
}

/// Source covariance `Sigma_X = M Sigma_Z M^T` (PSD, rank at most `n_l`).
pub fn source_cov(mixing: &Array2<f64>, latent_cov: &SymMatrix) -> Result<SymMatrix> {
    if mixing.ncols() != latent_cov.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mixing has {} columns, latent covariance dim is {}",
            mixing.ncols(),
            latent_cov.dim()
        )));
    }
    latent_cov.congruence(mixing)
}

/// Per-sample Gaussian mutual information in bits for the channel
/// `Y = A X + eps` with `X ~ N(0, Sigma_X)` and `eps ~ N(0, Sigma_eps)`.
pub fn gaussian_mi_bits(
    leadfield: &Array2<f64>,
    source_cov: &SymMatrix,
    noise_cov: &SymMatrix,
) -> Result<CapacityResult> {
    if leadfield.ncols() != source_cov.dim() {
        return Err(Error::DimensionMismatch(format!(
            "leadfield has {} columns, source covariance dim is {}",
            leadfield.ncols(),
            source_cov.dim()
        )));
    }
    if leadfield.nrows() != noise_cov.dim() {
        return Err(Error::DimensionMismatch(format!(
            "leadfield has {} rows, noise covariance dim is {}",
            leadfield.nrows(),
            noise_cov.dim()
        )));
    }
    let sensor_signal = source_cov.congruence(leadfield)?;
    let whitened = whiten_by(noise_cov, &sensor_signal)?;
    let (raw, _) = sym_eigen(&whitened);
    let channel_eigenvalues: Vec<f64> = raw
        .iter()
        .map(|&l| if l < EIGENVALUE_CLAMP { 0.0 } else { l })
        .collect();
    let mi_bits = 0.5
        * channel_eigenvalues
            .iter()
            .map(|&l| (1.0 + l).log2())
            .sum::<f64>();
    Ok(CapacityResult {
        mi_bits,
        channel_eigenvalues,
    })
}
