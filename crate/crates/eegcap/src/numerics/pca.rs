//! Principal component analysis on sample-major data.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{sym_eigen, SymMatrix};
use crate::error::{Error, Result};

/// How many components to keep: a fixed count, or the smallest count whose
/// cumulative eigenvalue share reaches the given variance fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaTarget {
    Count(usize),
    Fraction(f64),
}

/// Fitted PCA basis.
///
/// `components` has `retained` rows, each a unit-norm principal direction;
/// `eigenvalues` holds the full nonincreasing spectrum of the sample
/// covariance (1/(N-1) normalization), so retained-variance bookkeeping stays
/// possible after reduction.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    pub components: Array2<f64>,
    pub eigenvalues: Vec<f64>,
    pub retained: usize,
}

impl PcaModel {
    /// Centers `data` and projects it onto the retained components.
    pub fn transform(&self, data: &Array2<f64>) -> Result<Array2<f64>> {
        if data.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "pca transform: data has {} columns, model expects {}",
                data.ncols(),
                self.mean.len()
            )));
        }
        let centered = data - &self.mean;
        Ok(centered.dot(&self.components.t()))
    }

    /// Maps reduced coordinates back to the original space (adds the mean).
    pub fn inverse_transform(&self, reduced: &Array2<f64>) -> Array2<f64> {
        reduced.dot(&self.components) + &self.mean
    }

    /// Fraction of total variance carried by the retained components.
    pub fn retained_variance_fraction(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return 1.0;
        }
        self.eigenvalues[..self.retained].iter().sum::<f64>() / total
    }
}

/// Centers `data` by column means and projects onto the leading eigenvectors
/// of the sample covariance.
///
/// Rank-deficient covariance is fine: zero eigenvalues sort last and are kept
/// in the spectrum. Each component's largest-magnitude entry is made positive
/// so output is deterministic across runs.
pub fn pca_reduce(data: &Array2<f64>, target: PcaTarget) -> Result<(Array2<f64>, PcaModel)> {
    let (n, p) = data.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "pca_reduce needs at least 2 samples, got {n}"
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "pca_reduce: data contains non-finite entries".into(),
        ));
    }
    match target {
        PcaTarget::Count(c) if c < 1 || c > p => {
            return Err(Error::InvalidArgument(format!(
                "pca target count must be in [1, {p}], got {c}"
            )));
        }
        PcaTarget::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
            return Err(Error::InvalidArgument(format!(
                "pca target fraction must be in (0, 1], got {f}"
            )));
        }
        _ => {}
    }

    let mean = data.mean_axis(Axis(0)).expect("n >= 2");
    let centered = data - &mean;
    let cov = SymMatrix::from_symmetric_unchecked(centered.t().dot(&centered) / (n as f64 - 1.0));
    let (raw_eigs, vecs) = sym_eigen(&cov);
    let eigenvalues: Vec<f64> = raw_eigs.iter().map(|&l| l.max(0.0)).collect();

    let retained = match target {
        PcaTarget::Count(c) => c,
        PcaTarget::Fraction(f) => {
            let total: f64 = eigenvalues.iter().sum();
            let threshold = f * total;
            let mut cum = 0.0;
            let mut keep = p;
            for (i, &l) in eigenvalues.iter().enumerate() {
                cum += l;
                if cum >= threshold {
                    keep = i + 1;
                    break;
                }
            }
            keep
        }
    };

    // Rows = principal directions, sign-fixed on the largest-magnitude entry.
    let mut components = Array2::zeros((retained, p));
    for r in 0..retained {
        let mut best = 0;
        for i in 1..p {
            if vecs[[i, r]].abs() > vecs[[best, r]].abs() {
                best = i;
            }
        }
        let flip = if vecs[[best, r]] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            components[[r, i]] = flip * vecs[[i, r]];
        }
    }

    let model = PcaModel {
        mean,
        components,
        eigenvalues,
        retained,
    };
    let reduced = model.transform(data)?;
    Ok((reduced, model))
}
