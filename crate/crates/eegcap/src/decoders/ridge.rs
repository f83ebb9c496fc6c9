//! Closed-form ridge regression from sensor features to latent targets.

use ndarray::{Array1, Array2, Axis};

use super::Decoder;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_solve, SymMatrix};

/// Affine decoder `x_hat = y W + intercept`.
///
/// `weights` is `(p + 1) x n_l`; the last row is the intercept. Feature and
/// target means are absorbed into the intercept at fit time.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecoder {
    pub weights: Array2<f64>,
    pub ridge_lambda: f64,
}

impl LinearDecoder {
    pub fn n_features(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn n_targets(&self) -> usize {
        self.weights.ncols()
    }

    pub fn intercept(&self) -> Array1<f64> {
        self.weights.row(self.weights.nrows() - 1).to_owned()
    }

    fn coefficient_block(&self) -> ndarray::ArrayView2<'_, f64> {
        self.weights
            .slice(ndarray::s![..self.weights.nrows() - 1, ..])
    }
}

impl Decoder for LinearDecoder {
    fn predict(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "linear decoder expects {} features, got {}",
                self.n_features(),
                features.ncols()
            )));
        }
        Ok(features.dot(&self.coefficient_block()) + &self.intercept())
    }
}

/// Solves `(Yc^T Yc + lambda I) W = Yc^T Xc` on centered data via Cholesky;
/// the intercept maps feature means onto target means.
pub fn ridge_fit(
    features: &Array2<f64>,
    targets: &Array2<f64>,
    lambda: f64,
) -> Result<LinearDecoder> {
    if features.nrows() != targets.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "ridge: {} feature rows vs {} target rows",
            features.nrows(),
            targets.nrows()
        )));
    }
    if features.nrows() < 2 {
        return Err(Error::InvalidArgument(
            "ridge needs at least 2 samples".into(),
        ));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda must be nonnegative, got {lambda}"
        )));
    }
    let p = features.ncols();
    let y_mean = features.mean_axis(Axis(0)).expect("nonempty");
    let x_mean = targets.mean_axis(Axis(0)).expect("nonempty");
    let yc = features - &y_mean;
    let xc = targets - &x_mean;

    let mut gram = yc.t().dot(&yc);
    for i in 0..p {
        gram[[i, i]] += lambda;
    }
    let gram = SymMatrix::from_symmetric_unchecked(gram);
    let rhs = yc.t().dot(&xc);
    let coef = cholesky_solve(&gram, &rhs).map_err(|e| match e {
        Error::NotPositiveDefinite { context } => Error::SingularSystem(format!(
            "ridge normal equations are singular (lambda = {lambda}): {context}"
        )),
        other => other,
    })?;

    let intercept = &x_mean - &y_mean.dot(&coef);
    let mut weights = Array2::zeros((p + 1, targets.ncols()));
    weights.slice_mut(ndarray::s![..p, ..]).assign(&coef);
    weights.row_mut(p).assign(&intercept);
    Ok(LinearDecoder {
        weights,
        ridge_lambda: lambda,
    })
}

/// Picks `lambda` from `grid` by pooled validation R^2 on the trailing
/// `val_fraction` block of the training rows (time order, no shuffling), then
/// refits on the full training block with the winner.
pub fn ridge_fit_select(
    features: &Array2<f64>,
    targets: &Array2<f64>,
    grid: &[f64],
    val_fraction: f64,
) -> Result<(LinearDecoder, f64)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("ridge lambda grid is empty".into()));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    let n = features.nrows();
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n - 2);
    let split = n - n_val;
    let fit_y = features.slice(ndarray::s![..split, ..]).to_owned();
    let fit_x = targets.slice(ndarray::s![..split, ..]).to_owned();
    let val_y = features.slice(ndarray::s![split.., ..]).to_owned();
    let val_x = targets.slice(ndarray::s![split.., ..]).to_owned();

    let mut best: Option<(f64, f64)> = None; // (r2, lambda)
    for &lambda in grid {
        let decoder = ridge_fit(&fit_y, &fit_x, lambda)?;
        let pred = decoder.predict(&val_y)?;
        let (r2, _) = super::r2_variance_weighted(&val_x, &pred)?;
        if best.is_none_or(|(b, _)| r2 > b) {
            best = Some((r2, lambda));
        }
    }
    let (_, lambda) = best.expect("nonempty grid");
    Ok((ridge_fit(features, targets, lambda)?, lambda))
}
