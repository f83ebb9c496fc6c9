//! Latent-state decoders: closed-form ridge regression and a one-hidden-layer
//! MLP, scored by variance-weighted R^2 and by the mutual information between
//! true and predicted latents.

mod mlp;
mod ridge;

pub use mlp::{mlp_fit, MlpConfig, MlpDecoder};
pub use ridge::{ridge_fit, ridge_fit_select, LinearDecoder};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::mi::{ksg_mi_bits, SamplePairSet};

/// Anything that maps sensor rows to latent predictions.
pub trait Decoder {
    fn predict(&self, features: &Array2<f64>) -> Result<Array2<f64>>;
}

/// Decoder quality on one evaluation split.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    /// Pooled R^2: `1 - sum_j SSE_j / sum_j SST_j` across latent dimensions.
    pub r2_variance_weighted: f64,
    /// KSG mutual information between true and predicted latents, in bits.
    pub mi_recovered_bits: f64,
    /// Per-dimension R^2 (NaN for a zero-variance target dimension).
    pub per_dim_r2: Vec<f64>,
}

/// Per-dimension and pooled R^2, with sums of squares taken about the true
/// column means. The pooled value equals the SST-weighted mean of the
/// per-dimension values.
pub fn r2_variance_weighted(x_true: &Array2<f64>, x_pred: &Array2<f64>) -> Result<(f64, Vec<f64>)> {
    if x_true.dim() != x_pred.dim() {
        return Err(Error::DimensionMismatch(format!(
            "r2: shapes {:?} and {:?} differ",
            x_true.dim(),
            x_pred.dim()
        )));
    }
    let (n, q) = x_true.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "r2 needs at least 2 samples, got {n}"
        )));
    }
    let mut sse_total = 0.0;
    let mut sst_total = 0.0;
    let mut per_dim = Vec::with_capacity(q);
    for j in 0..q {
        let mean = x_true.column(j).sum() / n as f64;
        let mut sse = 0.0;
        let mut sst = 0.0;
        for i in 0..n {
            let e = x_true[[i, j]] - x_pred[[i, j]];
            sse += e * e;
            let d = x_true[[i, j]] - mean;
            sst += d * d;
        }
        sse_total += sse;
        sst_total += sst;
        per_dim.push(if sst > 0.0 { 1.0 - sse / sst } else { f64::NAN });
    }
    if sst_total <= 0.0 {
        return Err(Error::UndefinedVariance(
            "all target dimensions are constant".into(),
        ));
    }
    Ok((1.0 - sse_total / sst_total, per_dim))
}

/// Mutual information between true and predicted latents (KSG, bits).
pub fn decoder_mi_bits(x_true: &Array2<f64>, x_pred: &Array2<f64>, k: usize) -> Result<f64> {
    let pairs = SamplePairSet::new(x_true.clone(), x_pred.clone())?;
    ksg_mi_bits(&pairs, k)
}

/// Full report for one (true, predicted) pairing.
pub fn evaluate(x_true: &Array2<f64>, x_pred: &Array2<f64>, k: usize) -> Result<DecodeReport> {
    let (pooled, per_dim) = r2_variance_weighted(x_true, x_pred)?;
    let mi = decoder_mi_bits(x_true, x_pred, k)?;
    Ok(DecodeReport {
        r2_variance_weighted: pooled,
        mi_recovered_bits: mi,
        per_dim_r2: per_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array2, Axis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn unit_gaussian(n: usize, q: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, q), |_| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let x = unit_gaussian(50, 3, 1);
        let (pooled, per_dim) = r2_variance_weighted(&x, &x.clone()).unwrap();
        assert_eq!(pooled, 1.0);
        assert!(per_dim.iter().all(|&r| r == 1.0));
    }

    #[test]
    fn column_mean_prediction_scores_zero() {
        let x = unit_gaussian(50, 2, 2);
        let means = x.mean_axis(Axis(0)).unwrap();
        let pred = Array2::from_shape_fn((50, 2), |(_, j)| means[j]);
        let (pooled, _) = r2_variance_weighted(&x, &pred).unwrap();
        assert_eq!(pooled, 0.0);
    }

    #[test]
    fn pooled_formula_hand_computed() {
        // Two dimensions with SST = (10, 1) and SSE = (1, 1):
        // pooled = 1 - 2/11.
        // dim 0: true = (-sqrt(5), 0, sqrt(5)) -> SST = 10; pred shifts one
        // entry by 1 -> SSE = 1. dim 1 scaled to SST = 1, SSE = 1.
        let s = 5.0f64.sqrt();
        let h = 0.5f64.sqrt();
        let x_true = ndarray::array![[-s, -h], [0.0, 0.0], [s, h]];
        let x_pred = ndarray::array![[-s, -h + 1.0], [0.0, 0.0], [s - 1.0, h]];
        let (pooled, per_dim) = r2_variance_weighted(&x_true, &x_pred).unwrap();
        assert_abs_diff_eq!(pooled, 1.0 - 2.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(per_dim[0], 1.0 - 1.0 / 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(per_dim[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_targets_are_an_error() {
        let x = Array2::from_elem((10, 2), 3.0);
        let pred = Array2::zeros((10, 2));
        assert!(matches!(
            r2_variance_weighted(&x, &pred),
            Err(Error::UndefinedVariance(_))
        ));
    }

    #[test]
    fn decoder_mi_shuffled_and_independent_predictions_carry_no_information() {
        let x = unit_gaussian(2000, 2, 3);
        let mut sum_shuffled = 0.0;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            let mut perm: Vec<usize> = (0..2000).collect();
            for i in (1..2000usize).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let mut pred = Array2::zeros((2000, 2));
            for (i, &p) in perm.iter().enumerate() {
                for j in 0..2 {
                    pred[[i, j]] = x[[p, j]];
                }
            }
            sum_shuffled += decoder_mi_bits(&x, &pred, 4).unwrap();
        }
        assert!((sum_shuffled / 10.0).abs() <= 0.05);

        let independent = unit_gaussian(2000, 2, 99);
        let mut sum_indep = 0.0;
        for seed in 0..10u64 {
            let x2 = unit_gaussian(2000, 2, 600 + seed);
            sum_indep += decoder_mi_bits(&x2, &independent, 4).unwrap();
        }
        assert!((sum_indep / 10.0).abs() <= 0.05);
    }

    #[test]
    fn near_deterministic_pairing_dominates_the_correlated_benchmark() {
        // x_pred = x_true + tiny noise must carry far more information than
        // the rho = 0.9 bivariate benchmark; compare the two runs directly.
        let x = unit_gaussian(2000, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pred =
            &x + &Array2::from_shape_fn((2000, 1), |_| 1e-3 * rng.sample::<f64, _>(StandardNormal));
        let tight = decoder_mi_bits(&x, &pred, 4).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let loose_pred = Array2::from_shape_fn((2000, 1), |(i, _)| {
            0.9 * x[[i, 0]] + (1.0f64 - 0.81).sqrt() * rng.sample::<f64, _>(StandardNormal)
        });
        let benchmark = decoder_mi_bits(&x, &loose_pred, 4).unwrap();
        assert!(
            tight > benchmark,
            "near-copy MI {tight} should exceed rho=0.9 benchmark {benchmark}"
        );
    }
}
