//! One-hidden-layer tanh MLP trained by seeded mini-batch gradient descent
//! with momentum.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Decoder;
use crate::error::{Error, Result};

/// Training configuration. `epochs` is an upper bound; training stops early
/// once validation loss has not improved for 20 epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden_width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Trailing fraction of the training rows held out for early stopping
    /// (contiguous in time order, consistent with serially dependent data).
    pub validation_fraction: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_width: 64,
            epochs: 500,
            learning_rate: 1e-3,
            batch_size: 64,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

const MOMENTUM: f64 = 0.9;
const PATIENCE: usize = 20;

/// `(w1, b1, w2, b2)` checkpoint kept for early stopping.
type ParamSnapshot = (Array2<f64>, Array1<f64>, Array2<f64>, Array1<f64>);

/// Fitted network: `x_hat = tanh(y W1 + b1) W2 + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpDecoder {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub hidden_width: usize,
    /// Mean training mini-batch loss per epoch (MSE over all elements).
    pub training_log: Vec<f64>,
}

impl MlpDecoder {
    fn forward(&self, features: &Array2<f64>) -> Array2<f64> {
        let mut hidden = features.dot(&self.w1) + &self.b1;
        hidden.mapv_inplace(f64::tanh);
        hidden.dot(&self.w2) + &self.b2
    }
}

impl Decoder for MlpDecoder {
    fn predict(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.w1.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "mlp expects {} features, got {}",
                self.w1.nrows(),
                features.ncols()
            )));
        }
        Ok(self.forward(features))
    }
}

fn mse(pred: &Array2<f64>, target: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for (p, t) in pred.iter().zip(target.iter()) {
        let e = p - t;
        s += e * e;
    }
    s / pred.len() as f64
}

/// Trains the network on `(features, targets)` by minimizing mean squared
/// reconstruction error. Deterministic given `cfg.seed`: parameter
/// initialization (scaled-uniform, scale `1/sqrt(fan_in)`) and the per-epoch
/// shuffle come from one fixed stream. Early stopping keeps the parameters
/// of the best validation epoch.
pub fn mlp_fit(
    features: &Array2<f64>,
    targets: &Array2<f64>,
    cfg: &MlpConfig,
) -> Result<MlpDecoder> {
    let n = features.nrows();
    if n != targets.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "mlp: {} feature rows vs {} target rows",
            n,
            targets.nrows()
        )));
    }
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "mlp needs at least 10 samples, got {n}"
        )));
    }
    if cfg.hidden_width == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "mlp hidden_width and batch_size must be positive".into(),
        ));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mlp learning_rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    if !(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mlp validation_fraction must be in (0, 1), got {}",
            cfg.validation_fraction
        )));
    }

    let p = features.ncols();
    let q = targets.ncols();
    let h = cfg.hidden_width;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let s1 = 1.0 / (p as f64).sqrt();
    let w1 = Array2::from_shape_fn((p, h), |_| rng.random_range(-s1..s1));
    let s2 = 1.0 / (h as f64).sqrt();
    let w2 = Array2::from_shape_fn((h, q), |_| rng.random_range(-s2..s2));
    let mut net = MlpDecoder {
        w1,
        b1: Array1::zeros(h),
        w2,
        b2: Array1::zeros(q),
        hidden_width: h,
        training_log: Vec::new(),
    };
    if cfg.epochs == 0 {
        return Ok(net);
    }

    let n_val = ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 2);
    let n_fit = n - n_val;
    let fit_y = features.slice(ndarray::s![..n_fit, ..]);
    let fit_x = targets.slice(ndarray::s![..n_fit, ..]);
    let val_y = features.slice(ndarray::s![n_fit.., ..]).to_owned();
    let val_x = targets.slice(ndarray::s![n_fit.., ..]).to_owned();

    let mut vel_w1: Array2<f64> = Array2::zeros((p, h));
    let mut vel_b1: Array1<f64> = Array1::zeros(h);
    let mut vel_w2: Array2<f64> = Array2::zeros((h, q));
    let mut vel_b2: Array1<f64> = Array1::zeros(q);

    let mut order: Vec<usize> = (0..n_fit).collect();
    let mut best_val = f64::INFINITY;
    let mut best_params: Option<ParamSnapshot> = None;
    let mut stale_epochs = 0usize;

    for epoch in 0..cfg.epochs {
        for i in (1..n_fit).rev() {
            order.swap(i, rng.random_range(0..=i));
        }

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size.min(n_fit)) {
            let b = chunk.len();
            let mut yb = Array2::zeros((b, p));
            let mut xb = Array2::zeros((b, q));
            for (r, &idx) in chunk.iter().enumerate() {
                yb.row_mut(r).assign(&fit_y.row(idx));
                xb.row_mut(r).assign(&fit_x.row(idx));
            }

            let mut hidden = yb.dot(&net.w1) + &net.b1;
            hidden.mapv_inplace(f64::tanh);
            let pred = hidden.dot(&net.w2) + &net.b2;
            let err = &pred - &xb;
            epoch_loss += err.iter().map(|e| e * e).sum::<f64>() / (b * q) as f64;
            batches += 1;

            // dL/dpred for MSE over all batch elements.
            let dpred = &err * (2.0 / (b * q) as f64);
            let g_w2 = hidden.t().dot(&dpred);
            let g_b2 = dpred.sum_axis(Axis(0));
            let mut dhidden = dpred.dot(&net.w2.t());
            dhidden.zip_mut_with(&hidden, |d, &t| *d *= 1.0 - t * t);
            let g_w1 = yb.t().dot(&dhidden);
            let g_b1 = dhidden.sum_axis(Axis(0));

            vel_w1 = vel_w1 * MOMENTUM - &(g_w1 * cfg.learning_rate);
            vel_b1 = vel_b1 * MOMENTUM - &(g_b1 * cfg.learning_rate);
            vel_w2 = vel_w2 * MOMENTUM - &(g_w2 * cfg.learning_rate);
            vel_b2 = vel_b2 * MOMENTUM - &(g_b2 * cfg.learning_rate);
            net.w1 += &vel_w1;
            net.b1 += &vel_b1;
            net.w2 += &vel_w2;
            net.b2 += &vel_b2;
        }
        let train_loss = epoch_loss / batches as f64;
        net.training_log.push(train_loss);
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }

        let val_loss = mse(&net.forward(&val_y), &val_x);
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        if val_loss < best_val {
            best_val = val_loss;
            best_params = Some((
                net.w1.clone(),
                net.b1.clone(),
                net.w2.clone(),
                net.b2.clone(),
            ));
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= PATIENCE {
                break;
            }
        }
    }

    if let Some((w1, b1, w2, b2)) = best_params {
        net.w1 = w1;
        net.b1 = b1;
        net.w2 = w2;
        net.b2 = b2;
    }
    Ok(net)
}
