//! Empirical mutual information via the Kraskov-Stogbauer-Grassberger (KSG)
//! k-nearest-neighbor estimator, variant 1.
//!
//! For each sample `i`, `eps_i` is the max-norm distance in the joint `(x, y)`
//! space to its k-th nearest neighbor (self excluded, ties resolved in index
//! order). With `n_x(i)` and `n_y(i)` the counts of samples strictly within
//! `eps_i` in each marginal,
//!
//! `I = [psi(k) + psi(N) - mean_i(psi(n_x(i) + 1) + psi(n_y(i) + 1))] / ln 2`
//!
//! in bits. Negative estimates are returned as-is. Coordinates are
//! standardized (mean 0, unit variance) before the neighbor search, so the
//! estimate is invariant under per-coordinate shifts and under separate
//! uniform positive scalings of the x and y blocks: such transforms leave
//! every neighbor rank and strict-inequality count unchanged.
//!
//! Neighbor queries are brute force, `O(N^2)` distance evaluations, which is
//! trivially fast and bias-free at the few-thousand-sample scale this crate
//! targets; the `MaxNormSearch` trait leaves room for a tree-based backend.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::digamma;

/// Paired samples: row `i` of `x` goes with row `i` of `y`.
#[derive(Debug, Clone)]
pub struct SamplePairSet {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl SamplePairSet {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "paired samples need equal row counts, got {} and {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "paired samples need at least one coordinate per block".into(),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "paired samples contain non-finite entries".into(),
            ));
        }
        Ok(SamplePairSet { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }
}

/// Max-norm neighbor queries over a fixed point set.
pub trait MaxNormSearch {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance to the k-th nearest other point; equal distances are ranked
    /// in index order.
    fn knn_radius(&self, center: usize, k: usize) -> Result<f64>;

    /// Number of other points strictly within `radius` of `center`.
    fn count_within(&self, center: usize, radius: f64) -> usize;
}

/// The `O(N^2)` scan backend.
pub struct BruteForceMaxNorm<'a> {
    points: &'a Array2<f64>,
}

impl<'a> BruteForceMaxNorm<'a> {
    pub fn new(points: &'a Array2<f64>) -> Self {
        BruteForceMaxNorm { points }
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.points.row(i);
        let b = self.points.row(j);
        let mut m = 0.0f64;
        for (p, q) in a.iter().zip(b.iter()) {
            let d = (p - q).abs();
            if d > m {
                m = d;
            }
        }
        m
    }
}

impl MaxNormSearch for BruteForceMaxNorm<'_> {
    fn len(&self) -> usize {
        self.points.nrows()
    }

    fn knn_radius(&self, center: usize, k: usize) -> Result<f64> {
        let n = self.len();
        assert!(
            center < n,
            "center index {center} out of bounds ({n} points)"
        );
        if k == 0 || k > n - 1 {
            return Err(Error::InvalidArgument(format!(
                "knn_radius needs 1 <= k <= N-1, got k={k} with N={n}"
            )));
        }
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != center)
            .map(|j| (self.distance(center, j), j))
            .collect();
        dists.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dists[k - 1].0)
    }

    fn count_within(&self, center: usize, radius: f64) -> usize {
        let n = self.len();
        assert!(
            center < n,
            "center index {center} out of bounds ({n} points)"
        );
        (0..n)
            .filter(|&j| j != center && self.distance(center, j) < radius)
            .count()
    }
}

/// Max-norm distance to the k-th nearest other point.
pub fn knn_radius(points: &Array2<f64>, center: usize, k: usize) -> Result<f64> {
    BruteForceMaxNorm::new(points).knn_radius(center, k)
}

/// Number of other points with max-norm distance strictly below `radius`.
pub fn count_within(points: &Array2<f64>, center: usize, radius: f64) -> usize {
    BruteForceMaxNorm::new(points).count_within(center, radius)
}

/// Estimator options beyond the neighbor count.
#[derive(Debug, Clone, Default)]
pub struct KsgOptions {
    /// Deterministic tie-breaking jitter: seeded uniform noise of amplitude
    /// `1e-10 * column range`, added to the standardized coordinates. Off by
    /// default; continuous simulation data has measure-zero ties.
    pub tie_jitter_seed: Option<u64>,
}

/// KSG mutual information in bits with default options.
pub fn ksg_mi_bits(pairs: &SamplePairSet, k: usize) -> Result<f64> {
    ksg_mi_bits_with(pairs, k, &KsgOptions::default())
}

/// KSG mutual information in bits.
pub fn ksg_mi_bits_with(pairs: &SamplePairSet, k: usize, opts: &KsgOptions) -> Result<f64> {
    let n = pairs.len();
    if k == 0 || n < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "KSG needs 1 <= k and N >= k + 2, got k={k}, N={n}"
        )));
    }
    let mut x = standardize_columns(&pairs.x);
    let mut y = standardize_columns(&pairs.y);
    if let Some(seed) = opts.tie_jitter_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        apply_tie_jitter(&mut x, &mut rng);
        apply_tie_jitter(&mut y, &mut rng);
    }

    let dx = x.ncols();
    let dy = y.ncols();
    let xf = x.as_slice().expect("standard layout");
    let yf = y.as_slice().expect("standard layout");

    // One fused scan per row computes the marginal distances once and reuses
    // them for the joint k-th neighbor radius and both strict counts; the
    // semantics match `knn_radius`/`count_within` on the joint and marginal
    // point sets exactly.
    let per_sample: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &xf[i * dx..(i + 1) * dx];
            let yi = &yf[i * dy..(i + 1) * dy];
            let mut dxs = vec![0.0f64; n];
            let mut dys = vec![0.0f64; n];
            let mut joint: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let xj = &xf[j * dx..(j + 1) * dx];
                let mut mx = 0.0f64;
                for c in 0..dx {
                    let d = (xi[c] - xj[c]).abs();
                    if d > mx {
                        mx = d;
                    }
                }
                let yj = &yf[j * dy..(j + 1) * dy];
                let mut my = 0.0f64;
                for c in 0..dy {
                    let d = (yi[c] - yj[c]).abs();
                    if d > my {
                        my = d;
                    }
                }
                dxs[j] = mx;
                dys[j] = my;
                joint.push((mx.max(my), j));
            }
            joint.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let eps = joint[k - 1].0;

            let mut n_x = 0usize;
            let mut n_y = 0usize;
            for j in 0..n {
                if j == i {
                    continue;
                }
                if dxs[j] < eps {
                    n_x += 1;
                }
                if dys[j] < eps {
                    n_y += 1;
                }
            }
            digamma((n_x + 1) as f64).expect("positive argument")
                + digamma((n_y + 1) as f64).expect("positive argument")
        })
        .collect();

    // Sequential sum in index order keeps the result bit-deterministic
    // regardless of thread count.
    let mean_psi = per_sample.iter().sum::<f64>() / n as f64;
    let nats = digamma(k as f64)? + digamma(n as f64)? - mean_psi;
    Ok(nats / std::f64::consts::LN_2)
}

/// Centers each column and scales it to unit sample variance (columns with
/// zero variance are left centered only).
fn standardize_columns(data: &Array2<f64>) -> Array2<f64> {
    let (n, p) = data.dim();
    let mut out = data.as_standard_layout().to_owned();
    for c in 0..p {
        let mean = out.column(c).sum() / n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            out[[i, c]] -= mean;
            ss += out[[i, c]] * out[[i, c]];
        }
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        if sd > 0.0 {
            for i in 0..n {
                out[[i, c]] /= sd;
            }
        }
    }
    out
}

fn apply_tie_jitter(data: &mut Array2<f64>, rng: &mut ChaCha8Rng) {
    let (n, p) = data.dim();
    for c in 0..p {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            lo = lo.min(data[[i, c]]);
            hi = hi.max(data[[i, c]]);
        }
        let amp = 1e-10 * (hi - lo);
        if amp > 0.0 {
            for i in 0..n {
                data[[i, c]] += rng.random_range(-amp..amp);
            }
        }
    }
}
