//! Synthetic generative system: latent AR(1) processes mixed onto a ring of
//! cortical sources, projected to a ring of electrodes through a Gaussian
//! blur leadfield, with additive spatially correlated Gaussian noise at a
//! calibrated SNR.
//!
//! Sensor samples follow `Y = A X + E` with `X = Z M^T`, where `Z` holds the
//! latents, `M` the latent-to-source mixing, and `A` the leadfield. All
//! builders and simulators are pure functions of their inputs and seeds.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{cholesky, SymMatrix};

/// Sources sit on the unit circle.
pub const SOURCE_RADIUS: f64 = 1.0;
/// Electrodes sit on a slightly larger circle, outside the sources.
pub const ELECTRODE_RADIUS: f64 = 1.2;

/// Ring positions of sources and electrodes, as angles in `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub source_angles: Vec<f64>,
    pub electrode_angles: Vec<f64>,
}

impl Geometry {
    pub fn n_sources(&self) -> usize {
        self.source_angles.len()
    }

    pub fn n_electrodes(&self) -> usize {
        self.electrode_angles.len()
    }

    pub fn source_position(&self, j: usize) -> (f64, f64) {
        let a = self.source_angles[j];
        (SOURCE_RADIUS * a.cos(), SOURCE_RADIUS * a.sin())
    }

    pub fn electrode_position(&self, i: usize) -> (f64, f64) {
        let a = self.electrode_angles[i];
        (ELECTRODE_RADIUS * a.cos(), ELECTRODE_RADIUS * a.sin())
    }
}

/// The frozen generative system for one experiment cell.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    /// Latent-to-source loading, `n_s x n_l`, unit-norm columns.
    pub mixing: Array2<f64>,
    /// Source-to-electrode gain `A`, `n_e x n_s`, unit-norm rows.
    pub leadfield: Array2<f64>,
    /// Unit-scale noise covariance shape, trace = `n_e`.
    pub noise_cov_unit: SymMatrix,
    /// Noise variance scale (sigma^2) applied to `noise_cov_unit`.
    pub noise_scale: f64,
    /// AR(1) coefficient of each latent process.
    pub rho: f64,
    pub n_l: usize,
    pub n_s: usize,
    pub n_e: usize,
}

impl ForwardModel {
    /// Full noise covariance `sigma^2 * Sigma_unit`.
    pub fn noise_cov(&self) -> SymMatrix {
        self.noise_cov_unit.scale(self.noise_scale)
    }
}

/// One simulated recording, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Latents `Z`, `n_t x n_l`.
    pub latents: Array2<f64>,
    /// Sources `X = Z M^T`, `n_t x n_s`.
    pub sources: Array2<f64>,
    /// Sensors `Y = X A^T + E`, `n_t x n_e`.
    pub sensors: Array2<f64>,
    /// SNR realized by this draw, from sample signal/noise power traces.
    pub realized_snr_db: f64,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.latents.nrows()
    }
}

/// Equally spaced ring angles `2*pi*i/n`, first angle 0, for both rings.
pub fn build_geometry(n_s: usize, n_e: usize) -> Result<Geometry> {
    if n_s == 0 || n_e == 0 {
        return Err(Error::InvalidArgument(format!(
            "geometry needs n_s >= 1 and n_e >= 1, got n_s={n_s}, n_e={n_e}"
        )));
    }
    let ring = |n: usize| {
        (0..n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64)
            .collect()
    };
    Ok(Geometry {
        source_angles: ring(n_s),
        electrode_angles: ring(n_e),
    })
}

/// Gaussian blur leadfield: `A[i][j] = exp(-d^2 / (2 w^2))` over planar
/// electrode-source distances, rows scaled to unit L2 norm.
pub fn build_leadfield(geometry: &Geometry, blur_width: f64) -> Result<Array2<f64>> {
    if !(blur_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "blur_width must be positive, got {blur_width}"
        )));
    }
    let n_e = geometry.n_electrodes();
    let n_s = geometry.n_sources();
    let mut a = Array2::zeros((n_e, n_s));
    for i in 0..n_e {
        let (ex, ey) = geometry.electrode_position(i);
        for j in 0..n_s {
            let (sx, sy) = geometry.source_position(j);
            let d2 = (ex - sx).powi(2) + (ey - sy).powi(2);
            a[[i, j]] = (-d2 / (2.0 * blur_width * blur_width)).exp();
        }
        let norm = a.row(i).dot(&a.row(i)).sqrt();
        if norm > 0.0 {
            for j in 0..n_s {
                a[[i, j]] /= norm;
            }
        }
    }
    Ok(a)
}

/// Latent-to-source mixing: latent `l` loads onto sources with a wrapped
/// Gaussian bump of angular width `loading_width`, centered at `2*pi*l/n_l`,
/// entries jittered by a seeded uniform +/-10%, columns unit L2 norm.
pub fn build_mixing(n_s: usize, n_l: usize, loading_width: f64, seed: u64) -> Result<Array2<f64>> {
    if n_l == 0 || n_l > n_s {
        return Err(Error::InvalidArgument(format!(
            "mixing needs 1 <= n_l <= n_s, got n_l={n_l}, n_s={n_s}"
        )));
    }
    if !(loading_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loading_width must be positive, got {loading_width}"
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::zeros((n_s, n_l));
    for l in 0..n_l {
        let center = two_pi * l as f64 / n_l as f64;
        for j in 0..n_s {
            let theta = two_pi * j as f64 / n_s as f64;
            // Wrapped bump: sum the nearest three period images.
            let mut w = 0.0;
            for k in [-1.0f64, 0.0, 1.0] {
                let delta = theta - center + two_pi * k;
                w += (-delta * delta / (2.0 * loading_width * loading_width)).exp();
            }
            let jitter: f64 = rng.random_range(-0.1..0.1);
            m[[j, l]] = w * (1.0 + jitter);
        }
        let norm = m.column(l).dot(&m.column(l)).sqrt();
        for j in 0..n_s {
            m[[j, l]] /= norm;
        }
    }
    Ok(m)
}

/// Alternative latent-to-source map for sensitivity checks: every entry a
/// seeded standard normal draw, columns scaled to unit L2 norm. No spatial
/// structure, unlike [`build_mixing`].
pub fn build_mixing_dense(n_s: usize, n_l: usize, seed: u64) -> Result<Array2<f64>> {
    if n_l == 0 || n_l > n_s {
        return Err(Error::InvalidArgument(format!(
            "mixing needs 1 <= n_l <= n_s, got n_l={n_l}, n_s={n_s}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::zeros((n_s, n_l));
    for l in 0..n_l {
        for j in 0..n_s {
            m[[j, l]] = rng.sample::<f64, _>(StandardNormal);
        }
        let norm = m.column(l).dot(&m.column(l)).sqrt();
        for j in 0..n_s {
            m[[j, l]] /= norm;
        }
    }
    Ok(m)
}

/// Unit-scale noise covariance: `(1 - beta) I + beta K` with the exponential
/// kernel `K[i][j] = exp(-d_ij / corr_length)` over electrode distances,
/// rescaled so the trace is exactly `n_e`.
pub fn build_noise_cov_unit(
    geometry: &Geometry,
    corr_mix: f64,
    corr_length: f64,
) -> Result<SymMatrix> {
    if !(0.0..1.0).contains(&corr_mix) {
        return Err(Error::InvalidArgument(format!(
            "corr_mix must be in [0, 1), got {corr_mix}"
        )));
    }
    if !(corr_length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "corr_length must be positive, got {corr_length}"
        )));
    }
    let n_e = geometry.n_electrodes();
    let mut sigma = SymMatrix::from_fn(n_e, |i, j| {
        let (xi, yi) = geometry.electrode_position(i);
        let (xj, yj) = geometry.electrode_position(j);
        let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
        let k = (-d / corr_length).exp();
        let eye = if i == j { 1.0 } else { 0.0 };
        (1.0 - corr_mix) * eye + corr_mix * k
    });
    let trace = sigma.trace();
    if trace != n_e as f64 {
        sigma = sigma.scale(n_e as f64 / trace);
    }
    // Cannot fail for corr_mix < 1 (the kernel is PSD); asserted anyway.
    cholesky(&sigma).map_err(|e| {
        Error::InvalidArgument(format!("noise covariance construction failed: {e}"))
    })?;
    Ok(sigma)
}

/// Seeded AR(1) latents: each column follows `z_t = rho z_(t-1) + w_t` with
/// unit-variance innovations, initialized from the stationary distribution
/// `N(0, 1/(1 - rho^2))`.
pub fn simulate_latents(n_t: usize, n_l: usize, rho: f64, seed: u64) -> Result<Array2<f64>> {
    if rho.abs() >= 1.0 || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "AR(1) requires |rho| < 1, got {rho}"
        )));
    }
    if n_t == 0 || n_l == 0 {
        return Err(Error::InvalidArgument(format!(
            "simulate_latents needs n_t >= 1 and n_l >= 1, got n_t={n_t}, n_l={n_l}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stationary_sd = 1.0 / (1.0 - rho * rho).sqrt();
    let mut z = Array2::zeros((n_t, n_l));
    for col in 0..n_l {
        let w0: f64 = rng.sample(StandardNormal);
        z[[0, col]] = stationary_sd * w0;
        for t in 1..n_t {
            let w: f64 = rng.sample(StandardNormal);
            z[[t, col]] = rho * z[[t - 1, col]] + w;
        }
    }
    Ok(z)
}

/// Noise variance `sigma^2` making the trace-power ratio hit the target:
/// `10 log10(trace(A Sigma_X A^T) / (sigma^2 trace(Sigma_unit))) = snr_db`.
pub fn calibrate_noise_scale(
    model: &ForwardModel,
    source_cov: &SymMatrix,
    snr_db: f64,
) -> Result<f64> {
    if source_cov.dim() != model.n_s {
        return Err(Error::DimensionMismatch(format!(
            "source covariance dim {} does not match n_s={}",
            source_cov.dim(),
            model.n_s
        )));
    }
    let signal_power = source_cov.congruence(&model.leadfield)?.trace();
    if signal_power <= 0.0 {
        return Err(Error::Calibration(format!(
            "signal power {signal_power} is not positive"
        )));
    }
    let noise_trace = model.noise_cov_unit.trace();
    Ok(signal_power / (noise_trace * 10f64.powf(snr_db / 10.0)))
}

/// Simulates one recording: `X = Z M^T`, `Y = X A^T + E` with noise rows
/// drawn i.i.d. from `N(0, sigma^2 Sigma_unit)` via the Cholesky factor.
/// The latent and noise streams are seeded separately by the caller.
pub fn simulate_recording(
    model: &ForwardModel,
    latents: &Array2<f64>,
    seed: u64,
) -> Result<Dataset> {
    if latents.ncols() != model.n_l {
        return Err(Error::DimensionMismatch(format!(
            "latents have {} columns, model expects n_l={}",
            latents.ncols(),
            model.n_l
        )));
    }
    let n_t = latents.nrows();
    let sources = latents.dot(&model.mixing.t());
    let clean = sources.dot(&model.leadfield.t());

    let l = cholesky(&model.noise_cov_unit)?;
    let sigma = model.noise_scale.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((n_t, model.n_e), |_| rng.sample::<f64, _>(StandardNormal));
    let noise = g.dot(&l.t()) * sigma;

    let signal_power: f64 = clean.iter().map(|v| v * v).sum();
    let noise_power: f64 = noise.iter().map(|v| v * v).sum();
    let realized_snr_db = 10.0 * (signal_power / noise_power).log10();

    Ok(Dataset {
        latents: latents.clone(),
        sources,
        sensors: clean + noise,
        realized_snr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{latent_stationary_cov, source_cov};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn lag1_autocorr(col: &[f64]) -> f64 {
        let n = col.len();
        let mean = col.iter().sum::<f64>() / n as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for t in 0..n {
            let d = col[t] - mean;
            den += d * d;
            if t + 1 < n {
                num += d * (col[t + 1] - mean);
            }
        }
        num / den
    }

    fn test_model(n_s: usize, n_e: usize, n_l: usize) -> ForwardModel {
        let g = build_geometry(n_s, n_e).unwrap();
        ForwardModel {
            mixing: build_mixing(n_s, n_l, 0.6, 42).unwrap(),
            leadfield: build_leadfield(&g, 0.5).unwrap(),
            noise_cov_unit: build_noise_cov_unit(&g, 0.3, 0.5).unwrap(),
            noise_scale: 1.0,
            rho: 0.9,
            n_l,
            n_s,
            n_e,
        }
    }

    #[test]
    fn geometry_equal_spacing() {
        let g = build_geometry(4, 2).unwrap();
        let pi = std::f64::consts::PI;
        assert_eq!(g.source_angles, vec![0.0, pi / 2.0, pi, 3.0 * pi / 2.0]);
        assert_eq!(g.electrode_angles, vec![0.0, pi]);

        let full_scale = build_geometry(64, 128).unwrap();
        assert_eq!(full_scale.n_sources(), 64);
        assert_eq!(full_scale.n_electrodes(), 128);

        let degenerate = build_geometry(1, 1).unwrap();
        assert_eq!(degenerate.source_angles, vec![0.0]);
        assert_eq!(degenerate.electrode_angles, vec![0.0]);

        assert!(build_geometry(0, 4).is_err());
        assert!(build_geometry(4, 0).is_err());
    }

    #[test]
    fn leadfield_infinite_blur_limit() {
        let g = build_geometry(4, 2).unwrap();
        let a = build_leadfield(&g, 100.0).unwrap();
        for v in a.iter() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-3);
        }
    }

    #[test]
    fn leadfield_delta_blur_limit() {
        let g = build_geometry(8, 8).unwrap();
        let a = build_leadfield(&g, 0.01).unwrap();
        // Electrode 0 sits directly above source 0.
        assert!(a[[0, 0]] > 1.0 - 1e-6);
        for j in 1..8 {
            assert!(a[[0, j]] < 1e-6);
        }
    }

    #[test]
    fn leadfield_rows_unit_norm() {
        for &(n_s, n_e, w) in &[(64usize, 8usize, 0.5f64), (16, 32, 0.2), (5, 7, 2.0)] {
            let g = build_geometry(n_s, n_e).unwrap();
            let a = build_leadfield(&g, w).unwrap();
            for i in 0..n_e {
                let norm = a.row(i).dot(&a.row(i)).sqrt();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn leadfield_is_circulant_for_matched_rings() {
        let g = build_geometry(8, 8).unwrap();
        let a = build_leadfield(&g, 0.5).unwrap();
        for i in 0..7 {
            for j in 0..8 {
                assert_abs_diff_eq!(a[[i + 1, (j + 1) % 8]], a[[i, j]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mixing_narrow_bump_is_permutation_like() {
        let m = build_mixing(6, 6, 1e-3, 1).unwrap();
        for l in 0..6 {
            // Dominant entry on the matching source, everything else tiny.
            assert!(m[[l, l]] > 0.999);
            for j in 0..6 {
                if j != l {
                    assert!(m[[j, l]].abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn mixing_columns_unit_norm_and_deterministic() {
        let m1 = build_mixing(64, 8, 0.6, 7).unwrap();
        let m2 = build_mixing(64, 8, 0.6, 7).unwrap();
        assert_eq!(m1, m2);
        for l in 0..8 {
            let norm = m1.column(l).dot(&m1.column(l)).sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
        assert!(build_mixing(4, 8, 0.6, 0).is_err());
    }

    #[test]
    fn dense_mixing_unit_columns_and_deterministic() {
        let a = build_mixing_dense(32, 6, 3).unwrap();
        let b = build_mixing_dense(32, 6, 3).unwrap();
        assert_eq!(a, b);
        for l in 0..6 {
            let norm = a.column(l).dot(&a.column(l)).sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
        assert!(build_mixing_dense(4, 8, 0).is_err());
    }

    #[test]
    fn noise_cov_uncorrelated_case_is_identity() {
        let g = build_geometry(4, 4).unwrap();
        let s = build_noise_cov_unit(&g, 0.0, 0.5).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(s.as_array()[[i, j]], want);
            }
        }
    }

    #[test]
    fn noise_cov_fully_correlated_kernel_limit() {
        let g = build_geometry(4, 6).unwrap();
        let s = build_noise_cov_unit(&g, 0.3, 1e12).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.3 };
                assert_abs_diff_eq!(s.as_array()[[i, j]], want, epsilon = 1e-9);
            }
        }
        assert_abs_diff_eq!(s.trace(), 6.0, epsilon = 1e-9);
    }

    #[test]
    fn noise_cov_definite_with_eigenvalue_floor() {
        let g = build_geometry(8, 16).unwrap();
        let beta = 0.3;
        let s = build_noise_cov_unit(&g, beta, 0.5).unwrap();
        assert_abs_diff_eq!(s.trace(), 16.0, epsilon = 1e-9);
        let na = nalgebra::DMatrix::from_fn(16, 16, |i, j| s.as_array()[[i, j]]);
        let min_eig = na
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        assert!(
            min_eig >= (1.0 - beta) - 1e-9,
            "min eigenvalue {min_eig} below floor {}",
            1.0 - beta
        );
    }

    #[test]
    fn latents_white_noise_case() {
        let z = simulate_latents(10_000, 1, 0.0, 3).unwrap();
        let col: Vec<f64> = z.column(0).to_vec();
        assert!(lag1_autocorr(&col).abs() <= 0.03);
    }

    #[test]
    fn latents_stationary_variance() {
        let z = simulate_latents(20_000, 1, 0.9, 4).unwrap();
        let col: Vec<f64> = z.column(0).to_vec();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        let want = 1.0 / (1.0 - 0.81);
        assert!(
            (var - want).abs() <= 0.1 * want,
            "variance {var} not within 10% of {want}"
        );
    }

    #[test]
    fn latents_lag1_autocorrelation_tracks_rho() {
        for &rho in &[0.5f64, 0.9, -0.4] {
            let z = simulate_latents(10_000, 2, rho, 5).unwrap();
            for col in 0..2 {
                let c: Vec<f64> = z.column(col).to_vec();
                assert!(
                    (lag1_autocorr(&c) - rho).abs() <= 0.05,
                    "lag-1 autocorr off for rho={rho}"
                );
            }
        }
    }

    #[test]
    fn latents_deterministic_and_validated() {
        let a = simulate_latents(100, 3, 0.9, 9).unwrap();
        let b = simulate_latents(100, 3, 0.9, 9).unwrap();
        assert_eq!(a, b);
        assert!(simulate_latents(10, 1, 1.0, 0).is_err());
        assert!(simulate_latents(10, 1, -1.5, 0).is_err());
        assert!(simulate_latents(0, 1, 0.5, 0).is_err());
    }

    #[test]
    fn calibration_zero_db_means_equal_traces() {
        let model = test_model(16, 8, 4);
        let sx = source_cov(&model.mixing, &latent_stationary_cov(0.9, 4).unwrap()).unwrap();
        let p_signal = sx.congruence(&model.leadfield).unwrap().trace();
        let s0 = calibrate_noise_scale(&model, &sx, 0.0).unwrap();
        assert_abs_diff_eq!(s0, p_signal / 8.0, epsilon = 1e-12 * p_signal);
        let s10 = calibrate_noise_scale(&model, &sx, 10.0).unwrap();
        assert_abs_diff_eq!(s10, s0 / 10.0, epsilon = 1e-12 * s0);
    }

    #[test]
    fn calibration_scalar_decibels() {
        let model = ForwardModel {
            mixing: array![[1.0]],
            leadfield: array![[1.0]],
            noise_cov_unit: SymMatrix::identity(1),
            noise_scale: 1.0,
            rho: 0.0,
            n_l: 1,
            n_s: 1,
            n_e: 1,
        };
        let sx = SymMatrix::identity(1);
        let s = calibrate_noise_scale(&model, &sx, 20.0).unwrap();
        assert_abs_diff_eq!(s, 0.01, epsilon = 1e-14);
    }

    #[test]
    fn recording_noiseless_limit() {
        let mut model = test_model(16, 8, 4);
        model.noise_scale = 0.0;
        let z = simulate_latents(50, 4, 0.9, 11).unwrap();
        let ds = simulate_recording(&model, &z, 12).unwrap();
        let clean = ds.sources.dot(&model.leadfield.t());
        assert_eq!(ds.sensors, clean);
    }

    #[test]
    fn recording_realized_snr_concentrates() {
        let mut model = test_model(64, 32, 8);
        let sx = source_cov(&model.mixing, &latent_stationary_cov(0.9, 8).unwrap()).unwrap();
        model.noise_scale = calibrate_noise_scale(&model, &sx, 10.0).unwrap();
        // Repeated-seed check: every draw lands within 1 dB of the target.
        for seed in 0..5u64 {
            let z = simulate_latents(2000, 8, 0.9, 100 + seed).unwrap();
            let ds = simulate_recording(&model, &z, 200 + seed).unwrap();
            assert!(
                (ds.realized_snr_db - 10.0).abs() <= 1.0,
                "realized {} dB too far from 10 dB (seed {seed})",
                ds.realized_snr_db
            );
        }
    }

    #[test]
    fn recording_is_deterministic_and_linear_in_latents() {
        let model = test_model(16, 8, 4);
        let z = simulate_latents(64, 4, 0.9, 21).unwrap();
        let a = simulate_recording(&model, &z, 22).unwrap();
        let b = simulate_recording(&model, &z, 22).unwrap();
        assert_eq!(a, b);

        let doubled = simulate_recording(&model, &(&z * 2.0), 22).unwrap();
        // Doubling Z doubles X, and doubles Y - E (the noise draw is shared).
        assert_eq!(doubled.sources, &a.sources * 2.0);
        let e_a = &a.sensors - &a.sources.dot(&model.leadfield.t());
        let e_d = &doubled.sensors - &doubled.sources.dot(&model.leadfield.t());
        for (x, y) in e_a.iter().zip(e_d.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }

        let bad = simulate_recording(&model, &Array2::zeros((4, 3)), 0);
        assert!(bad.is_err());
    }
}
