//! Electrode-count x SNR sweeps: per-cell simulation, capacity, estimation,
//! and decoding, assembled into result tables.

mod io;
mod plot;
mod svg;

pub use io::{format_g9, read_results, write_results, OutputFormat, CSV_HEADER};
pub use plot::{emit_plot_data, FigureId};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::capacity::{gaussian_mi_bits, latent_stationary_cov, source_cov};
use crate::decoders::{evaluate, mlp_fit, ridge_fit_select, Decoder, MlpConfig};
use crate::error::{Error, Result};
use crate::forward::{
    build_geometry, build_leadfield, build_mixing, build_mixing_dense, build_noise_cov_unit,
    calibrate_noise_scale, simulate_latents, simulate_recording, ForwardModel,
};
use crate::mi::{ksg_mi_bits, SamplePairSet};
use crate::numerics::{pca_reduce, PcaTarget, SymMatrix};

/// Which sensor representation the decoders consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeInput {
    Raw,
    Pca,
}

/// Latent-to-source map. `Bump` is the spatially coherent default; `Dense`
/// (seeded i.i.d. Gaussian columns) exists to test sensitivity to that
/// modeling choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingKind {
    Bump,
    Dense,
}

/// MLP settings carried by the experiment config; the per-cell seed is
/// derived by the runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpSettings {
    pub hidden_width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
}

impl Default for MlpSettings {
    fn default() -> Self {
        let d = MlpConfig::default();
        MlpSettings {
            hidden_width: d.hidden_width,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            validation_fraction: d.validation_fraction,
        }
    }
}

impl MlpSettings {
    pub(crate) fn to_config(&self, seed: u64) -> MlpConfig {
        MlpConfig {
            hidden_width: self.hidden_width,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed,
            validation_fraction: self.validation_fraction,
        }
    }
}

/// Full sweep configuration. Unknown keys are rejected when loaded from
/// JSON; absent keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_s: usize,
    pub n_l: usize,
    pub rho: f64,
    pub n_t: usize,
    pub electrode_counts: Vec<usize>,
    pub snr_db_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub ksg_k: usize,
    pub pca_target: PcaTarget,
    pub blur_width: f64,
    pub mixing_kind: MixingKind,
    pub loading_width: f64,
    pub noise_corr_mix: f64,
    pub noise_corr_length: f64,
    pub mixing_seed: u64,
    pub train_fraction: f64,
    pub decode_input: DecodeInput,
    pub ridge_lambdas: Vec<f64>,
    pub ridge_val_fraction: f64,
    pub mlp: MlpSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_s: 64,
            n_l: 8,
            rho: 0.9,
            n_t: 2000,
            electrode_counts: vec![8, 16, 32, 64, 128],
            snr_db_list: vec![0.0, 10.0, 20.0],
            seeds: (1..=10).collect(),
            ksg_k: 4,
            pca_target: PcaTarget::Fraction(0.99),
            blur_width: 0.5,
            mixing_kind: MixingKind::Bump,
            loading_width: 0.6,
            noise_corr_mix: 0.3,
            noise_corr_length: 0.5,
            mixing_seed: 42,
            train_fraction: 0.8,
            decode_input: DecodeInput::Raw,
            ridge_lambdas: vec![1e-4, 1e-2, 1.0, 1e2],
            ridge_val_fraction: 0.2,
            mlp: MlpSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Checks every invariant, naming the offending key and its bound.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.n_s == 0 {
            return err(format!("n_s must be >= 1, got {}", self.n_s));
        }
        if self.n_l == 0 || self.n_l > self.n_s {
            return err(format!(
                "n_l must satisfy 1 <= n_l <= n_s ({}), got {}",
                self.n_s, self.n_l
            ));
        }
        if !(self.rho.abs() < 1.0) {
            return err(format!("rho must satisfy |rho| < 1, got {}", self.rho));
        }
        if self.n_t < 2 {
            return err(format!("n_t must be >= 2, got {}", self.n_t));
        }
        if self.electrode_counts.is_empty() || self.electrode_counts.contains(&0) {
            return err("electrode_counts must be a nonempty list of positive counts".into());
        }
        if self.snr_db_list.is_empty() || self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return err("snr_db_list must be a nonempty list of finite values".into());
        }
        if self.seeds.is_empty() {
            return err("seeds must be nonempty".into());
        }
        if self.ksg_k == 0 {
            return err(format!("ksg_k must be >= 1, got {}", self.ksg_k));
        }
        match self.pca_target {
            PcaTarget::Count(c) if c == 0 => {
                return err(format!("pca_target count must be >= 1, got {c}"));
            }
            PcaTarget::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return err(format!("pca_target fraction must be in (0, 1], got {f}"));
            }
            _ => {}
        }
        if !(self.blur_width > 0.0) {
            return err(format!(
                "blur_width must be positive, got {}",
                self.blur_width
            ));
        }
        if !(self.loading_width > 0.0) {
            return err(format!(
                "loading_width must be positive, got {}",
                self.loading_width
            ));
        }
        if !(0.0..1.0).contains(&self.noise_corr_mix) {
            return err(format!(
                "noise_corr_mix must be in [0, 1), got {}",
                self.noise_corr_mix
            ));
        }
        if !(self.noise_corr_length > 0.0) {
            return err(format!(
                "noise_corr_length must be positive, got {}",
                self.noise_corr_length
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return err(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if self.ridge_lambdas.is_empty() || self.ridge_lambdas.iter().any(|&l| !(l >= 0.0)) {
            return err("ridge_lambdas must be a nonempty list of nonnegative values".into());
        }
        if !(self.ridge_val_fraction > 0.0 && self.ridge_val_fraction < 1.0) {
            return err(format!(
                "ridge_val_fraction must be in (0, 1), got {}",
                self.ridge_val_fraction
            ));
        }
        if self.mlp.hidden_width == 0 || self.mlp.batch_size == 0 {
            return err("mlp.hidden_width and mlp.batch_size must be positive".into());
        }
        if !(self.mlp.learning_rate > 0.0) {
            return err(format!(
                "mlp.learning_rate must be positive, got {}",
                self.mlp.learning_rate
            ));
        }
        if !(self.mlp.validation_fraction > 0.0 && self.mlp.validation_fraction < 1.0) {
            return err(format!(
                "mlp.validation_fraction must be in (0, 1), got {}",
                self.mlp.validation_fraction
            ));
        }
        Ok(())
    }
}

/// All metrics for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n_e: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub analytic_mi_sources_bits: f64,
    pub analytic_mi_latents_bits: f64,
    pub ksg_mi_bits: f64,
    pub pca_retained: usize,
    pub ridge_r2: f64,
    pub mlp_r2: f64,
    pub ridge_mi_bits: f64,
    pub mlp_mi_bits: f64,
    pub realized_snr_db: f64,
    pub wall_time_ms: u64,
}

impl ResultRow {
    /// Field-by-field equality of everything except the wall-clock timing.
    pub fn metrics_eq(&self, other: &ResultRow) -> bool {
        self.n_e == other.n_e
            && self.snr_db == other.snr_db
            && self.seed == other.seed
            && self.analytic_mi_sources_bits == other.analytic_mi_sources_bits
            && self.analytic_mi_latents_bits == other.analytic_mi_latents_bits
            && self.ksg_mi_bits == other.ksg_mi_bits
            && self.pca_retained == other.pca_retained
            && self.ridge_r2 == other.ridge_r2
            && self.mlp_r2 == other.mlp_r2
            && self.ridge_mi_bits == other.ridge_mi_bits
            && self.mlp_mi_bits == other.mlp_mi_bits
            && self.realized_snr_db == other.realized_snr_db
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed streams used within one cell.
pub mod seed_stream {
    pub const LATENTS: u64 = 0;
    pub const NOISE: u64 = 1;
    pub const MLP: u64 = 2;
}

/// Deterministic sub-seed for one cell and stream: chained splitmix64
/// absorption of the base seed, the electrode count, the SNR bit pattern,
/// and the stream id.
pub fn derive_seed(base: u64, n_e: usize, snr_db: f64, stream: u64) -> u64 {
    let mut h = splitmix64(base);
    h = splitmix64(h ^ n_e as u64);
    h = splitmix64(h ^ snr_db.to_bits());
    splitmix64(h ^ stream)
}

/// Frozen generative system plus the covariances the capacity formulas need.
pub struct CellModel {
    pub model: ForwardModel,
    pub latent_cov: SymMatrix,
    pub source_cov: SymMatrix,
}

/// Builds geometry, leadfield, mixing, and noise shape for one cell and
/// calibrates the noise scale to the requested SNR. The mixing seed is the
/// cfg-level constant, so the analytic channel is identical across base
/// seeds.
pub fn build_cell_model(cfg: &ExperimentConfig, n_e: usize, snr_db: f64) -> Result<CellModel> {
    let geometry = build_geometry(cfg.n_s, n_e)?;
    let leadfield = build_leadfield(&geometry, cfg.blur_width)?;
    let mixing = match cfg.mixing_kind {
        MixingKind::Bump => build_mixing(cfg.n_s, cfg.n_l, cfg.loading_width, cfg.mixing_seed)?,
        MixingKind::Dense => build_mixing_dense(cfg.n_s, cfg.n_l, cfg.mixing_seed)?,
    };
    let noise_cov_unit =
        build_noise_cov_unit(&geometry, cfg.noise_corr_mix, cfg.noise_corr_length)?;
    let latent_cov = latent_stationary_cov(cfg.rho, cfg.n_l)?;
    let source_cov = source_cov(&mixing, &latent_cov)?;
    let mut model = ForwardModel {
        mixing,
        leadfield,
        noise_cov_unit,
        noise_scale: 1.0,
        rho: cfg.rho,
        n_l: cfg.n_l,
        n_s: cfg.n_s,
        n_e,
    };
    model.noise_scale = calibrate_noise_scale(&model, &source_cov, snr_db)?;
    Ok(CellModel {
        model,
        latent_cov,
        source_cov,
    })
}

/// Simulates one recording for a cell, with the same sub-seed derivation the
/// sweep runner uses.
pub fn simulate_cell(
    cfg: &ExperimentConfig,
    n_e: usize,
    snr_db: f64,
    seed: u64,
) -> Result<crate::forward::Dataset> {
    let cell = build_cell_model(cfg, n_e, snr_db)?;
    let latents = simulate_latents(
        cfg.n_t,
        cfg.n_l,
        cfg.rho,
        derive_seed(seed, n_e, snr_db, seed_stream::LATENTS),
    )?;
    simulate_recording(
        &cell.model,
        &latents,
        derive_seed(seed, n_e, snr_db, seed_stream::NOISE),
    )
}

/// Runs one grid cell end to end: simulate, compute both analytic channels,
/// estimate KSG MI on PCA-reduced sensors, fit and score both decoders on a
/// contiguous 80/20 time split.
pub fn run_cell(cfg: &ExperimentConfig, n_e: usize, snr_db: f64, seed: u64) -> Result<ResultRow> {
    run_cell_inner(cfg, n_e, snr_db, seed).map_err(|e| Error::Cell {
        n_e,
        snr_db,
        seed,
        source: Box::new(e),
    })
}

fn run_cell_inner(cfg: &ExperimentConfig, n_e: usize, snr_db: f64, seed: u64) -> Result<ResultRow> {
    let started = Instant::now();
    let cell = build_cell_model(cfg, n_e, snr_db)?;
    let noise_cov = cell.model.noise_cov();

    let analytic_sources = gaussian_mi_bits(&cell.model.leadfield, &cell.source_cov, &noise_cov)?;
    let effective_leadfield = cell.model.leadfield.dot(&cell.model.mixing);
    let analytic_latents = gaussian_mi_bits(&effective_leadfield, &cell.latent_cov, &noise_cov)?;

    let latents = simulate_latents(
        cfg.n_t,
        cfg.n_l,
        cfg.rho,
        derive_seed(seed, n_e, snr_db, seed_stream::LATENTS),
    )?;
    let dataset = simulate_recording(
        &cell.model,
        &latents,
        derive_seed(seed, n_e, snr_db, seed_stream::NOISE),
    )?;

    let (reduced, pca_model) = pca_reduce(&dataset.sensors, cfg.pca_target)?;
    let pairs = SamplePairSet::new(latents.clone(), reduced.clone())?;
    let ksg = ksg_mi_bits(&pairs, cfg.ksg_k)?;

    let features: &Array2<f64> = match cfg.decode_input {
        DecodeInput::Raw => &dataset.sensors,
        DecodeInput::Pca => &reduced,
    };
    let n_train = ((cfg.n_t as f64 * cfg.train_fraction).round() as usize).clamp(1, cfg.n_t - 1);
    let train_y = features.slice(ndarray::s![..n_train, ..]).to_owned();
    let test_y = features.slice(ndarray::s![n_train.., ..]).to_owned();
    let train_x = latents.slice(ndarray::s![..n_train, ..]).to_owned();
    let test_x = latents.slice(ndarray::s![n_train.., ..]).to_owned();

    let (ridge, _lambda) = ridge_fit_select(
        &train_y,
        &train_x,
        &cfg.ridge_lambdas,
        cfg.ridge_val_fraction,
    )?;
    let ridge_report = evaluate(&test_x, &ridge.predict(&test_y)?, cfg.ksg_k)?;

    let mlp_cfg = cfg
        .mlp
        .to_config(derive_seed(seed, n_e, snr_db, seed_stream::MLP));
    let mlp = mlp_fit(&train_y, &train_x, &mlp_cfg)?;
    let mlp_report = evaluate(&test_x, &mlp.predict(&test_y)?, cfg.ksg_k)?;

    Ok(ResultRow {
        n_e,
        snr_db,
        seed,
        analytic_mi_sources_bits: analytic_sources.mi_bits,
        analytic_mi_latents_bits: analytic_latents.mi_bits,
        ksg_mi_bits: ksg,
        pca_retained: pca_model.retained,
        ridge_r2: ridge_report.r2_variance_weighted,
        mlp_r2: mlp_report.r2_variance_weighted,
        ridge_mi_bits: ridge_report.mi_recovered_bits,
        mlp_mi_bits: mlp_report.mi_recovered_bits,
        realized_snr_db: dataset.realized_snr_db,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

/// Error handling for the sweep runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureMode {
    /// First failing cell aborts the sweep.
    Strict,
    /// Failing cells are reported and skipped.
    Lenient,
}

/// A cell that failed in lenient mode.
#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub n_e: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub message: String,
}

/// Sweep output: rows sorted by `(n_e, snr_db, seed)`, failures in cell order.
#[derive(Debug, Clone, Default)]
pub struct SweepRun {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<SweepFailure>,
}

/// Runs the Cartesian product `electrode_counts x snr_db_list x seeds`.
/// Cells execute in parallel on the current rayon pool; ordering is imposed
/// after collection, so the thread count never changes the output.
pub fn run_sweep(cfg: &ExperimentConfig, mode: FailureMode) -> Result<SweepRun> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &n_e in &cfg.electrode_counts {
        for &snr_db in &cfg.snr_db_list {
            for &seed in &cfg.seeds {
                cells.push((n_e, snr_db, seed));
            }
        }
    }
    let outcomes: Vec<Result<ResultRow>> = cells
        .par_iter()
        .map(|&(n_e, snr_db, seed)| run_cell(cfg, n_e, snr_db, seed))
        .collect();

    let mut run = SweepRun::default();
    for ((n_e, snr_db, seed), outcome) in cells.into_iter().zip(outcomes) {
        match outcome {
            Ok(row) => run.rows.push(row),
            Err(e) => match mode {
                FailureMode::Strict => return Err(e),
                FailureMode::Lenient => run.failures.push(SweepFailure {
                    n_e,
                    snr_db,
                    seed,
                    message: e.to_string(),
                }),
            },
        }
    }
    run.rows.sort_by(|a, b| {
        a.n_e
            .cmp(&b.n_e)
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(run)
}

/// Mean and sample standard deviation (zero for a single observation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

fn summarize_metric(values: &[f64]) -> MetricSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    MetricSummary { mean, sd }
}

/// Per-(n_e, snr_db) aggregate of every metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n_e: usize,
    pub snr_db: f64,
    pub count: usize,
    pub analytic_mi_sources_bits: MetricSummary,
    pub analytic_mi_latents_bits: MetricSummary,
    pub ksg_mi_bits: MetricSummary,
    pub pca_retained: MetricSummary,
    pub ridge_r2: MetricSummary,
    pub mlp_r2: MetricSummary,
    pub ridge_mi_bits: MetricSummary,
    pub mlp_mi_bits: MetricSummary,
    pub realized_snr_db: MetricSummary,
    pub wall_time_ms: MetricSummary,
}

/// Group-by aggregation over `(n_e, snr_db)`, deterministically ordered.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("summarize: no rows".into()));
    }
    let mut keys: Vec<(usize, f64)> = rows.iter().map(|r| (r.n_e, r.snr_db)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);

    let mut out = Vec::with_capacity(keys.len());
    for (n_e, snr_db) in keys {
        let group: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.n_e == n_e && r.snr_db == snr_db)
            .collect();
        let collect = |get: &dyn Fn(&ResultRow) -> f64| -> MetricSummary {
            summarize_metric(&group.iter().map(|r| get(r)).collect::<Vec<_>>())
        };
        out.push(SummaryRow {
            n_e,
            snr_db,
            count: group.len(),
            analytic_mi_sources_bits: collect(&|r| r.analytic_mi_sources_bits),
            analytic_mi_latents_bits: collect(&|r| r.analytic_mi_latents_bits),
            ksg_mi_bits: collect(&|r| r.ksg_mi_bits),
            pca_retained: collect(&|r| r.pca_retained as f64),
            ridge_r2: collect(&|r| r.ridge_r2),
            mlp_r2: collect(&|r| r.mlp_r2),
            ridge_mi_bits: collect(&|r| r.ridge_mi_bits),
            mlp_mi_bits: collect(&|r| r.mlp_mi_bits),
            realized_snr_db: collect(&|r| r.realized_snr_db),
            wall_time_ms: collect(&|r| r.wall_time_ms as f64),
        });
    }
    Ok(out)
}
