//! Command-line interface: capacity, simulate, estimate, decode, sweep, and
//! plot subcommands driven by a JSON config file with `--set` overrides.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, unreadable or
//! invalid config, bad overrides), 2 on runtime failures.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{ArgAction, Parser, Subcommand};
use ndarray::Array2;

use crate::capacity::gaussian_mi_bits;
use crate::decoders::{evaluate, mlp_fit, ridge_fit_select, Decoder};
use crate::error::{Error, Result};
use crate::experiments::{
    build_cell_model, emit_plot_data, format_g9, read_results, run_sweep, simulate_cell, summarize,
    write_results, ExperimentConfig, FailureMode, FigureId, OutputFormat,
};
use crate::mi::{ksg_mi_bits, SamplePairSet};
use crate::numerics::pca_reduce;

#[derive(Parser, Debug)]
#[command(
    name = "eegcap",
    version,
    about = "Simulated EEG channel capacity: forward modeling, analytic and empirical mutual information, decoders, and grid sweeps",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file; absent keys take built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Config override as KEY=VALUE (dotted paths for nested keys, values
    /// parsed as JSON). Repeatable; overrides win over the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output path (results file for `sweep`, base path for `simulate` and
    /// `plot`).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Results format for `sweep`: csv or json.
    #[arg(long, global = true, default_value = "csv", value_name = "FMT")]
    format: String,

    /// Worker threads for the sweep runner (default: available parallelism;
    /// EEGCAP_WORKERS is consulted when the flag is absent).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Base seed (dataset seed for `simulate`, decoder seed for `decode`;
    /// restricts `sweep` to this single seed).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Abort the sweep on the first failing cell (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,

    /// Report failing sweep cells on stderr and keep going.
    #[arg(long, global = true)]
    lenient: bool,

    /// Increase verbosity (-v echoes the resolved config, -vv adds timing).
    #[arg(short = 'v', long = "verbose", global = true, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the analytic mutual information of one model cell.
    Capacity {
        /// Electrode count of the cell.
        #[arg(long, default_value_t = 64)]
        electrodes: usize,
        /// Sensor SNR in dB.
        #[arg(long = "snr-db", default_value_t = 10.0)]
        snr_db: f64,
    },
    /// Simulate one recording and write it as a CSV triplet
    /// (<out>_latents.csv, <out>_sources.csv, <out>_sensors.csv).
    Simulate {
        #[arg(long, default_value_t = 64)]
        electrodes: usize,
        #[arg(long = "snr-db", default_value_t = 10.0)]
        snr_db: f64,
    },
    /// KSG mutual information between latents and PCA-reduced sensors of a
    /// written dataset.
    Estimate {
        /// Base path of a dataset written by `simulate`.
        #[arg(long, value_name = "BASE")]
        data: PathBuf,
    },
    /// Fit ridge and MLP decoders on a written dataset and report R^2 and
    /// recovered MI on the held-out block.
    Decode {
        /// Base path of a dataset written by `simulate`.
        #[arg(long, value_name = "BASE")]
        data: PathBuf,
    },
    /// Run the full electrode-count x SNR x seed grid and write the results
    /// table.
    Sweep,
    /// Read a results file, aggregate it, and emit one figure's data file
    /// and SVG chart.
    Plot {
        /// Results file written by `sweep` (CSV or JSON).
        #[arg(long, value_name = "PATH")]
        results: PathBuf,
        /// Figure id: fig2, fig3, fig4, or fig5.
        #[arg(long, value_name = "ID")]
        figure: String,
    },
}

/// Entry point used by `main`.
pub fn run() -> i32 {
    parse_and_dispatch(std::env::args_os())
}

/// Parses `argv`, dispatches, and returns the process exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let _ = e.print();
                    1
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut cfg = resolve_config(cli.config.as_deref(), &cli.overrides)?;
    if let (Command::Sweep, Some(seed)) = (&cli.command, cli.seed) {
        cfg.seeds = vec![seed];
    }
    if cli.verbose >= 1 {
        let echo = serde_json::to_string_pretty(&cfg)
            .map_err(|e| Error::Config(format!("cannot echo config: {e}")))?;
        eprintln!("resolved config:\n{echo}");
    }

    let workers = effective_workers(cli.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;

    let started = Instant::now();
    let result = pool.install(|| match &cli.command {
        Command::Capacity { electrodes, snr_db } => cmd_capacity(&cfg, *electrodes, *snr_db),
        Command::Simulate { electrodes, snr_db } => cmd_simulate(
            &cfg,
            *electrodes,
            *snr_db,
            cli.seed.unwrap_or(1),
            required_out(cli)?,
        ),
        Command::Estimate { data } => cmd_estimate(&cfg, data),
        Command::Decode { data } => cmd_decode(&cfg, data, cli.seed.unwrap_or(1)),
        Command::Sweep => cmd_sweep(&cfg, cli, required_out(cli)?),
        Command::Plot { results, figure } => cmd_plot(results, figure, required_out(cli)?),
    });
    if cli.verbose >= 2 {
        eprintln!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
    }
    result
}

fn required_out(cli: &Cli) -> Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::Config("this subcommand requires --out PATH".into()))
}

fn effective_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        if n == 0 {
            return Err(Error::Config("--workers must be >= 1".into()));
        }
        return Ok(n);
    }
    if let Ok(raw) = std::env::var("EEGCAP_WORKERS") {
        let n: usize = raw.parse().map_err(|_| {
            Error::Config(format!(
                "EEGCAP_WORKERS must be a positive integer, got {raw:?}"
            ))
        })?;
        if n == 0 {
            return Err(Error::Config("EEGCAP_WORKERS must be >= 1".into()));
        }
        return Ok(n);
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Loads a config file with the strict schema: unknown keys are rejected,
/// malformed JSON reports line and column, absent keys take defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    resolve_config(Some(path), &[])
}

fn resolve_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut tree: serde_json::Value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => serde_json::Value::Object(Default::default()),
    };
    if !tree.is_object() {
        return Err(Error::Config(format!(
            "config root must be a JSON object, got {tree}"
        )));
    }
    let mut cfg: ExperimentConfig = from_tree(&tree, "config file")?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override must be KEY=VALUE, got {item:?}")))?;
        let value: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        set_json_path(&mut tree, key, value)?;
        cfg = from_tree(&tree, &format!("override {key}"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn from_tree(tree: &serde_json::Value, context: &str) -> Result<ExperimentConfig> {
    serde_json::from_value(tree.clone()).map_err(|e| Error::Config(format!("{context}: {e}")))
}

fn set_json_path(root: &mut serde_json::Value, path: &str, value: serde_json::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {path:?} is malformed")));
    }
    let mut cursor = root;
    for (i, part) in parts.iter().enumerate() {
        let obj = cursor.as_object_mut().ok_or_else(|| {
            Error::Config(format!("override {path}: {part} is not inside an object"))
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cursor = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("set_json_path always returns inside the loop");
}

fn cmd_capacity(cfg: &ExperimentConfig, n_e: usize, snr_db: f64) -> Result<()> {
    let cell = build_cell_model(cfg, n_e, snr_db)?;
    let noise_cov = cell.model.noise_cov();
    let sources = gaussian_mi_bits(&cell.model.leadfield, &cell.source_cov, &noise_cov)?;
    let effective = cell.model.leadfield.dot(&cell.model.mixing);
    let latents = gaussian_mi_bits(&effective, &cell.latent_cov, &noise_cov)?;
    println!("n_e: {n_e}");
    println!("snr_db: {snr_db}");
    println!("analytic_mi_sources_bits: {}", sources.mi_bits);
    println!("analytic_mi_latents_bits: {}", latents.mi_bits);
    println!(
        "active_channel_eigenvalues: {}",
        latents
            .channel_eigenvalues
            .iter()
            .filter(|&&l| l > 0.0)
            .count()
    );
    Ok(())
}

fn matrix_csv(path: &Path, prefix: &str, m: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    let cols = m.ncols();
    for c in 0..cols {
        if c > 0 {
            out.push(',');
        }
        out.push_str(&format!("{prefix}{c}"));
    }
    out.push('\n');
    for row in m.rows() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format_g9(*v));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty matrix file", path.display())))?;
    let cols = header.split(',').count();
    let mut data = Vec::new();
    let mut rows = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Config(format!(
                "{}:{}: expected {cols} fields, got {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        for f in fields {
            data.push(f.parse::<f64>().map_err(|e| {
                Error::Config(format!(
                    "{}:{}: bad float {f:?}: {e}",
                    path.display(),
                    lineno + 2
                ))
            })?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn triplet_paths(base: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let stem = base.to_string_lossy();
    (
        PathBuf::from(format!("{stem}_latents.csv")),
        PathBuf::from(format!("{stem}_sources.csv")),
        PathBuf::from(format!("{stem}_sensors.csv")),
    )
}

fn cmd_simulate(
    cfg: &ExperimentConfig,
    n_e: usize,
    snr_db: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let dataset = simulate_cell(cfg, n_e, snr_db, seed)?;
    let (latents_path, sources_path, sensors_path) = triplet_paths(out);
    matrix_csv(&latents_path, "z", &dataset.latents)?;
    matrix_csv(&sources_path, "x", &dataset.sources)?;
    matrix_csv(&sensors_path, "y", &dataset.sensors)?;
    println!("latents: {}", latents_path.display());
    println!("sources: {}", sources_path.display());
    println!("sensors: {}", sensors_path.display());
    println!("realized_snr_db: {}", dataset.realized_snr_db);
    Ok(())
}

fn cmd_estimate(cfg: &ExperimentConfig, base: &Path) -> Result<()> {
    let (latents_path, _, sensors_path) = triplet_paths(base);
    let latents = read_matrix_csv(&latents_path)?;
    let sensors = read_matrix_csv(&sensors_path)?;
    let (reduced, pca) = pca_reduce(&sensors, cfg.pca_target)?;
    let pairs = SamplePairSet::new(latents, reduced)?;
    let mi = ksg_mi_bits(&pairs, cfg.ksg_k)?;
    println!("pca_retained: {}", pca.retained);
    println!("ksg_mi_bits: {mi}");
    Ok(())
}

fn cmd_decode(cfg: &ExperimentConfig, base: &Path, seed: u64) -> Result<()> {
    let (latents_path, _, sensors_path) = triplet_paths(base);
    let latents = read_matrix_csv(&latents_path)?;
    let sensors = read_matrix_csv(&sensors_path)?;
    let n = latents.nrows();
    if n != sensors.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "dataset rows disagree: {} latents vs {} sensors",
            n,
            sensors.nrows()
        )));
    }
    let features = match cfg.decode_input {
        crate::experiments::DecodeInput::Raw => sensors,
        crate::experiments::DecodeInput::Pca => pca_reduce(&sensors, cfg.pca_target)?.0,
    };
    let n_train = ((n as f64 * cfg.train_fraction).round() as usize).clamp(1, n - 1);
    let train_y = features.slice(ndarray::s![..n_train, ..]).to_owned();
    let test_y = features.slice(ndarray::s![n_train.., ..]).to_owned();
    let train_x = latents.slice(ndarray::s![..n_train, ..]).to_owned();
    let test_x = latents.slice(ndarray::s![n_train.., ..]).to_owned();

    let (ridge, lambda) = ridge_fit_select(
        &train_y,
        &train_x,
        &cfg.ridge_lambdas,
        cfg.ridge_val_fraction,
    )?;
    let ridge_report = evaluate(&test_x, &ridge.predict(&test_y)?, cfg.ksg_k)?;
    let mlp = mlp_fit(&train_y, &train_x, &cfg.mlp.to_config(seed))?;
    let mlp_report = evaluate(&test_x, &mlp.predict(&test_y)?, cfg.ksg_k)?;

    println!("ridge_lambda: {lambda}");
    println!("ridge_r2: {}", ridge_report.r2_variance_weighted);
    println!("ridge_mi_bits: {}", ridge_report.mi_recovered_bits);
    println!("mlp_r2: {}", mlp_report.r2_variance_weighted);
    println!("mlp_mi_bits: {}", mlp_report.mi_recovered_bits);
    Ok(())
}

fn cmd_sweep(cfg: &ExperimentConfig, cli: &Cli, out: &Path) -> Result<()> {
    let format = OutputFormat::from_str(&cli.format)?;
    let mode = if cli.lenient {
        FailureMode::Lenient
    } else {
        FailureMode::Strict
    };
    let run = run_sweep(cfg, mode)?;
    for f in &run.failures {
        eprintln!(
            "cell failed: n_e={} snr_db={} seed={}: {}",
            f.n_e, f.snr_db, f.seed, f.message
        );
    }
    write_results(&run.rows, out, format)?;
    println!(
        "wrote {} rows to {} ({} failed cells)",
        run.rows.len(),
        out.display(),
        run.failures.len()
    );
    Ok(())
}

fn cmd_plot(results: &Path, figure: &str, out: &Path) -> Result<()> {
    let which = FigureId::from_str(figure)?;
    let rows = read_results(results)?;
    let summary = summarize(&rows)?;
    let (csv_path, svg_path) = emit_plot_data(&summary, which, out)?;
    println!("data: {}", csv_path.display());
    println!("chart: {}", svg_path.display());
    Ok(())
}
