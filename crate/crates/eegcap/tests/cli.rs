//! End-to-end tests of the `eegcap` binary: exit codes, config handling,
//! override semantics, and byte-determinism of the written artifacts.

use std::path::Path;
use std::process::{Command, Output};

use eegcap::capacity::gaussian_mi_bits;
use eegcap::experiments::{build_cell_model, read_results, ExperimentConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eegcap"));
    c.env_remove("EEGCAP_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn grab_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .parse()
        .expect("numeric value")
}

/// Tiny but complete sweep config used where full scale is irrelevant.
const FAST_ARGS: &[&str] = &[
    "--set",
    "n_s=16",
    "--set",
    "n_l=4",
    "--set",
    "n_t=300",
    "--set",
    "electrode_counts=[8,16]",
    "--set",
    "snr_db_list=[10]",
    "--set",
    "seeds=[1,2]",
    "--set",
    "mlp.epochs=25",
];

#[test]
fn capacity_matches_the_library() {
    let out = run(&["capacity", "--electrodes", "64", "--snr-db", "10"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let printed = grab_value(&text, "analytic_mi_latents_bits");

    let cfg = ExperimentConfig::default();
    let cell = build_cell_model(&cfg, 64, 10.0).unwrap();
    let effective = cell.model.leadfield.dot(&cell.model.mixing);
    let expect = gaussian_mi_bits(&effective, &cell.latent_cov, &cell.model.noise_cov())
        .unwrap()
        .mi_bits;
    assert_eq!(printed, expect, "CLI and library disagree");
}

#[test]
fn missing_config_is_a_usage_error_naming_the_path() {
    let out = run(&[
        "sweep",
        "--config",
        "missing.json",
        "--out",
        "/tmp/never.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.json"));
}

#[test]
fn no_arguments_prints_usage_and_exits_one() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("Usage"), "no usage text:\n{err}");
}

#[test]
fn help_exits_zero_and_documents_flags_everywhere() {
    for sub in [
        None,
        Some("capacity"),
        Some("simulate"),
        Some("estimate"),
        Some("decode"),
        Some("sweep"),
        Some("plot"),
    ] {
        let mut args = Vec::new();
        if let Some(s) = sub {
            args.push(s);
        }
        args.push("--help");
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "help failed for {sub:?}");
        let text = stdout(&out);
        for flag in ["--config", "--set", "--workers", "--out", "--seed"] {
            assert!(text.contains(flag), "{sub:?} help missing {flag}:\n{text}");
        }
        match sub {
            Some("capacity") | Some("simulate") => {
                assert!(text.contains("--electrodes") && text.contains("--snr-db"));
            }
            Some("estimate") | Some("decode") => assert!(text.contains("--data")),
            Some("plot") => assert!(text.contains("--results") && text.contains("--figure")),
            Some("sweep") => assert!(text.contains("--strict") && text.contains("--lenient")),
            _ => {}
        }
    }
}

#[test]
fn config_file_semantics() {
    let dir = tempfile::tempdir().unwrap();

    // Empty object: full defaults.
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "{}").unwrap();
    let cfg = eegcap::cli::load_config(&empty).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.n_s, 64);
    assert_eq!(cfg.n_l, 8);
    assert_eq!(cfg.rho, 0.9);
    assert_eq!(cfg.n_t, 2000);

    // Out-of-range value: error names the key and the bound.
    let bad_rho = dir.path().join("bad_rho.json");
    std::fs::write(&bad_rho, r#"{"rho": 1.5}"#).unwrap();
    let msg = eegcap::cli::load_config(&bad_rho).unwrap_err().to_string();
    assert!(msg.contains("rho") && msg.contains("|rho| < 1"), "{msg}");

    // Unknown key: rejected by name.
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"rho_typo": 0.5}"#).unwrap();
    let msg = eegcap::cli::load_config(&unknown).unwrap_err().to_string();
    assert!(msg.contains("rho_typo"), "{msg}");

    // Malformed JSON: parse error with line/column.
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"rho\": ,\n}").unwrap();
    let msg = eegcap::cli::load_config(&broken).unwrap_err().to_string();
    assert!(msg.contains("line") && msg.contains("column"), "{msg}");

    // CLI exit code for a bad config is 1.
    let out = run(&["capacity", "--config", bad_rho.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("rho"));
}

#[test]
fn overrides_win_and_bad_overrides_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("two.csv");
    let mut args: Vec<&str> = vec!["sweep", "--out", out_csv.to_str().unwrap()];
    args.extend_from_slice(FAST_ARGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let rows = read_results(&out_csv).unwrap();
    let mut nes: Vec<usize> = rows.iter().map(|r| r.n_e).collect();
    nes.sort_unstable();
    nes.dedup();
    assert_eq!(nes, vec![8, 16], "sweep ran exactly the override counts");
    assert_eq!(rows.len(), 2 * 1 * 2);

    // Type mismatch via override names the key, exit 1.
    let out = run(&["capacity", "--set", "rho=abc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("rho"));

    // Malformed override syntax.
    let out = run(&["capacity", "--set", "rho"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("KEY=VALUE"));

    // Unknown dotted key names the key.
    let out = run(&["capacity", "--set", "mlp.width=3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("mlp.width") || stderr(&out).contains("width"));
}

#[test]
fn simulate_writes_deterministic_triplets_and_estimate_decode_consume_them() {
    let dir = tempfile::tempdir().unwrap();
    let base_a = dir.path().join("run_a");
    let base_b = dir.path().join("run_b");
    for base in [&base_a, &base_b] {
        let mut args: Vec<&str> = vec![
            "simulate",
            "--electrodes",
            "16",
            "--snr-db",
            "10",
            "--seed",
            "3",
            "--out",
            base.to_str().unwrap(),
        ];
        args.extend_from_slice(FAST_ARGS);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    for suffix in ["_latents.csv", "_sources.csv", "_sensors.csv"] {
        let a = std::fs::read(format!("{}{suffix}", base_a.display())).unwrap();
        let b = std::fs::read(format!("{}{suffix}", base_b.display())).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "repeat simulate differs for {suffix}");
    }

    let mut args: Vec<&str> = vec!["estimate", "--data", base_a.to_str().unwrap()];
    args.extend_from_slice(FAST_ARGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let mi = grab_value(&stdout(&out), "ksg_mi_bits");
    assert!(mi.is_finite());

    let mut args: Vec<&str> = vec!["decode", "--data", base_a.to_str().unwrap()];
    args.extend_from_slice(FAST_ARGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let ridge_r2 = grab_value(&text, "ridge_r2");
    assert!(ridge_r2 > 0.0 && ridge_r2 <= 1.0);
    let _ = grab_value(&text, "mlp_r2");
}

/// Strips the trailing wall_time_ms column, the only measured (non-derived)
/// field in the results table.
fn mask_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweep_outputs_are_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (name, workers) in [("w2.csv", "2"), ("w1.csv", "1")] {
        let path = dir.path().join(name);
        let mut args: Vec<&str> = vec![
            "sweep",
            "--out",
            path.to_str().unwrap(),
            "--workers",
            workers,
        ];
        args.extend_from_slice(FAST_ARGS);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        csvs.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(
        mask_wall_time(&csvs[0]),
        mask_wall_time(&csvs[1]),
        "worker count changed sweep bytes"
    );
}

#[test]
fn sweep_json_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.json");
    let mut args: Vec<&str> = vec!["sweep", "--out", path.to_str().unwrap(), "--format", "json"];
    args.extend_from_slice(FAST_ARGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let rows = read_results(&path).unwrap();
    assert_eq!(rows.len(), 4);

    let out = run(&["sweep", "--out", "/tmp/x.csv", "--format", "yaml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("yaml"));
}

#[test]
fn plot_emits_data_and_svg_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("rows.csv");
    let mut args: Vec<&str> = vec!["sweep", "--out", results.to_str().unwrap()];
    args.extend_from_slice(FAST_ARGS);
    assert_eq!(run(&args).status.code(), Some(0));

    for fig in ["fig2", "fig3", "fig4", "fig5"] {
        let base = dir.path().join(fig);
        let out = run(&[
            "plot",
            "--results",
            results.to_str().unwrap(),
            "--figure",
            fig,
            "--out",
            base.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        let data_path = base.with_extension("csv");
        let svg_path = base.with_extension("svg");
        let first = std::fs::read(&data_path).unwrap();
        let first_svg = std::fs::read(&svg_path).unwrap();
        assert!(!first.is_empty() && !first_svg.is_empty());

        // Rerun: byte-identical artifacts.
        let out = run(&[
            "plot",
            "--results",
            results.to_str().unwrap(),
            "--figure",
            fig,
            "--out",
            base.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(std::fs::read(&data_path).unwrap(), first);
        assert_eq!(std::fs::read(&svg_path).unwrap(), first_svg);
    }

    let out = run(&[
        "plot",
        "--results",
        results.to_str().unwrap(),
        "--figure",
        "fig9",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2)); // runtime error: unknown figure
    assert!(stderr(&out).contains("fig9"));
}

#[test]
fn sweep_requires_out_and_env_workers_is_honored() {
    let out = run(&["sweep"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--out"));

    let out = bin()
        .env("EEGCAP_WORKERS", "not-a-number")
        .args(["capacity"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("EEGCAP_WORKERS"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.csv");
    let mut args: Vec<String> = vec!["sweep".into(), "--out".into(), path.display().to_string()];
    args.extend(FAST_ARGS.iter().map(|s| s.to_string()));
    let out = bin()
        .env("EEGCAP_WORKERS", "1")
        .args(&args)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(path.exists());
}

#[test]
fn lenient_sweep_reports_failures_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lenient.csv");
    // ksg_k too large for n_t fails every cell.
    let mut args: Vec<&str> = vec![
        "sweep",
        "--lenient",
        "--out",
        path.to_str().unwrap(),
        "--set",
        "ksg_k=100000",
    ];
    args.extend_from_slice(FAST_ARGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("cell failed"));
    let rows = read_results(&path).unwrap();
    assert!(rows.is_empty());

    // Strict mode aborts with exit 2 instead.
    let mut args: Vec<&str> = vec![
        "sweep",
        "--strict",
        "--out",
        path.to_str().unwrap(),
        "--set",
        "ksg_k=100000",
    ];
    args.extend_from_slice(FAST_ARGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verbose_echoes_the_resolved_config() {
    let out = run(&["capacity", "-v", "--set", "n_t=123"]);
    assert_eq!(out.status.code(), Some(0));
    let err = stderr(&out);
    assert!(err.contains("resolved config"), "{err}");
    assert!(err.contains("123"), "{err}");
}

#[test]
fn pca_target_override_forms() {
    // Dotted path into the enum representation.
    let out = run(&["capacity", "--set", "pca_target.fraction=0.9"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    // Whole-value JSON override.
    let out = run(&["capacity", "--set", r#"pca_target={"count": 3}"#]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    // Invalid fraction rejected by validation.
    let out = run(&["capacity", "--set", "pca_target.fraction=1.7"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("pca_target"));
}

#[test]
fn dataset_files_written_where_told() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("nested").join("deep");
    std::fs::create_dir_all(base.parent().unwrap()).unwrap();
    let mut args: Vec<&str> = vec![
        "simulate",
        "--electrodes",
        "8",
        "--out",
        base.to_str().unwrap(),
    ];
    args.extend_from_slice(FAST_ARGS);
    assert_eq!(run(&args).status.code(), Some(0));
    assert!(Path::new(&format!("{}_sensors.csv", base.display())).exists());

    // Unwritable directory: runtime error with the path in the message.
    let mut args: Vec<&str> = vec!["simulate", "--out", "/nonexistent-dir/base"];
    args.extend_from_slice(FAST_ARGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent-dir"));
}
