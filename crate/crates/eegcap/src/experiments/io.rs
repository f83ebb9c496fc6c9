//! Result table serialization: CSV with a pinned column order and a JSON
//! mirror with identical field names.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::ResultRow;
use crate::error::{Error, Result};

/// Fixed CSV column order.
pub const CSV_HEADER: &str = "n_e,snr_db,seed,analytic_mi_sources_bits,analytic_mi_latents_bits,ksg_mi_bits,pca_retained,ridge_r2,mlp_r2,ridge_mi_bits,mlp_mi_bits,realized_snr_db,wall_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "format must be csv or json, got {other}"
            ))),
        }
    }
}

/// Renders a float with 9 significant digits, printf `%.9g` style: fixed
/// notation in the mid range, scientific outside it, trailing zeros trimmed.
/// Pure function of the value, so identical rows always format identically.
pub fn format_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exponent.parse().expect("exponent");
    if !(-5..9).contains(&exp) {
        let trimmed = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{trimmed}e{exp}")
    } else {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    }
}

fn csv_line(r: &ResultRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.n_e,
        format_g9(r.snr_db),
        r.seed,
        format_g9(r.analytic_mi_sources_bits),
        format_g9(r.analytic_mi_latents_bits),
        format_g9(r.ksg_mi_bits),
        r.pca_retained,
        format_g9(r.ridge_r2),
        format_g9(r.mlp_r2),
        format_g9(r.ridge_mi_bits),
        format_g9(r.mlp_mi_bits),
        format_g9(r.realized_snr_db),
        r.wall_time_ms
    )
}

/// Writes the rows to `path`. CSV keeps the pinned header and column order
/// with floats at 9 significant digits; JSON is an array of objects with the
/// same field names. Both end with a newline.
pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&csv_line(r));
                out.push('\n');
            }
        }
        OutputFormat::Json => {
            out = serde_json::to_string_pretty(rows)
                .map_err(|e| Error::Config(format!("json serialization failed: {e}")))?;
            out.push('\n');
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads rows back from a CSV or JSON results file (decided by extension,
/// defaulting to CSV).
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        return serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())));
    }
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty results file", path.display())))?;
    if header != CSV_HEADER {
        return Err(Error::Config(format!(
            "{}: unexpected CSV header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(Error::Config(format!(
                "{}:{}: expected 13 fields, got {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            match s {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                _ => s.parse().map_err(|e| {
                    Error::Config(format!(
                        "{}:{}: bad float {s:?}: {e}",
                        path.display(),
                        lineno + 2
                    ))
                }),
            }
        };
        let parse_u = |s: &str| -> Result<u64> {
            s.parse().map_err(|e| {
                Error::Config(format!(
                    "{}:{}: bad integer {s:?}: {e}",
                    path.display(),
                    lineno + 2
                ))
            })
        };
        rows.push(ResultRow {
            n_e: parse_u(fields[0])? as usize,
            snr_db: parse_f(fields[1])?,
            seed: parse_u(fields[2])?,
            analytic_mi_sources_bits: parse_f(fields[3])?,
            analytic_mi_latents_bits: parse_f(fields[4])?,
            ksg_mi_bits: parse_f(fields[5])?,
            pca_retained: parse_u(fields[6])? as usize,
            ridge_r2: parse_f(fields[7])?,
            mlp_r2: parse_f(fields[8])?,
            ridge_mi_bits: parse_f(fields[9])?,
            mlp_mi_bits: parse_f(fields[10])?,
            realized_snr_db: parse_f(fields[11])?,
            wall_time_ms: parse_u(fields[12])?,
        });
    }
    Ok(rows)
}
