//! Figure artifacts: for each figure id, a columnar data file with the exact
//! plotted series and a standalone SVG chart.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::io::format_g9;
use super::svg::{Chart, Series, SeriesStyle, PALETTE};
use super::SummaryRow;
use crate::error::{Error, Result};

/// Which figure to emit. The mutual-information figures plot the latent
/// channel, matching what the empirical estimator measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// MI vs electrode count, one analytic (solid) and one empirical
    /// (dashed) series per SNR.
    Fig2,
    /// Analytic MI vs SNR, one series per electrode count.
    Fig3,
    /// Decoder R^2 vs analytic MI, ridge as circles and MLP as crosses.
    Fig4,
    /// Decoder-recovered MI vs analytic MI, colored by electrode count.
    Fig5,
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            "fig4" => Ok(FigureId::Fig4),
            "fig5" => Ok(FigureId::Fig5),
            other => Err(Error::InvalidArgument(format!(
                "unknown figure id {other:?} (expected fig2, fig3, fig4, or fig5)"
            ))),
        }
    }
}

fn sorted_unique_ne(summary: &[SummaryRow]) -> Vec<usize> {
    let mut v: Vec<usize> = summary.iter().map(|r| r.n_e).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn sorted_unique_snr(summary: &[SummaryRow]) -> Vec<f64> {
    let mut v: Vec<f64> = summary.iter().map(|r| r.snr_db).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| a == b);
    v
}

fn cell(summary: &[SummaryRow], n_e: usize, snr_db: f64) -> Option<&SummaryRow> {
    summary.iter().find(|r| r.n_e == n_e && r.snr_db == snr_db)
}

/// Writes `<base>.csv` and `<base>.svg` for the requested figure (any
/// extension on `out_base` is replaced). Fails before creating any file if
/// the summary is empty.
pub fn emit_plot_data(
    summary: &[SummaryRow],
    which: FigureId,
    out_base: &Path,
) -> Result<(PathBuf, PathBuf)> {
    if summary.is_empty() {
        return Err(Error::InvalidArgument(
            "emit_plot_data: empty summary".into(),
        ));
    }
    let (data, chart) = match which {
        FigureId::Fig2 => fig2(summary),
        FigureId::Fig3 => fig3(summary),
        FigureId::Fig4 => fig4(summary),
        FigureId::Fig5 => fig5(summary),
    };
    let csv_path = out_base.with_extension("csv");
    let svg_path = out_base.with_extension("svg");
    fs::write(&csv_path, data).map_err(|e| Error::io(&csv_path, e))?;
    fs::write(&svg_path, chart.render()).map_err(|e| Error::io(&svg_path, e))?;
    Ok((csv_path, svg_path))
}

fn fig2(summary: &[SummaryRow]) -> (String, Chart) {
    let nes = sorted_unique_ne(summary);
    let snrs = sorted_unique_snr(summary);

    let mut header = "n_e".to_string();
    for &snr in &snrs {
        header.push_str(&format!(",analytic_{0}db,empirical_{0}db", format_g9(snr)));
    }
    let mut data = header;
    data.push('\n');
    for &n_e in &nes {
        let mut line = n_e.to_string();
        for &snr in &snrs {
            match cell(summary, n_e, snr) {
                Some(r) => line.push_str(&format!(
                    ",{},{}",
                    format_g9(r.analytic_mi_latents_bits.mean),
                    format_g9(r.ksg_mi_bits.mean)
                )),
                None => line.push_str(",,"),
            }
        }
        data.push_str(&line);
        data.push('\n');
    }

    let mut series = Vec::new();
    for (i, &snr) in snrs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()].to_string();
        let analytic: Vec<(f64, f64)> = nes
            .iter()
            .filter_map(|&n_e| {
                cell(summary, n_e, snr).map(|r| (n_e as f64, r.analytic_mi_latents_bits.mean))
            })
            .collect();
        let empirical: Vec<(f64, f64)> = nes
            .iter()
            .filter_map(|&n_e| cell(summary, n_e, snr).map(|r| (n_e as f64, r.ksg_mi_bits.mean)))
            .collect();
        series.push(Series {
            label: format!("analytic {} dB", format_g9(snr)),
            color: color.clone(),
            style: SeriesStyle::SolidLine,
            points: analytic,
        });
        series.push(Series {
            label: format!("empirical {} dB", format_g9(snr)),
            color,
            style: SeriesStyle::DashedLine,
            points: empirical,
        });
    }
    let chart = Chart {
        title: "Mutual information vs electrode count".into(),
        x_label: "electrode count".into(),
        y_label: "mutual information (bits/sample)".into(),
        series,
    };
    (data, chart)
}

fn fig3(summary: &[SummaryRow]) -> (String, Chart) {
    let nes = sorted_unique_ne(summary);
    let snrs = sorted_unique_snr(summary);

    let mut header = "snr_db".to_string();
    for &n_e in &nes {
        header.push_str(&format!(",analytic_ne{n_e}"));
    }
    let mut data = header;
    data.push('\n');
    for &snr in &snrs {
        let mut line = format_g9(snr);
        for &n_e in &nes {
            match cell(summary, n_e, snr) {
                Some(r) => {
                    line.push_str(&format!(",{}", format_g9(r.analytic_mi_latents_bits.mean)))
                }
                None => line.push(','),
            }
        }
        data.push_str(&line);
        data.push('\n');
    }

    let series = nes
        .iter()
        .enumerate()
        .map(|(i, &n_e)| Series {
            label: format!("{n_e} electrodes"),
            color: PALETTE[i % PALETTE.len()].to_string(),
            style: SeriesStyle::SolidLine,
            points: snrs
                .iter()
                .filter_map(|&snr| {
                    cell(summary, n_e, snr).map(|r| (snr, r.analytic_mi_latents_bits.mean))
                })
                .collect(),
        })
        .collect();
    let chart = Chart {
        title: "Mutual information vs SNR".into(),
        x_label: "SNR (dB)".into(),
        y_label: "mutual information (bits/sample)".into(),
        series,
    };
    (data, chart)
}

fn fig4(summary: &[SummaryRow]) -> (String, Chart) {
    let mut data = "n_e,snr_db,analytic_mi_latents_bits,ridge_r2,mlp_r2\n".to_string();
    for r in summary {
        data.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n_e,
            format_g9(r.snr_db),
            format_g9(r.analytic_mi_latents_bits.mean),
            format_g9(r.ridge_r2.mean),
            format_g9(r.mlp_r2.mean)
        ));
    }
    let ridge: Vec<(f64, f64)> = summary
        .iter()
        .map(|r| (r.analytic_mi_latents_bits.mean, r.ridge_r2.mean))
        .collect();
    let mlp: Vec<(f64, f64)> = summary
        .iter()
        .map(|r| (r.analytic_mi_latents_bits.mean, r.mlp_r2.mean))
        .collect();
    let chart = Chart {
        title: "Decoder performance vs analytic mutual information".into(),
        x_label: "analytic mutual information (bits/sample)".into(),
        y_label: "decoder R^2".into(),
        series: vec![
            Series {
                label: "ridge".into(),
                color: PALETTE[0].to_string(),
                style: SeriesStyle::Circles,
                points: ridge,
            },
            Series {
                label: "MLP".into(),
                color: PALETTE[1].to_string(),
                style: SeriesStyle::Crosses,
                points: mlp,
            },
        ],
    };
    (data, chart)
}

fn fig5(summary: &[SummaryRow]) -> (String, Chart) {
    let mut data = "n_e,snr_db,analytic_mi_latents_bits,ridge_mi_bits,mlp_mi_bits\n".to_string();
    for r in summary {
        data.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n_e,
            format_g9(r.snr_db),
            format_g9(r.analytic_mi_latents_bits.mean),
            format_g9(r.ridge_mi_bits.mean),
            format_g9(r.mlp_mi_bits.mean)
        ));
    }
    let nes = sorted_unique_ne(summary);
    let mut series = Vec::new();
    for (i, &n_e) in nes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()].to_string();
        let points: Vec<(f64, f64)> = summary
            .iter()
            .filter(|r| r.n_e == n_e)
            .map(|r| (r.analytic_mi_latents_bits.mean, r.ridge_mi_bits.mean))
            .collect();
        series.push(Series {
            label: format!("{n_e} electrodes (ridge)"),
            color: color.clone(),
            style: SeriesStyle::Circles,
            points,
        });
        let points: Vec<(f64, f64)> = summary
            .iter()
            .filter(|r| r.n_e == n_e)
            .map(|r| (r.analytic_mi_latents_bits.mean, r.mlp_mi_bits.mean))
            .collect();
        series.push(Series {
            label: format!("{n_e} electrodes (MLP)"),
            color,
            style: SeriesStyle::Crosses,
            points,
        });
    }
    let chart = Chart {
        title: "Recovered vs analytic mutual information".into(),
        x_label: "analytic mutual information (bits/sample)".into(),
        y_label: "decoder-recovered MI (bits/sample)".into(),
        series,
    };
    (data, chart)
}
