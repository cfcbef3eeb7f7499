//! `scnn evaluate` — turn a predictions file into metrics: confusion-derived
//! rates, a spike-margin threshold sweep, and an ROC curve with its area.
//!
//! False alarms are normalized per hour of monitored background: each
//! background window stands for one stride of timeline, so the monitored
//! span is `count x interictal stride` unless `--monitored-seconds` pins it
//! explicitly.

use std::path::{Path, PathBuf};

use clap::Args;

use scnn_core::error::{Error, Result};
use scnn_core::eval::{
    auc, confusion, fpr_per_hour, metrics, roc, threshold_sweep, write_roc_csv,
    write_sweep_csv, DEFAULT_SWEEP_THRESHOLDS,
};
use scnn_core::snn::CLASS_INTERICTAL;

use crate::commands::override_with;
use crate::config::RunConfig;
use crate::util::{at_path, atomic_write, parse_field};

use super::infer::PREDICTION_HEADER;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Input predictions (CSV)
    #[arg(long, default_value = "out/predictions.csv")]
    pub predictions: PathBuf,

    /// Output threshold sweep (CSV)
    #[arg(long, default_value = "out/sweep.csv")]
    pub sweep_out: PathBuf,

    /// Output ROC curve (CSV)
    #[arg(long, default_value = "out/roc.csv")]
    pub roc_out: PathBuf,

    /// Spike-count margins to sweep, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<i64>>,

    /// Interictal stride used to derive the monitored span, seconds
    #[arg(long)]
    pub interictal_stride: Option<f64>,

    /// Monitored background span in seconds; overrides the stride rule
    #[arg(long)]
    pub monitored_seconds: Option<f64>,
}

/// One parsed row of a predictions file.
struct PredictionRow {
    label: usize,
    count_p: u64,
    count_i: u64,
    score: f64,
    prediction: usize,
}

fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let err = |e: csv::Error| at_path(Error::format(e.to_string()), path);
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| at_path(Error::format(e.to_string()), path))?;
    let header = reader.headers().map_err(err)?.clone();
    if header.iter().ne(PREDICTION_HEADER) {
        return Err(at_path(
            Error::format(format!(
                "header is {:?}, expected {}",
                header.iter().collect::<Vec<_>>().join(","),
                PREDICTION_HEADER.join(","),
            )),
            path,
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(err)?;
        let line = i + 2; // header is line 1
        if record.len() != PREDICTION_HEADER.len() {
            return Err(at_path(
                Error::format(format!("line {line}: {} fields, expected 6", record.len())),
                path,
            ));
        }
        let class = |raw: &str, what: &str| -> Result<usize> {
            let v: usize = parse_field(raw, what, line)?;
            if v > 1 {
                return Err(Error::format(format!("line {line}: {what} must be 0 or 1, got {v}")));
            }
            Ok(v)
        };
        rows.push(PredictionRow {
            label: class(&record[1], "label").map_err(|e| at_path(e, path))?,
            count_p: parse_field(&record[2], "count_p", line).map_err(|e| at_path(e, path))?,
            count_i: parse_field(&record[3], "count_i", line).map_err(|e| at_path(e, path))?,
            score: parse_field(&record[4], "score", line).map_err(|e| at_path(e, path))?,
            prediction: class(&record[5], "prediction").map_err(|e| at_path(e, path))?,
        });
    }
    if rows.is_empty() {
        return Err(at_path(Error::invalid_input("no prediction rows"), path));
    }
    Ok(rows)
}

pub fn run(args: EvaluateArgs, mut cfg: RunConfig) -> Result<()> {
    override_with(&mut cfg.windows.interictal_stride_s, args.interictal_stride);

    let rows = read_predictions(&args.predictions)?;
    let labels: Vec<usize> = rows.iter().map(|r| r.label).collect();
    let predictions: Vec<usize> = rows.iter().map(|r| r.prediction).collect();

    let counts = confusion(&predictions, &labels)?;
    println!("{}", metrics(&counts));

    let false_alarms = counts.false_pos;
    let monitored = args
        .monitored_seconds
        .unwrap_or_else(|| {
            let background = labels.iter().filter(|&&l| l == CLASS_INTERICTAL).count();
            background as f64 * cfg.windows.interictal_stride_s
        });
    println!(
        "false alarms: {false_alarms} over {monitored} s ({:.4}/h)",
        fpr_per_hour(false_alarms, monitored)?,
    );

    let margins: Vec<i64> =
        rows.iter().map(|r| r.count_p as i64 - r.count_i as i64).collect();
    let thresholds = args.thresholds.unwrap_or_else(|| DEFAULT_SWEEP_THRESHOLDS.to_vec());
    let sweep = threshold_sweep(&margins, &labels, &thresholds)?;
    let mut sweep_bytes = Vec::new();
    write_sweep_csv(&sweep, &mut sweep_bytes).map_err(|e| at_path(e, &args.sweep_out))?;
    atomic_write(&args.sweep_out, &sweep_bytes)?;
    println!("wrote {}", args.sweep_out.display());

    let scores: Vec<f64> = rows.iter().map(|r| r.score).collect();
    let curve = roc(&scores, &labels)?;
    println!("auc {:.6}", auc(&curve));
    let mut roc_bytes = Vec::new();
    write_roc_csv(&curve, &mut roc_bytes).map_err(|e| at_path(e, &args.roc_out))?;
    atomic_write(&args.roc_out, &roc_bytes)?;
    println!("wrote {}", args.roc_out.display());
    Ok(())
}
