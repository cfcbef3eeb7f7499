//! Classifier evaluation: confusion counts, the usual rates, ROC/AUC, and
//! decision-threshold sweeps.
//!
//! The positive class throughout is pre-seizure (class index 1). Rates whose
//! denominator is empty come back as [`MetricValue::Undefined`] with a
//! reason, never as a silent zero.

use std::io::Write;

use crate::error::{Error, Result};
use crate::snn::CLASS_PREICTAL;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Tally predictions against labels (both as 0/1 class indices).
pub fn confusion(predictions: &[usize], labels: &[usize]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid_input(format!(
            "{} predictions against {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (i, (&p, &l)) in predictions.iter().zip(labels).enumerate() {
        if p > 1 || l > 1 {
            return Err(Error::invalid_input(format!(
                "sample {i}: classes are 0/1, got prediction {p}, label {l}"
            )));
        }
        match (p == CLASS_PREICTAL, l == CLASS_PREICTAL) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    Ok(c)
}

/// A rate that may have had nothing to divide by.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricValue {
    Defined(f64),
    Undefined(String),
}

impl MetricValue {
    fn ratio(num: u64, denom: u64, why_empty: &str) -> Self {
        if denom == 0 {
            MetricValue::Undefined(why_empty.to_string())
        } else {
            MetricValue::Defined(num as f64 / denom as f64)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(*v),
            MetricValue::Undefined(_) => None,
        }
    }

    /// The value, or an error carrying the reason it is undefined.
    pub fn require(&self, what: &str) -> Result<f64> {
        match self {
            MetricValue::Defined(v) => Ok(*v),
            MetricValue::Undefined(why) => {
                Err(Error::invalid_input(format!("{what} is undefined: {why}")))
            }
        }
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricValue::Defined(v) => write!(f, "{v}"),
            MetricValue::Undefined(why) => write!(f, "undefined ({why})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: MetricValue,
    pub sensitivity: MetricValue,
    pub specificity: MetricValue,
    pub false_positive_rate: MetricValue,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let positives = c.true_pos + c.false_neg;
    let negatives = c.true_neg + c.false_pos;
    Metrics {
        accuracy: MetricValue::ratio(c.true_pos + c.true_neg, c.total(), "no samples"),
        sensitivity: MetricValue::ratio(c.true_pos, positives, "no positive samples"),
        specificity: MetricValue::ratio(c.true_neg, negatives, "no negative samples"),
        false_positive_rate: MetricValue::ratio(c.false_pos, negatives, "no negative samples"),
    }
}

impl std::fmt::Display for Metrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "accuracy = {}", self.accuracy)?;
        writeln!(f, "sensitivity = {}", self.sensitivity)?;
        writeln!(f, "specificity = {}", self.specificity)?;
        write!(f, "false_positive_rate = {}", self.false_positive_rate)
    }
}

/// False alarms per hour of monitored non-seizure time.
pub fn fpr_per_hour(false_positives: u64, monitored_seconds: f64) -> Result<f64> {
    if !(monitored_seconds > 0.0) {
        return Err(Error::invalid_input(format!(
            "monitored duration must be positive, got {monitored_seconds} s"
        )));
    }
    Ok(false_positives as f64 * 3600.0 / monitored_seconds)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// Operating points from (0, 0) to (1, 1), one per distinct score, with tied
/// scores grouped into a single step.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

pub fn roc(scores: &[f64], labels: &[usize]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::invalid_input(format!(
            "{} scores against {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let mut pos = 0u64;
    let mut neg = 0u64;
    for (i, (&s, &l)) in scores.iter().zip(labels).enumerate() {
        if !s.is_finite() {
            return Err(Error::invalid_input(format!("sample {i}: score {s} is not finite")));
        }
        match l {
            1 => pos += 1,
            0 => neg += 1,
            other => {
                return Err(Error::invalid_input(format!(
                    "sample {i}: classes are 0/1, got label {other}"
                )))
            }
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::invalid_input(
            "ROC needs both classes; the labels are single-class",
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        // Consume the whole run of equal scores before emitting a point, so
        // ties form one diagonal step instead of an order-dependent staircase.
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            match labels[order[i]] {
                1 => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 });
    }
    Ok(RocCurve { points })
}

/// Area under the curve by trapezoidal integration.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut area = 0.0;
    for pair in curve.points.windows(2) {
        area += (pair[1].fpr - pair[0].fpr) * (pair[0].tpr + pair[1].tpr) / 2.0;
    }
    area
}

/// One row of a decision-threshold sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub threshold: i64,
    pub acc: f64,
    pub sen: f64,
    pub fpr: f64,
}

/// Evaluate the count-margin decision rule (positive when `margin >
/// threshold`) at each threshold. Labels must include both classes so every
/// rate is defined.
pub fn threshold_sweep(
    margins: &[i64],
    labels: &[usize],
    thresholds: &[i64],
) -> Result<Vec<SweepRow>> {
    if margins.len() != labels.len() {
        return Err(Error::invalid_input(format!(
            "{} margins against {} labels",
            margins.len(),
            labels.len()
        )));
    }
    let mut rows = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let predictions: Vec<usize> =
            margins.iter().map(|&m| usize::from(m > threshold)).collect();
        let m = metrics(&confusion(&predictions, labels)?);
        rows.push(SweepRow {
            threshold,
            acc: m.accuracy.require("accuracy")?,
            sen: m.sensitivity.require("sensitivity")?,
            fpr: m.false_positive_rate.require("false positive rate")?,
        });
    }
    Ok(rows)
}

/// Default thresholds tried by the sweep.
pub const DEFAULT_SWEEP_THRESHOLDS: [i64; 5] = [0, 1, 2, 3, 4];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "acc", "sen", "fpr"]).map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.threshold.to_string(),
            row.acc.to_string(),
            row.sen.to_string(),
            row.fpr.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_roc_csv<W: Write>(curve: &RocCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr"]).map_err(csv_err)?;
    for p in &curve.points {
        w.write_record([p.fpr.to_string(), p.tpr.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::format(format!("csv: {e}"))
}
