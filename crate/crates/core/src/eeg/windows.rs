//! Cutting labeled intervals into fixed-width training windows.

use ndarray::{s, Array3};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::intervals::IntervalPlan;
use super::{EegRecording, Label, WindowConfig};

/// Where a window came from, for tracing predictions back to the timeline.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowOrigin {
    pub recording_id: String,
    pub start_s: f64,
}

/// One training sample: a `[channels, width]` slab of signal plus its label.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample<S: Scalar> {
    pub data: ndarray::Array2<S>,
    pub label: Label,
    pub origin: Option<WindowOrigin>,
}

impl<S: Scalar> WindowSample<S> {
    /// Number of scalar values in the window.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Reshape a window into the `[1, channels, width]` plane the network eats.
pub fn window_input<S: Scalar>(sample: &WindowSample<S>) -> Array3<S> {
    let (c, w) = sample.data.dim();
    sample
        .data
        .to_shape([1, c, w])
        .expect("[c, w] always reshapes to [1, c, w]")
        .to_owned()
}

/// Slide a window over every labeled interval of the plan.
///
/// Within an interval `[a, b)` the window grid lives on whole samples: the
/// first window starts at the first sample index at or after `a`, windows
/// advance by the class's stride, and no window reaches past `b`. Intervals
/// shorter than one window contribute nothing; excluded spans are skipped
/// entirely. Pre-seizure windows come first in the output, then background,
/// each in timeline order.
pub fn extract_windows<S: Scalar>(
    recording: &EegRecording<S>,
    plan: &IntervalPlan,
    cfg: &WindowConfig,
) -> Result<Vec<WindowSample<S>>> {
    recording.validate()?;
    cfg.validate()?;
    let rate = recording.sample_rate;
    let width = span_samples(cfg.window_s, rate, "window")?;

    let mut out = Vec::new();
    for (spans, stride_s, label) in [
        (&plan.preictal, cfg.preictal_stride_s, Label::Preictal),
        (&plan.interictal, cfg.interictal_stride_s, Label::Interictal),
    ] {
        let stride = span_samples(stride_s, rate, "stride")?;
        for &(a, b) in spans.iter() {
            let first = (a * rate - 1e-9).ceil().max(0.0) as usize;
            let end = ((b * rate + 1e-9).floor() as usize).min(recording.samples.ncols());
            if end < first + width {
                continue;
            }
            let mut start = first;
            while start + width <= end {
                out.push(WindowSample {
                    data: recording.samples.slice(s![.., start..start + width]).to_owned(),
                    label,
                    origin: Some(WindowOrigin {
                        recording_id: recording.id.clone(),
                        start_s: start as f64 / rate,
                    }),
                });
                start += stride;
            }
        }
    }
    Ok(out)
}

/// A duration in seconds as a whole number of samples (at least one).
fn span_samples(seconds: f64, rate: f64, what: &str) -> Result<usize> {
    let n = (seconds * rate).round();
    if !(n >= 1.0) {
        return Err(Error::invalid_input(format!(
            "{what} of {seconds} s spans no samples at {rate} Hz"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, bounded};
    use ndarray::Array2;

    fn flat_recording(channels: usize, seconds: f64, rate: f64) -> EegRecording<f64> {
        let n = (seconds * rate) as usize;
        let samples =
            Array2::from_shape_fn((channels, n), |(c, t)| c as f64 * 1e6 + t as f64);
        EegRecording { id: "test".into(), sample_rate: rate, samples }
    }

    fn count_label(windows: &[WindowSample<f64>], label: Label) -> usize {
        windows.iter().filter(|w| w.label == label).count()
    }

    /// 1800 s of pre-seizure at stride 15 gives 119 windows; 3600 s of
    /// background at stride 20 gives 180.
    #[test]
    fn window_counts_match_hand_counts() {
        let rec = flat_recording(2, 5400.0, 16.0);
        let plan = IntervalPlan {
            preictal: vec![(0.0, 1800.0)],
            interictal: vec![(1800.0, 5400.0)],
            excluded: vec![],
        };
        let windows = extract_windows(&rec, &plan, &WindowConfig::default()).unwrap();
        assert_eq!(count_label(&windows, Label::Preictal), 119);
        assert_eq!(count_label(&windows, Label::Interictal), 180);
    }

    #[test]
    fn clinical_rate_window_is_23_by_5120() {
        let rec = flat_recording(23, 40.0, 256.0);
        let plan =
            IntervalPlan { interictal: vec![(0.0, 40.0)], ..IntervalPlan::default() };
        let windows = extract_windows(&rec, &plan, &WindowConfig::default()).unwrap();
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].data.dim(), (23, 5120));
        assert_eq!(window_input(&windows[0]).dim(), (1, 23, 5120));
        // Second window starts one full window later (stride = width).
        assert_eq!(windows[1].origin.as_ref().unwrap().start_s, 20.0);
        assert_eq!(windows[1].data[[3, 0]], 3e6 + 5120.0);
    }

    #[test]
    fn intervals_shorter_than_a_window_yield_nothing() {
        let rec = flat_recording(1, 100.0, 16.0);
        let plan =
            IntervalPlan { interictal: vec![(10.0, 29.5)], ..IntervalPlan::default() };
        assert!(extract_windows(&rec, &plan, &WindowConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn windows_stay_inside_fractional_interval_bounds() {
        let rec = flat_recording(1, 100.0, 16.0);
        let plan =
            IntervalPlan { preictal: vec![(10.3, 77.9)], ..IntervalPlan::default() };
        let windows = extract_windows(&rec, &plan, &WindowConfig::default()).unwrap();
        // [10.3, 77.9) at 16 Hz: samples 165..=1246, width 320, stride 240.
        assert_eq!(windows.len(), 4);
        for w in &windows {
            let start = (w.origin.as_ref().unwrap().start_s * 16.0) as usize;
            assert!(start >= 165 && start + 320 <= 1246);
            assert_eq!(w.data[[0, 0]], start as f64);
            assert_eq!(w.data[[0, 319]], (start + 319) as f64);
        }
    }

    /// Equal spans of the two classes: the shorter pre-seizure stride always
    /// wins on count once the span holds at least a few windows.
    #[test]
    fn preictal_windows_outnumber_interictal_over_equal_spans() {
        let cfg = WindowConfig::default();
        let mut rng = rng::seeded(41);
        for _ in 0..100 {
            let len = 65.0 + bounded(&mut rng, 4000) as f64 + bounded(&mut rng, 10) as f64 / 16.0;
            let rec = flat_recording(1, len + 1.0, 16.0);
            let plan = IntervalPlan {
                preictal: vec![(0.0, len)],
                interictal: vec![],
                excluded: vec![],
            };
            let p = extract_windows(&rec, &plan, &cfg).unwrap().len();
            let plan2 = IntervalPlan {
                preictal: vec![],
                interictal: vec![(0.0, len)],
                excluded: vec![],
            };
            let i = extract_windows(&rec, &plan2, &cfg).unwrap().len();
            assert!(p > i, "span {len} s: {p} pre-seizure vs {i} background");
        }
    }

    /// Counts follow floor((span - width) / stride) + 1 on whole-second
    /// intervals.
    #[test]
    fn counts_match_the_closed_form() {
        let cfg = WindowConfig::default();
        let mut rng = rng::seeded(42);
        for _ in 0..100 {
            let len = 20 + bounded(&mut rng, 2000) as usize;
            let start = bounded(&mut rng, 50) as usize;
            let rec = flat_recording(1, (start + len) as f64, 16.0);
            let plan = IntervalPlan {
                interictal: vec![(start as f64, (start + len) as f64)],
                ..IntervalPlan::default()
            };
            let got = extract_windows(&rec, &plan, &cfg).unwrap().len();
            assert_eq!(got, (len - 20) / 20 + 1);
        }
    }
}
