//! EEG ingestion and dataset construction: recordings, seizure annotations,
//! interval labeling, window extraction, splitting, synthesis, and file
//! formats (EDF subset, annotations CSV, window batches).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

mod edf;
mod intervals;
mod io;
mod split;
mod synth;
mod windows;

pub use edf::{read_edf, read_edf_from, write_edf, write_edf_to};
pub use intervals::{label_intervals, IntervalPlan};
pub use io::{
    read_annotations_csv, read_annotations_csv_from, read_windows_batch, read_windows_batch_from,
    write_annotations_csv, write_annotations_csv_to, write_windows_batch, write_windows_batch_to,
};
pub use split::split_train_test;
pub use synth::{synth_generate, SynthConfig};
pub use windows::{extract_windows, window_input, WindowOrigin, WindowSample};

/// Window class. The numeric values are the network's output indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Interictal = 0,
    Preictal = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Label> {
        match index {
            0 => Ok(Label::Interictal),
            1 => Ok(Label::Preictal),
            other => Err(Error::invalid_input(format!("class index {other} is not 0 or 1"))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Interictal => "interictal",
            Label::Preictal => "preictal",
        })
    }
}

/// A multi-channel recording with a uniform sampling rate.
#[derive(Clone, Debug, PartialEq)]
pub struct EegRecording<S> {
    pub id: String,
    /// Samples per second, identical for every channel.
    pub sample_rate: f64,
    /// `[channel, time]`.
    pub samples: Array2<S>,
}

impl<S: Scalar> EegRecording<S> {
    pub fn duration_s(&self) -> f64 {
        self.samples.ncols() as f64 / self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid_input(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if self.samples.nrows() == 0 {
            return Err(Error::invalid_input("recording has no channels"));
        }
        Ok(())
    }
}

/// One seizure as a `[onset, offset)` span in seconds from recording start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeizureEvent {
    pub onset_s: f64,
    pub offset_s: f64,
}

/// All seizures of one recording, ordered by onset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeizureAnnotations {
    pub events: Vec<SeizureEvent>,
}

impl SeizureAnnotations {
    pub fn new(mut events: Vec<SeizureEvent>) -> Result<Self> {
        events.sort_by(|a, b| a.onset_s.partial_cmp(&b.onset_s).unwrap());
        let ann = SeizureAnnotations { events };
        ann.validate()?;
        Ok(ann)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.events.iter().enumerate() {
            if !(e.onset_s.is_finite() && e.offset_s.is_finite()) {
                return Err(Error::invalid_input(format!("seizure {i} has non-finite bounds")));
            }
            if e.onset_s < 0.0 {
                return Err(Error::invalid_input(format!(
                    "seizure {i} starts before the recording (onset {} s)",
                    e.onset_s
                )));
            }
            if e.onset_s >= e.offset_s {
                return Err(Error::invalid_input(format!(
                    "seizure {i}: onset {} s is not before offset {} s",
                    e.onset_s, e.offset_s
                )));
            }
            if i > 0 {
                let prev = &self.events[i - 1];
                if e.onset_s < prev.offset_s {
                    return Err(Error::invalid_input(format!(
                        "seizure {i} (onset {} s) overlaps the previous one (offset {} s)",
                        e.onset_s, prev.offset_s
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parameters that turn a recording plus annotations into labeled windows.
/// Fields omitted from a serialized form fall back to [`Default`], and
/// unknown keys are rejected, matching how run configs are layered.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// Window length in seconds.
    pub window_s: f64,
    /// Stride between pre-seizure windows (smaller than `window_s` means
    /// overlap).
    pub preictal_stride_s: f64,
    /// Stride between background windows; the default equals `window_s`, so
    /// they do not overlap.
    pub interictal_stride_s: f64,
    /// Length of the labeled pre-seizure interval.
    pub pil_s: f64,
    /// Horizon between that interval and the onset; nothing in
    /// `[onset - sph_s, onset)` is labeled.
    pub sph_s: f64,
    /// Clearance rule, both directions: background must be at least this far
    /// from any seizure, and a seizure must start at least this long after
    /// the previous one's end to get a pre-seizure interval of its own.
    pub lead_gap_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_s: 20.0,
            preictal_stride_s: 15.0,
            interictal_stride_s: 20.0,
            pil_s: 1800.0,
            sph_s: 300.0,
            lead_gap_s: 14400.0,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("window_s", self.window_s),
            ("preictal_stride_s", self.preictal_stride_s),
            ("interictal_stride_s", self.interictal_stride_s),
            ("pil_s", self.pil_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("sph_s", self.sph_s), ("lead_gap_s", self.lead_gap_s)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}
