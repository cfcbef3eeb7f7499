//! Synthetic EEG-like recordings with plantable pre-seizure signatures.
//!
//! Each channel is smoothed Gaussian noise; inside every pre-seizure
//! interval a sinusoidal burst rides on top, giving downstream models an
//! honest (and tunable) detection problem. Generation is bit-deterministic
//! for a given config and seed, and channels draw from independent streams
//! so adding a channel never disturbs the others.

use ndarray::Array2;

use crate::detmath;
use crate::error::{Error, Result};
use crate::rng::{self, u01, NormalSampler};

use super::intervals::label_intervals;
use super::{EegRecording, SeizureAnnotations, SeizureEvent, WindowConfig};

/// Shape of a generated recording.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub duration_s: f64,
    pub channels: usize,
    pub sample_rate: f64,
    /// Seizure onsets, in seconds from the start of the recording.
    pub seizure_onsets_s: Vec<f64>,
    pub seizure_duration_s: f64,
    /// Standard deviation of the background noise.
    pub noise_std: f64,
    /// First-order smoothing coefficient in `[0, 1)`; 0 is white noise.
    pub noise_smoothing: f64,
    /// Peak amplitude of the planted pre-seizure oscillation; 0 disables it.
    pub burst_amplitude: f64,
    pub burst_freq_hz: f64,
    /// Timeline labeling rules, reused verbatim by window extraction.
    pub windows: WindowConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            duration_s: 3600.0,
            channels: 2,
            sample_rate: 64.0,
            seizure_onsets_s: Vec::new(),
            seizure_duration_s: 60.0,
            noise_std: 1.0,
            noise_smoothing: 0.6,
            burst_amplitude: 1.5,
            burst_freq_hz: 8.0,
            windows: WindowConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.windows.validate()?;
        for (value, what) in [
            (self.duration_s, "duration"),
            (self.sample_rate, "sample rate"),
            (self.seizure_duration_s, "seizure duration"),
            (self.burst_freq_hz, "burst frequency"),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid_input(format!(
                    "{what} must be positive, got {value}"
                )));
            }
        }
        if self.channels == 0 {
            return Err(Error::invalid_input("need at least one channel"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid_input(format!(
                "noise standard deviation must be non-negative, got {}",
                self.noise_std
            )));
        }
        if !(0.0..1.0).contains(&self.noise_smoothing) {
            return Err(Error::invalid_input(format!(
                "noise smoothing must lie in [0, 1), got {}",
                self.noise_smoothing
            )));
        }
        if !(self.burst_amplitude >= 0.0 && self.burst_amplitude.is_finite()) {
            return Err(Error::invalid_input(format!(
                "burst amplitude must be non-negative, got {}",
                self.burst_amplitude
            )));
        }
        for &onset in &self.seizure_onsets_s {
            if !(onset >= 0.0 && onset + self.seizure_duration_s <= self.duration_s) {
                return Err(Error::invalid_input(format!(
                    "seizure at {onset} s does not fit a {} s recording",
                    self.duration_s
                )));
            }
        }
        Ok(())
    }

    fn annotations(&self) -> Result<SeizureAnnotations> {
        SeizureAnnotations::new(
            self.seizure_onsets_s
                .iter()
                .map(|&onset_s| SeizureEvent {
                    onset_s,
                    offset_s: onset_s + self.seizure_duration_s,
                })
                .collect(),
        )
    }
}

/// Generate a recording plus the annotations describing it.
pub fn synth_generate(cfg: &SynthConfig, seed: u64) -> Result<(EegRecording<f64>, SeizureAnnotations)> {
    cfg.validate()?;
    let annotations = cfg.annotations()?;
    let zones = label_intervals(cfg.duration_s, &annotations, &cfg.windows)?.preictal;

    let n = (cfg.duration_s * cfg.sample_rate).round() as usize;
    let alpha = cfg.noise_smoothing;
    // The smoother shrinks variance by (1 - a) / (1 + a); scale it back up
    // so `noise_std` means what it says regardless of smoothing.
    let compensation = ((1.0 + alpha) / (1.0 - alpha)).sqrt();

    let mut samples = Array2::zeros((cfg.channels, n));
    for c in 0..cfg.channels {
        let mut stream = rng::step_rng(seed, c as u32);
        let phases: Vec<f64> = zones.iter().map(|_| u01(&mut stream)).collect();
        let mut sampler = NormalSampler::new(stream);

        let mut smoothed = 0.0;
        for t in 0..n {
            smoothed = alpha * smoothed + (1.0 - alpha) * (sampler.next() * cfg.noise_std);
            samples[[c, t]] = compensation * smoothed;
        }

        for (&(a, b), &phase) in zones.iter().zip(&phases) {
            let first = (a * cfg.sample_rate - 1e-9).ceil().max(0.0) as usize;
            let last = ((b * cfg.sample_rate + 1e-9).floor() as usize).min(n);
            for t in first..last {
                let turns = cfg.burst_freq_hz * t as f64 / cfg.sample_rate + phase;
                let (sin, _) = detmath::sin_cos_2pi(turns.fract());
                samples[[c, t]] += cfg.burst_amplitude * sin;
            }
        }
    }

    let recording = EegRecording {
        id: format!("synth-{seed}"),
        sample_rate: cfg.sample_rate,
        samples,
    };
    Ok((recording, annotations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eeg::{extract_windows, Label};
    use crate::eval;

    fn burst_test_config() -> SynthConfig {
        SynthConfig {
            duration_s: 3600.0,
            channels: 1,
            seizure_onsets_s: vec![1800.0],
            windows: WindowConfig {
                pil_s: 600.0,
                sph_s: 60.0,
                lead_gap_s: 300.0,
                ..WindowConfig::default()
            },
            ..SynthConfig::default()
        }
    }

    /// AUC of mean window power against the window labels: a crude but
    /// model-free readout of how much signal the generator planted.
    fn power_auc(cfg: &SynthConfig, seed: u64) -> f64 {
        let (rec, ann) = synth_generate(cfg, seed).unwrap();
        let plan = label_intervals(cfg.duration_s, &ann, &cfg.windows).unwrap();
        let windows = extract_windows(&rec, &plan, &cfg.windows).unwrap();
        let scores: Vec<f64> = windows
            .iter()
            .map(|w| w.data.iter().map(|x| x * x).sum::<f64>() / w.len() as f64)
            .collect();
        let labels: Vec<usize> = windows.iter().map(|w| w.label.index()).collect();
        assert!(labels.iter().any(|&l| l == Label::Preictal.index()));
        assert!(labels.iter().any(|&l| l == Label::Interictal.index()));
        eval::auc(&eval::roc(&scores, &labels).unwrap())
    }

    #[test]
    fn generation_is_bit_deterministic() {
        let cfg = SynthConfig { duration_s: 30.0, ..burst_test_config() };
        let cfg = SynthConfig { seizure_onsets_s: vec![], ..cfg };
        let (a, _) = synth_generate(&cfg, 9).unwrap();
        let (b, _) = synth_generate(&cfg, 9).unwrap();
        assert_eq!(a.samples, b.samples);
        let (c, _) = synth_generate(&cfg, 10).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn channels_use_independent_streams() {
        let one = SynthConfig { duration_s: 10.0, channels: 1, ..SynthConfig::default() };
        let two = SynthConfig { channels: 2, ..one.clone() };
        let (a, _) = synth_generate(&one, 5).unwrap();
        let (b, _) = synth_generate(&two, 5).unwrap();
        assert_eq!(a.samples.row(0), b.samples.row(0));
    }

    #[test]
    fn onsets_that_do_not_fit_are_rejected() {
        let cfg = SynthConfig {
            duration_s: 100.0,
            seizure_onsets_s: vec![70.0],
            ..SynthConfig::default()
        };
        let err = synth_generate(&cfg, 0).unwrap_err();
        assert!(err.to_string().contains("does not fit"));
        let cfg2 = SynthConfig { seizure_onsets_s: vec![-5.0], ..cfg };
        assert!(synth_generate(&cfg2, 0).is_err());
    }

    #[test]
    fn smoothing_compensation_preserves_noise_power() {
        let cfg = SynthConfig {
            duration_s: 400.0,
            channels: 1,
            noise_smoothing: 0.6,
            ..SynthConfig::default()
        };
        let (rec, _) = synth_generate(&cfg, 17).unwrap();
        let n = rec.samples.len() as f64;
        let mean = rec.samples.iter().sum::<f64>() / n;
        let var = rec.samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05, "mean drifted to {mean}");
        assert!((var - 1.0).abs() < 0.1, "variance {var} should sit near 1");
    }

    #[test]
    fn zero_amplitude_leaves_classes_indistinguishable() {
        let cfg = SynthConfig { burst_amplitude: 0.0, ..burst_test_config() };
        let auc = power_auc(&cfg, 21);
        assert!((0.4..=0.6).contains(&auc), "power AUC {auc} without bursts");
    }

    #[test]
    fn default_amplitude_makes_the_classes_separable() {
        let auc = power_auc(&burst_test_config(), 21);
        assert!(auc > 0.9, "power AUC {auc} with bursts planted");
    }
}
