//! Layered run configuration.
//!
//! Every knob has a built-in default, a config file (TOML, `--config`) can
//! override it, and a command-line flag beats both. The global seed gets one
//! extra layer: the `SCNN_SEED` environment variable sits between the flag
//! and the file, so scripted sweeps can rotate seeds without editing
//! configs. `--print-config` dumps the fully resolved result.

use std::path::Path;

use serde::{Deserialize, Serialize};

use scnn_core::cnn::TrainConfig;
use scnn_core::eeg::{SynthConfig, WindowConfig};
use scnn_core::encoder::EncoderConfig;
use scnn_core::error::{Error, Result};
use scnn_core::snn::ResetMode;

/// Name of the environment variable that overrides `seed` when set.
pub const SEED_ENV: &str = "SCNN_SEED";

/// Everything the pipeline commands read, resolved from defaults, an
/// optional config file, the environment, and command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; synthesis, splitting, weight init, and encoding all
    /// derive from it.
    pub seed: u64,
    pub synth: SynthSection,
    pub windows: WindowConfig,
    pub split: SplitSection,
    pub encoder: EncoderSection,
    pub neuron: NeuronSection,
    pub train: TrainSection,
    pub convert: ConvertSection,
    pub infer: InferSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            synth: SynthSection::default(),
            windows: WindowConfig::default(),
            split: SplitSection::default(),
            encoder: EncoderSection::default(),
            neuron: NeuronSection::default(),
            train: TrainSection::default(),
            convert: ConvertSection::default(),
            infer: InferSection::default(),
        }
    }
}

/// Recording synthesis, minus the windowing rules (those live in
/// `[windows]` so extraction and synthesis can never disagree).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub duration_s: f64,
    pub channels: usize,
    pub sample_rate: f64,
    pub seizure_onsets_s: Vec<f64>,
    pub seizure_duration_s: f64,
    pub noise_std: f64,
    pub noise_smoothing: f64,
    pub burst_amplitude: f64,
    pub burst_freq_hz: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSection {
            duration_s: d.duration_s,
            channels: d.channels,
            sample_rate: d.sample_rate,
            seizure_onsets_s: d.seizure_onsets_s,
            seizure_duration_s: d.seizure_duration_s,
            noise_std: d.noise_std,
            noise_smoothing: d.noise_smoothing,
            burst_amplitude: d.burst_amplitude,
            burst_freq_hz: d.burst_freq_hz,
        }
    }
}

impl SynthSection {
    /// Assemble the full synthesis config by pairing this section with the
    /// shared windowing rules.
    pub fn to_synth_config(&self, windows: &WindowConfig) -> SynthConfig {
        SynthConfig {
            duration_s: self.duration_s,
            channels: self.channels,
            sample_rate: self.sample_rate,
            seizure_onsets_s: self.seizure_onsets_s.clone(),
            seizure_duration_s: self.seizure_duration_s,
            noise_std: self.noise_std,
            noise_smoothing: self.noise_smoothing,
            burst_amplitude: self.burst_amplitude,
            burst_freq_hz: self.burst_freq_hz,
            windows: windows.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train_frac: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { train_frac: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSection {
    pub time_steps: usize,
    pub v_th_up: f64,
    pub v_th_down: f64,
    /// Encoder spread; omitted means the thresholds' spacing rule decides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let d = EncoderConfig::<f64>::default();
        EncoderSection {
            time_steps: d.time_steps,
            v_th_up: d.v_th_up,
            v_th_down: d.v_th_down,
            sigma: d.sigma,
        }
    }
}

impl EncoderSection {
    pub fn to_encoder_config(&self, seed: u64) -> EncoderConfig<f64> {
        EncoderConfig {
            time_steps: self.time_steps,
            v_th_up: self.v_th_up,
            v_th_down: self.v_th_down,
            sigma: self.sigma,
            seed,
        }
    }
}

/// How converted integrate-and-fire layers reset after a spike. The default
/// discards overshoot; `subtract_threshold` carries it forward, which tracks
/// the source network's activations much more closely at small step counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ResetModeChoice {
    ToRest,
    SubtractThreshold,
}

impl From<ResetModeChoice> for ResetMode {
    fn from(choice: ResetModeChoice) -> ResetMode {
        match choice {
            ResetModeChoice::ToRest => ResetMode::ToRest,
            ResetModeChoice::SubtractThreshold => ResetMode::SubtractThreshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeuronSection {
    /// Constant per-step decay toward rest; 0 is the pure accumulator.
    pub leak: f64,
    pub reset_mode: ResetModeChoice,
}

impl Default for NeuronSection {
    fn default() -> Self {
        NeuronSection { leak: 0.0, reset_mode: ResetModeChoice::ToRest }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Network description file; omitted means a stock topology sized to the
    /// training windows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
            network: None,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvertSection {
    /// Windows per class drawn from the calibration batch for threshold
    /// observation.
    pub calibration_samples: usize,
    /// Optional global threshold grid; set it to replace per-layer
    /// observation with an accuracy search over these candidates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

impl Default for ConvertSection {
    fn default() -> Self {
        ConvertSection { calibration_samples: 8, grid: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferSection {
    /// Spike-count margin the pre-seizure output must beat to win.
    pub count_threshold: i64,
}

impl Default for InferSection {
    fn default() -> Self {
        InferSection { count_threshold: 0 }
    }
}

impl RunConfig {
    /// Built-in defaults, then the config file (if given), then `SCNN_SEED`.
    /// Per-command flag overrides are applied by the commands themselves.
    pub fn resolve(path: Option<&Path>) -> Result<RunConfig> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
                })?;
                toml::from_str(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Ok(raw) = std::env::var(SEED_ENV) {
            cfg.seed = raw.trim().parse().map_err(|_| {
                Error::config(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}"))
            })?;
        }
        Ok(cfg)
    }

    /// The resolved configuration as TOML, as `--print-config` shows it.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_inherit_defaults() {
        let cfg: RunConfig =
            toml::from_str("seed = 7\n[windows]\nwindow_s = 4.0\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.windows.window_s, 4.0);
        // Everything unnamed stays at its built-in value.
        assert_eq!(cfg.windows.pil_s, WindowConfig::default().pil_s);
        assert_eq!(cfg.train.epochs, TrainSection::default().epochs);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("sede = 7\n").unwrap_err();
        assert!(err.to_string().contains("sede"));
    }

    #[test]
    fn reset_mode_uses_snake_case_names() {
        let cfg: RunConfig =
            toml::from_str("[neuron]\nreset_mode = \"subtract_threshold\"\n").unwrap();
        assert_eq!(cfg.neuron.reset_mode, ResetModeChoice::SubtractThreshold);
    }
}
