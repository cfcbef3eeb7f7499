//! `scnn convert` — map trained float weights onto a spiking copy of the
//! network and calibrate its firing thresholds.
//!
//! Threshold observation wants to see both classes: windows are drawn from
//! the calibration batch evenly per class, in batch order, so re-runs pick
//! the same windows.

use std::path::PathBuf;

use clap::Args;

use scnn_core::cnn::Cnn;
use scnn_core::convert::{calibrate_grid, calibrate_max_activation, map_weights};
use scnn_core::eeg::{read_windows_batch, window_input, Label, WindowSample};
use scnn_core::encoder::{encode, SpikeTrain};
use scnn_core::error::Result;
use scnn_core::weights::WeightContainer;

use crate::commands::override_with;
use crate::config::{ResetModeChoice, RunConfig};
use crate::util::{at_path, atomic_write};

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Network description (JSON); defaults to a stock topology sized to
    /// the calibration batch
    #[arg(long)]
    pub network: Option<PathBuf>,

    /// Trained weights
    #[arg(long, default_value = "out/cnn.scnw")]
    pub weights: PathBuf,

    /// Window batch to calibrate thresholds on
    #[arg(long, default_value = "out/train.wndb")]
    pub windows: PathBuf,

    /// Output spiking model
    #[arg(long, default_value = "out/model.scnm")]
    pub model_out: PathBuf,

    /// Reset behavior of the spiking neurons
    #[arg(long, value_enum)]
    pub reset_mode: Option<ResetModeChoice>,

    /// Constant per-step membrane decay toward rest
    #[arg(long)]
    pub leak: Option<f64>,

    /// Windows per class used for calibration
    #[arg(long)]
    pub calibration_samples: Option<usize>,

    /// Global threshold candidates, comma-separated; replaces per-layer
    /// observation with an accuracy search
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,

    /// Spike-count margin for the accuracy search's decisions
    #[arg(long)]
    pub count_threshold: Option<i64>,

    /// Encoder steps per calibration window
    #[arg(long)]
    pub time_steps: Option<usize>,
}

/// Up to `per_class` windows of each class, in batch order.
fn balanced(samples: &[WindowSample<f64>], per_class: usize) -> Vec<&WindowSample<f64>> {
    let mut picked = Vec::new();
    for class in [Label::Interictal, Label::Preictal] {
        picked.extend(samples.iter().filter(|s| s.label == class).take(per_class));
    }
    picked
}

pub fn run(args: ConvertArgs, mut cfg: RunConfig) -> Result<()> {
    override_with(&mut cfg.neuron.reset_mode, args.reset_mode);
    override_with(&mut cfg.neuron.leak, args.leak);
    override_with(&mut cfg.convert.calibration_samples, args.calibration_samples);
    override_with(&mut cfg.convert.grid, args.grid.map(Some));
    override_with(&mut cfg.infer.count_threshold, args.count_threshold);
    override_with(&mut cfg.encoder.time_steps, args.time_steps);

    let samples: Vec<WindowSample<f64>> =
        read_windows_batch(&args.windows).map_err(|e| at_path(e, &args.windows))?;
    let spec = super::train::resolve_network(args.network.as_ref(), &cfg, &samples)?;
    let weights =
        WeightContainer::<f64>::load(&args.weights).map_err(|e| at_path(e, &args.weights))?;
    let cnn = Cnn::new(spec, weights)?;

    let mut model = map_weights(&cnn)?;
    for neuron_cfg in &mut model.if_cfgs {
        neuron_cfg.leak = cfg.neuron.leak;
        neuron_cfg.reset_mode = cfg.neuron.reset_mode.into();
    }

    let enc = cfg.encoder.to_encoder_config(cfg.seed);
    let picked = balanced(&samples, cfg.convert.calibration_samples);
    match &cfg.convert.grid {
        Some(grid) => {
            let labeled: Vec<(SpikeTrain, usize)> = picked
                .iter()
                .map(|s| Ok((encode(&window_input(s), &enc)?, s.label.index())))
                .collect::<Result<_>>()?;
            let search = calibrate_grid(&mut model, &labeled, grid, cfg.infer.count_threshold)?;
            for (candidate, acc) in grid.iter().zip(&search.accuracies) {
                println!("threshold {candidate}: accuracy {acc:.4}");
            }
            println!("chose global threshold {}", search.chosen);
        }
        None => {
            let trains: Vec<SpikeTrain> = picked
                .iter()
                .map(|s| encode(&window_input(s), &enc))
                .collect::<Result<_>>()?;
            let report = calibrate_max_activation(&mut model, &trains)?;
            for (k, v_th) in report.v_th.iter().enumerate() {
                let note = if report.fallback_layers.contains(&k) {
                    "  (no positive drive seen; kept at 1)"
                } else {
                    ""
                };
                println!("layer {k}: v_th {v_th:.6}{note}");
            }
        }
    }

    let mut bytes = Vec::new();
    model.write_to(&mut bytes).map_err(|e| at_path(e, &args.model_out))?;
    atomic_write(&args.model_out, &bytes)?;
    println!("wrote {}", args.model_out.display());
    Ok(())
}
