//! `scnn infer` — encode a window batch into spike trains, run the spiking
//! model, and write one prediction row per window.
//!
//! The CSV columns are `sample_id,label,count_p,count_i,score,prediction`:
//! the window's index in the batch, its true class (1 pre-seizure, 0
//! background), the two output neurons' spike totals, the signed margin
//! `(count_p - count_i) / T`, and the decided class.

use std::path::PathBuf;

use clap::Args;

use scnn_core::eeg::{read_windows_batch, window_input, WindowSample};
use scnn_core::encoder::encode;
use scnn_core::error::{Error, Result};
use scnn_core::snn::{run_network, SnnModel, CLASS_INTERICTAL, CLASS_PREICTAL};

use crate::commands::override_with;
use crate::config::RunConfig;
use crate::util::{at_path, atomic_write};

pub const PREDICTION_HEADER: [&str; 6] =
    ["sample_id", "label", "count_p", "count_i", "score", "prediction"];

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Spiking model
    #[arg(long, default_value = "out/model.scnm")]
    pub model: PathBuf,

    /// Window batch to classify
    #[arg(long, default_value = "out/test.wndb")]
    pub windows: PathBuf,

    /// Output predictions (CSV)
    #[arg(long, default_value = "out/predictions.csv")]
    pub predictions_out: PathBuf,

    /// Encoder steps per window
    #[arg(long)]
    pub time_steps: Option<usize>,

    /// Spike-count margin the pre-seizure output must beat
    #[arg(long)]
    pub count_threshold: Option<i64>,
}

pub fn run(args: InferArgs, mut cfg: RunConfig) -> Result<()> {
    override_with(&mut cfg.encoder.time_steps, args.time_steps);
    override_with(&mut cfg.infer.count_threshold, args.count_threshold);

    let model = SnnModel::<f64>::load(&args.model).map_err(|e| at_path(e, &args.model))?;
    let samples: Vec<WindowSample<f64>> =
        read_windows_batch(&args.windows).map_err(|e| at_path(e, &args.windows))?;
    if samples.is_empty() {
        return Err(at_path(Error::invalid_input("window batch is empty"), &args.windows));
    }

    let enc = cfg.encoder.to_encoder_config(cfg.seed);
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(PREDICTION_HEADER).map_err(csv_err)?;
    let mut correct = 0usize;
    for (sample_id, sample) in samples.iter().enumerate() {
        let train = encode(&window_input(sample), &enc)?;
        let counts = run_network(&model, &train)?;
        let prediction = counts.decide(cfg.infer.count_threshold)?;
        if prediction == sample.label.index() {
            correct += 1;
        }
        writer
            .write_record([
                sample_id.to_string(),
                sample.label.index().to_string(),
                counts.counts[CLASS_PREICTAL].to_string(),
                counts.counts[CLASS_INTERICTAL].to_string(),
                counts.score()?.to_string(),
                prediction.to_string(),
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::format(e.to_string()))?;
    atomic_write(&args.predictions_out, &bytes)?;

    println!(
        "accuracy {:.4} ({}/{})",
        correct as f64 / samples.len() as f64,
        correct,
        samples.len(),
    );
    println!("wrote {} ({} windows)", args.predictions_out.display(), samples.len());
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::format(format!("prediction CSV: {e}"))
}
