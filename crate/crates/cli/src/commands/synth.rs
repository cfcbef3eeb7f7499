//! `scnn synth` — generate a seeded synthetic EEG recording with planted
//! pre-seizure oscillations, plus its seizure annotations.

use std::path::PathBuf;

use clap::Args;

use scnn_core::eeg::{synth_generate, write_annotations_csv_to, write_edf_to};
use scnn_core::error::Result;

use crate::commands::override_with;
use crate::config::RunConfig;
use crate::util::{at_path, atomic_write};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output recording (16-bit EDF)
    #[arg(long, default_value = "out/recording.edf")]
    pub edf: PathBuf,

    /// Output seizure annotations (CSV: onset_s,offset_s)
    #[arg(long, default_value = "out/annotations.csv")]
    pub annotations: PathBuf,

    /// Recording length in seconds
    #[arg(long)]
    pub duration: Option<f64>,

    /// Number of channels
    #[arg(long)]
    pub channels: Option<usize>,

    /// Samples per second
    #[arg(long)]
    pub sample_rate: Option<f64>,

    /// Seizure onsets in seconds, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub onsets: Option<Vec<f64>>,

    /// Length of each seizure in seconds
    #[arg(long)]
    pub seizure_duration: Option<f64>,

    /// Peak amplitude of the planted pre-seizure oscillation
    #[arg(long)]
    pub burst_amplitude: Option<f64>,
}

pub fn run(args: SynthArgs, mut cfg: RunConfig) -> Result<()> {
    override_with(&mut cfg.synth.duration_s, args.duration);
    override_with(&mut cfg.synth.channels, args.channels);
    override_with(&mut cfg.synth.sample_rate, args.sample_rate);
    override_with(&mut cfg.synth.seizure_onsets_s, args.onsets);
    override_with(&mut cfg.synth.seizure_duration_s, args.seizure_duration);
    override_with(&mut cfg.synth.burst_amplitude, args.burst_amplitude);

    let synth_cfg = cfg.synth.to_synth_config(&cfg.windows);
    let (recording, annotations) = synth_generate(&synth_cfg, cfg.seed)?;

    let edf_bytes = write_edf_to(&recording)?;
    atomic_write(&args.edf, &edf_bytes)?;

    let mut csv_bytes = Vec::new();
    write_annotations_csv_to(&mut csv_bytes, &annotations)
        .map_err(|e| at_path(e, &args.annotations))?;
    atomic_write(&args.annotations, &csv_bytes)?;

    println!(
        "wrote {} ({} s, {} channels @ {} Hz)",
        args.edf.display(),
        recording.duration_s(),
        recording.channels(),
        recording.sample_rate,
    );
    println!(
        "wrote {} ({} seizure(s))",
        args.annotations.display(),
        annotations.events.len(),
    );
    Ok(())
}
