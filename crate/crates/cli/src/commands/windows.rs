//! `scnn windows` — label a recording's timeline, cut it into fixed-width
//! windows, and split them into seeded train/test batches.

use std::path::{Path, PathBuf};

use clap::Args;

use scnn_core::eeg::{
    extract_windows, label_intervals, read_annotations_csv, read_edf, split_train_test,
    write_windows_batch_to, Label, WindowSample,
};
use scnn_core::error::Result;

use crate::commands::override_with;
use crate::config::RunConfig;
use crate::util::{at_path, atomic_write};

#[derive(Debug, Args)]
pub struct WindowsArgs {
    /// Input recording (EDF)
    #[arg(long, default_value = "out/recording.edf")]
    pub edf: PathBuf,

    /// Input seizure annotations (CSV: onset_s,offset_s)
    #[arg(long, default_value = "out/annotations.csv")]
    pub annotations: PathBuf,

    /// Output training batch
    #[arg(long, default_value = "out/train.wndb")]
    pub train_out: PathBuf,

    /// Output held-out batch
    #[arg(long, default_value = "out/test.wndb")]
    pub test_out: PathBuf,

    /// Window length in seconds
    #[arg(long)]
    pub window_s: Option<f64>,

    /// Stride between pre-seizure windows, seconds
    #[arg(long)]
    pub preictal_stride: Option<f64>,

    /// Stride between background windows, seconds
    #[arg(long)]
    pub interictal_stride: Option<f64>,

    /// Labeled pre-seizure interval length, seconds
    #[arg(long)]
    pub pil: Option<f64>,

    /// Horizon between that interval and the onset, seconds
    #[arg(long)]
    pub sph: Option<f64>,

    /// Clearance between background and any seizure, seconds
    #[arg(long)]
    pub lead_gap: Option<f64>,

    /// Fraction of windows that go to the training batch
    #[arg(long)]
    pub train_frac: Option<f64>,
}

pub fn run(args: WindowsArgs, mut cfg: RunConfig) -> Result<()> {
    override_with(&mut cfg.windows.window_s, args.window_s);
    override_with(&mut cfg.windows.preictal_stride_s, args.preictal_stride);
    override_with(&mut cfg.windows.interictal_stride_s, args.interictal_stride);
    override_with(&mut cfg.windows.pil_s, args.pil);
    override_with(&mut cfg.windows.sph_s, args.sph);
    override_with(&mut cfg.windows.lead_gap_s, args.lead_gap);
    override_with(&mut cfg.split.train_frac, args.train_frac);

    let recording = read_edf(&args.edf).map_err(|e| at_path(e, &args.edf))?;
    let annotations =
        read_annotations_csv(&args.annotations).map_err(|e| at_path(e, &args.annotations))?;

    let plan = label_intervals(recording.duration_s(), &annotations, &cfg.windows)?;
    let samples = extract_windows(&recording, &plan, &cfg.windows)?;
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    let preictal = labels.iter().filter(|&&l| l == Label::Preictal).count();
    println!(
        "extracted {} pre-seizure + {} background windows",
        preictal,
        samples.len() - preictal,
    );

    let (train_idx, test_idx) = split_train_test(&labels, cfg.split.train_frac, cfg.seed)?;
    write_subset(&samples, &train_idx, &args.train_out)?;
    write_subset(&samples, &test_idx, &args.test_out)?;
    Ok(())
}

fn write_subset(samples: &[WindowSample<f64>], idx: &[usize], path: &Path) -> Result<()> {
    let subset: Vec<WindowSample<f64>> = idx.iter().map(|&i| samples[i].clone()).collect();
    let mut bytes = Vec::new();
    write_windows_batch_to(&mut bytes, &subset).map_err(|e| at_path(e, path))?;
    atomic_write(path, &bytes)?;
    let preictal = subset.iter().filter(|s| s.label == Label::Preictal).count();
    println!(
        "wrote {} ({} windows: {} pre-seizure, {} background)",
        path.display(),
        subset.len(),
        preictal,
        subset.len() - preictal,
    );
    Ok(())
}
