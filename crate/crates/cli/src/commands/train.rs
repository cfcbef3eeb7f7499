//! `scnn train` — fit the float reference network on a window batch.
//!
//! Windows are fed to the network as per-sample expected spiking rates, the
//! same representation their spike trains converge to, so the trained
//! weights transfer to the spiking copy without a units mismatch.

use std::path::PathBuf;

use clap::Args;
use ndarray::Array3;

use scnn_core::cnn::{argmax, train_sgd};
use scnn_core::eeg::{read_windows_batch, window_input, WindowSample};
use scnn_core::encoder::expected_rate;
use scnn_core::error::{Error, Result};
use scnn_core::network::NetworkSpec;

use crate::commands::override_with;
use crate::config::RunConfig;
use crate::util::{at_path, atomic_write};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input training batch
    #[arg(long, default_value = "out/train.wndb")]
    pub windows: PathBuf,

    /// Network description (JSON); defaults to a stock topology sized to
    /// the batch
    #[arg(long)]
    pub network: Option<PathBuf>,

    /// Output weights
    #[arg(long, default_value = "out/cnn.scnw")]
    pub weights_out: PathBuf,

    /// Training epochs
    #[arg(long)]
    pub epochs: Option<usize>,

    /// SGD learning rate
    #[arg(long)]
    pub learning_rate: Option<f64>,

    /// Minibatch size
    #[arg(long)]
    pub batch_size: Option<usize>,

    /// Encoder steps behind the rate representation
    #[arg(long)]
    pub time_steps: Option<usize>,
}

/// Load the network description named by flag or config, or build the stock
/// topology for the batch's window shape.
pub fn resolve_network(
    flag: Option<&PathBuf>,
    cfg: &RunConfig,
    samples: &[WindowSample<f64>],
) -> Result<NetworkSpec> {
    let configured = cfg.train.network.as_ref().map(PathBuf::from);
    if let Some(path) = flag.cloned().or(configured) {
        return NetworkSpec::load(&path).map_err(|e| at_path(e, &path));
    }
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid_input("window batch is empty"))?;
    let (c, w) = first.data.dim();
    NetworkSpec::default_topology([1, c, w])
}

pub fn run(args: TrainArgs, mut cfg: RunConfig) -> Result<()> {
    override_with(&mut cfg.train.epochs, args.epochs);
    override_with(&mut cfg.train.learning_rate, args.learning_rate);
    override_with(&mut cfg.train.batch_size, args.batch_size);
    override_with(&mut cfg.encoder.time_steps, args.time_steps);

    let samples: Vec<WindowSample<f64>> =
        read_windows_batch(&args.windows).map_err(|e| at_path(e, &args.windows))?;
    let spec = resolve_network(args.network.as_ref(), &cfg, &samples)?;

    let enc = cfg.encoder.to_encoder_config(cfg.seed);
    let data: Vec<(Array3<f64>, usize)> = samples
        .iter()
        .map(|s| Ok((expected_rate(&window_input(s), &enc)?, s.label.index())))
        .collect::<Result<_>>()?;

    let train_cfg = cfg.train.to_train_config(cfg.seed);
    let (cnn, losses) = train_sgd(&spec, &data, &train_cfg)?;
    for (epoch, loss) in losses.iter().enumerate() {
        println!("epoch {}/{}  loss {loss:.6}", epoch + 1, losses.len());
    }

    let correct = data
        .iter()
        .filter(|(input, label)| {
            argmax(&cnn.forward(input).expect("training input stays valid")) == *label
        })
        .count();
    println!(
        "training accuracy {:.4} ({}/{})",
        correct as f64 / data.len() as f64,
        correct,
        data.len(),
    );

    let mut bytes = Vec::new();
    cnn.weights.write_to(&mut bytes).map_err(|e| at_path(e, &args.weights_out))?;
    atomic_write(&args.weights_out, &bytes)?;
    println!("wrote {}", args.weights_out.display());
    Ok(())
}
