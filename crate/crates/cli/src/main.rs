//! `scnn` — synthetic EEG seizure-prediction pipeline around a spiking
//! network converted from a trained float network.
//!
//! The subcommands chain into a pipeline: `synth` makes a recording,
//! `windows` cuts and splits it, `train` fits the float network, `convert`
//! produces the spiking model, `infer` writes predictions, `evaluate` turns
//! them into metrics, and `opcount` reports the cost model. Every stage is
//! seeded and deterministic: the same inputs and settings write the same
//! bytes.
//!
//! Exit codes: 0 success, 1 usage or configuration errors, 2 data and
//! format errors, 3 numeric divergence during training.

mod commands;
mod config;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scnn_core::error::Result;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "scnn",
    version,
    about = "Spiking-network EEG seizure prediction pipeline",
    after_help = "Settings resolve flag-first: a command-line flag beats the \
                  SCNN_SEED environment variable (seed only), which beats the \
                  --config file, which beats the built-in defaults."
)]
struct Cli {
    /// Run configuration file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the resolved configuration as TOML and exit
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic EEG recording and its seizure annotations
    Synth(commands::synth::SynthArgs),
    /// Cut a recording into labeled windows and split train/test
    Windows(commands::windows::WindowsArgs),
    /// Train the float reference network on a window batch
    Train(commands::train::TrainArgs),
    /// Map trained weights onto a spiking model and calibrate it
    Convert(commands::convert::ConvertArgs),
    /// Classify a window batch with a spiking model
    Infer(commands::infer::InferArgs),
    /// Compute metrics from a predictions file
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Report operation counts and dataflow estimates for a network
    Opcount(commands::opcount::OpcountArgs),
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    match cli.command {
        Command::Synth(args) => commands::synth::run(args, cfg),
        Command::Windows(args) => commands::windows::run(args, cfg),
        Command::Train(args) => commands::train::run(args, cfg),
        Command::Convert(args) => commands::convert::run(args, cfg),
        Command::Infer(args) => commands::infer::run(args, cfg),
        Command::Evaluate(args) => commands::evaluate::run(args, cfg),
        Command::Opcount(args) => commands::opcount::run(args, cfg),
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (`scnn evaluate | head`)
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap already formats help/version/usage output; keep its text
            // but pin the exit codes: informational exits succeed, usage
            // mistakes exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(util::exit_code(&e) as u8)
        }
    }
}
