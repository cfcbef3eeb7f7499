//! `scnn opcount` — static operation, memory, and dataflow accounting for a
//! network in both float and spiking modes.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use scnn_core::complexity::{static_op_counts, Mode, OpCountReport};
use scnn_core::error::Result;
use scnn_core::network::NetworkSpec;

use crate::commands::override_with;
use crate::config::RunConfig;
use crate::util::{at_path, atomic_write};

#[derive(Debug, Args)]
pub struct OpcountArgs {
    /// Network description (JSON); defaults to the stock topology for
    /// --input-shape
    #[arg(long)]
    pub network: Option<PathBuf>,

    /// Input planes,height,width for the stock topology
    #[arg(long, value_delimiter = ',', default_value = "1,2,256")]
    pub input_shape: Vec<usize>,

    /// Spiking step count the estimates assume
    #[arg(long)]
    pub time_steps: Option<usize>,

    /// Write the report here instead of stdout (JSON)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BothModes {
    cnn: OpCountReport,
    snn: OpCountReport,
}

pub fn run(args: OpcountArgs, mut cfg: RunConfig) -> Result<()> {
    override_with(&mut cfg.encoder.time_steps, args.time_steps);

    let spec = match &args.network {
        Some(path) => NetworkSpec::load(path).map_err(|e| at_path(e, path))?,
        None => {
            let s = &args.input_shape;
            if s.len() != 3 {
                return Err(scnn_core::error::Error::config(format!(
                    "--input-shape needs exactly 3 values (planes,height,width), got {}",
                    s.len()
                )));
            }
            NetworkSpec::default_topology([s[0], s[1], s[2]])?
        }
    };

    let t = cfg.encoder.time_steps;
    let report = BothModes {
        cnn: static_op_counts(&spec, Mode::Cnn, t)?,
        snn: static_op_counts(&spec, Mode::Snn, t)?,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &args.out {
        Some(path) => {
            atomic_write(path, json.as_bytes())?;
            println!("wrote {}", path.display());
        }
        None => print!("{json}"),
    }
    Ok(())
}
