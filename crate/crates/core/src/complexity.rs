//! Computational-cost accounting: dataflow estimates, op counts, memory, and
//! a figure of merit for comparing classifiers.
//!
//! Two cost models are reported side by side:
//!
//! * `t_cnn` — float dataflow estimate over the conv layers:
//!   `sum M_H*M_W*(K_H*K_W + K_H + K_W - 1)*C_in*C_out`, scaled by a float
//!   overhead factor (default 1.1).
//! * `t_scnn` — accumulate-only spiking dataflow over the same layers:
//!   `sum M_H*M_W*(K_H + K_W - 1)*C_in*C_out`, normalized by the reference
//!   step count `T_REF = 10` and scaled linearly in the actual step count:
//!   `base / T_REF * (T / T_REF)`.
//!
//! Op counts use one fixed convention, shared between the static formulas
//! here and the dynamic instrumentation in the float and spiking engines so
//! the two agree exactly:
//!
//! * conv/fc, float mode: one MUL and one ADD per weight tap per output
//!   element (the accumulator starts at the bias, so the bias add replaces
//!   the first tap's sum);
//! * conv/fc, spiking mode: the same tap count in ADDs per time step — a tap
//!   is one conditional accumulate slot, counted whether or not the spike
//!   fired — and zero MULs;
//! * max-pool comparisons count as ADDs in float mode; pooling in the spiking
//!   path is bitwise OR and contributes nothing;
//! * activation and threshold comparisons are not counted in either mode;
//! * index arithmetic is never counted — these are datapath op counts.
//!
//! `memory_bits` charges 32 bits per weight/bias in both modes, plus
//! activation storage: 32 bits per activation element for the float network,
//! 1 bit per spike (element x time step) for the spiking one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{Layer, NetworkSpec};

/// Reference step count that `t_scnn` is normalized against.
pub const T_REF: f64 = 10.0;

/// Default float-operation overhead factor in `t_cnn`.
pub const DEFAULT_FLOAT_FACTOR: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cnn,
    Snn,
}

/// ADD/MUL counts for one layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LayerOps {
    pub adds: u64,
    pub muls: u64,
}

/// Dynamic instruction counters, one slot per layer of the executed spec.
///
/// The engines increment these as they run; [`static_layer_ops`] predicts the
/// same numbers from the topology alone.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpTally {
    pub layers: Vec<LayerOps>,
}

impl OpTally {
    pub fn for_spec(spec: &NetworkSpec) -> Self {
        OpTally { layers: vec![LayerOps::default(); spec.layers.len()] }
    }

    pub fn add(&mut self, layer: usize, n: u64) {
        self.layers[layer].adds += n;
    }

    pub fn mul(&mut self, layer: usize, n: u64) {
        self.layers[layer].muls += n;
    }

    pub fn total_adds(&self) -> u64 {
        self.layers.iter().map(|l| l.adds).sum()
    }

    pub fn total_muls(&self) -> u64 {
        self.layers.iter().map(|l| l.muls).sum()
    }
}

/// Float dataflow estimate over the conv layers (fully-connected layers do
/// not enter this estimate).
pub fn t_cnn(spec: &NetworkSpec, float_factor: f64) -> Result<f64> {
    if !(float_factor.is_finite() && float_factor > 0.0) {
        return Err(Error::config(format!("float_factor must be positive, got {float_factor}")));
    }
    Ok(conv_terms(spec, |kh, kw| kh * kw + kh + kw - 1)? as f64 * float_factor)
}

/// Spiking dataflow estimate over the conv layers at `time_steps` steps.
/// Linear in `time_steps`; equals `base / T_REF` at the reference step count.
pub fn t_scnn(spec: &NetworkSpec, time_steps: usize) -> Result<f64> {
    if time_steps == 0 {
        return Err(Error::config("time_steps must be >= 1"));
    }
    Ok(conv_terms(spec, |kh, kw| kh + kw - 1)? as f64 / T_REF * (time_steps as f64 / T_REF))
}

fn conv_terms(spec: &NetworkSpec, kernel_term: impl Fn(u64, u64) -> u64) -> Result<u64> {
    let shapes = spec.validate()?;
    let mut sum = 0u64;
    for (layer, shape) in spec.layers.iter().zip(&shapes) {
        if let Layer::Conv1d { kernel_h, kernel_w, c_in, c_out, .. } = *layer {
            let [_, mh, mw] = *shape;
            sum += (mh * mw) as u64
                * kernel_term(kernel_h as u64, kernel_w as u64)
                * (c_in * c_out) as u64;
        }
    }
    Ok(sum)
}

/// Percentage reduction of `t_scnn` relative to `t_cnn`.
pub fn reduction_percent(t_cnn: f64, t_scnn: f64) -> Result<f64> {
    if !(t_cnn > 0.0) {
        return Err(Error::config(format!(
            "reduction is undefined for non-positive t_cnn ({t_cnn})"
        )));
    }
    Ok(100.0 * (1.0 - t_scnn / t_cnn))
}

/// Figure of merit: `(sen + auc - fpr) / (2 * (10*mul + add + mem))`.
///
/// `sen`, `auc` and `fpr` are fractions in `[0, 1]`; passing percentages is
/// an error. `mul`/`add`/`mem` are raw op and bit counts.
pub fn fom(sen: f64, auc: f64, fpr: f64, mul: f64, add: f64, mem: f64) -> Result<f64> {
    for (name, v) in [("sen", sen), ("auc", auc), ("fpr", fpr)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::config(format!(
                "{name} = {v} is outside [0, 1]; the figure of merit takes fractions, not percentages"
            )));
        }
    }
    for (name, v) in [("mul", mul), ("add", add), ("mem", mem)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::config(format!("{name} must be a non-negative count, got {v}")));
        }
    }
    let denom = 2.0 * (10.0 * mul + add + mem);
    if denom <= 0.0 {
        return Err(Error::config("figure-of-merit denominator is zero"));
    }
    Ok((sen + auc - fpr) / denom)
}

/// Per-layer static op counts under the convention documented at module
/// level. In `Snn` mode, `Relu` entries are treated as absent (they have no
/// spiking counterpart) and report zero.
pub fn static_layer_ops(spec: &NetworkSpec, mode: Mode, time_steps: usize) -> Result<Vec<LayerOps>> {
    if time_steps == 0 {
        return Err(Error::config("time_steps must be >= 1"));
    }
    let shapes = spec.validate()?;
    let mut out = Vec::with_capacity(spec.layers.len());
    for (layer, shape) in spec.layers.iter().zip(&shapes) {
        let outs = shape.iter().product::<usize>() as u64;
        let ops = match *layer {
            Layer::Conv1d { kernel_h, kernel_w, c_in, .. } => {
                let taps = (kernel_h * kernel_w * c_in) as u64;
                weighted_ops(outs * taps, mode, time_steps)
            }
            Layer::FullyConnected { in_dim, .. } => {
                weighted_ops(outs * in_dim as u64, mode, time_steps)
            }
            Layer::MaxPool1d { window, .. } => match mode {
                Mode::Cnn => LayerOps { adds: outs * (window as u64 - 1), muls: 0 },
                Mode::Snn => LayerOps::default(),
            },
            Layer::Relu => LayerOps::default(),
        };
        out.push(ops);
    }
    Ok(out)
}

fn weighted_ops(slots: u64, mode: Mode, time_steps: usize) -> LayerOps {
    match mode {
        Mode::Cnn => LayerOps { adds: slots, muls: slots },
        Mode::Snn => LayerOps { adds: slots * time_steps as u64, muls: 0 },
    }
}

/// Total weights + biases implied by the spec.
pub fn weight_count(spec: &NetworkSpec) -> Result<u64> {
    spec.validate()?;
    let mut count = 0u64;
    for layer in &spec.layers {
        count += match *layer {
            Layer::Conv1d { kernel_h, kernel_w, c_in, c_out, .. } => {
                (c_out * c_in * kernel_h * kernel_w + c_out) as u64
            }
            Layer::FullyConnected { in_dim, out_dim } => (out_dim * in_dim + out_dim) as u64,
            _ => 0,
        };
    }
    Ok(count)
}

/// Aggregated cost report for one topology at one step count.
#[derive(Clone, Debug, Serialize)]
pub struct OpCountReport {
    pub mode: Mode,
    pub time_steps: usize,
    pub weight_count: u64,
    pub adds: u64,
    pub muls: u64,
    pub memory_bits: u64,
    pub t_cnn: f64,
    pub t_scnn: f64,
    /// `100 * (1 - t_scnn / t_cnn)`, the literal dataflow reading.
    pub reduction_percent: f64,
    /// Same ratio with the float side weighted by its 32-bit word width,
    /// for readers who count bit traffic rather than values.
    pub reduction_percent_bit_weighted: f64,
}

/// Build the cost report for `spec` in the given mode.
///
/// In `Snn` mode, `Relu` entries are elided internally (integrate-and-fire
/// activation subsumes them), so the same network file serves both modes.
pub fn static_op_counts(spec: &NetworkSpec, mode: Mode, time_steps: usize) -> Result<OpCountReport> {
    let effective = match mode {
        Mode::Cnn => spec.clone(),
        Mode::Snn => spec.without_relu(),
    };
    let per_layer = static_layer_ops(&effective, mode, time_steps)?;
    let adds = per_layer.iter().map(|l| l.adds).sum();
    let muls = per_layer.iter().map(|l| l.muls).sum();

    let shapes = effective.validate()?;
    let activation_elems: u64 = effective.input_shape.iter().product::<usize>() as u64
        + shapes.iter().map(|s| s.iter().product::<usize>() as u64).sum::<u64>();
    let weights = weight_count(&effective)?;
    let memory_bits = match mode {
        Mode::Cnn => 32 * weights + 32 * activation_elems,
        Mode::Snn => 32 * weights + time_steps as u64 * activation_elems,
    };

    let tc = t_cnn(spec, DEFAULT_FLOAT_FACTOR)?;
    let ts = t_scnn(spec, time_steps)?;
    let (reduction, reduction_bits) = if tc > 0.0 {
        (reduction_percent(tc, ts)?, reduction_percent(32.0 * tc, ts)?)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(OpCountReport {
        mode,
        time_steps,
        weight_count: weights,
        adds,
        muls,
        memory_bits,
        t_cnn: tc,
        t_scnn: ts,
        reduction_percent: reduction,
        reduction_percent_bit_weighted: reduction_bits,
    })
}

impl std::fmt::Display for OpCountReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "mode = {}", match self.mode { Mode::Cnn => "cnn", Mode::Snn => "snn" })?;
        writeln!(f, "time_steps = {}", self.time_steps)?;
        writeln!(f, "weight_count = {}", self.weight_count)?;
        writeln!(f, "adds = {}", self.adds)?;
        writeln!(f, "muls = {}", self.muls)?;
        writeln!(f, "memory_bits = {}", self.memory_bits)?;
        writeln!(f, "t_cnn = {}", self.t_cnn)?;
        writeln!(f, "t_scnn = {}", self.t_scnn)?;
        writeln!(f, "reduction_percent = {}", self.reduction_percent)?;
        write!(f, "reduction_percent_bit_weighted = {}", self.reduction_percent_bit_weighted)
    }
}
