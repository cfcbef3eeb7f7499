//! Turning a trained float network into a spiking one: weight mapping,
//! threshold calibration, and the model file.
//!
//! Mapping copies the float weights bit for bit. The activation layers are
//! dropped from the topology — thresholding inside the integrate-and-fire
//! neurons plays their role — and the remaining layer indices close ranks.
//! Calibration then chooses firing thresholds; until it runs, every layer
//! sits at the default threshold of 1.
//!
//! # Model file layout (little-endian)
//!
//! ```text
//! magic            4 bytes   "SCNM"
//! version          u16       currently 1
//! source           u32       fingerprint of the float topology
//! spec length      u32       byte length of the JSON that follows
//! spec             ...       activation-free topology as JSON
//! weights          ...       embedded weight container (its own format)
//! config count     u16       one per weighted layer, in layer order
//! per config:
//!   v_th           f64
//!   v_rest         f64
//!   leak           f64
//!   reset mode     u8        0 = to rest, 1 = subtract threshold
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cnn::Cnn;
use crate::encoder::SpikeTrain;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::scalar::Scalar;
use crate::snn::{run_network, run_network_observing, IfConfig, ResetMode, SnnModel};
use crate::weights::{Cursor, LayerWeights, WeightContainer};

const MODEL_MAGIC: &[u8; 4] = b"SCNM";
pub const MODEL_FORMAT_VERSION: u16 = 1;

/// Map a trained float network onto the spiking engine.
///
/// The returned model carries the same weight values, an activation-free
/// copy of the topology with layer indices renumbered, and default neuron
/// configs awaiting calibration.
pub fn map_weights<S: Scalar>(cnn: &Cnn<S>) -> Result<SnnModel<S>> {
    cnn.weights.check_against(&cnn.spec)?;
    let spec = cnn.spec.without_relu();
    spec.validate()?;

    // Old layer index -> new index once the activation layers are gone.
    let mut remap = vec![usize::MAX; cnn.spec.layers.len()];
    let mut next = 0;
    for (i, layer) in cnn.spec.layers.iter().enumerate() {
        if !matches!(layer, crate::network::Layer::Relu) {
            remap[i] = next;
            next += 1;
        }
    }

    let layers: Vec<LayerWeights<S>> = cnn
        .weights
        .layers
        .iter()
        .map(|l| LayerWeights {
            layer_index: remap[l.layer_index],
            dims: l.dims.clone(),
            weights: l.weights.clone(),
            biases: l.biases.clone(),
        })
        .collect();
    let weights = WeightContainer { fingerprint: spec.fingerprint(), layers };
    weights.check_against(&spec)?;

    let n_weighted = spec.weighted_layers().len();
    let model = SnnModel {
        spec,
        weights,
        if_cfgs: vec![IfConfig::default(); n_weighted],
        source_fingerprint: cnn.spec.fingerprint(),
    };
    model.validate()?;
    Ok(model)
}

/// What max-activation calibration did to each layer.
#[derive(Clone, Debug)]
pub struct CalibrationReport<S> {
    /// Chosen threshold per weighted layer.
    pub v_th: Vec<S>,
    /// Per weighted layer, the largest time-averaged input current any
    /// output position saw on a single calibration sample.
    pub max_current: Vec<S>,
    /// Factor the layer's biases were multiplied by (the reciprocal of the
    /// product of upstream thresholds; 1 for the first layer).
    pub bias_scale: Vec<S>,
    /// Layers whose observed maximum was not positive; they kept the default
    /// threshold of 1 and should be treated as a calibration warning.
    pub fallback_layers: Vec<usize>,
}

/// Set each layer's threshold to the largest weighted input it sees on the
/// calibration set, where a sample's weighted input at an output position is
/// its drive averaged over the sample's time steps.
///
/// The average, not the single-step peak, is what a firing rate integrates:
/// per-step currents on binary inputs swing with chance tap coincidences,
/// and taking their maximum would scale thresholds to that noise ceiling —
/// observed factors of 3–4 above the signal scale on deeper layers — pushing
/// firing rates toward zero. Upstream layers run their real spiking dynamics
/// during observation, so pooling and discretization effects upstream are
/// folded into the measured scale.
///
/// Layers are calibrated front to back, one pass over the data per weighted
/// layer, so every pass observes layer `k` with layers before it already
/// rescaled. A layer that never sees a positive drive keeps `v_th = 1` and
/// is listed in the report's fallbacks.
///
/// Thresholding divides a layer's firing rate by its threshold, so each layer
/// hands the next one a signal shrunk by every threshold upstream. The
/// per-step bias current doesn't pass through that chain; left alone it would
/// outweigh the shrunken evidence deeper in the network. Before observing
/// layer `k`, its biases are therefore divided by the product of the already
/// chosen thresholds, which restores the float network's proportion between
/// bias and weighted input: with overshoot-carrying reset, layer rates then
/// track `activation / (v_th product)`, and the class ordering at the output
/// matches the float logits in expectation. Weight tensors are never touched.
pub fn calibrate_max_activation<S: Scalar>(
    model: &mut SnnModel<S>,
    trains: &[SpikeTrain],
) -> Result<CalibrationReport<S>> {
    model.validate()?;
    if trains.is_empty() {
        return Err(Error::invalid_input("calibration set is empty"));
    }
    let n = model.if_cfgs.len();
    let mut report = CalibrationReport {
        v_th: vec![S::one(); n],
        max_current: vec![S::neg_infinity(); n],
        bias_scale: vec![S::one(); n],
        fallback_layers: Vec::new(),
    };
    let mut upstream = S::one();
    for k in 0..n {
        let scale = S::one() / upstream;
        if scale != S::one() {
            for b in &mut model.weights.layers[k].biases {
                *b = *b * scale;
            }
        }
        report.bias_scale[k] = scale;
        let mut max_seen = S::neg_infinity();
        for train in trains {
            let steps = S::of(train.shape()[0] as f64);
            let mut sums: Vec<S> = Vec::new();
            run_network_observing(model, train, &mut |widx, current| {
                if widx == k {
                    if sums.is_empty() {
                        sums = vec![S::zero(); current.len()];
                    }
                    for (acc, &v) in sums.iter_mut().zip(current.iter()) {
                        *acc = *acc + v;
                    }
                }
            })?;
            for &total in &sums {
                let mean = total / steps;
                if mean > max_seen {
                    max_seen = mean;
                }
            }
        }
        report.max_current[k] = max_seen;
        if max_seen > S::zero() {
            report.v_th[k] = max_seen;
            model.if_cfgs[k].v_th = max_seen;
        } else {
            report.fallback_layers.push(k);
            model.if_cfgs[k].v_th = S::one();
        }
        upstream = upstream * model.if_cfgs[k].v_th;
    }
    Ok(report)
}

/// Result of a grid search over one global threshold.
#[derive(Clone, Debug)]
pub struct GridCalibration<S> {
    pub chosen: S,
    /// Accuracy per grid candidate, in the given order.
    pub accuracies: Vec<f64>,
}

/// Try each candidate threshold on every weighted layer at once and keep the
/// one with the best accuracy on the labeled set; ties go to the smallest
/// candidate. The model is left configured with the winner.
pub fn calibrate_grid<S: Scalar>(
    model: &mut SnnModel<S>,
    labeled: &[(SpikeTrain, usize)],
    grid: &[S],
    count_threshold: i64,
) -> Result<GridCalibration<S>> {
    model.validate()?;
    if labeled.is_empty() {
        return Err(Error::invalid_input("calibration set is empty"));
    }
    if grid.is_empty() {
        return Err(Error::invalid_input("threshold grid is empty"));
    }
    let mut accuracies = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, S)> = None;
    for &candidate in grid {
        for cfg in &mut model.if_cfgs {
            cfg.v_th = candidate;
        }
        model.validate()?;
        let mut correct = 0usize;
        for (train, label) in labeled {
            let counts = run_network(model, train)?;
            if counts.decide(count_threshold)? == *label {
                correct += 1;
            }
        }
        let acc = correct as f64 / labeled.len() as f64;
        accuracies.push(acc);
        let better = match best {
            None => true,
            // Strictly better accuracy wins; an equal one never displaces an
            // earlier (smaller) candidate.
            Some((best_acc, _)) => acc > best_acc,
        };
        if better {
            best = Some((acc, candidate));
        }
    }
    let (_, chosen) = best.unwrap();
    for cfg in &mut model.if_cfgs {
        cfg.v_th = chosen;
    }
    Ok(GridCalibration { chosen, accuracies })
}

impl<S: Scalar> SnnModel<S> {
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        self.validate()?;
        out.write_all(MODEL_MAGIC)?;
        out.write_all(&MODEL_FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&self.source_fingerprint.to_le_bytes())?;
        let spec_json = self.spec.to_json();
        let len = u32::try_from(spec_json.len())
            .map_err(|_| Error::format("topology JSON exceeds u32 length"))?;
        out.write_all(&len.to_le_bytes())?;
        out.write_all(spec_json.as_bytes())?;
        self.weights.write_to(out)?;
        let count = u16::try_from(self.if_cfgs.len())
            .map_err(|_| Error::format("more than 65535 neuron configs"))?;
        out.write_all(&count.to_le_bytes())?;
        for cfg in &self.if_cfgs {
            out.write_all(&cfg.v_th.as_f64().to_le_bytes())?;
            out.write_all(&cfg.v_rest.as_f64().to_le_bytes())?;
            out.write_all(&cfg.leak.as_f64().to_le_bytes())?;
            out.write_all(&[match cfg.reset_mode {
                ResetMode::ToRest => 0u8,
                ResetMode::SubtractThreshold => 1u8,
            }])?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let (source_fingerprint, spec) = {
            let mut reader = Cursor::new(input);
            let magic = reader.bytes::<4>("magic")?;
            if &magic != MODEL_MAGIC {
                return Err(Error::format(format!(
                    "bad magic at offset 0: expected {MODEL_MAGIC:?}, found {magic:?}"
                )));
            }
            let version = u16::from_le_bytes(reader.bytes::<2>("version")?);
            if version != MODEL_FORMAT_VERSION {
                return Err(Error::Unsupported(format!(
                    "model version {version} (supported: {MODEL_FORMAT_VERSION})"
                )));
            }
            let source = u32::from_le_bytes(reader.bytes::<4>("source fingerprint")?);
            let len = u32::from_le_bytes(reader.bytes::<4>("topology length")?) as usize;
            let json = reader.read_vec(len, "topology JSON")?;
            let json = String::from_utf8(json)
                .map_err(|_| Error::format("topology JSON is not valid UTF-8"))?;
            (source, NetworkSpec::from_json(&json)?)
        };
        let weights = WeightContainer::read_from(input)?;
        let if_cfgs = {
            let mut reader = Cursor::new(input);
            let count = u16::from_le_bytes(reader.bytes::<2>("config count")?) as usize;
            let mut cfgs = Vec::with_capacity(count);
            for _ in 0..count {
                let v_th = f64::from_le_bytes(reader.bytes::<8>("v_th")?);
                let v_rest = f64::from_le_bytes(reader.bytes::<8>("v_rest")?);
                let leak = f64::from_le_bytes(reader.bytes::<8>("leak")?);
                let mode = match reader.bytes::<1>("reset mode")?[0] {
                    0 => ResetMode::ToRest,
                    1 => ResetMode::SubtractThreshold,
                    other => {
                        return Err(Error::format(format!("unknown reset mode byte {other}")))
                    }
                };
                cfgs.push(IfConfig {
                    v_th: S::of(v_th),
                    v_rest: S::of(v_rest),
                    leak: S::of(leak),
                    reset_mode: mode,
                });
            }
            cfgs
        };
        let model = SnnModel { spec, weights, if_cfgs, source_fingerprint };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
