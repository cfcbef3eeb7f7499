//! Network topology description.
//!
//! A [`NetworkSpec`] lists layers over a `[channels, height, width]` input.
//! Convolutions are single-direction (the kernel extends along height or
//! width, never both), pooling is non-overlapping, and shapes chain layer to
//! layer — [`NetworkSpec::validate`] walks the chain and reports the first
//! inconsistency. Specs serialize as plain JSON documents; a 32-bit FNV-1a
//! fingerprint of the canonical form ties weight files to the topology they
//! were trained for.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Height,
    #[default]
    Width,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    /// Single-direction convolution, valid (no padding) cross-correlation.
    /// At least one kernel dimension must be 1.
    Conv1d {
        kernel_h: usize,
        kernel_w: usize,
        c_in: usize,
        c_out: usize,
        #[serde(default = "default_stride")]
        stride: usize,
    },
    /// Non-overlapping max pooling along one axis; a trailing remainder
    /// narrower than the window is dropped.
    MaxPool1d {
        window: usize,
        #[serde(default)]
        orientation: Orientation,
    },
    Relu,
    FullyConnected { in_dim: usize, out_dim: usize },
}

fn default_stride() -> usize {
    1
}

impl Layer {
    pub fn is_weighted(&self) -> bool {
        matches!(self, Layer::Conv1d { .. } | Layer::FullyConnected { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// `[channels, height, width]` of one input sample.
    pub input_shape: [usize; 3],
    pub layers: Vec<Layer>,
}

impl NetworkSpec {
    /// Walk the layer chain, returning each layer's output shape.
    ///
    /// Fully-connected outputs are reported as `[out_dim, 1, 1]` so the chain
    /// stays three-dimensional throughout.
    pub fn validate(&self) -> Result<Vec<[usize; 3]>> {
        if self.input_shape.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!(
                "input shape {:?} has a zero dimension",
                self.input_shape
            )));
        }
        let mut shape = self.input_shape;
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer_output_shape(layer, shape)
                .map_err(|e| Error::shape(format!("layer {i} ({layer:?}): {e}")))?;
            shapes.push(shape);
        }
        Ok(shapes)
    }

    /// Shape produced by the final layer.
    pub fn output_shape(&self) -> Result<[usize; 3]> {
        Ok(self.validate()?.last().copied().unwrap_or(self.input_shape))
    }

    /// Indices of layers that carry weights (conv and fully-connected).
    pub fn weighted_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_weighted())
            .map(|(i, _)| i)
            .collect()
    }

    /// The same topology without explicit activation entries; integrate-and-
    /// fire neurons subsume Relu in the spiking path.
    pub fn without_relu(&self) -> NetworkSpec {
        NetworkSpec {
            input_shape: self.input_shape,
            layers: self
                .layers
                .iter()
                .filter(|l| !matches!(l, Layer::Relu))
                .copied()
                .collect(),
        }
    }

    /// 32-bit FNV-1a hash over the canonical text form of the spec.
    ///
    /// Stored in weight containers so a container cannot silently be applied
    /// to a topology it was not trained for.
    pub fn fingerprint(&self) -> u32 {
        let mut canon = format!(
            "input:{},{},{};",
            self.input_shape[0], self.input_shape[1], self.input_shape[2]
        );
        for layer in &self.layers {
            match layer {
                Layer::Conv1d { kernel_h, kernel_w, c_in, c_out, stride } => {
                    canon += &format!("conv1d:{kernel_h},{kernel_w},{c_in},{c_out},{stride};");
                }
                Layer::MaxPool1d { window, orientation } => {
                    canon += &format!("maxpool1d:{window},{orientation:?};");
                }
                Layer::Relu => canon += "relu;",
                Layer::FullyConnected { in_dim, out_dim } => {
                    canon += &format!("fc:{in_dim},{out_dim};");
                }
            }
        }
        fnv1a32(canon.as_bytes())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json)
            .map_err(|e| Error::format(format!("network description: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(self.to_json().as_bytes())?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_reader(BufReader::new(File::open(path)?))
            .map_err(|e| Error::format(format!("network description: {e}")))?;
        Ok(spec)
    }

    /// Default seizure-prediction topology for a given input shape: five
    /// Conv1d(1x5) -> Relu -> MaxPool1d(2) stacks along the width axis with
    /// channel progression 8-8-16-16-32, then FC -> Relu -> FC(2). The first
    /// FC width is derived from the flattened conv output.
    ///
    /// Every piece of this is a free choice the caller can override by
    /// editing the JSON form; this constructor just provides a consistent
    /// starting point.
    pub fn default_topology(input_shape: [usize; 3]) -> Result<NetworkSpec> {
        const KERNEL_W: usize = 5;
        const POOL: usize = 2;
        const CHANNELS: [usize; 5] = [8, 8, 16, 16, 32];
        const FC_HIDDEN: usize = 64;
        const CLASSES: usize = 2;

        let mut layers = Vec::new();
        let mut c_in = input_shape[0];
        for &c_out in &CHANNELS {
            layers.push(Layer::Conv1d {
                kernel_h: 1,
                kernel_w: KERNEL_W,
                c_in,
                c_out,
                stride: 1,
            });
            layers.push(Layer::Relu);
            layers.push(Layer::MaxPool1d { window: POOL, orientation: Orientation::Width });
            c_in = c_out;
        }
        let mut spec = NetworkSpec { input_shape, layers };
        let conv_out = spec.output_shape()?;
        let flat = conv_out.iter().product();
        spec.layers.push(Layer::FullyConnected { in_dim: flat, out_dim: FC_HIDDEN });
        spec.layers.push(Layer::Relu);
        spec.layers.push(Layer::FullyConnected { in_dim: FC_HIDDEN, out_dim: CLASSES });
        spec.validate()?;
        Ok(spec)
    }
}

fn layer_output_shape(layer: &Layer, input: [usize; 3]) -> std::result::Result<[usize; 3], String> {
    let [c, h, w] = input;
    match *layer {
        Layer::Conv1d { kernel_h, kernel_w, c_in, c_out, stride } => {
            if kernel_h == 0 || kernel_w == 0 || c_out == 0 {
                return Err("kernel dimensions and c_out must be >= 1".into());
            }
            if kernel_h != 1 && kernel_w != 1 {
                return Err(format!(
                    "kernel {kernel_h}x{kernel_w} extends in both directions; one dimension must be 1"
                ));
            }
            if stride == 0 {
                return Err("stride must be >= 1".into());
            }
            if c_in != c {
                return Err(format!("expects {c_in} input channels, chain provides {c}"));
            }
            if kernel_h > h || kernel_w > w {
                return Err(format!(
                    "kernel {kernel_h}x{kernel_w} larger than input extent {h}x{w}"
                ));
            }
            let oh = (h - kernel_h) / stride + 1;
            let ow = (w - kernel_w) / stride + 1;
            Ok([c_out, oh, ow])
        }
        Layer::MaxPool1d { window, orientation } => {
            if window == 0 {
                return Err("pool window must be >= 1".into());
            }
            let extent = match orientation {
                Orientation::Height => h,
                Orientation::Width => w,
            };
            if window > extent {
                return Err(format!("pool window {window} exceeds extent {extent}"));
            }
            let pooled = extent / window;
            Ok(match orientation {
                Orientation::Height => [c, pooled, w],
                Orientation::Width => [c, h, pooled],
            })
        }
        Layer::Relu => Ok(input),
        Layer::FullyConnected { in_dim, out_dim } => {
            if out_dim == 0 {
                return Err("out_dim must be >= 1".into());
            }
            let flat = c * h * w;
            if in_dim != flat {
                return Err(format!("in_dim {in_dim} does not match flattened input {flat}"));
            }
            Ok([out_dim, 1, 1])
        }
    }
}

fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut hash = 0x811c_9dc5u32;
    for &b in bytes {
        hash ^= b as u32;
        hash = hash.wrapping_mul(0x0100_0193);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_spec() -> NetworkSpec {
        NetworkSpec {
            input_shape: [1, 1, 12],
            layers: vec![
                Layer::Conv1d { kernel_h: 1, kernel_w: 3, c_in: 1, c_out: 4, stride: 1 },
                Layer::Relu,
                Layer::MaxPool1d { window: 2, orientation: Orientation::Width },
                Layer::FullyConnected { in_dim: 20, out_dim: 2 },
            ],
        }
    }

    #[test]
    fn shapes_chain_through_the_layers() {
        let shapes = toy_spec().validate().unwrap();
        assert_eq!(shapes, vec![[4, 1, 10], [4, 1, 10], [4, 1, 5], [2, 1, 1]]);
    }

    #[test]
    fn pool_drops_the_trailing_remainder() {
        let spec = NetworkSpec {
            input_shape: [1, 1, 7],
            layers: vec![Layer::MaxPool1d { window: 2, orientation: Orientation::Width }],
        };
        assert_eq!(spec.output_shape().unwrap(), [1, 1, 3]);
    }

    #[test]
    fn rejects_two_direction_kernels_but_accepts_1x1() {
        let mut spec = toy_spec();
        spec.layers[0] = Layer::Conv1d { kernel_h: 3, kernel_w: 3, c_in: 1, c_out: 4, stride: 1 };
        assert!(matches!(spec.validate(), Err(Error::Shape(_))));
        spec.layers[0] = Layer::Conv1d { kernel_h: 1, kernel_w: 1, c_in: 1, c_out: 4, stride: 1 };
        spec.layers[3] = Layer::FullyConnected { in_dim: 4 * 6, out_dim: 2 };
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn rejects_oversized_kernels_and_windows() {
        let spec = NetworkSpec {
            input_shape: [1, 1, 4],
            layers: vec![Layer::Conv1d { kernel_h: 1, kernel_w: 5, c_in: 1, c_out: 1, stride: 1 }],
        };
        let err = spec.validate().unwrap_err();
        assert!(matches!(err, Error::Shape(ref m) if m.contains("larger than input extent")));

        let spec = NetworkSpec {
            input_shape: [1, 1, 4],
            layers: vec![Layer::MaxPool1d { window: 5, orientation: Orientation::Width }],
        };
        assert!(matches!(spec.validate(), Err(Error::Shape(_))));
    }

    #[test]
    fn rejects_mismatched_channels_and_fc_widths() {
        let mut spec = toy_spec();
        spec.layers[0] = Layer::Conv1d { kernel_h: 1, kernel_w: 3, c_in: 2, c_out: 4, stride: 1 };
        assert!(matches!(spec.validate(), Err(Error::Shape(_))));

        let mut spec = toy_spec();
        spec.layers[3] = Layer::FullyConnected { in_dim: 21, out_dim: 2 };
        assert!(matches!(spec.validate(), Err(Error::Shape(_))));
    }

    #[test]
    fn json_round_trips() {
        let spec = toy_spec();
        let back = NetworkSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
        assert!(spec.to_json().contains("\"type\": \"conv1d\""));
    }

    #[test]
    fn malformed_json_is_a_format_error() {
        assert!(matches!(
            NetworkSpec::from_json("{\"input_shape\": [1,1]"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn fingerprint_tracks_topology_changes() {
        let spec = toy_spec();
        let fp = spec.fingerprint();
        assert_eq!(fp, spec.clone().fingerprint());
        let mut wider = spec.clone();
        wider.layers[0] = Layer::Conv1d { kernel_h: 1, kernel_w: 3, c_in: 1, c_out: 5, stride: 1 };
        assert_ne!(fp, wider.fingerprint());
        assert_ne!(fp, spec.without_relu().fingerprint());
    }

    #[test]
    fn without_relu_drops_exactly_the_activation_entries() {
        let spec = NetworkSpec::default_topology([1, 4, 256]).unwrap();
        let relu_count = spec.layers.iter().filter(|l| matches!(l, Layer::Relu)).count();
        assert_eq!(relu_count, 6);
        let spiking = spec.without_relu();
        assert!(spiking.layers.iter().all(|l| !matches!(l, Layer::Relu)));
        assert_eq!(spiking.layers.len(), spec.layers.len() - relu_count);
        assert_eq!(
            spiking.layers.iter().filter(|l| l.is_weighted()).count(),
            spec.layers.iter().filter(|l| l.is_weighted()).count()
        );
        spiking.validate().unwrap();
    }

    #[test]
    fn default_topology_has_the_documented_shape() {
        let spec = NetworkSpec::default_topology([1, 23, 5120]).unwrap();
        let convs: Vec<_> = spec
            .layers
            .iter()
            .filter_map(|l| match l {
                Layer::Conv1d { c_out, kernel_w, .. } => Some((*c_out, *kernel_w)),
                _ => None,
            })
            .collect();
        assert_eq!(convs, vec![(8, 5), (8, 5), (16, 5), (16, 5), (32, 5)]);
        assert_eq!(spec.output_shape().unwrap(), [2, 1, 1]);
        // Too-narrow inputs cannot host five conv/pool stacks.
        assert!(NetworkSpec::default_topology([1, 4, 64]).is_err());
    }
}
