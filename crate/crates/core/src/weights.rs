//! Weight storage and its binary container format.
//!
//! Weights live in flat row-major buffers tagged with their logical dims:
//! `[c_out, c_in, kernel_h, kernel_w]` for convolutions, `[out_dim, in_dim]`
//! for fully-connected layers, one bias per output channel/unit. The on-disk
//! container stores 32-bit floats regardless of the in-memory scalar; loading
//! into `f32` is lossless, wider scalars are widened exactly.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! magic "SCNW" | version u16 | spec fingerprint u32 | layer count u16
//! per layer: layer index u16 | rank u8 | dims u32 x rank | weights f32 x prod
//!            | biases f32 x dims[0]
//! ```
//!
//! The bias length is not encoded separately — it always equals `dims[0]`
//! (output channels / units).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::scalar::Scalar;

pub const WEIGHT_FORMAT_VERSION: u16 = 1;
const WEIGHT_MAGIC: &[u8; 4] = b"SCNW";

/// Weights and biases of one conv or fully-connected layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerWeights<S> {
    /// Index of the layer inside its [`NetworkSpec`].
    pub layer_index: usize,
    /// Logical dims of the weight tensor (row-major flat storage).
    pub dims: Vec<usize>,
    pub weights: Vec<S>,
    pub biases: Vec<S>,
}

impl<S: Scalar> LayerWeights<S> {
    pub fn validate(&self) -> Result<()> {
        let expect: usize = self.dims.iter().product();
        if self.weights.len() != expect {
            return Err(Error::shape(format!(
                "layer {}: weight buffer holds {} values, dims {:?} require {}",
                self.layer_index,
                self.weights.len(),
                self.dims,
                expect
            )));
        }
        let out = self.dims.first().copied().unwrap_or(0);
        if self.biases.len() != out {
            return Err(Error::shape(format!(
                "layer {}: {} biases for {} outputs",
                self.layer_index,
                self.biases.len(),
                out
            )));
        }
        Ok(())
    }
}

/// All weighted layers of a network plus the fingerprint of the topology
/// they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightContainer<S> {
    pub fingerprint: u32,
    pub layers: Vec<LayerWeights<S>>,
}

impl<S: Scalar> WeightContainer<S> {
    /// Check that this container matches `spec` layer for layer: fingerprint,
    /// layer indices, and per-layer dims.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        if self.fingerprint != spec.fingerprint() {
            return Err(Error::shape(format!(
                "weight fingerprint {:#010x} does not match network fingerprint {:#010x}",
                self.fingerprint,
                spec.fingerprint()
            )));
        }
        let weighted = spec.weighted_layers();
        if weighted.len() != self.layers.len() {
            return Err(Error::shape(format!(
                "network has {} weighted layers, container has {}",
                weighted.len(),
                self.layers.len()
            )));
        }
        for (lw, &idx) in self.layers.iter().zip(&weighted) {
            lw.validate()?;
            if lw.layer_index != idx {
                return Err(Error::shape(format!(
                    "container entry for layer {} does not line up with weighted layer {}",
                    lw.layer_index, idx
                )));
            }
            let expect_dims = match spec.layers[idx] {
                crate::network::Layer::Conv1d { kernel_h, kernel_w, c_in, c_out, .. } => {
                    vec![c_out, c_in, kernel_h, kernel_w]
                }
                crate::network::Layer::FullyConnected { in_dim, out_dim } => vec![out_dim, in_dim],
                _ => unreachable!("weighted_layers only yields conv/fc"),
            };
            if lw.dims != expect_dims {
                return Err(Error::shape(format!(
                    "layer {}: weight dims {:?} do not match spec dims {:?}",
                    idx, lw.dims, expect_dims
                )));
            }
        }
        Ok(())
    }

    /// Convert the scalar type, rounding through f32 exactly as a save/load
    /// cycle would.
    pub fn cast<T: Scalar>(&self) -> WeightContainer<T> {
        WeightContainer {
            fingerprint: self.fingerprint,
            layers: self
                .layers
                .iter()
                .map(|l| LayerWeights {
                    layer_index: l.layer_index,
                    dims: l.dims.clone(),
                    weights: l.weights.iter().map(|&w| T::of(w.as_f64() as f32 as f64)).collect(),
                    biases: l.biases.iter().map(|&b| T::of(b.as_f64() as f32 as f64)).collect(),
                })
                .collect(),
        }
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        for l in &self.layers {
            l.validate()?;
        }
        out.write_all(WEIGHT_MAGIC)?;
        out.write_all(&WEIGHT_FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&self.fingerprint.to_le_bytes())?;
        let count = u16::try_from(self.layers.len())
            .map_err(|_| Error::format("more than 65535 weighted layers"))?;
        out.write_all(&count.to_le_bytes())?;
        for l in &self.layers {
            let idx = u16::try_from(l.layer_index)
                .map_err(|_| Error::format("layer index exceeds u16 range"))?;
            out.write_all(&idx.to_le_bytes())?;
            let rank = u8::try_from(l.dims.len())
                .map_err(|_| Error::format("weight rank exceeds u8 range"))?;
            out.write_all(&[rank])?;
            for &d in &l.dims {
                let d = u32::try_from(d)
                    .map_err(|_| Error::format(format!("dimension {d} exceeds u32 range")))?;
                out.write_all(&d.to_le_bytes())?;
            }
            for &w in &l.weights {
                out.write_all(&(w.as_f64() as f32).to_le_bytes())?;
            }
            for &b in &l.biases {
                out.write_all(&(b.as_f64() as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut reader = Cursor::new(input);
        let magic = reader.bytes::<4>("magic")?;
        if &magic != WEIGHT_MAGIC {
            return Err(Error::format(format!(
                "bad magic at offset 0: expected {WEIGHT_MAGIC:?}, found {magic:?}"
            )));
        }
        let version = u16::from_le_bytes(reader.bytes::<2>("version")?);
        if version != WEIGHT_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "weight container version {version} (supported: {WEIGHT_FORMAT_VERSION})"
            )));
        }
        let fingerprint = u32::from_le_bytes(reader.bytes::<4>("fingerprint")?);
        let count = u16::from_le_bytes(reader.bytes::<2>("layer count")?);
        let mut layers = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let layer_index = u16::from_le_bytes(reader.bytes::<2>("layer index")?) as usize;
            let rank = reader.bytes::<1>("rank")?[0] as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(u32::from_le_bytes(reader.bytes::<4>("dims")?) as usize);
            }
            let n: usize = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::format("weight dims overflow"))?;
            let mut weights = Vec::with_capacity(n);
            for _ in 0..n {
                weights.push(S::of(f32::from_le_bytes(reader.bytes::<4>("weights")?) as f64));
            }
            let n_bias = dims.first().copied().unwrap_or(0);
            let mut biases = Vec::with_capacity(n_bias);
            for _ in 0..n_bias {
                biases.push(S::of(f32::from_le_bytes(reader.bytes::<4>("biases")?) as f64));
            }
            layers.push(LayerWeights { layer_index, dims, weights, biases });
        }
        Ok(WeightContainer { fingerprint, layers })
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

/// Byte reader that tracks its offset so format errors can name it.
pub(crate) struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<&mut R> {
    pub(crate) fn new(inner: &mut R) -> Cursor<&mut R> {
        Cursor { inner, offset: 0 }
    }

    pub(crate) fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|_| {
            Error::format(format!("truncated while reading {what} at offset {}", self.offset))
        })?;
        self.offset += N as u64;
        Ok(buf)
    }

    pub(crate) fn read_vec(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|_| {
            Error::format(format!("truncated while reading {what} at offset {}", self.offset))
        })?;
        self.offset += n as u64;
        Ok(buf)
    }
}
