//! Temporal Gaussian random sparse encoding.
//!
//! Each analog sample value is turned into a binary spike train: at every
//! time step an independent Gaussian threshold matrix is drawn, and a
//! position fires iff its sample value is at or above its threshold (ties
//! fire). The probability of a spike is therefore Phi((x - mu)/sigma) per
//! step, so spike *rates* carry the signal while individual steps stay
//! sparse and binary.
//!
//! Thresholds are drawn with Box–Muller over a ChaCha8 stream derived from
//! `(seed, time_step)` — see [`crate::rng`] — which makes trains bit-identical
//! across platforms and lets any time step be regenerated without replaying
//! the ones before it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::rng::{step_rng, NormalSampler};
use crate::scalar::Scalar;
use crate::detmath;

/// Encoder settings.
///
/// `v_th_up`/`v_th_down` bracket the informative signal range; the Gaussian
/// threshold distribution is centred between them. `sigma = None` selects the
/// default spread `(v_th_up - v_th_down) / 2`, i.e. the brackets sit one
/// standard deviation from the centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig<S> {
    pub time_steps: usize,
    pub v_th_up: S,
    pub v_th_down: S,
    pub sigma: Option<S>,
    pub seed: u64,
}

impl<S: Scalar> Default for EncoderConfig<S> {
    fn default() -> Self {
        EncoderConfig {
            time_steps: 10,
            v_th_up: S::one(),
            v_th_down: -S::one(),
            sigma: None,
            seed: 42,
        }
    }
}

impl<S: Scalar> EncoderConfig<S> {
    /// Centre of the threshold distribution: `(v_th_up + v_th_down) / 2`.
    pub fn mu(&self) -> S {
        (self.v_th_up + self.v_th_down) / S::of(2.0)
    }

    /// Configured sigma, or the default `(v_th_up - v_th_down) / 2`.
    pub fn effective_sigma(&self) -> S {
        self.sigma
            .unwrap_or_else(|| (self.v_th_up - self.v_th_down) / S::of(2.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_steps == 0 {
            return Err(Error::config("encoder time_steps must be >= 1"));
        }
        if !self.v_th_up.is_finite() || !self.v_th_down.is_finite() {
            return Err(Error::config("encoder thresholds must be finite"));
        }
        if self.v_th_up <= self.v_th_down {
            return Err(Error::config(format!(
                "encoder v_th_up ({}) must exceed v_th_down ({})",
                self.v_th_up, self.v_th_down
            )));
        }
        let sigma = self.effective_sigma();
        if !sigma.is_finite() || sigma <= S::zero() {
            return Err(Error::config(format!("encoder sigma must be positive, got {sigma}")));
        }
        Ok(())
    }
}

/// Binary spike train over shape `[time_steps, channels, height, width]`.
///
/// Spikes are stored bit-packed (one bit per position, LSB-first within each
/// 64-bit word) in row-major `(t, c, h, w)` order, so a train costs 1 bit per
/// value — the memory story that makes spiking inference cheap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeTrain {
    shape: [usize; 4],
    words: Vec<u64>,
}

const SPIKE_MAGIC: &[u8; 4] = b"SPKT";
const SPIKE_VERSION: u32 = 1;

impl SpikeTrain {
    pub fn zeros(time_steps: usize, channels: usize, height: usize, width: usize) -> Self {
        let bits = time_steps * channels * height * width;
        SpikeTrain {
            shape: [time_steps, channels, height, width],
            words: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn time_steps(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn height(&self) -> usize {
        self.shape[2]
    }

    pub fn width(&self) -> usize {
        self.shape[3]
    }

    fn bit_len(&self) -> usize {
        self.shape.iter().product()
    }

    fn bit_index(&self, t: usize, c: usize, h: usize, w: usize) -> usize {
        let [st, sc, sh, sw] = self.shape;
        debug_assert!(t < st && c < sc && h < sh && w < sw);
        ((t * sc + c) * sh + h) * sw + w
    }

    pub fn get(&self, t: usize, c: usize, h: usize, w: usize) -> bool {
        let i = self.bit_index(t, c, h, w);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, t: usize, c: usize, h: usize, w: usize, spike: bool) {
        let i = self.bit_index(t, c, h, w);
        if spike {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// One time step as a dense 0/1 grid `[channels, height, width]`.
    pub fn plane(&self, t: usize) -> Array3<u8> {
        let [_, c, h, w] = self.shape;
        Array3::from_shape_fn((c, h, w), |(ci, hi, wi)| self.get(t, ci, hi, wi) as u8)
    }

    /// Per-position firing rate over all time steps: values in `[0, 1]`.
    pub fn spike_rate<S: Scalar>(&self) -> Array3<S> {
        let [t, c, h, w] = self.shape;
        let mut counts = vec![0u32; c * h * w];
        for ti in 0..t {
            for (i, count) in counts.iter_mut().enumerate() {
                let (ci, rest) = (i / (h * w), i % (h * w));
                *count += self.get(ti, ci, rest / w, rest % w) as u32;
            }
        }
        let steps = t as f64;
        Array3::from_shape_vec(
            (c, h, w),
            counts.iter().map(|&n| S::of(n as f64 / steps)).collect(),
        )
        .expect("count vec matches shape")
    }

    /// Serialize: 24-byte header (magic `SPKT`, version, then T, C, H, W as
    /// little-endian u32) followed by the row-major bit-packed payload padded
    /// with zero bits to a byte boundary.
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(SPIKE_MAGIC)?;
        out.write_all(&SPIKE_VERSION.to_le_bytes())?;
        for &d in &self.shape {
            let d = u32::try_from(d)
                .map_err(|_| Error::format(format!("dimension {d} exceeds u32 range")))?;
            out.write_all(&d.to_le_bytes())?;
        }
        let n_bytes = self.bit_len().div_ceil(8);
        let mut payload = Vec::with_capacity(n_bytes);
        for w in &self.words {
            payload.extend_from_slice(&w.to_le_bytes());
        }
        payload.truncate(n_bytes);
        out.write_all(&payload)?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut header = [0u8; 24];
        input
            .read_exact(&mut header)
            .map_err(|_| Error::format("spike train shorter than its 24-byte header"))?;
        if &header[0..4] != SPIKE_MAGIC {
            return Err(Error::format(format!(
                "bad magic at offset 0: expected {:?}, found {:?}",
                SPIKE_MAGIC,
                &header[0..4]
            )));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != SPIKE_VERSION {
            return Err(Error::Unsupported(format!(
                "spike train version {version} (supported: {SPIKE_VERSION})"
            )));
        }
        let mut dims = [0usize; 4];
        for (i, d) in dims.iter_mut().enumerate() {
            let off = 8 + 4 * i;
            *d = u32::from_le_bytes(header[off..off + 4].try_into().unwrap()) as usize;
        }
        let bits = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("spike train dimensions overflow"))?;
        let n_bytes = bits.div_ceil(8);
        let mut payload = Vec::new();
        input.read_to_end(&mut payload)?;
        if payload.len() != n_bytes {
            return Err(Error::format(format!(
                "payload at offset 24: expected {} bytes for shape {:?}, found {}",
                n_bytes,
                dims,
                payload.len()
            )));
        }
        let mut words = vec![0u64; bits.div_ceil(64)];
        for (i, b) in payload.iter().enumerate() {
            words[i / 8] |= (*b as u64) << (8 * (i % 8));
        }
        // Padding bits are not part of the train; clear them.
        if bits % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (bits % 64)) - 1;
            }
        }
        Ok(SpikeTrain { shape: dims, words })
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

/// Encode an analog sample `[channels, height, width]` into a spike train.
///
/// For every time step `t`, a fresh Gaussian threshold matrix is drawn from
/// the `(cfg.seed, t)` stream; position `(c, h, w)` fires iff
/// `sample[c,h,w] >= mu + sigma * z`. Equality fires. Thresholds do not
/// depend on the sample, so `a >= b` elementwise implies `encode(a)` covers
/// `encode(b)` elementwise under the same config.
pub fn encode<S: Scalar>(sample: &Array3<S>, cfg: &EncoderConfig<S>) -> Result<SpikeTrain> {
    cfg.validate()?;
    if let Some((idx, v)) = sample.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid_input(format!(
            "non-finite sample value {v} at {idx:?}"
        )));
    }
    let (c, h, w) = sample.dim();
    let mu = cfg.mu().as_f64();
    let sigma = cfg.effective_sigma().as_f64();
    let mut train = SpikeTrain::zeros(cfg.time_steps, c, h, w);
    for t in 0..cfg.time_steps {
        let mut normals = NormalSampler::new(step_rng(cfg.seed, t as u32));
        for ci in 0..c {
            for hi in 0..h {
                for wi in 0..w {
                    let threshold = mu + sigma * normals.next();
                    if sample[(ci, hi, wi)].as_f64() >= threshold {
                        train.set(t, ci, hi, wi, true);
                    }
                }
            }
        }
    }
    Ok(train)
}

/// Analytic per-step firing probability for each position:
/// `Phi((x - mu) / sigma)`. This is the exact expectation of
/// [`SpikeTrain::spike_rate`] under [`encode`], and serves as its oracle.
pub fn expected_rate<S: Scalar>(sample: &Array3<S>, cfg: &EncoderConfig<S>) -> Result<Array3<S>> {
    cfg.validate()?;
    let mu = cfg.mu().as_f64();
    let sigma = cfg.effective_sigma().as_f64();
    Ok(sample.mapv(|x| S::of(detmath::normal_cdf((x.as_f64() - mu) / sigma))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr3;

    fn cfg(t: usize) -> EncoderConfig<f64> {
        EncoderConfig {
            time_steps: t,
            ..EncoderConfig::default()
        }
    }

    fn rate_of(x: f64, t: usize) -> f64 {
        let sample = arr3(&[[[x]]]);
        let train = encode(&sample, &cfg(t)).unwrap();
        train.spike_rate::<f64>()[(0, 0, 0)]
    }

    #[test]
    fn rate_at_mu_is_half() {
        assert!((rate_of(0.0, 20_000) - 0.5).abs() < 0.015);
    }

    #[test]
    fn rate_one_sigma_out() {
        // Phi(+-1) from the standard-normal table.
        assert!((rate_of(1.0, 20_000) - 0.841_345).abs() < 0.015);
        assert!((rate_of(-1.0, 20_000) - 0.158_655).abs() < 0.015);
    }

    #[test]
    fn far_above_saturates_to_all_ones() {
        let train = encode(&arr3(&[[[10.0]]]), &cfg(10_000)).unwrap();
        assert_eq!(train.count_ones(), 10_000);
        let far_below = encode(&arr3(&[[[-10.0]]]), &cfg(10_000)).unwrap();
        assert_eq!(far_below.count_ones(), 0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let sample = arr3(&[[[0.3, -0.2], [0.8, 0.1]]]);
        let a = encode(&sample, &cfg(50)).unwrap();
        let b = encode(&sample, &cfg(50)).unwrap();
        assert_eq!(a, b);
        let different_seed = EncoderConfig { seed: 43, ..cfg(50) };
        assert_ne!(a, encode(&sample, &different_seed).unwrap());
    }

    #[test]
    fn train_shape_follows_config_and_sample() {
        let sample = Array3::<f64>::zeros((2, 3, 5));
        let train = encode(&sample, &cfg(7)).unwrap();
        assert_eq!(train.shape(), [7, 2, 3, 5]);
        let rate = train.spike_rate::<f64>();
        assert!(rate.iter().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn larger_values_spike_wherever_smaller_ones_do() {
        // Thresholds depend only on (seed, t, position), so raising a value
        // can only add spikes.
        let lo = arr3(&[[[-0.5, 0.0, 0.4]]]);
        let hi = lo.mapv(|x| x + 0.3);
        let a = encode(&lo, &cfg(200)).unwrap();
        let b = encode(&hi, &cfg(200)).unwrap();
        for t in 0..200 {
            for w in 0..3 {
                assert!(b.get(t, 0, 0, w) || !a.get(t, 0, 0, w));
            }
        }
    }

    #[test]
    fn rejects_bad_config_and_input() {
        let sample = arr3(&[[[0.0]]]);
        let zero_steps = EncoderConfig { time_steps: 0, ..cfg(1) };
        assert!(matches!(encode(&sample, &zero_steps), Err(Error::Config(_))));
        let inverted = EncoderConfig { v_th_up: -1.0, v_th_down: 1.0, ..cfg(5) };
        assert!(matches!(encode(&sample, &inverted), Err(Error::Config(_))));
        let nan = arr3(&[[[f64::NAN]]]);
        assert!(matches!(encode(&nan, &cfg(5)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn expected_rate_matches_the_normal_cdf() {
        let sample = arr3(&[[[0.0, 1.0, -1.0]]]);
        let rates = expected_rate(&sample, &cfg(10)).unwrap();
        assert_eq!(rates[(0, 0, 0)], 0.5);
        assert!((rates[(0, 0, 1)] - 0.841_345).abs() < 1e-6);
        assert!((rates[(0, 0, 2)] - 0.158_655).abs() < 1e-6);
    }

    #[test]
    fn longer_trains_reconstruct_rates_better() {
        // Mean squared error between empirical and analytic rates shrinks
        // roughly as 1/T; assert a strict decrease along a T chain.
        let mut rng = crate::rng::seeded(17);
        let sample = Array3::from_shape_fn((1, 16, 16), |_| crate::rng::u01(&mut rng) * 4.0 - 2.0);
        let target = expected_rate(&sample, &cfg(2)).unwrap();
        let mut last = f64::INFINITY;
        for t in [2usize, 5, 10, 20, 50] {
            let rate = encode(&sample, &cfg(t)).unwrap().spike_rate::<f64>();
            let mse = rate
                .iter()
                .zip(target.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / rate.len() as f64;
            assert!(mse < last, "MSE did not decrease at T={t}: {mse} vs {last}");
            last = mse;
        }
    }

    #[test]
    fn dump_and_reload_round_trips() {
        let sample = arr3(&[[[0.2, -0.4], [1.1, 0.0]]]);
        let train = encode(&sample, &cfg(13)).unwrap();
        let mut buf = Vec::new();
        train.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + (13 * 4usize).div_ceil(8));
        let back = SpikeTrain::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(train, back);
    }

    #[test]
    fn rejects_malformed_dumps() {
        let train = encode(&arr3(&[[[0.0]]]), &cfg(8)).unwrap();
        let mut buf = Vec::new();
        train.write_to(&mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        let err = SpikeTrain::read_from(&mut bad_magic.as_slice()).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("offset 0")), "{err}");

        let truncated = &buf[..buf.len() - 1];
        assert!(matches!(
            SpikeTrain::read_from(&mut &truncated[..]),
            Err(Error::Format(_))
        ));

        let mut future = buf.clone();
        future[4] = 9;
        assert!(matches!(
            SpikeTrain::read_from(&mut future.as_slice()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bit_accessors_round_trip() {
        let mut train = SpikeTrain::zeros(3, 2, 2, 9);
        train.set(1, 0, 1, 8, true);
        train.set(2, 1, 0, 3, true);
        assert!(train.get(1, 0, 1, 8));
        assert!(train.get(2, 1, 0, 3));
        assert!(!train.get(0, 0, 0, 0));
        assert_eq!(train.count_ones(), 2);
        train.set(1, 0, 1, 8, false);
        assert_eq!(train.count_ones(), 1);
        let plane = train.plane(2);
        assert_eq!(plane[(1, 0, 3)], 1);
        assert_eq!(plane.iter().map(|&b| b as u64).sum::<u64>(), 1);
    }
}
