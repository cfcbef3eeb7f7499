//! Seeded random-number utilities.
//!
//! Everything random in this crate flows through ChaCha8 — a counter-based
//! stream cipher RNG whose output is specified exactly, so seeded runs
//! reproduce bit-for-bit on any platform. Gaussian variates use the
//! Box–Muller transform on top of [`crate::detmath`], keeping the whole
//! sampling path free of platform libm calls.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detmath;

const TWO_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// RNG for a whole component (weight init, shuffling, synthesis).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent RNG for one encoder time step.
///
/// ChaCha streams make the derivation collision-free: stream `t + 1` is used
/// so step generators never coincide with the default stream 0 handed out by
/// [`seeded`] for the same seed.
pub fn step_rng(seed: u64, t: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64 + 1);
    rng
}

/// Uniform on [0, 1), 53-bit resolution.
pub fn u01<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_NEG_53
}

/// Uniform on (0, 1], 53-bit resolution. Never zero, so it is safe to take
/// its logarithm.
pub fn u01_open<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * TWO_NEG_53
}

/// Uniform integer in [0, n) via Lemire's multiply-shift. The modulo bias is
/// below n/2^64 — irrelevant here; what matters is that the mapping is fixed.
pub fn bounded<R: RngCore>(rng: &mut R, n: u64) -> u64 {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as u64
}

/// In-place Fisher–Yates shuffle.
///
/// Hand-rolled rather than taken from the `rand` crate so the permutation for
/// a given seed is pinned by this crate alone and cannot drift with a
/// dependency upgrade.
pub fn shuffle<T, R: RngCore>(xs: &mut [T], rng: &mut R) {
    for i in (1..xs.len()).rev() {
        let j = bounded(rng, i as u64 + 1) as usize;
        xs.swap(i, j);
    }
}

/// Standard-normal sampler: Box–Muller over ChaCha uniforms.
///
/// Each draw pair costs one `ln`, one `sqrt` and one sine/cosine evaluation,
/// all from [`crate::detmath`], so a seeded stream of variates is
/// platform-independent down to the last bit. The second variate of each pair
/// is cached and handed out on the next call.
pub struct NormalSampler<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> NormalSampler<R> {
    pub fn new(rng: R) -> Self {
        NormalSampler { rng, spare: None }
    }

    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = u01_open(&mut self.rng);
        let u2 = u01(&mut self.rng);
        let r = (-2.0 * detmath::ln(u1)).sqrt();
        let (s, c) = detmath::sin_cos_2pi(u2);
        self.spare = Some(r * s);
        r * c
    }
}
