//! Deterministic elementary functions.
//!
//! The spike encoder guarantees bit-identical output across platforms, but
//! `f64::ln`/`sin`/`cos`/`exp` defer to the platform libm whose last-ulp
//! behaviour differs between systems. Everything the encoder and the
//! synthetic-EEG generator need is therefore implemented here on top of
//! IEEE-754 operations that round identically everywhere: add, sub, mul, div
//! and sqrt. Each function uses a fixed range reduction plus a fixed-length
//! series, so the same input yields the same bits on every platform.
//!
//! Accuracy is a few ulp (see the tests, which compare against the platform
//! libm at 1e-14 relative) — orders of magnitude tighter than any tolerance
//! used elsewhere in the crate.

use std::f64::consts::{FRAC_2_SQRT_PI, FRAC_PI_2, LOG2_E, SQRT_2};

// Cody–Waite split of ln(2): LN2_HI has zeroed low mantissa bits so that
// k * LN2_HI is exact for the |k| <= 1075 used here.
const LN2_HI: f64 = 6.931_471_803_691_238_16e-1; // 0x3FE62E42FEE00000
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10; // 0x3DEA39EF35793C76

/// 2^k for k in [-1022, 1023], built from bits (exact).
fn pow2i(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// e^x with deterministic rounding. Matches libm to < 1 ulp of relative error.
pub fn exp(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 709.8 {
        return f64::INFINITY;
    }
    if x < -745.2 {
        return 0.0;
    }
    // x = k*ln2 + r, |r| <= ln2/2; e^x = 2^k * e^r.
    let k = (x * LOG2_E).round();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=17 {
        term *= r / n as f64;
        sum += term;
    }
    // Split the scaling so subnormal/overflow edges stay correct.
    let k = k as i64;
    let k1 = k.clamp(-1000, 1000);
    sum * pow2i(k1) * pow2i(k - k1)
}

/// Natural logarithm with deterministic rounding.
pub fn ln(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    // Normalize subnormals so the exponent extraction below is exact.
    let (x, e_off) = if x < f64::MIN_POSITIVE {
        (x * pow2i(54), -54i64)
    } else {
        (x, 0)
    };
    let bits = x.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    if m > SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    // ln m = 2 atanh(s), s = (m-1)/(m+1), |s| <= 0.1716.
    let s = (m - 1.0) / (m + 1.0);
    let s2 = s * s;
    let mut sum = 0.0;
    let mut sp = s;
    let mut n = 1;
    while n <= 25 {
        sum += sp / n as f64;
        sp *= s2;
        n += 2;
    }
    let ef = (e + e_off) as f64;
    ef * LN2_HI + (2.0 * sum + ef * LN2_LO)
}

fn sin_quarter(theta: f64) -> f64 {
    // Taylor series on [0, pi/2]; 12 terms bound the tail below 1e-20.
    let t2 = theta * theta;
    let mut term = theta;
    let mut sum = theta;
    for k in 1..=12 {
        term *= -t2 / ((2 * k) * (2 * k + 1)) as f64;
        sum += term;
    }
    sum
}

fn cos_quarter(theta: f64) -> f64 {
    let t2 = theta * theta;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=13 {
        term *= -t2 / ((2 * k - 1) * (2 * k)) as f64;
        sum += term;
    }
    sum
}

/// (sin(2*pi*u), cos(2*pi*u)) with deterministic rounding.
///
/// Taking the argument as a *turn* (u in [0,1), reduced by `u - floor(u)`
/// otherwise) makes the quadrant reduction exact — no multiple of pi is ever
/// subtracted, so there is no cancellation for large arguments.
pub fn sin_cos_2pi(u: f64) -> (f64, f64) {
    debug_assert!(u.is_finite());
    let u = u - u.floor();
    let t = 4.0 * u;
    let q = t.floor();
    let theta = (t - q) * FRAC_PI_2;
    let (s, c) = (sin_quarter(theta), cos_quarter(theta));
    match q as u8 {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Error function with deterministic rounding.
///
/// Uses the all-positive-term confluent series
/// erf(x) = (2/sqrt(pi)) * x * e^(-x^2) * sum_n (2x^2)^n / (3*5*...*(2n+1)),
/// which is cancellation-free over the whole range used here. Beyond |x| = 6
/// the result is +-1 to well below one ulp.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax >= 6.0 {
        return 1.0f64.copysign(x);
    }
    let x2 = ax * ax;
    let mut sum = 0.0;
    let mut term = ax;
    let mut n = 0u32;
    loop {
        sum += term;
        term *= 2.0 * x2 / (2 * n + 3) as f64;
        n += 1;
        if term < sum * 1e-17 || n > 400 {
            sum += term;
            break;
        }
    }
    FRAC_2_SQRT_PI * exp(-x2) * sum * 1.0f64.copysign(x)
}

/// Standard normal CDF, Phi(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}
