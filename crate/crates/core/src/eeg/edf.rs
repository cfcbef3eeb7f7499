//! Reading and writing a pragmatic subset of the EDF recording format.
//!
//! Layout: a 256-byte fixed header, then 256 bytes of signal header per
//! signal (stored field-major: all labels, then all transducer fields, and
//! so on), then data records of little-endian 16-bit samples, one block per
//! signal per record. A digital sample `d` maps to a physical value via
//!
//! ```text
//! physical = (d - dmin) * (pmax - pmin) / (dmax - dmin) + pmin
//! ```
//!
//! The subset deliberately excludes interrupted recordings (`EDF+D`),
//! signals with differing per-record sample counts, and unknown record
//! counts (-1); those all surface as [`Error::Unsupported`]. The writer
//! emits one record per second, a symmetric physical range per channel, and
//! the full 16-bit digital range.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

use super::EegRecording;

const HEADER: usize = 256;
const PER_SIGNAL: usize = 256;
const DIG_MIN: f64 = -32768.0;
const DIG_MAX: f64 = 32767.0;

pub fn read_edf(path: impl AsRef<Path>) -> Result<EegRecording<f64>> {
    let bytes = std::fs::read(path.as_ref())?;
    let mut rec = read_edf_from(&bytes)?;
    if rec.id.is_empty() {
        if let Some(stem) = path.as_ref().file_stem().and_then(|s| s.to_str()) {
            rec.id = stem.to_string();
        }
    }
    Ok(rec)
}

pub fn read_edf_from(bytes: &[u8]) -> Result<EegRecording<f64>> {
    if bytes.len() < HEADER {
        return Err(truncated(HEADER, bytes.len()));
    }
    let text = |range: std::ops::Range<usize>| -> Result<&str> {
        std::str::from_utf8(&bytes[range.clone()])
            .map(str::trim)
            .map_err(|_| Error::format(format!("non-ASCII header field at byte {}", range.start)))
    };

    if text(192..236)?.starts_with("EDF+D") {
        return Err(Error::Unsupported(
            "interrupted recordings (EDF+D) are not handled".into(),
        ));
    }
    let header_bytes: usize = parse(text(184..192)?, "header byte count")?;
    let n_records: i64 = parse(text(236..244)?, "record count")?;
    let record_duration: f64 = parse(text(244..252)?, "record duration")?;
    let ns: usize = parse(text(252..256)?, "signal count")?;

    if ns == 0 {
        return Err(Error::format("file declares zero signals"));
    }
    if n_records < 0 {
        return Err(Error::Unsupported(format!(
            "record count {n_records} (files with unknown length are not handled)"
        )));
    }
    if header_bytes != HEADER + ns * PER_SIGNAL {
        return Err(Error::format(format!(
            "header byte count {header_bytes} does not match {ns} signals"
        )));
    }
    if bytes.len() < header_bytes {
        return Err(truncated(header_bytes, bytes.len()));
    }

    // Signal header block, field-major. Offsets are relative to byte 256.
    let field = |field_start: usize, width: usize, s: usize| -> Result<&str> {
        let at = HEADER + field_start * ns + s * width;
        text(at..at + width)
    };
    let mut id = text(88..168)?.to_string();
    if id.is_empty() {
        id = text(8..88)?.to_string();
    }
    let mut pmin = Vec::with_capacity(ns);
    let mut pmax = Vec::with_capacity(ns);
    let mut dmin = Vec::with_capacity(ns);
    let mut dmax = Vec::with_capacity(ns);
    let mut spr = Vec::with_capacity(ns);
    for s in 0..ns {
        pmin.push(parse::<f64>(field(16 + 80 + 8, 8, s)?, "physical minimum")?);
        pmax.push(parse::<f64>(field(16 + 80 + 16, 8, s)?, "physical maximum")?);
        dmin.push(parse::<f64>(field(16 + 80 + 24, 8, s)?, "digital minimum")?);
        dmax.push(parse::<f64>(field(16 + 80 + 32, 8, s)?, "digital maximum")?);
        spr.push(parse::<usize>(field(16 + 80 + 40 + 80, 8, s)?, "samples per record")?);
        if pmax[s] <= pmin[s] || dmax[s] <= dmin[s] {
            return Err(Error::format(format!(
                "signal {s} has an empty physical or digital range"
            )));
        }
    }
    if spr.iter().any(|&n| n != spr[0]) {
        return Err(Error::Unsupported(format!(
            "signals with differing sample counts per record ({spr:?})"
        )));
    }
    let spr = spr[0];
    if spr == 0 || !(record_duration > 0.0) {
        return Err(Error::format("empty data records"));
    }

    let n_records = n_records as usize;
    let expected = header_bytes + n_records * ns * spr * 2;
    if bytes.len() != expected {
        return Err(truncated(expected, bytes.len()));
    }

    let mut samples = Array2::zeros((ns, n_records * spr));
    let mut at = header_bytes;
    for r in 0..n_records {
        for s in 0..ns {
            let scale = (pmax[s] - pmin[s]) / (dmax[s] - dmin[s]);
            for k in 0..spr {
                let d = i16::from_le_bytes([bytes[at], bytes[at + 1]]) as f64;
                samples[[s, r * spr + k]] = (d - dmin[s]) * scale + pmin[s];
                at += 2;
            }
        }
    }

    Ok(EegRecording { id, sample_rate: spr as f64 / record_duration, samples })
}

pub fn write_edf(path: impl AsRef<Path>, recording: &EegRecording<f64>) -> Result<()> {
    Ok(std::fs::write(path, write_edf_to(recording)?)?)
}

pub fn write_edf_to(recording: &EegRecording<f64>) -> Result<Vec<u8>> {
    recording.validate()?;
    let ns = recording.channels();
    let n = recording.samples.ncols();
    let rate = recording.sample_rate;
    if rate.fract() != 0.0 || n % rate as usize != 0 {
        return Err(Error::Unsupported(format!(
            "writing needs an integer sample rate dividing the sample count \
             ({n} samples at {rate} Hz)"
        )));
    }
    let spr = rate as usize;
    let n_records = n / spr;
    if !recording.samples.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid_input("samples must be finite"));
    }

    // Symmetric physical range per channel, snapped to what the 8-character
    // header field can hold so reader and writer agree exactly. Nudge upward
    // until the formatted value covers the data, so nothing clips.
    let mut ranges = Vec::with_capacity(ns);
    for row in recording.samples.rows() {
        let mut peak = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if peak == 0.0 {
            peak = 1.0;
        }
        let mut target = peak;
        let (mut text, mut value) = fit7(target);
        while value < peak {
            // A formatted mantissa can round down by up to a third; one 1.6x
            // step always clears it (round(1.6m) >= m for m >= 1).
            target *= 1.6;
            (text, value) = fit7(target);
        }
        ranges.push((text, value));
    }

    let mut out = Vec::with_capacity(HEADER + ns * PER_SIGNAL + n * ns * 2);
    let mut put = |width: usize, s: &str| {
        let mut f = s.as_bytes().to_vec();
        f.truncate(width);
        f.resize(width, b' ');
        out.extend_from_slice(&f);
    };
    put(8, "0");
    put(80, "X");
    put(80, &recording.id);
    put(8, "01.01.01");
    put(8, "00.00.00");
    put(8, &(HEADER + ns * PER_SIGNAL).to_string());
    put(44, "");
    put(8, &n_records.to_string());
    put(8, "1");
    put(4, &ns.to_string());

    for s in 0..ns {
        put(16, &format!("ch{s}"));
    }
    for _ in 0..ns {
        put(80, "");
    }
    for _ in 0..ns {
        put(8, "uV");
    }
    for (text, _) in &ranges {
        put(8, &format!("-{text}"));
    }
    for (text, _) in &ranges {
        put(8, text);
    }
    for _ in 0..ns {
        put(8, "-32768");
    }
    for _ in 0..ns {
        put(8, "32767");
    }
    for _ in 0..ns {
        put(80, "");
    }
    for _ in 0..ns {
        put(8, &spr.to_string());
    }
    for _ in 0..ns {
        put(32, "");
    }

    for r in 0..n_records {
        for s in 0..ns {
            let a = ranges[s].1;
            let scale = (DIG_MAX - DIG_MIN) / (2.0 * a);
            for k in 0..spr {
                let x = recording.samples[[s, r * spr + k]];
                let d = ((x + a) * scale + DIG_MIN).round().clamp(DIG_MIN, DIG_MAX);
                out.extend_from_slice(&(d as i16).to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Format a positive value into at most 7 ASCII characters — so the value
/// and its negation both fit an 8-character field — and reparse, so the
/// caller works with exactly what a reader of the file will see.
fn fit7(value: f64) -> (String, f64) {
    let plain = format!("{value}");
    let text = if plain.len() <= 7 {
        plain
    } else {
        [2usize, 1, 0]
            .iter()
            .map(|&p| format!("{value:.p$e}"))
            .find(|t| t.len() <= 7)
            .expect("{:.0e} of a finite f64 fits 7 characters")
    };
    let parsed = text.parse::<f64>().expect("fit7 output reparses");
    (text, parsed)
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::format(format!("unreadable {what}: {s:?}")))
}

fn truncated(expected: usize, actual: usize) -> Error {
    Error::format(format!("truncated file: expected {expected} bytes, found {actual}"))
}
