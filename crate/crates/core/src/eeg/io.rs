//! Sidecar formats around a recording: seizure annotations as CSV and
//! extracted window batches as a compact binary container.
//!
//! Annotations travel as a two-column CSV with the exact header
//! `onset_s,offset_s`; read errors name the offending line. Batches start
//! with magic `WNDB`, a u16 format version, then window count, channel
//! count, and width as little-endian u32, followed by each sample as one
//! label byte plus `channels * width` little-endian f32 values. Window
//! origins are scratch metadata and do not survive the trip.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::Cursor;

use super::windows::WindowSample;
use super::{Label, SeizureAnnotations, SeizureEvent};

const BATCH_MAGIC: &[u8; 4] = b"WNDB";
const BATCH_FORMAT_VERSION: u16 = 1;
const ANNOTATION_HEADER: [&str; 2] = ["onset_s", "offset_s"];

pub fn read_annotations_csv(path: impl AsRef<Path>) -> Result<SeizureAnnotations> {
    read_annotations_csv_from(BufReader::new(File::open(path)?))
}

pub fn read_annotations_csv_from(reader: impl Read) -> Result<SeizureAnnotations> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv.headers().map_err(csv_err)?;
    if headers.iter().collect::<Vec<_>>() != ANNOTATION_HEADER {
        return Err(Error::format(format!(
            "annotation header must be \"{}\", found \"{}\"",
            ANNOTATION_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut events = Vec::new();
    for row in csv.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |i: usize, what: &str| -> Result<f64> {
            let raw = row.get(i).ok_or_else(|| {
                Error::format(format!("line {line}: missing {what} column"))
            })?;
            raw.trim().parse().map_err(|_| {
                Error::format(format!("line {line}: unreadable {what} {raw:?}"))
            })
        };
        if row.len() != 2 {
            return Err(Error::format(format!(
                "line {line}: expected 2 columns, found {}",
                row.len()
            )));
        }
        let event = SeizureEvent { onset_s: cell(0, "onset")?, offset_s: cell(1, "offset")? };
        if event.onset_s >= event.offset_s {
            return Err(Error::format(format!(
                "line {line}: onset {} s is not before offset {} s",
                event.onset_s, event.offset_s
            )));
        }
        events.push(event);
    }
    SeizureAnnotations::new(events)
}

pub fn write_annotations_csv(
    path: impl AsRef<Path>,
    annotations: &SeizureAnnotations,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_annotations_csv_to(&mut out, annotations)?;
    Ok(out.flush()?)
}

pub fn write_annotations_csv_to(
    writer: impl Write,
    annotations: &SeizureAnnotations,
) -> Result<()> {
    annotations.validate()?;
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(ANNOTATION_HEADER).map_err(csv_err)?;
    for e in &annotations.events {
        csv.write_record([e.onset_s.to_string(), e.offset_s.to_string()])
            .map_err(csv_err)?;
    }
    Ok(csv.flush()?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::format(format!("annotation CSV: {e}"))
}

pub fn write_windows_batch<S: Scalar>(
    path: impl AsRef<Path>,
    samples: &[WindowSample<S>],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_windows_batch_to(&mut out, samples)?;
    Ok(out.flush()?)
}

pub fn write_windows_batch_to<S: Scalar>(
    mut writer: impl Write,
    samples: &[WindowSample<S>],
) -> Result<()> {
    let (channels, width) = match samples.first() {
        Some(first) => first.data.dim(),
        None => (0, 0),
    };
    for (i, s) in samples.iter().enumerate() {
        if s.data.dim() != (channels, width) {
            return Err(Error::shape(format!(
                "window {i} is {:?}, batch started as {:?}",
                s.data.dim(),
                (channels, width)
            )));
        }
    }
    let count = |n: usize, what: &str| -> Result<u32> {
        u32::try_from(n).map_err(|_| Error::format(format!("{what} {n} exceeds u32 range")))
    };

    writer.write_all(BATCH_MAGIC)?;
    writer.write_all(&BATCH_FORMAT_VERSION.to_le_bytes())?;
    writer.write_all(&count(samples.len(), "window count")?.to_le_bytes())?;
    writer.write_all(&count(channels, "channel count")?.to_le_bytes())?;
    writer.write_all(&count(width, "window width")?.to_le_bytes())?;
    for s in samples {
        writer.write_all(&[s.label.index() as u8])?;
        for x in s.data.iter() {
            writer.write_all(&(x.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_windows_batch<S: Scalar>(path: impl AsRef<Path>) -> Result<Vec<WindowSample<S>>> {
    read_windows_batch_from(BufReader::new(File::open(path)?))
}

pub fn read_windows_batch_from<S: Scalar>(mut reader: impl Read) -> Result<Vec<WindowSample<S>>> {
    let mut cursor = Cursor::new(&mut reader);
    let magic = cursor.bytes::<4>("magic")?;
    if &magic != BATCH_MAGIC {
        return Err(Error::format(format!(
            "bad magic at offset 0: expected {BATCH_MAGIC:?}, found {magic:?}"
        )));
    }
    let version = u16::from_le_bytes(cursor.bytes::<2>("version")?);
    if version != BATCH_FORMAT_VERSION {
        return Err(Error::Unsupported(format!(
            "window batch version {version} (supported: {BATCH_FORMAT_VERSION})"
        )));
    }
    let n = u32::from_le_bytes(cursor.bytes::<4>("window count")?) as usize;
    let channels = u32::from_le_bytes(cursor.bytes::<4>("channel count")?) as usize;
    let width = u32::from_le_bytes(cursor.bytes::<4>("window width")?) as usize;
    let per_window = channels
        .checked_mul(width)
        .filter(|&n| n > 0 || (channels == 0 && width == 0))
        .ok_or_else(|| Error::format("window dimensions overflow"))?;

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let label_byte = cursor.bytes::<1>("label")?[0];
        let label = Label::from_index(label_byte as usize).map_err(|_| {
            Error::format(format!("window {i}: label byte {label_byte} is not a class"))
        })?;
        let payload = cursor.read_vec(per_window * 4, "window payload")?;
        let values: Vec<S> = payload
            .chunks_exact(4)
            .map(|c| S::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        let data = Array2::from_shape_vec((channels, width), values)
            .expect("payload length matches declared shape");
        out.push(WindowSample { data, label, origin: None });
    }
    Ok(out)
}
