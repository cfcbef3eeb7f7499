//! Labeling a recording's timeline into pre-seizure, background, and
//! excluded spans.

use crate::error::Result;

use super::{SeizureAnnotations, WindowConfig};

/// Disjoint spans `[start, end)` in seconds covering the whole recording.
///
/// `excluded` is everything that is neither class: seizures themselves, the
/// horizon before each onset, the clearance zone around seizures, and the
/// surroundings of seizures that follow too closely on a previous one to get
/// a pre-seizure interval.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalPlan {
    pub preictal: Vec<(f64, f64)>,
    pub interictal: Vec<(f64, f64)>,
    pub excluded: Vec<(f64, f64)>,
}

/// Partition `[0, duration_s)` according to the annotations.
///
/// A seizure earns a pre-seizure interval `[onset - sph - pil, onset - sph)`
/// only if it is the recording's first or starts at least `lead_gap_s` after
/// the previous seizure's end. Background spans keep `lead_gap_s` clearance
/// from every seizure in both directions.
pub fn label_intervals(
    duration_s: f64,
    annotations: &SeizureAnnotations,
    cfg: &WindowConfig,
) -> Result<IntervalPlan> {
    cfg.validate()?;
    annotations.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(crate::error::Error::invalid_input(format!(
            "recording duration must be positive, got {duration_s} s"
        )));
    }

    let clip = |a: f64, b: f64| (a.max(0.0), b.min(duration_s));

    let mut preictal = Vec::new();
    for (i, e) in annotations.events.iter().enumerate() {
        let is_lead =
            i == 0 || e.onset_s - annotations.events[i - 1].offset_s >= cfg.lead_gap_s;
        if !is_lead {
            continue;
        }
        let (mut a, b) = clip(e.onset_s - cfg.sph_s - cfg.pil_s, e.onset_s - cfg.sph_s);
        if i > 0 {
            // Never reach back across an earlier seizure.
            a = a.max(annotations.events[i - 1].offset_s);
        }
        if b > a {
            preictal.push((a, b));
        }
    }

    // Background: the complement of the merged clearance zones. Pre-seizure
    // spans join the keep-out set so the two classes never overlap even when
    // the horizon reaches past the clearance (pil + sph > lead_gap).
    let mut keep_out: Vec<(f64, f64)> = annotations
        .events
        .iter()
        .map(|e| clip(e.onset_s - cfg.lead_gap_s, e.offset_s + cfg.lead_gap_s))
        .chain(preictal.iter().copied())
        .filter(|&(a, b)| b > a)
        .collect();
    keep_out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let keep_out = merge(keep_out);
    let interictal = complement(duration_s, &keep_out);

    // Excluded: what neither class claimed.
    let mut claimed: Vec<(f64, f64)> = preictal.iter().chain(&interictal).copied().collect();
    claimed.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let excluded = complement(duration_s, &merge(claimed));

    Ok(IntervalPlan { preictal, interictal, excluded })
}

/// Merge a sorted span list into maximal disjoint spans.
fn merge(spans: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (a, b) in spans {
        match out.last_mut() {
            Some((_, end)) if a <= *end => *end = end.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Gaps of a sorted disjoint span list within `[0, duration)`.
fn complement(duration_s: f64, spans: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut cursor = 0.0;
    for &(a, b) in spans {
        if a > cursor {
            out.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if cursor < duration_s {
        out.push((cursor, duration_s));
    }
    out
}
