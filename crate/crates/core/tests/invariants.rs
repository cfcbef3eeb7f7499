//! Randomized invariants: properties that must hold for arbitrary inputs,
//! not just the hand-picked fixtures in the unit suites.

use ndarray::{Array2, Array3};
use proptest::prelude::*;
use scnn_core::eeg::{
    extract_windows, label_intervals, split_train_test, EegRecording, IntervalPlan, Label,
    SeizureAnnotations, SeizureEvent, WindowConfig,
};
use scnn_core::encoder::{encode, expected_rate, EncoderConfig, SpikeTrain};

fn window_config(window_s: f64, stride_s: f64) -> WindowConfig {
    WindowConfig {
        window_s,
        preictal_stride_s: stride_s,
        interictal_stride_s: stride_s,
        ..WindowConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Empirical spike rates land within four standard errors of the
    /// analytic rate, for arbitrary values and spreads.
    #[test]
    fn encoded_rates_follow_the_analytic_law(
        values in proptest::collection::vec(-2.0f64..2.0, 4),
        sigma in 0.3f64..2.0,
        seed in any::<u64>(),
    ) {
        let t = 1500usize;
        let cfg = EncoderConfig { time_steps: t, sigma: Some(sigma), seed, ..EncoderConfig::default() };
        let sample = Array3::from_shape_vec((1, 1, values.len()), values).unwrap();
        let train = encode(&sample, &cfg).unwrap();
        let rates = expected_rate(&sample, &cfg).unwrap();
        for (i, &p) in rates.iter().enumerate() {
            let mut fired = 0u64;
            for step in 0..t {
                fired += u64::from(train.get(step, 0, 0, i));
            }
            let empirical = fired as f64 / t as f64;
            let tolerance = 4.0 * (p * (1.0 - p) / t as f64).sqrt() + 1e-3;
            prop_assert!(
                (empirical - p).abs() <= tolerance,
                "value {}: empirical {empirical} vs analytic {p}",
                sample[[0, 0, i]]
            );
        }
    }

    /// Window counts on a whole-second interval match the closed form
    /// floor((span - window) / stride) + 1.
    #[test]
    fn window_counts_match_the_closed_form(
        span_s in 1usize..400,
        window_s in 1usize..30,
        stride_s in 1usize..30,
    ) {
        let rate = 8.0;
        let cfg = window_config(window_s as f64, stride_s as f64);
        let recording = EegRecording {
            id: "prop".into(),
            sample_rate: rate,
            samples: Array2::from_elem((1, span_s * 8), 0.0f64),
        };
        let plan = IntervalPlan {
            interictal: vec![(0.0, span_s as f64)],
            ..IntervalPlan::default()
        };
        let got = extract_windows(&recording, &plan, &cfg).unwrap().len();
        let expected = if span_s >= window_s {
            (span_s - window_s) / stride_s + 1
        } else {
            0
        };
        prop_assert_eq!(got, expected);
    }

    /// The three interval lists always partition the recording: mutually
    /// disjoint, jointly exhaustive, and only lead seizures get a
    /// pre-seizure span.
    #[test]
    fn interval_plans_partition_the_timeline(
        duration_h in 2.0f64..30.0,
        gaps in proptest::collection::vec(200.0f64..20_000.0, 0..5),
        pil in 300.0f64..2000.0,
        sph in 0.0f64..400.0,
        lead_gap in 500.0f64..15_000.0,
    ) {
        let duration = duration_h * 3600.0;
        let mut events = Vec::new();
        let mut t = 0.0;
        for gap in &gaps {
            t += gap;
            let end = t + 60.0;
            if end >= duration {
                break;
            }
            events.push(SeizureEvent { onset_s: t, offset_s: end });
            t = end;
        }
        let annotations = SeizureAnnotations::new(events).unwrap();
        let cfg = WindowConfig { pil_s: pil, sph_s: sph, lead_gap_s: lead_gap, ..WindowConfig::default() };
        let plan = label_intervals(duration, &annotations, &cfg).unwrap();

        let mut spans: Vec<(f64, f64)> = Vec::new();
        spans.extend(&plan.preictal);
        spans.extend(&plan.interictal);
        spans.extend(&plan.excluded);
        spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut cursor = 0.0;
        for &(a, b) in &spans {
            prop_assert!(a >= cursor - 1e-9, "overlap at {a}");
            prop_assert!(b > a);
            cursor = b;
        }
        prop_assert!((cursor - duration).abs() < 1e-9, "covered up to {cursor} of {duration}");

        let lead_count = annotations
            .events
            .iter()
            .enumerate()
            .filter(|(i, e)| {
                *i == 0 || e.onset_s - annotations.events[i - 1].offset_s >= lead_gap
            })
            .count();
        prop_assert!(plan.preictal.len() <= lead_count);
    }

    /// Splits are partitions with both classes on both sides and a total
    /// within one sample of the requested fraction.
    #[test]
    fn splits_stay_stratified(
        interictal in 2usize..80,
        preictal in 2usize..80,
        frac in 0.5f64..0.9,
        seed in any::<u64>(),
    ) {
        let mut labels = vec![Label::Interictal; interictal];
        labels.extend(vec![Label::Preictal; preictal]);
        let (train, test) = split_train_test(&labels, frac, seed).unwrap();

        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());

        for part in [&train, &test] {
            prop_assert!(part.iter().any(|&i| labels[i] == Label::Interictal));
            prop_assert!(part.iter().any(|&i| labels[i] == Label::Preictal));
        }
        let target = (frac * labels.len() as f64).round() as usize;
        prop_assert!(train.len().abs_diff(target) <= 1);
    }

    /// Spike trains of any shape survive serialization bit for bit.
    #[test]
    fn spike_trains_round_trip(
        t in 1usize..6,
        c in 1usize..4,
        h in 1usize..4,
        w in 1usize..10,
        fill in proptest::collection::vec(any::<bool>(), 1..64),
    ) {
        let mut train = SpikeTrain::zeros(t, c, h, w);
        let mut k = 0usize;
        for step in 0..t {
            for ci in 0..c {
                for hi in 0..h {
                    for wi in 0..w {
                        train.set(step, ci, hi, wi, fill[k % fill.len()]);
                        k += 1;
                    }
                }
            }
        }
        let mut bytes = Vec::new();
        train.write_to(&mut bytes).unwrap();
        let back = SpikeTrain::read_from(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(train, back);
    }
}
