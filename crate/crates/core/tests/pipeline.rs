//! The whole chain in one process: synthesize a recording, label and window
//! it, train the float network on expected-rate images, map the weights onto
//! the spiking topology, calibrate thresholds, and classify encoded test
//! windows. Everything runs at a deliberately small scale so the suite stays
//! fast; the numbers asserted here are sanity floors, not headline claims.

use ndarray::Array3;
use scnn_core::cnn::{self, train_sgd, TrainConfig};
use scnn_core::convert::{calibrate_max_activation, map_weights};
use scnn_core::eeg::{
    extract_windows, label_intervals, split_train_test, synth_generate, window_input, Label,
    SynthConfig, WindowConfig,
};
use scnn_core::encoder::{encode, expected_rate, EncoderConfig};
use scnn_core::eval;
use scnn_core::network::{Layer, NetworkSpec, Orientation};
use scnn_core::snn::{run_network, ResetMode};

const SEED: u64 = 2024;

/// One conv/pool stack and a classifier head over a [1, 2, 64] input. Kept
/// shallow on purpose: every layer of depth adds spike-propagation latency,
/// and at ten time steps a deeper net spends most of its budget warming up.
fn toy_spec() -> NetworkSpec {
    let spec = NetworkSpec {
        input_shape: [1, 2, 64],
        layers: vec![
            Layer::Conv1d { kernel_h: 1, kernel_w: 5, c_in: 1, c_out: 6, stride: 1 },
            Layer::Relu,
            Layer::MaxPool1d { window: 2, orientation: Orientation::Width },
            Layer::FullyConnected { in_dim: 360, out_dim: 2 },
        ],
    };
    spec.validate().expect("toy topology chains");
    spec
}

fn synth_config() -> SynthConfig {
    SynthConfig {
        duration_s: 900.0,
        channels: 2,
        sample_rate: 16.0,
        seizure_onsets_s: vec![600.0],
        burst_freq_hz: 4.0,
        windows: WindowConfig {
            window_s: 4.0,
            preictal_stride_s: 3.0,
            interictal_stride_s: 4.0,
            pil_s: 120.0,
            sph_s: 10.0,
            lead_gap_s: 60.0,
        },
        ..SynthConfig::default()
    }
}

fn encoder_config() -> EncoderConfig<f64> {
    EncoderConfig { time_steps: 10, seed: SEED, ..EncoderConfig::default() }
}

struct Prepared {
    /// (expected-rate image, label) pairs for the float path.
    train: Vec<(Array3<f64>, usize)>,
    test: Vec<(Array3<f64>, usize)>,
    /// The raw analog windows behind them, for spike encoding.
    train_raw: Vec<Array3<f64>>,
    test_raw: Vec<Array3<f64>>,
}

fn prepare() -> Prepared {
    let cfg = synth_config();
    let (recording, annotations) = synth_generate(&cfg, SEED).unwrap();
    let plan = label_intervals(cfg.duration_s, &annotations, &cfg.windows).unwrap();
    let windows = extract_windows(&recording, &plan, &cfg.windows).unwrap();
    assert_eq!(windows.len(), 201, "39 pre-seizure + 162 background windows");

    let labels: Vec<Label> = windows.iter().map(|w| w.label).collect();
    let (train_idx, test_idx) = split_train_test(&labels, 0.8, SEED).unwrap();
    assert_eq!(train_idx.len(), 161);

    let enc = encoder_config();
    let mut prepared = Prepared {
        train: Vec::new(),
        test: Vec::new(),
        train_raw: Vec::new(),
        test_raw: Vec::new(),
    };
    for (indices, rates, raws) in [
        (&train_idx, &mut prepared.train, &mut prepared.train_raw),
        (&test_idx, &mut prepared.test, &mut prepared.test_raw),
    ] {
        for &i in indices.iter() {
            let input = window_input(&windows[i]);
            rates.push((expected_rate(&input, &enc).unwrap(), windows[i].label.index()));
            raws.push(input);
        }
    }
    prepared
}

fn accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    let counts = eval::confusion(predictions, labels).unwrap();
    eval::metrics(&counts).accuracy.require("accuracy").unwrap()
}

/// The first `per_class` training windows of each class, so threshold
/// calibration sees both regimes. Calibrating on one class alone scales the
/// thresholds to that class's activity and misjudges the other's.
fn balanced_calibration(data: &Prepared, per_class: usize) -> Vec<&Array3<f64>> {
    let mut picked = Vec::new();
    for class in [0usize, 1] {
        picked.extend(
            data.train
                .iter()
                .zip(&data.train_raw)
                .filter(|((_, label), _)| *label == class)
                .take(per_class)
                .map(|(_, raw)| raw),
        );
    }
    picked
}

#[test]
fn float_path_learns_the_synthetic_task() {
    let data = prepare();
    let cfg = TrainConfig { epochs: 12, ..TrainConfig::default() };
    let (net, losses) = train_sgd(&toy_spec(), &data.train, &cfg).unwrap();
    assert_eq!(losses.len(), 12);
    assert!(
        losses[11] < losses[0] * 0.5,
        "loss should at least halve: {:?}",
        losses
    );

    let predictions: Vec<usize> =
        data.test.iter().map(|(x, _)| net.predict(x).unwrap()).collect();
    let labels: Vec<usize> = data.test.iter().map(|&(_, l)| l).collect();
    let acc = accuracy(&predictions, &labels);
    assert!(acc >= 0.85, "float test accuracy {acc}");
}

#[test]
fn converted_network_tracks_the_float_network() {
    let data = prepare();
    let cfg = TrainConfig { epochs: 12, ..TrainConfig::default() };
    let (net, _) = train_sgd(&toy_spec(), &data.train, &cfg).unwrap();

    let enc = encoder_config();
    let mut model = map_weights(&net).unwrap();
    // Carrying the overshoot forward is what lets a firing rate track the
    // float activation; snapping to rest quantizes rates down hard at small
    // step counts.
    for cfg in &mut model.if_cfgs {
        cfg.reset_mode = ResetMode::SubtractThreshold;
    }
    let calibration: Vec<_> = balanced_calibration(&data, 8)
        .iter()
        .map(|w| encode(w, &enc).unwrap())
        .collect();
    calibrate_max_activation(&mut model, &calibration).unwrap();

    let labels: Vec<usize> = data.test.iter().map(|&(_, l)| l).collect();
    let float_predictions: Vec<usize> =
        data.test.iter().map(|(x, _)| net.predict(x).unwrap()).collect();
    let spike_predictions: Vec<usize> = data
        .test_raw
        .iter()
        .map(|w| run_network(&model, &encode(w, &enc).unwrap()).unwrap().decide(0).unwrap())
        .collect();

    let float_acc = accuracy(&float_predictions, &labels);
    let spike_acc = accuracy(&spike_predictions, &labels);
    assert!(
        spike_acc >= float_acc - 0.05,
        "spiking accuracy {spike_acc} fell too far below float accuracy {float_acc}"
    );
    assert!(spike_acc >= 0.9, "spiking accuracy {spike_acc}");
}

#[test]
fn the_chain_is_deterministic_end_to_end() {
    let run = || {
        let data = prepare();
        let cfg = TrainConfig { epochs: 4, ..TrainConfig::default() };
        let (net, _) = train_sgd(&toy_spec(), &data.train, &cfg).unwrap();
        let enc = encoder_config();
        let mut model = map_weights(&net).unwrap();
        let calibration: Vec<_> = data.train_raw[..8]
            .iter()
            .map(|w| encode(w, &enc).unwrap())
            .collect();
        calibrate_max_activation(&mut model, &calibration).unwrap();

        let mut weight_bytes = Vec::new();
        model.write_to(&mut weight_bytes).unwrap();
        let outcomes: Vec<(usize, f64)> = data
            .test_raw
            .iter()
            .take(12)
            .map(|w| {
                let counts = run_network(&model, &encode(w, &enc).unwrap()).unwrap();
                (counts.decide(0).unwrap(), counts.score().unwrap())
            })
            .collect();
        (weight_bytes, outcomes)
    };
    let (bytes_a, outcomes_a) = run();
    let (bytes_b, outcomes_b) = run();
    assert_eq!(bytes_a, bytes_b, "serialized models differ between runs");
    // Scores compare with == deliberately: the runs must match bit for bit.
    assert_eq!(outcomes_a, outcomes_b);
}

#[test]
fn trained_models_survive_the_disk_format() {
    let data = prepare();
    let cfg = TrainConfig { epochs: 4, ..TrainConfig::default() };
    // Train in f32: the container stores 32-bit floats, so an f32 model
    // round-trips bit-exactly.
    let train32: Vec<(Array3<f32>, usize)> = data
        .train
        .iter()
        .map(|(x, l)| (x.mapv(|v| v as f32), *l))
        .collect();
    let (net, _) = train_sgd::<f32>(&toy_spec(), &train32, &cfg).unwrap();

    let enc = EncoderConfig::<f32> { time_steps: 10, seed: SEED, ..EncoderConfig::default() };
    let mut model = map_weights(&net).unwrap();
    let calibration: Vec<_> = data.train_raw[..8]
        .iter()
        .map(|w| encode(&w.mapv(|v| v as f32), &enc).unwrap())
        .collect();
    calibrate_max_activation(&mut model, &calibration).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.scnm");
    model.save(&path).unwrap();
    let loaded = scnn_core::snn::SnnModel::<f32>::load(&path).unwrap();

    assert_eq!(loaded.spec, model.spec);
    assert_eq!(loaded.if_cfgs.len(), model.if_cfgs.len());
    for w in data.test_raw.iter().take(6) {
        let train = encode(&w.mapv(|v| v as f32), &enc).unwrap();
        let a = run_network(&model, &train).unwrap();
        let b = run_network(&loaded, &train).unwrap();
        assert_eq!(a.counts, b.counts);
    }

    // The float side of the same weights also round-trips.
    let wpath = dir.path().join("toy.scnw");
    net.weights.save(&wpath).unwrap();
    let weights = scnn_core::weights::WeightContainer::<f32>::load(&wpath).unwrap();
    let reloaded = cnn::Cnn::new(net.spec.clone(), weights).unwrap();
    for (x, _) in data.test.iter().take(6) {
        let x32 = x.mapv(|v| v as f32);
        assert_eq!(net.forward(&x32).unwrap(), reloaded.forward(&x32).unwrap());
    }
}
