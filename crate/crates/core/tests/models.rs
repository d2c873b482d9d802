use halow_core::models::*;
use halow_core::CoreError;
use halow_nn::LayerSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn det(b: usize) -> ModelSpec {
    ModelSpec::Detector {
        block_len: b,
        channel_map: ChannelMap::Polyphase,
    }
}

#[test]
fn detector_shape_audit() {
    for b in BLOCK_LENS {
        let net = detector_network(b).unwrap();
        let w = b / 4;
        assert_eq!(net.input_shape(), &[4, w]);
        assert_eq!(net.layer_input_shape(2), &[9, w - 7]);
        assert_eq!(net.layer_input_shape(4), &[5, w - 9]);
        assert_eq!(
            net.layers()[4],
            LayerSpec::Dense {
                inputs: 5 * (w - 9),
                outputs: 3
            }
        );
        assert_eq!(net.output_shape(), &[1]);
        match net.layers()[0] {
            LayerSpec::Conv1d {
                filter_len,
                in_channels,
                ..
            } => assert_eq!((filter_len, in_channels), (8, 4)),
            ref l => panic!("first layer {l:?}"),
        }
    }
    for bad in [0, 36, 44, 100] {
        assert!(matches!(
            detector_network(bad),
            Err(CoreError::InvalidArgument(_))
        ));
    }
}

#[test]
fn cfo_architectures() {
    let dnn = cfo_dnn_network();
    assert_eq!(dnn.input_shape(), &[160]);
    assert_eq!(
        dnn.param_count(),
        160 * 32 + 32 + 32 * 64 + 64 + 64 * 16 + 16 + 17
    );
    for cell in [CellKind::Lstm, CellKind::Gru] {
        let net = cfo_rnn_network(cell);
        assert_eq!(net.input_shape(), &[10, 16]);
        assert_eq!(net.layer_input_shape(1), &[30]);
        assert_eq!(net.output_shape(), &[1]);
    }
}

#[test]
fn zero_weights_give_forced_outputs() {
    let m = TrainedModel::zeroed(det(40)).unwrap();
    let block = vec![1.0f32; 40];
    assert_eq!(m.raw_outputs(&[&block]).unwrap(), vec![0.0]);
    assert_eq!(m.detect(&[&block]).unwrap(), vec![Some(0)]);

    let phases = vec![0.3f32; 160];
    for spec in [
        ModelSpec::CfoDnn,
        ModelSpec::CfoRnn {
            cell: CellKind::Lstm,
        },
        ModelSpec::CfoRnn {
            cell: CellKind::Gru,
        },
    ] {
        let m = TrainedModel::zeroed(spec).unwrap();
        assert_eq!(m.estimate_cfo(&[&phases]).unwrap(), vec![0.0]);
    }
}

#[test]
fn codec_round_trip() {
    for b in BLOCK_LENS {
        let c = LabelCodec::new(b).unwrap();
        for label in [None, Some(0), Some(b - 1)] {
            let v = c.encode(label).unwrap();
            assert_eq!(c.decode(v), label);
            assert_eq!(c.encode(c.decode(v)).unwrap(), v);
        }
    }
}

#[test]
fn training_view_targets() {
    let spec = det(40);
    let block = vec![0.5f32; 40];
    let v = training_view(&spec, &[(&block, -1.0), (&block, 39.0), (&block, 0.0)]).unwrap();
    let t: Vec<f32> = v.targets().iter().copied().collect();
    assert_eq!(t, vec![-1.0, 39.0 / 40.0, 0.0]);
    // inputs normalized to unit RMS
    let x = v.inputs();
    assert_eq!(x.shape(), &[3, 4, 10]);
    assert!(x.iter().all(|&e| (e - 1.0).abs() < 1e-6));

    let ph = vec![std::f32::consts::PI; 160];
    let v = training_view(&ModelSpec::CfoDnn, &[(&ph, 15_625.0), (&ph, -7_812.5)]).unwrap();
    let t: Vec<f32> = v.targets().iter().copied().collect();
    assert_eq!(t, vec![1.0, -0.5]);
    assert!(v.inputs().iter().all(|&e| (e - 1.0).abs() < 1e-6));
    let v = training_view(
        &ModelSpec::CfoRnn {
            cell: CellKind::Gru,
        },
        &[(&ph, 0.0)],
    )
    .unwrap();
    assert_eq!(v.inputs().shape(), &[1, 10, 16]);

    assert!(training_view(&spec, &[(&block[..39], 0.0)]).is_err());
    assert!(training_view(&spec, &[(&block, 40.0)]).is_err());
}

#[test]
fn detector_decision_is_scale_invariant() {
    let m = TrainedModel::init(det(80), 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let block: Vec<f32> = (0..80).map(|_| rng.random_range(0.0..2.0)).collect();
        let base = m.raw_outputs(&[&block]).unwrap()[0];
        for c in [1e-3f32, 0.5, 7.0, 1e3] {
            let scaled: Vec<f32> = block.iter().map(|v| v * c).collect();
            let out = m.raw_outputs(&[&scaled]).unwrap()[0];
            assert!((out - base).abs() < 1e-5, "{c}: {out} vs {base}");
            assert_eq!(m.detect(&[&scaled]).unwrap(), m.detect(&[&block]).unwrap());
        }
    }
}

#[test]
fn cfo_output_is_clamped() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for spec in [
        ModelSpec::CfoDnn,
        ModelSpec::CfoRnn {
            cell: CellKind::Lstm,
        },
    ] {
        let m = TrainedModel::init(spec, 9).unwrap();
        let rows: Vec<Vec<f32>> = (0..200)
            .map(|_| (0..160).map(|_| rng.random_range(-1e4..1e4)).collect())
            .collect();
        let refs: Vec<&[f32]> = rows.iter().map(|r| r.as_slice()).collect();
        for hz in m.estimate_cfo(&refs).unwrap() {
            assert!(hz.abs() <= CFO_SCALE_HZ * CFO_SATURATION);
        }
    }
}

#[test]
fn wrong_lengths_and_kinds() {
    let m = TrainedModel::zeroed(det(40)).unwrap();
    let short = vec![0.0f32; 39];
    assert!(matches!(
        m.detect(&[&short]),
        Err(CoreError::InvalidArgument(_))
    ));
    assert!(matches!(
        m.estimate_cfo(&[&short]),
        Err(CoreError::ModelMismatch(_))
    ));
    let c = TrainedModel::zeroed(ModelSpec::CfoDnn).unwrap();
    assert!(matches!(
        c.estimate_cfo(&[&short]),
        Err(CoreError::InvalidArgument(_))
    ));
    assert!(matches!(
        c.detect(&[&short]),
        Err(CoreError::ModelMismatch(_))
    ));
}

#[test]
fn checkpoint_round_trip_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("det40.json");
    let m = TrainedModel::init(det(40), 3).unwrap();
    m.save(&p, &[("seed", serde_json::json!(3))]).unwrap();
    let back = TrainedModel::load(&p).unwrap();
    assert_eq!(back, m);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(manifest["metadata"]["model_kind"], "detector");
    assert_eq!(manifest["metadata"]["block_len"], 40);
    assert_eq!(manifest["metadata"]["seed"], 3);

    assert!(matches!(
        TrainedModel::load_expecting(&p, &det(80)),
        Err(CoreError::ModelMismatch(_))
    ));
    assert!(TrainedModel::load_expecting(&p, &det(40)).is_ok());

    // metadata disagreeing with the stored spec is refused
    let tampered = std::fs::read_to_string(&p).unwrap().replace(
        "\"block_len\": 40,\n    \"model\"",
        "\"block_len\": 80,\n    \"model\"",
    );
    assert_ne!(tampered, std::fs::read_to_string(&p).unwrap());
    std::fs::write(&p, tampered).unwrap();
    assert!(matches!(
        TrainedModel::load(&p),
        Err(CoreError::ModelMismatch(_))
    ));
}

#[test]
fn rnn_checkpoint_names() {
    for (cell, name) in [(CellKind::Lstm, "cfo_lstm"), (CellKind::Gru, "cfo_gru")] {
        let m = TrainedModel::zeroed(ModelSpec::CfoRnn { cell }).unwrap();
        let ck = m.to_checkpoint();
        assert_eq!(ck.metadata["model_kind"], name);
        assert!(ck.metadata["block_len"].is_null());
        assert_eq!(TrainedModel::from_checkpoint(ck).unwrap(), m);
    }
}
