use halow_core::dataset::*;
use halow_core::eval::*;
use halow_core::models::*;
use halow_core::phy::PreambleSpec;
use halow_core::sync::SyncConfig;
use halow_nn::Network;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn perfect_detection() {
    let labels = vec![Some(3), None, Some(0), Some(39), None];
    let snrs = vec![1.0, 4.0, 9.5, 20.0, 24.9];
    let r = detection_metrics(&labels, &labels, &snrs, 1.0).unwrap();
    assert_eq!(r.overall_mae, Some(0.0));
    assert_eq!((r.miss_rate, r.false_alarm_rate), (0.0, 0.0));
    assert_eq!(r.n_records, 5);
    assert_eq!(r.bins.len(), 24);
}

#[test]
fn never_detecting() {
    let labels: Vec<Option<usize>> = (0..100).map(|i| (i % 2 == 0).then_some(i % 40)).collect();
    let preds = vec![None; 100];
    let snrs: Vec<f64> = (0..100).map(|i| (i % 25) as f64).collect();
    let r = detection_metrics(&preds, &labels, &snrs, 1.0).unwrap();
    assert_eq!(r.miss_rate, 1.0);
    assert_eq!(r.false_alarm_rate, 0.0);
    assert_eq!(r.overall_mae, None);
    assert!(r.bins.iter().all(|b| b.mae.is_none()));
}

#[test]
fn six_record_fixture() {
    let preds = [Some(3), Some(5), None, None, Some(2), None];
    let labels = [Some(1), Some(5), Some(7), None, None, None];
    let snrs = [2.0, 2.5, 3.1, 3.9, 10.0, 10.5];
    let r = detection_metrics(&preds, &labels, &snrs, 1.0).unwrap();
    // scored pairs |3-1| and |5-5|
    assert_eq!(r.overall_mae, Some(1.0));
    assert!(close(r.miss_rate, 1.0 / 3.0));
    assert!(close(r.false_alarm_rate, 1.0 / 3.0));
    assert_eq!(r.bins.len(), 9);
    let b2 = &r.bins[0];
    assert_eq!((b2.snr_db, b2.n, b2.n_scored), (2.0, 2, 2));
    assert_eq!(
        (b2.mae, b2.miss_rate, b2.false_alarm_rate),
        (Some(1.0), Some(0.0), None)
    );
    let b3 = &r.bins[1];
    assert_eq!(
        (b3.mae, b3.miss_rate, b3.false_alarm_rate),
        (None, Some(1.0), Some(0.0))
    );
    for b in &r.bins[2..8] {
        assert_eq!((b.n, b.mae, b.miss_rate), (0, None, None));
    }
    let b10 = &r.bins[8];
    assert_eq!(
        (b10.snr_db, b10.false_alarm_rate, b10.miss_rate),
        (10.0, Some(0.5), None)
    );
    assert_eq!(r.mae_between(0.0, 5.0), Some(1.0));
    assert_eq!(r.mae_between(5.0, 20.0), None);

    let r5 = detection_metrics(&preds, &labels, &snrs, 5.0).unwrap();
    assert_eq!(
        r5.bins.iter().map(|b| b.n).collect::<Vec<_>>(),
        vec![4, 0, 2]
    );

    assert!(detection_metrics(&preds[..5], &labels, &snrs, 1.0).is_err());
    assert!(detection_metrics(&[], &[], &[], 1.0).is_err());
    assert!(detection_metrics(&preds, &labels, &snrs, 0.0).is_err());
}

#[test]
fn nan_snr_records_count_but_are_not_binned() {
    let r = detection_metrics(
        &[Some(1), Some(2)],
        &[Some(1), Some(4)],
        &[f64::NAN, 3.0],
        1.0,
    )
    .unwrap();
    assert_eq!(r.overall_mae, Some(1.0));
    assert_eq!(r.bins.len(), 1);
    assert_eq!(r.bins[0].n, 1);
}

#[test]
fn cfo_fixtures() {
    let labels = [100.0, -3000.0, 15_000.0, 0.0];
    let snrs = [1.0, 5.0, 9.0, 13.0];
    let r = cfo_metrics(&labels, &labels, &snrs, 1.0).unwrap();
    assert_eq!(r.overall_mae, Some(0.0));
    assert_eq!(r.scatter.len(), 4);

    let biased: Vec<f64> = labels.iter().map(|l| l + 100.0).collect();
    let r = cfo_metrics(&biased, &labels, &snrs, 5.0).unwrap();
    assert!(close(r.overall_mae.unwrap(), 100.0));
    assert!(r
        .bins
        .iter()
        .all(|b| b.mae.map_or(true, |m| close(m, 100.0))));
    assert_eq!(r.outliers, Some(0));

    // errors 10, 20, 0, 5000, 3: median 10, one beyond 10x
    let preds = [10.0, -20.0, 0.0, 5000.0, 3.0];
    let r = cfo_metrics(&preds, &[0.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], 1.0).unwrap();
    assert!(close(r.overall_mae.unwrap(), 5033.0 / 5.0));
    assert_eq!(r.outliers, Some(1));
    assert_eq!(r.scatter[3], (0.0, 5000.0));
    assert_eq!(r.bins[3].mae, Some(5000.0));
}

#[test]
fn layer_flops_examples() {
    let d = layer_flops(FlopsQuery::Dense { n_i: 160, n_o: 32 });
    assert_eq!((d.mul, d.add), (5120, 5152));
    let s = layer_flops(FlopsQuery::SimpleCell { u: 30, nf: 16 });
    assert_eq!((s.mul, s.add), (1440, 1410));
    assert_eq!(
        layer_flops(FlopsQuery::Lstm { u: 30, nf: 16 }).total(),
        4 * 2850
    );
    assert_eq!(
        layer_flops(FlopsQuery::Gru { u: 30, nf: 16 }).total(),
        3 * 2850
    );
    let c = layer_flops(FlopsQuery::Conv1d {
        f: 8,
        ch_i: 4,
        ch_o: 9,
        k: 3,
    });
    assert_eq!((c.mul, c.add), (864, 1080));
}

#[test]
fn cfo_network_totals() {
    // 160-32-64-16-1: 10272 + 4160 + 2064 + 33
    let dnn = network_flops(&cfo_dnn_network());
    assert_eq!(dnn.total.total(), 16_529);
    assert_eq!(dnn.items.len(), 4);
    // one cell step (2850 x 4 or x 3) + dense 30-5 (305) + dense 5-1 (11)
    let lstm = network_flops(&cfo_rnn_network(CellKind::Lstm));
    assert_eq!(lstm.total.total(), 11_716);
    let gru = network_flops(&cfo_rnn_network(CellKind::Gru));
    assert_eq!(gru.total.total(), 8_866);

    let published: std::collections::HashMap<_, _> = PUBLISHED_CFO_FLOPS.into_iter().collect();
    for (name, ours) in [("dnn", 16_529), ("lstm", 11_716), ("gru", 8_866)] {
        let gap = relative_gap(ours, published[name]);
        assert!(gap.abs() <= 0.05, "{name}: {gap}");
    }
    let conv = conventional_cfo_flops(&PreambleSpec::default(), &SyncConfig::default());
    assert_eq!((conv.coarse_products, conv.fine_products), (128, 96));
    assert_eq!(conv.total, published["conventional"]);
    assert!(conv.real.total() > conv.total);
}

#[test]
fn detector_network_flops() {
    // first conv at B = 40: k = 10 - 8 + 1
    let b40 = network_flops(&detector_network(40).unwrap());
    assert_eq!(b40.items[0].flops.total(), 864 + 1080);
    for b in BLOCK_LENS {
        let w = (b / 4) as u64;
        let net = network_flops(&detector_network(b).unwrap());
        let expect = layer_flops(FlopsQuery::Conv1d {
            f: 8,
            ch_i: 4,
            ch_o: 9,
            k: w - 7,
        })
        .total()
            + layer_flops(FlopsQuery::Conv1d {
                f: 3,
                ch_i: 9,
                ch_o: 5,
                k: w - 9,
            })
            .total()
            + layer_flops(FlopsQuery::Dense {
                n_i: 5 * (w - 9),
                n_o: 3,
            })
            .total()
            + layer_flops(FlopsQuery::Dense { n_i: 3, n_o: 1 }).total();
        assert_eq!(net.total.total(), expect);
    }
}

#[test]
fn empty_network_costs_nothing() {
    if let Ok(net) = Network::new(vec![4], vec![]) {
        let f = network_flops(&net);
        assert!(f.items.is_empty());
        assert_eq!(f.total.total(), 0);
    }
    let none: Flops = Vec::<Flops>::new().into_iter().sum();
    assert_eq!(none.total(), 0);
}

#[test]
fn throughput_properties() {
    let per = Flops {
        mul: 1000,
        add: 1000,
    };
    let a = detector_throughput_flops(per, 40, 1e6);
    let b = detector_throughput_flops(per, 80, 1e6);
    assert!(close(a, 2.0 * b));
    assert!(close(a, 2000.0 * 1e6 / 40.0));
    assert_eq!(
        conventional_detector_flops().per_sample,
        Flops { mul: 16, add: 12 }
    );
    assert!(close(conventional_detector_flops_per_second(1e6), 28e6));
    // valid-conv edge loss shrinks as blocks grow, so the per-second cost rises
    let rates: Vec<f64> = BLOCK_LENS
        .iter()
        .map(|&b| {
            detector_throughput_flops(network_flops(&detector_network(b).unwrap()).total, b, 1e6)
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn csv_round_trip_and_empty() {
    let r = detection_metrics(
        &[Some(1), None, Some(2)],
        &[Some(1), Some(3), None],
        &[1.5, 3.2, 3.7],
        1.0,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.csv");
    write_csv(&r, &p).unwrap();
    assert_eq!(read_csv(&p).unwrap(), csv_rows(&r));
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("snr_db,n,mae,miss_rate,false_alarm_rate")
    );
    // bin 2 is empty: every optional cell blank
    assert_eq!(lines.nth(1), Some("2.0,0,,,"));

    let mut empty = r.clone();
    empty.bins.clear();
    assert_eq!(
        csv_string(&empty).unwrap(),
        "snr_db,n,mae,miss_rate,false_alarm_rate\n"
    );
    write_csv(&empty, &p).unwrap();
    assert!(read_csv(&p).unwrap().is_empty());
}

#[test]
fn svg_is_deterministic_and_tagged() {
    let r = cfo_metrics(&[1.0, 2.0, 5.0], &[0.0, 2.0, 4.0], &[3.0, 8.0, 12.0], 5.0)
        .unwrap()
        .with_hash("abc123")
        .with_method("lstm");
    let a = render_svg(&r, "CFO <test>");
    assert_eq!(a, render_svg(&r, "CFO <test>"));
    assert!(a.contains("<!-- config-hash: abc123 -->"));
    assert!(a.contains("CFO &lt;test&gt;"));
    assert_eq!(a.matches("<circle").count(), 3);

    // scatter extents cover both axes' data
    assert_eq!(plot_extents(&r), (0.0, 5.0, 0.0, 5.0));
    let mut line = r.clone();
    line.scatter.clear();
    // bins 0, 5, 10 with MAE 1, 0, 1
    assert_eq!(plot_extents(&line), (0.0, 15.0, 0.0, 1.0));
    assert!(render_svg(&line, "t").contains("<polyline"));

    let dir = tempfile::tempdir().unwrap();
    emit_report(&r, dir.path(), "cfo", "t").unwrap();
    for ext in ["csv", "svg", "json"] {
        assert!(dir.path().join(format!("cfo.{ext}")).exists());
    }
    let back: MetricsReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cfo.json")).unwrap())
            .unwrap();
    assert_eq!(back, r);
}

#[test]
fn conventional_pipelines_on_noiseless_sets() {
    let mut cfg = GenConfig::detection(200, 40, 12);
    cfg.snr_min_db = 200.0;
    cfg.snr_max_db = 200.0;
    let d = generate(&cfg).unwrap();
    let preds = conventional_detections(&cfg, &d, &SyncConfig::default()).unwrap();
    let r = detection_metrics(&preds, &start_labels(&d), &record_snrs(&d), 1.0).unwrap();
    assert_eq!(r.overall_mae, Some(0.0));
    assert_eq!((r.miss_rate, r.false_alarm_rate), (0.0, 0.0));

    let mut cfg = GenConfig::cfo(100, 12);
    cfg.snr_min_db = 200.0;
    cfg.snr_max_db = 200.0;
    let d = generate(&cfg).unwrap();
    let est = conventional_cfo_estimates(&cfg, &d, &SyncConfig::default()).unwrap();
    let r = cfo_metrics(&est, &cfo_labels(&d), &record_snrs(&d), 1.0).unwrap();
    // the link's filters leave a sub-hertz bias
    assert!(r.overall_mae.unwrap() < 1.0, "{:?}", r.overall_mae);
}
