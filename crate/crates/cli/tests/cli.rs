use std::path::Path;
use std::process::{Command, Output};

use halow_core::dataset::{Dataset, SplitSet};
use serde_json::Value;

fn halow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halow"))
        .args(args)
        .env_remove("HALOW_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Value {
    let o = halow(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = String::from_utf8(o.stdout).unwrap();
    if text.trim().is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).unwrap()
    }
}

fn fails(args: &[&str], code: i32) -> Value {
    let o = halow(args);
    assert_eq!(o.status.code(), Some(code), "{args:?}");
    let err: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(err["error"]["code"], code);
    err
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const DATA_FILES: [&str; 4] = ["manifest.json", "train.ds", "val.ds", "test.ds"];

fn same_files(a: &Path, b: &Path, names: &[&str]) {
    for n in names {
        assert_eq!(
            std::fs::read(a.join(n)).unwrap(),
            std::fs::read(b.join(n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn gen_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for d in [&a, &b] {
        ok(&[
            "gen",
            "--task",
            "detection",
            "--block",
            "40",
            "--n",
            "1000",
            "--seed",
            "7",
            "--out",
            s(d),
        ]);
    }
    // the manifest embeds no output path, so the whole directory matches
    same_files(&a, &b, &DATA_FILES);
    let set = SplitSet::read(&a).unwrap();
    assert_eq!(set.manifest.master_seed, Some(7));
    assert_eq!(set.train.len() + set.val.len() + set.test.len(), 1000);

    let prov: Value = serde_json::from_str(
        std::fs::read_to_string(a.join("provenance.jsonl"))
            .unwrap()
            .trim(),
    )
    .unwrap();
    assert_eq!(prov["command"], "gen");
    assert_eq!(prov["seed"], 7);
    assert_eq!(prov["version"], env!("CARGO_PKG_VERSION"));
    assert!(prov["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn seed_env_overrides_config() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    ok(&[
        "gen",
        "--task",
        "cfo",
        "--n",
        "50",
        "--seed",
        "99",
        "--out",
        s(&a),
    ]);
    let o = Command::new(env!("CARGO_BIN_EXE_halow"))
        .args([
            "gen",
            "--task",
            "cfo",
            "--n",
            "50",
            "--seed",
            "1",
            "--out",
            s(&b),
        ])
        .env("HALOW_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    same_files(&a, &b, &DATA_FILES);
    let line = std::fs::read_to_string(b.join("provenance.jsonl")).unwrap();
    let prov: Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(prov["seed"], 99);
    assert_eq!(prov["config"]["seed"], 99);
}

#[test]
fn provenance_line_replays_the_run() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    ok(&[
        "gen",
        "--task",
        "detection",
        "--block",
        "80",
        "--n",
        "120",
        "--seed",
        "3",
        "--snr-min",
        "5",
        "--out",
        s(&a),
    ]);
    let keep = t.path().join("keep");
    std::fs::create_dir(&keep).unwrap();
    for n in DATA_FILES {
        std::fs::rename(a.join(n), keep.join(n)).unwrap();
    }
    let log = t.path().join("log.jsonl");
    std::fs::copy(a.join("provenance.jsonl"), &log).unwrap();
    ok(&["run", s(&log)]);
    same_files(&a, &keep, &DATA_FILES);
    assert_eq!(
        std::fs::read_to_string(a.join("provenance.jsonl"))
            .unwrap()
            .lines()
            .count(),
        2
    );

    // a bare run config works too
    let prov: Value = serde_json::from_str(std::fs::read_to_string(&log).unwrap().trim()).unwrap();
    let cfg = t.path().join("cfg.json");
    std::fs::write(&cfg, serde_json::to_string(&prov["config"]).unwrap()).unwrap();
    ok(&["run", s(&cfg)]);
    same_files(&a, &keep, &DATA_FILES);
}

#[test]
fn conventional_eval_on_noiseless_fixture() {
    let t = tempfile::tempdir().unwrap();
    let (d, r) = (t.path().join("d"), t.path().join("r"));
    ok(&[
        "gen",
        "--task",
        "detection",
        "--block",
        "40",
        "--n",
        "200",
        "--seed",
        "5",
        "--snr-min",
        "200",
        "--snr-max",
        "200",
        "--out",
        s(&d),
    ]);
    let out = ok(&[
        "eval",
        "--data",
        s(&d),
        "--method",
        "conventional",
        "--out",
        s(&r),
    ]);
    let rep = &out["reports"][0];
    assert_eq!(rep["method"], "conventional");
    assert_eq!(rep["overall_mae"], 0.0);
    assert_eq!(rep["miss_rate"], 0.0);
    assert_eq!(rep["false_alarm_rate"], 0.0);
    for ext in ["csv", "svg", "json"] {
        assert!(r.join(format!("conventional.{ext}")).exists());
    }
    // eval leaves its inputs alone
    let before: Vec<Vec<u8>> = DATA_FILES
        .iter()
        .map(|n| std::fs::read(d.join(n)).unwrap())
        .collect();
    ok(&["eval", "--data", s(&d), "--split", "val", "--out", s(&r)]);
    let after: Vec<Vec<u8>> = DATA_FILES
        .iter()
        .map(|n| std::fs::read(d.join(n)).unwrap())
        .collect();
    assert_eq!(before, after);
}

#[test]
fn pipeline_smoke() {
    let t = tempfile::tempdir().unwrap();
    let p = |n: &str| t.path().join(n);
    ok(&[
        "gen",
        "--task",
        "detection",
        "--block",
        "40",
        "--n",
        "1000",
        "--seed",
        "1",
        "--out",
        s(&p("det")),
    ]);
    let tr = ok(&[
        "train",
        "--data",
        s(&p("det")),
        "--model",
        "cnn",
        "--epochs",
        "20",
        "--batch",
        "80",
        "--seed",
        "2",
        "--out",
        s(&p("models/cnn.json")),
    ]);
    assert_eq!(tr["epochs"], 20);
    for f in [
        "models/cnn.json",
        "models/cnn.bin",
        "models/provenance.jsonl",
    ] {
        assert!(p(f).exists(), "{f}");
    }
    let losses = std::fs::read_to_string(p("models/cnn.losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 21);
    assert!(losses.starts_with("epoch,train_loss,val_loss\n"));

    let ev = ok(&[
        "eval",
        "--data",
        s(&p("det")),
        "--method",
        "both",
        "--checkpoint",
        s(&p("models/cnn.json")),
        "--out",
        s(&p("reports")),
    ]);
    assert_eq!(ev["reports"].as_array().unwrap().len(), 2);
    assert_eq!(ev["reports"][1]["method"], "cnn_b40");
    for f in [
        "cnn_b40.csv",
        "cnn_b40.svg",
        "cnn_b40.json",
        "conventional.json",
        "provenance.jsonl",
    ] {
        assert!(p("reports").join(f).exists(), "{f}");
    }

    ok(&[
        "gen",
        "--task",
        "cfo",
        "--n",
        "1000",
        "--seed",
        "1",
        "--out",
        s(&p("cfo")),
    ]);
    ok(&[
        "train",
        "--data",
        s(&p("cfo")),
        "--model",
        "rnn",
        "--cell",
        "gru",
        "--epochs",
        "20",
        "--batch",
        "100",
        "--out",
        s(&p("models/gru.json")),
    ]);
    let ev = ok(&[
        "eval",
        "--data",
        s(&p("cfo")),
        "--method",
        "model",
        "--checkpoint",
        s(&p("models/gru.json")),
        "--out",
        s(&p("reports")),
    ]);
    assert_eq!(ev["reports"][0]["method"], "gru");
    assert!(ev["reports"][0]["overall_mae"].as_f64().unwrap() < 15_625.0);

    // a checkpoint from the wrong task is a data error
    fails(
        &[
            "eval",
            "--data",
            s(&p("det")),
            "--method",
            "model",
            "--checkpoint",
            s(&p("models/gru.json")),
            "--out",
            s(&p("x")),
        ],
        3,
    );
}

#[test]
fn flops_table_and_file() {
    let t = tempfile::tempdir().unwrap();
    let o = halow(&["flops", "--out", s(t.path())]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    for name in ["dnn", "lstm", "gru", "conventional", "cnn_b40"] {
        assert!(table.contains(name), "{name}");
    }
    let doc: Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("flops.json")).unwrap())
            .unwrap();
    let nets = doc["networks"].as_array().unwrap();
    let lstm = nets.iter().find(|n| n["model"] == "lstm").unwrap();
    assert_eq!(
        lstm["breakdown"]["total"]["mul"].as_u64().unwrap()
            + lstm["breakdown"]["total"]["add"].as_u64().unwrap(),
        11_716
    );
    assert_eq!(lstm["published"], 11_651);
    assert_eq!(doc["conventional"]["cfo"]["total"], 224);
    assert!(halow(&["flops", "--model", "cnn", "--block", "1600"])
        .status
        .success());
    fails(&["flops", "--model", "cnn", "--block", "100"], 2);
}

#[test]
fn simulate_and_import() {
    let t = tempfile::tempdir().unwrap();
    let wv = t.path().join("cap/one.wv");
    let out = ok(&[
        "simulate",
        "--snr",
        "25",
        "--cfo",
        "-4200",
        "--offset",
        "150",
        "--length",
        "1200",
        "--seed",
        "4",
        "--out",
        s(&wv),
    ]);
    assert_eq!(out["samples"], 1200);
    let start = out["detection"]["fine_tau"].as_u64().unwrap();
    assert!(start.abs_diff(150) <= 2);
    let est = out["cfo"]["total_hz"].as_f64().unwrap();
    assert!((est + 4200.0).abs() < 300.0, "{est}");
    assert!(t.path().join("cap/provenance.jsonl").exists());

    let imp = t.path().join("imp");
    ok(&[
        "import",
        "--input",
        s(&wv),
        "--block",
        "40",
        "--out",
        s(&imp),
    ]);
    let det = SplitSet::read(&imp.join("detection")).unwrap();
    let cfo = SplitSet::read(&imp.join("cfo")).unwrap();
    let n_det = det.train.len() + det.val.len() + det.test.len();
    assert_eq!(n_det, 1200 / 40);
    assert_eq!(cfo.train.len() + cfo.val.len() + cfo.test.len(), 1);
    // imported sets carry no streams to re-render
    fails(
        &[
            "eval",
            "--data",
            s(&imp.join("detection")),
            "--split",
            "train",
            "--out",
            s(&t.path().join("r")),
        ],
        3,
    );
}

#[test]
fn error_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let p = |n: &str| t.path().join(n);
    // configuration
    fails(
        &[
            "gen",
            "--task",
            "detection",
            "--block",
            "42",
            "--n",
            "10",
            "--out",
            s(&p("a")),
        ],
        2,
    );
    fails(&["gen", "--task", "cfo", "--n", "10"], 2);
    fails(
        &[
            "gen",
            "--task",
            "cfo",
            "--n",
            "10",
            "--snr-min",
            "30",
            "--out",
            s(&p("a")),
        ],
        2,
    );
    fails(&["--threads", "0", "flops"], 2);
    std::fs::write(
        p("bad.json"),
        r#"{"command":"gen","seed":1,"colour":"red"}"#,
    )
    .unwrap();
    let e = fails(&["run", s(&p("bad.json"))], 2);
    assert!(e["error"]["message"].as_str().unwrap().contains("colour"));
    fails(
        &[
            "eval",
            "--data",
            s(&p("nothing")),
            "--method",
            "model",
            "--out",
            s(&p("r")),
        ],
        2,
    );

    // data
    fails(
        &["eval", "--data", s(&p("nothing")), "--out", s(&p("r"))],
        3,
    );
    ok(&[
        "gen",
        "--task",
        "detection",
        "--block",
        "40",
        "--n",
        "100",
        "--out",
        s(&p("d")),
    ]);
    let mut bytes = std::fs::read(p("d/test.ds")).unwrap();
    bytes[0] = b'X';
    std::fs::write(p("d/test.ds"), bytes).unwrap();
    fails(&["eval", "--data", s(&p("d")), "--out", s(&p("r"))], 3);
    fails(
        &[
            "train",
            "--data",
            s(&p("d")),
            "--model",
            "cnn",
            "--block",
            "80",
            "--epochs",
            "1",
            "--out",
            s(&p("m.json")),
        ],
        3,
    );

    // numeric: a NaN label poisons the loss
    ok(&["gen", "--task", "cfo", "--n", "100", "--out", s(&p("c"))]);
    let mut set = SplitSet::read(&p("c")).unwrap();
    set.train.records[0].label = f32::NAN;
    set.train.write(&p("c/train.ds")).unwrap();
    assert!(Dataset::read(&p("c/train.ds")).unwrap().records[0]
        .label
        .is_nan());
    let e = fails(
        &[
            "train",
            "--data",
            s(&p("c")),
            "--model",
            "dnn",
            "--epochs",
            "2",
            "--out",
            s(&p("m.json")),
        ],
        4,
    );
    assert_eq!(e["error"]["kind"], "numeric");
}

#[test]
fn published_schema_is_current() {
    let o = halow(&["schema"]);
    assert!(o.status.success());
    let live: Value = serde_json::from_slice(&o.stdout).unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/run-config.schema.json");
    let published: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(live, published);
    let props = live["properties"].as_object().unwrap();
    for k in [
        "command",
        "task",
        "paths",
        "seed",
        "hyper",
        "channel",
        "block_len",
        "model",
    ] {
        assert!(props.contains_key(k), "{k}");
    }
    assert_eq!(live["additionalProperties"], false);
}
