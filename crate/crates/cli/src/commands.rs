use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use halow_core::channel::{ChannelConfig, Fading, Link};
use halow_core::dataset::{config_hash, import_iq, Dataset, ImportConfig, SplitSet, Task};
use halow_core::eval::{self, MetricsReport};
use halow_core::models::{
    cfo_dnn_network, cfo_rnn_network, detector_network, training_view, CellKind, ChannelMap,
    ModelSpec, TrainedModel,
};
use halow_core::phy::{wavefile, PreambleSpec, DEFAULT_OVERSAMPLE, DEFAULT_TAPS};
use halow_core::sync::{detect_packet, estimate_cfo, SyncConfig};
use halow_nn::{AdamConfig, EpochStats, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ChannelArg, CommandKind, MethodArg, ModelArg, RunConfig};
use crate::error::CliError;

pub const PROVENANCE_FILE: &str = "provenance.jsonl";

/// One line of `provenance.jsonl`; `config` alone replays the command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn of(cfg: &RunConfig) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: cfg.command.name().to_string(),
            config: cfg.clone(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
        }
    }
}

fn out_path(cfg: &RunConfig) -> &Path {
    cfg.paths.out.as_deref().expect("validated")
}

/// Directory that receives the provenance line.
fn provenance_dir(cfg: &RunConfig) -> Option<PathBuf> {
    let out = cfg.paths.out.as_ref()?;
    match cfg.command {
        CommandKind::Train | CommandKind::Simulate => Some(
            out.parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
        ),
        _ => Some(out.clone()),
    }
}

fn append_provenance(cfg: &RunConfig) -> Result<(), CliError> {
    let line = serde_json::to_string(&Provenance::of(cfg))?;
    match provenance_dir(cfg) {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join(PROVENANCE_FILE))?;
            writeln!(f, "{line}")?;
        }
        None => eprintln!("{line}"),
    }
    Ok(())
}

pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let summary = match cfg.command {
        CommandKind::Gen => gen(cfg)?,
        CommandKind::Train => train(cfg)?,
        CommandKind::Eval => evaluate(cfg)?,
        CommandKind::Flops => flops(cfg)?,
        CommandKind::Simulate => simulate(cfg)?,
        CommandKind::Import => import(cfg)?,
    };
    append_provenance(cfg)?;
    if !summary.is_null() {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(())
}

fn gen(cfg: &RunConfig) -> Result<Value, CliError> {
    let g = cfg.gen_config()?;
    let set = SplitSet::generate(&g)?;
    let out = out_path(cfg);
    set.write(out)?;
    Ok(json!({
        "task": set.manifest.task,
        "counts": set.manifest.counts,
        "config_hash": set.manifest.config_hash,
        "dir": out,
    }))
}

fn rows(d: &Dataset) -> Vec<(&[f32], f64)> {
    d.records
        .iter()
        .map(|r| (r.values.as_slice(), r.label as f64))
        .collect()
}

fn model_spec(cfg: &RunConfig, set: &SplitSet) -> Result<ModelSpec, CliError> {
    let width = set.manifest.width;
    let spec = match cfg.model.expect("validated") {
        ModelArg::Cnn => {
            if let Some(b) = cfg.block_len.filter(|&b| b != width) {
                return Err(CliError::Data(format!(
                    "--block {b} but the dataset holds {width}-sample blocks"
                )));
            }
            ModelSpec::Detector {
                block_len: width,
                channel_map: ChannelMap::Polyphase,
            }
        }
        ModelArg::Dnn => ModelSpec::CfoDnn,
        ModelArg::Rnn => ModelSpec::CfoRnn {
            cell: cfg.cell.into(),
        },
    };
    let want = if spec.is_detector() {
        Task::Detection
    } else {
        Task::Cfo
    };
    if set.manifest.task != want {
        return Err(CliError::Data(format!(
            "{} needs a {want:?} dataset, got {:?}",
            spec.kind_name(),
            set.manifest.task
        )));
    }
    Ok(spec)
}

fn train(cfg: &RunConfig) -> Result<Value, CliError> {
    let set = SplitSet::read(cfg.paths.data.as_deref().expect("validated"))?;
    let spec = model_spec(cfg, &set)?;
    if set.train.is_empty() {
        return Err(CliError::Data("training split is empty".into()));
    }
    let train_view = training_view(&spec, &rows(&set.train))?;
    let val_view = if set.val.is_empty() {
        None
    } else {
        Some(training_view(&spec, &rows(&set.val))?)
    };
    let h = &cfg.hyper;
    let tc = TrainConfig {
        batch: h.batch,
        epochs: h.epochs,
        seed: cfg.seed,
        adam: AdamConfig {
            learning_rate: h.learning_rate,
            ..AdamConfig::default()
        },
        patience: h.patience,
    };
    let (model, outcome) = TrainedModel::fit(
        spec,
        cfg.seed,
        &train_view,
        val_view.as_ref(),
        &tc,
        |s: &EpochStats| eprintln!("{}", json!(s)),
    )?;

    let out = out_path(cfg);
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let prov = serde_json::to_value(Provenance::of(cfg))?;
    model.save(
        out,
        &[
            ("dataset_hash", json!(set.manifest.config_hash)),
            ("train_config", serde_json::to_value(tc)?),
            ("provenance", prov),
        ],
    )?;
    let losses = out.with_extension("losses.csv");
    let mut csv = String::from("epoch,train_loss,val_loss\n");
    for s in &outcome.history {
        let val = s.val_loss.map_or(String::new(), |v| v.to_string());
        csv.push_str(&format!("{},{},{val}\n", s.epoch, s.train_loss));
    }
    fs::write(&losses, csv)?;
    let last = outcome.history.last();
    Ok(json!({
        "checkpoint": out,
        "losses": losses,
        "model": spec.kind_name(),
        "epochs": outcome.history.len(),
        "selected_epoch": outcome.selected_epoch,
        "train_loss": last.map(|s| s.train_loss),
        "val_loss": last.and_then(|s| s.val_loss),
    }))
}

fn summary(r: &MetricsReport) -> Value {
    json!({
        "method": r.method,
        "n_records": r.n_records,
        "overall_mae": r.overall_mae,
        "miss_rate": r.miss_rate,
        "false_alarm_rate": r.false_alarm_rate,
        "outliers": r.outliers,
    })
}

fn model_stem(spec: &ModelSpec) -> String {
    match spec {
        ModelSpec::Detector { block_len, .. } => format!("cnn_b{block_len}"),
        ModelSpec::CfoDnn => "dnn".into(),
        ModelSpec::CfoRnn {
            cell: CellKind::Lstm,
        } => "lstm".into(),
        ModelSpec::CfoRnn {
            cell: CellKind::Gru,
        } => "gru".into(),
    }
}

fn evaluate(cfg: &RunConfig) -> Result<Value, CliError> {
    let set = SplitSet::read(cfg.paths.data.as_deref().expect("validated"))?;
    let split = cfg.eval.split.name();
    let part = set.part(split)?;
    if part.is_empty() {
        return Err(CliError::Data(format!("{split} split is empty")));
    }
    let out = out_path(cfg);
    let bw = cfg.eval.bin_width_db;
    let task = set.manifest.task;
    let snrs = eval::record_snrs(part);
    let hash = &set.manifest.config_hash;
    let mut reports = Vec::new();

    if cfg.eval.method != MethodArg::Model {
        let gen = set.manifest.generation.as_ref().ok_or_else(|| {
            CliError::Data(
                "conventional evaluation re-renders the simulated streams; this set has no generation config"
                    .into(),
            )
        })?;
        if gen.hash() != *hash {
            return Err(CliError::Data(
                "manifest config hash does not match its generation config".into(),
            ));
        }
        let sync = SyncConfig::default();
        let r = match task {
            Task::Detection => eval::detection_metrics(
                &eval::conventional_detections(gen, part, &sync)?,
                &eval::start_labels(part),
                &snrs,
                bw,
            )?,
            Task::Cfo => eval::cfo_metrics(
                &eval::conventional_cfo_estimates(gen, part, &sync)?,
                &eval::cfo_labels(part),
                &snrs,
                bw,
            )?,
        };
        reports.push(r.with_method("conventional").with_hash(hash));
    }
    if cfg.eval.method != MethodArg::Conventional {
        let m = TrainedModel::load(cfg.paths.model.as_deref().expect("validated"))?;
        let values: Vec<&[f32]> = part.records.iter().map(|r| r.values.as_slice()).collect();
        let r = match (task, m.spec().block_len()) {
            (Task::Detection, Some(b)) if b == part.width => {
                eval::detection_metrics(&m.detect(&values)?, &eval::start_labels(part), &snrs, bw)?
            }
            (Task::Cfo, None) => eval::cfo_metrics(
                &m.estimate_cfo(&values)?,
                &eval::cfo_labels(part),
                &snrs,
                bw,
            )?,
            _ => {
                return Err(CliError::Data(format!(
                    "{} checkpoint does not fit a {task:?} set of width {}",
                    m.spec().kind_name(),
                    part.width
                )))
            }
        };
        reports.push(r.with_method(&model_stem(m.spec())).with_hash(hash));
    }
    for r in &reports {
        let title = match task {
            Task::Detection => format!("{} detection MAE, {split} split", r.method),
            Task::Cfo => format!("{} CFO estimates, {split} split", r.method),
        };
        eval::emit_report(r, out, &r.method, &title)?;
    }
    Ok(json!({ "split": split, "reports": reports.iter().map(summary).collect::<Vec<_>>() }))
}

fn flops(cfg: &RunConfig) -> Result<Value, CliError> {
    let block = cfg.block_len.unwrap_or(40);
    let published: std::collections::HashMap<&str, u64> =
        eval::PUBLISHED_CFO_FLOPS.into_iter().collect();
    let mut nets = Vec::new();
    let want = |m: ModelArg| cfg.model.is_none() || cfg.model == Some(m);
    if want(ModelArg::Cnn) {
        nets.push((format!("cnn_b{block}"), None, detector_network(block)?));
    }
    if want(ModelArg::Dnn) {
        nets.push(("dnn".into(), Some("dnn"), cfo_dnn_network()));
    }
    for (cell, name) in [(CellKind::Lstm, "lstm"), (CellKind::Gru, "gru")] {
        let chosen = cfg.model == Some(ModelArg::Rnn) && CellKind::from(cfg.cell) == cell;
        if cfg.model.is_none() || chosen {
            nets.push((name.into(), Some(name), cfo_rnn_network(cell)));
        }
    }

    let fs = PreambleSpec::default().sample_rate;
    let mut rows = Vec::new();
    println!(
        "{:<14} {:>9} {:>9} {:>9} {:>10} {:>8} {:>14}",
        "model", "mul", "add", "total", "published", "gap", "flops/s @1MHz"
    );
    for (name, key, net) in &nets {
        let b = eval::network_flops(net);
        let t = b.total.total();
        let pubd = key.map(|k| published[k]);
        let gap = pubd.map(|p| eval::relative_gap(t, p));
        let rate = key
            .is_none()
            .then(|| eval::detector_throughput_flops(b.total, block, fs));
        println!(
            "{:<14} {:>9} {:>9} {:>9} {:>10} {:>8} {:>14}",
            name,
            b.total.mul,
            b.total.add,
            t,
            pubd.map_or("-".into(), |p| p.to_string()),
            gap.map_or("-".into(), |g| format!("{:+.2}%", 100.0 * g)),
            rate.map_or("-".into(), |r| format!("{r:.4e}")),
        );
        rows.push(json!({
            "model": name, "breakdown": b, "published": pubd, "gap": gap, "flops_per_second": rate,
        }));
    }
    let mut conventional = Value::Null;
    if cfg.model.is_none() {
        let c = eval::conventional_cfo_flops(&PreambleSpec::default(), &SyncConfig::default());
        let d = eval::conventional_detector_flops();
        let rate = eval::conventional_detector_flops_per_second(fs);
        println!(
            "{:<14} {:>9} {:>9} {:>9} {:>10} {:>8} {:>14}",
            "conventional",
            "-",
            "-",
            c.total,
            published["conventional"],
            format!(
                "{:+.2}%",
                100.0 * eval::relative_gap(c.total, published["conventional"])
            ),
            format!("{rate:.4e}"),
        );
        println!(
            "  cfo: {} coarse + {} fine products; real arithmetic {} mul + {} add",
            c.coarse_products, c.fine_products, c.real.mul, c.real.add
        );
        println!(
            "  detector: {} mul + {} add per sample",
            d.per_sample.mul, d.per_sample.add
        );
        conventional = json!({"cfo": c, "detector": d, "detector_flops_per_second": rate});
    }
    let doc = json!({"block_len": block, "networks": rows, "conventional": conventional});
    if let Some(dir) = &cfg.paths.out {
        fs::create_dir_all(dir)?;
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        fs::write(dir.join("flops.json"), s)?;
    }
    Ok(Value::Null)
}

fn simulate(cfg: &RunConfig) -> Result<Value, CliError> {
    let spec = PreambleSpec::default();
    let link = Link::new(spec.clone(), DEFAULT_OVERSAMPLE, DEFAULT_TAPS)?;
    let s = &cfg.simulate;
    let fading = match cfg.channel.mode {
        ChannelArg::Awgn => Fading::AwgnOnly,
        ChannelArg::Multipath => Fading::Multipath(cfg.profile()?),
        ChannelArg::Mixed => {
            return Err(CliError::Config(
                "simulate takes --channel awgn or multipath".into(),
            ))
        }
    };
    let ch = ChannelConfig {
        snr_db: s.snr_db,
        cfo_hz: s.cfo_hz,
        timing_offset: s.offset,
        fading,
        seed: cfg.seed,
    };
    let w = link.transmit(&ch, s.length)?;
    let out = out_path(cfg);
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    wavefile::write(out, &w)?;
    let sync = SyncConfig::default();
    let det = detect_packet(&w.samples, &spec, &sync);
    let cfo = det
        .start()
        .filter(|&t| t + spec.stf_len + spec.ltf_len <= w.len())
        .map(|t| estimate_cfo(&w.samples, t, &spec, &sync))
        .transpose()?;
    Ok(json!({
        "file": out,
        "samples": w.len(),
        "true_start": s.offset,
        "true_cfo_hz": s.cfo_hz,
        "detection": det,
        "cfo": cfo,
    }))
}

fn import(cfg: &RunConfig) -> Result<Value, CliError> {
    let icfg = ImportConfig {
        block_len: cfg.block_len.expect("validated"),
        sync: SyncConfig::default(),
        fractions: cfg.fractions,
        seed: cfg.seed,
    };
    let [det, cfo] = import_iq(cfg.paths.input.as_deref().expect("validated"), &icfg)?;
    let out = out_path(cfg);
    det.write(&out.join("detection"))?;
    cfo.write(&out.join("cfo"))?;
    Ok(json!({"detection": det.manifest.counts, "cfo": cfo.manifest.counts, "dir": out}))
}
