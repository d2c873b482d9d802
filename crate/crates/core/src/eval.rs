//! Metrics, FLOP accounting and report files.

use std::fmt::Write as _;
use std::path::Path;

use halow_nn::{LayerSpec, Network};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset, GenConfig, DETECTION_PRE};
use crate::error::{invalid, Result};
use crate::sync::{estimate_cfo, scan_stream, SyncConfig};

/// Default SNR bin width in dB.
pub const DEFAULT_BIN_DB: f64 = 1.0;
/// A CFO error counts as an outlier above this multiple of the median.
pub const OUTLIER_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// MAE in samples.
    Detection,
    /// MAE in Hz.
    Cfo,
}

/// One SNR bin `[snr_db, snr_db + width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrBin {
    pub snr_db: f64,
    pub n: usize,
    /// Records contributing to `mae`.
    pub n_scored: usize,
    /// `None` when no record in the bin has an error defined.
    pub mae: Option<f64>,
    pub miss_rate: Option<f64>,
    pub false_alarm_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kind: MetricKind,
    pub method: String,
    pub n_records: usize,
    pub overall_mae: Option<f64>,
    pub miss_rate: f64,
    pub false_alarm_rate: f64,
    pub bin_width_db: f64,
    pub bins: Vec<SnrBin>,
    /// CFO only: records with error above `OUTLIER_FACTOR` x median error.
    pub outliers: Option<usize>,
    /// CFO only: `(true, predicted)` pairs in record order.
    pub scatter: Vec<(f64, f64)>,
    pub config_hash: String,
}

fn bin_index(snr: f64, width: f64) -> Option<i64> {
    snr.is_finite().then(|| (snr / width).floor() as i64)
}

/// Contiguous bins from the lowest to the highest finite SNR present.
fn bin_range(snrs: &[f64], width: f64) -> Vec<i64> {
    let ids: Vec<i64> = snrs.iter().filter_map(|&s| bin_index(s, width)).collect();
    match (ids.iter().min(), ids.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo..=hi).collect(),
        _ => Vec::new(),
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn check_lengths(a: usize, b: usize, c: usize) -> Result<()> {
    if a != b || a != c {
        return Err(invalid(format!(
            "predictions ({a}), labels ({b}) and SNRs ({c}) must have equal length"
        )));
    }
    if a == 0 {
        return Err(invalid("no records to score"));
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct DetRow {
    pred: Option<usize>,
    label: Option<usize>,
}

struct DetStats {
    mae: Option<f64>,
    scored: usize,
    miss: Option<f64>,
    fa: Option<f64>,
}

fn det_stats<'a>(rows: impl Iterator<Item = &'a DetRow> + Clone) -> DetStats {
    let errs: Vec<f64> = rows
        .clone()
        .filter_map(|r| match (r.pred, r.label) {
            (Some(p), Some(l)) => Some(p.abs_diff(l) as f64),
            _ => None,
        })
        .collect();
    let pos = rows.clone().filter(|r| r.label.is_some()).count();
    let neg = rows.clone().filter(|r| r.label.is_none()).count();
    let miss = rows
        .clone()
        .filter(|r| r.label.is_some() && r.pred.is_none())
        .count();
    let fa = rows
        .filter(|r| r.label.is_none() && r.pred.is_some())
        .count();
    DetStats {
        mae: mean(errs.iter().copied()),
        scored: errs.len(),
        miss: (pos > 0).then(|| miss as f64 / pos as f64),
        fa: (neg > 0).then(|| fa as f64 / neg as f64),
    }
}

/// MAE over records where label and prediction both give a start; miss and
/// false-alarm rates over positive and negative records respectively.
pub fn detection_metrics(
    preds: &[Option<usize>],
    labels: &[Option<usize>],
    snrs: &[f64],
    bin_width_db: f64,
) -> Result<MetricsReport> {
    check_lengths(preds.len(), labels.len(), snrs.len())?;
    if !(bin_width_db > 0.0) {
        return Err(invalid("bin width must be positive"));
    }
    let rows: Vec<DetRow> = preds
        .iter()
        .zip(labels)
        .map(|(&pred, &label)| DetRow { pred, label })
        .collect();
    let all = det_stats(rows.iter());
    let bins = bin_range(snrs, bin_width_db)
        .into_iter()
        .map(|b| {
            let sel: Vec<DetRow> = rows
                .iter()
                .zip(snrs)
                .filter(|(_, &s)| bin_index(s, bin_width_db) == Some(b))
                .map(|(r, _)| *r)
                .collect();
            let st = det_stats(sel.iter());
            SnrBin {
                snr_db: b as f64 * bin_width_db,
                n: sel.len(),
                n_scored: st.scored,
                mae: st.mae,
                miss_rate: st.miss,
                false_alarm_rate: st.fa,
            }
        })
        .collect();
    Ok(MetricsReport {
        kind: MetricKind::Detection,
        method: String::new(),
        n_records: rows.len(),
        overall_mae: all.mae,
        miss_rate: all.miss.unwrap_or(0.0),
        false_alarm_rate: all.fa.unwrap_or(0.0),
        bin_width_db,
        bins,
        outliers: None,
        scatter: Vec::new(),
        config_hash: String::new(),
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// MAE in Hz overall and per bin, plus scatter data and the outlier count.
pub fn cfo_metrics(
    preds: &[f64],
    labels: &[f64],
    snrs: &[f64],
    bin_width_db: f64,
) -> Result<MetricsReport> {
    check_lengths(preds.len(), labels.len(), snrs.len())?;
    if !(bin_width_db > 0.0) {
        return Err(invalid("bin width must be positive"));
    }
    let err: Vec<f64> = preds
        .iter()
        .zip(labels)
        .map(|(p, l)| (p - l).abs())
        .collect();
    let med = median(err.clone());
    let outliers = err.iter().filter(|&&e| e > OUTLIER_FACTOR * med).count();
    let bins = bin_range(snrs, bin_width_db)
        .into_iter()
        .map(|b| {
            let sel: Vec<f64> = err
                .iter()
                .zip(snrs)
                .filter(|(_, &s)| bin_index(s, bin_width_db) == Some(b))
                .map(|(e, _)| *e)
                .collect();
            SnrBin {
                snr_db: b as f64 * bin_width_db,
                n: sel.len(),
                n_scored: sel.len(),
                mae: mean(sel.into_iter()),
                miss_rate: None,
                false_alarm_rate: None,
            }
        })
        .collect();
    Ok(MetricsReport {
        kind: MetricKind::Cfo,
        method: String::new(),
        n_records: err.len(),
        overall_mae: mean(err.iter().copied()),
        miss_rate: 0.0,
        false_alarm_rate: 0.0,
        bin_width_db,
        bins,
        outliers: Some(outliers),
        scatter: labels.iter().copied().zip(preds.iter().copied()).collect(),
        config_hash: String::new(),
    })
}

impl MetricsReport {
    pub fn with_method(mut self, method: &str) -> Self {
        self.method = method.to_string();
        self
    }

    pub fn with_hash(mut self, hash: &str) -> Self {
        self.config_hash = hash.to_string();
        self
    }

    /// MAE over records with SNR in `[lo, hi)`, recomputed from the bins.
    pub fn mae_between(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut s = 0.0;
        let mut n = 0usize;
        for b in &self.bins {
            if b.snr_db >= lo && b.snr_db + self.bin_width_db <= hi {
                if let Some(m) = b.mae {
                    s += m * b.n_scored as f64;
                    n += b.n_scored;
                }
            }
        }
        (n > 0).then(|| s / n as f64)
    }
}

/// Multiplications and additions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Flops {
    pub mul: u64,
    pub add: u64,
}

impl Flops {
    pub fn total(&self) -> u64 {
        self.mul + self.add
    }
}

impl std::ops::Add for Flops {
    type Output = Flops;
    fn add(self, o: Flops) -> Flops {
        Flops {
            mul: self.mul + o.mul,
            add: self.add + o.add,
        }
    }
}

impl std::iter::Sum for Flops {
    fn sum<I: Iterator<Item = Flops>>(it: I) -> Flops {
        it.fold(Flops::default(), |a, b| a + b)
    }
}

/// Layer descriptor for the complexity tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlopsQuery {
    /// `k` output positions.
    Conv1d {
        f: u64,
        ch_i: u64,
        ch_o: u64,
        k: u64,
    },
    Dense {
        n_i: u64,
        n_o: u64,
    },
    SimpleCell {
        u: u64,
        nf: u64,
    },
    Lstm {
        u: u64,
        nf: u64,
    },
    Gru {
        u: u64,
        nf: u64,
    },
}

pub fn layer_flops(q: FlopsQuery) -> Flops {
    match q {
        FlopsQuery::Conv1d { f, ch_i, ch_o, k } => Flops {
            mul: f * ch_i * ch_o * k,
            add: f * (ch_i + 1) * ch_o * k,
        },
        FlopsQuery::Dense { n_i, n_o } => Flops {
            mul: n_i * n_o,
            add: (n_i + 1) * n_o,
        },
        FlopsQuery::SimpleCell { u, nf } => Flops {
            mul: u * u + nf * u + 2 * u,
            add: u * u + nf * u + u,
        },
        FlopsQuery::Lstm { u, nf } => scale(layer_flops(FlopsQuery::SimpleCell { u, nf }), 4),
        FlopsQuery::Gru { u, nf } => scale(layer_flops(FlopsQuery::SimpleCell { u, nf }), 3),
    }
}

fn scale(f: Flops, k: u64) -> Flops {
    Flops {
        mul: f.mul * k,
        add: f.add * k,
    }
}

/// Descriptor for a layer of `net` (activations have none).
pub fn layer_query(spec: &LayerSpec, input_shape: &[usize]) -> Option<FlopsQuery> {
    let u = |v: usize| v as u64;
    match *spec {
        LayerSpec::Dense { inputs, outputs } => Some(FlopsQuery::Dense {
            n_i: u(inputs),
            n_o: u(outputs),
        }),
        LayerSpec::Conv1d {
            filter_len,
            in_channels,
            out_channels,
        } => Some(FlopsQuery::Conv1d {
            f: u(filter_len),
            ch_i: u(in_channels),
            ch_o: u(out_channels),
            k: u(input_shape[1] - filter_len + 1),
        }),
        LayerSpec::Lstm {
            units, features, ..
        } => Some(FlopsQuery::Lstm {
            u: u(units),
            nf: u(features),
        }),
        LayerSpec::Gru {
            units, features, ..
        } => Some(FlopsQuery::Gru {
            u: u(units),
            nf: u(features),
        }),
        LayerSpec::Relu | LayerSpec::Tanh => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsItem {
    pub layer: usize,
    pub name: String,
    pub query: FlopsQuery,
    pub flops: Flops,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsBreakdown {
    pub items: Vec<FlopsItem>,
    pub total: Flops,
}

/// Sum of `layer_flops` over the network. A recurrent layer is counted as a
/// single cell evaluation (one time step); activations are free.
pub fn network_flops(net: &Network) -> FlopsBreakdown {
    let items: Vec<FlopsItem> = net
        .layers()
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            layer_query(l, net.layer_input_shape(i)).map(|q| FlopsItem {
                layer: i,
                name: l.name().to_string(),
                query: q,
                flops: layer_flops(q),
            })
        })
        .collect();
    let total = items.iter().map(|i| i.flops).sum();
    FlopsBreakdown { items, total }
}

/// Published per-packet CFO totals: conventional, LSTM, GRU, ReLU DNN.
pub const PUBLISHED_CFO_FLOPS: [(&str, u64); 4] = [
    ("conventional", 224),
    ("lstm", 11_651),
    ("gru", 8_738),
    ("dnn", 16_209),
];

/// Conventional CFO cost per packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConventionalCfoFlops {
    /// Lag-`l_S` products in the coarse correlation.
    pub coarse_products: u64,
    /// Lag-`l_L` products in the fine correlation.
    pub fine_products: u64,
    /// One operation per complex product (the scale of the published total).
    pub total: u64,
    /// Real-arithmetic view: each complex product is 4 MUL + 2 ADD and each
    /// accumulation 2 ADD; the coarse derotation (one complex multiply per
    /// STF+LTF sample) is included here.
    pub real: Flops,
}

pub fn conventional_cfo_flops(
    spec: &crate::phy::PreambleSpec,
    sync: &crate::sync::SyncConfig,
) -> ConventionalCfoFlops {
    let coarse = (sync.coarse_span - spec.sts_len) as u64;
    let fine = (spec.ltf_len - spec.lts_len) as u64;
    let products = coarse + fine;
    let derotate = (spec.stf_len + spec.ltf_len) as u64;
    let real = Flops {
        mul: 4 * products + 4 * derotate,
        add: 2 * products + 2 * (products - 2) + 2 * derotate,
    };
    ConventionalCfoFlops {
        coarse_products: coarse,
        fine_products: fine,
        total: products,
        real,
    }
}

/// Per-sample cost of the sliding timing metric (real arithmetic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConventionalDetectorFlops {
    /// `Lambda += conj(mid) x - conj(old) mid`: two complex products, two
    /// complex additions.
    pub correlation: Flops,
    /// `P += |x|^2 - |mid|^2`.
    pub energy: Flops,
    /// `|Lambda|^2 / P^2` and the threshold comparison.
    pub metric: Flops,
    pub per_sample: Flops,
}

pub fn conventional_detector_flops() -> ConventionalDetectorFlops {
    let correlation = Flops { mul: 8, add: 6 };
    let energy = Flops { mul: 4, add: 4 };
    let metric = Flops { mul: 4, add: 2 };
    ConventionalDetectorFlops {
        correlation,
        energy,
        metric,
        per_sample: correlation + energy + metric,
    }
}

/// Conventional detector FLOPS: per-sample cost x sample rate, independent
/// of any block length (the LTS stage is left out).
pub fn conventional_detector_flops_per_second(sample_rate: f64) -> f64 {
    conventional_detector_flops().per_sample.total() as f64 * sample_rate
}

/// Block detector FLOPS: per-block cost x blocks per second.
pub fn detector_throughput_flops(per_block: Flops, block_len: usize, sample_rate: f64) -> f64 {
    per_block.total() as f64 * sample_rate / block_len as f64
}

/// Relative deviation of `ours` from `published`.
pub fn relative_gap(ours: u64, published: u64) -> f64 {
    (ours as f64 - published as f64) / published as f64
}

pub const CSV_HEADER: [&str; 5] = ["snr_db", "n", "mae", "miss_rate", "false_alarm_rate"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub snr_db: f64,
    pub n: usize,
    pub mae: Option<f64>,
    pub miss_rate: Option<f64>,
    pub false_alarm_rate: Option<f64>,
}

pub fn csv_rows(r: &MetricsReport) -> Vec<CsvRow> {
    r.bins
        .iter()
        .map(|b| CsvRow {
            snr_db: b.snr_db,
            n: b.n,
            mae: b.mae,
            miss_rate: b.miss_rate,
            false_alarm_rate: b.false_alarm_rate,
        })
        .collect()
}

/// One row per SNR bin; an empty report gives just the header.
pub fn write_csv(r: &MetricsReport, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(r)?)?;
    Ok(())
}

pub fn csv_string(r: &MetricsReport) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in csv_rows(r) {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::CoreError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

/// Plot extents `(x_min, x_max, y_min, y_max)`.
///
/// Line plots span the bins on x and `[0, max MAE]` on y (1 if there is
/// none); scatter plots span the data on both axes.
pub fn plot_extents(r: &MetricsReport) -> (f64, f64, f64, f64) {
    if !r.scatter.is_empty() {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &r.scatter {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let lo = x0.min(y0);
        let hi = x1.max(y1);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        return (lo, hi, lo, hi);
    }
    let x0 = r.bins.first().map_or(0.0, |b| b.snr_db);
    let x1 = r.bins.last().map_or(1.0, |b| b.snr_db + r.bin_width_db);
    let y1 = r.bins.iter().filter_map(|b| b.mae).fold(0.0, f64::max);
    (x0, x1, 0.0, if y1 > 0.0 { y1 } else { 1.0 })
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 60.0;

/// Self-contained SVG: MAE per SNR bin (line) or true vs predicted CFO
/// (scatter). Byte-deterministic for a given report.
pub fn render_svg(r: &MetricsReport, title: &str) -> String {
    let (x0, x1, y0, y1) = plot_extents(r);
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, "<!-- config-hash: {} -->", r.config_hash);
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1}" fill="none" stroke="black"/>"#,
        M,
        M,
        M,
        H - M,
        W - M,
        H - M
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(fx),
            H - M + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            M - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let (xl, yl) = match (r.kind, r.scatter.is_empty()) {
        (MetricKind::Cfo, false) => ("true CFO (Hz)", "predicted CFO (Hz)"),
        (MetricKind::Cfo, true) => ("SNR (dB)", "MAE (Hz)"),
        (MetricKind::Detection, _) => ("SNR (dB)", "MAE (samples)"),
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{xl}</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{yl}</text>"#,
        H / 2.0,
        H / 2.0
    );
    if r.scatter.is_empty() {
        let pts: Vec<String> = r
            .bins
            .iter()
            .filter_map(|b| {
                b.mae
                    .map(|m| format!("{:.1},{:.1}", sx(b.snr_db + 0.5 * r.bin_width_db), sy(m)))
            })
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
    } else {
        let _ = writeln!(
            s,
            r#"<path d="M{:.1},{:.1} L{:.1},{:.1}" stroke="gray" stroke-dasharray="4 4"/>"#,
            sx(x0),
            sy(x0),
            sx(x1),
            sy(x1)
        );
        for &(x, y) in &r.scatter {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="1.5" fill="steelblue"/>"#,
                sx(x),
                sy(y)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes `<stem>.csv`, `<stem>.svg` and `<stem>.json` into `dir`.
pub fn emit_report(r: &MetricsReport, dir: &Path, stem: &str, title: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(r, &dir.join(format!("{stem}.csv")))?;
    std::fs::write(dir.join(format!("{stem}.svg")), render_svg(r, title))?;
    let mut js = serde_json::to_string_pretty(r)?;
    js.push('\n');
    std::fs::write(dir.join(format!("{stem}.json")), js)?;
    Ok(())
}

/// Conventional detector on the streams behind a generated detection set:
/// the prediction for a block is the first detected start inside it.
pub fn conventional_detections(
    cfg: &GenConfig,
    data: &Dataset,
    sync: &SyncConfig,
) -> Result<Vec<Option<usize>>> {
    let link = cfg.link()?;
    let b = cfg.width();
    data.records
        .par_iter()
        .map(|r| {
            let (_, y) = dataset::detection_stream(&link, cfg, r.seed)?;
            Ok(scan_stream(&y, link.spec(), sync)
                .iter()
                .filter_map(|d| d.start())
                .find(|&s| (DETECTION_PRE..DETECTION_PRE + b).contains(&s))
                .map(|s| s - DETECTION_PRE))
        })
        .collect()
}

/// Conventional two-stage CFO estimate for every record of a generated CFO
/// set, taken at the same STF start the record's phases came from.
pub fn conventional_cfo_estimates(
    cfg: &GenConfig,
    data: &Dataset,
    sync: &SyncConfig,
) -> Result<Vec<f64>> {
    let link = cfg.link()?;
    data.records
        .par_iter()
        .map(|r| {
            let (_, y) = dataset::cfo_stream(&link, cfg, r.seed)?;
            let at = dataset::stf_start(&y, cfg.alignment, link.spec(), sync);
            Ok(estimate_cfo(&y, at, link.spec(), sync)?.total_hz)
        })
        .collect()
}

pub fn start_labels(data: &Dataset) -> Vec<Option<usize>> {
    data.records.iter().map(|r| r.start()).collect()
}

pub fn cfo_labels(data: &Dataset) -> Vec<f64> {
    data.records.iter().map(|r| r.label as f64).collect()
}

pub fn record_snrs(data: &Dataset) -> Vec<f64> {
    data.records.iter().map(|r| r.snr_db as f64).collect()
}
