//! Reproducible detection and CFO datasets.
//!
//! Every record is a pure function of `(GenConfig, derive(master_seed, i))`,
//! so generation parallelizes over indices and any record (including the
//! complex stream behind it) can be regenerated from its stored seed.
//!
//! Record files (`DS01`): a 16-byte header (magic, `u32` task id, `u32`
//! width, `u32` count) then fixed-size little-endian records of `width`
//! `f32` values, `f32` label, `f32` SNR (dB), `u64` seed, `u32` channel id.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelConfig, Fading, FadingProfile, Link};
use crate::error::{invalid, CoreError, Result};
use crate::models::{BLOCK_LENS, STF_SAMPLES};
use crate::phy::{PreambleSpec, DEFAULT_OVERSAMPLE, DEFAULT_TAPS};
use crate::seed;
use crate::sync::{detect_packet, estimate_cfo, scan_stream, SyncConfig};
use crate::C64;

pub const MAGIC: &[u8; 4] = b"DS01";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
/// Label of a block without a packet start.
pub const NO_PACKET: f32 = -1.0;

/// Noise-only lead-in before a detection block (covers a whole NDP plus the
/// correlation window so tail blocks can be cut from a complete packet).
pub const DETECTION_PRE: usize = 700;
/// Samples after the block, enough for a packet starting on its last sample
/// to be followed through the LTF.
pub const DETECTION_POST: usize = 800;
/// Packet position inside a CFO stream.
pub const CFO_PRE: usize = 200;
pub const CFO_POST: usize = 200;

const STREAM_PARAMS: u64 = 0;
const STREAM_SPLIT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Detection,
    Cfo,
}

impl Task {
    fn id(self) -> u32 {
        match self {
            Task::Detection => 0,
            Task::Cfo => 1,
        }
    }

    fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(Task::Detection),
            1 => Ok(Task::Cfo),
            _ => Err(CoreError::Format(format!("unknown task id {id}"))),
        }
    }
}

/// Channel used for the records of a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    #[default]
    Awgn,
    Multipath,
    /// AWGN or multipath with equal probability per record.
    Mixed,
}

/// Per-record channel actually drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn = 0,
    Multipath = 1,
    /// Imported capture; the channel is unknown.
    Captured = 2,
}

impl ChannelKind {
    fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(ChannelKind::Awgn),
            1 => Ok(ChannelKind::Multipath),
            2 => Ok(ChannelKind::Captured),
            _ => Err(CoreError::Format(format!("unknown channel id {id}"))),
        }
    }
}

/// Where the 160 STF phases are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// The true packet start.
    #[default]
    Ideal,
    /// The conventional detector's start (true start if it misses).
    Detector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub task: Task,
    pub n: usize,
    /// Detection only.
    #[serde(default)]
    pub block_len: Option<usize>,
    #[serde(default = "default_snr_min")]
    pub snr_min_db: f64,
    #[serde(default = "default_snr_max")]
    pub snr_max_db: f64,
    #[serde(default = "default_cfo_max")]
    pub cfo_max_hz: f64,
    #[serde(default)]
    pub channel: ChannelMode,
    /// Profile for multipath records (the indoor stand-in by default).
    #[serde(default = "FadingProfile::model_b")]
    pub profile: FadingProfile,
    #[serde(default)]
    pub alignment: Alignment,
    pub master_seed: u64,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    #[serde(default = "default_taps")]
    pub filter_taps: usize,
    /// train / validation / test.
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
}

fn default_snr_min() -> f64 {
    1.0
}
fn default_snr_max() -> f64 {
    25.0
}
fn default_cfo_max() -> f64 {
    15_625.0
}
fn default_oversample() -> usize {
    DEFAULT_OVERSAMPLE
}
fn default_taps() -> usize {
    DEFAULT_TAPS
}
fn default_fractions() -> [f64; 3] {
    [0.70, 0.15, 0.15]
}

impl GenConfig {
    pub fn detection(n: usize, block_len: usize, master_seed: u64) -> Self {
        GenConfig {
            task: Task::Detection,
            n,
            block_len: Some(block_len),
            ..GenConfig::cfo(n, master_seed)
        }
    }

    pub fn cfo(n: usize, master_seed: u64) -> Self {
        GenConfig {
            task: Task::Cfo,
            n,
            block_len: None,
            snr_min_db: default_snr_min(),
            snr_max_db: default_snr_max(),
            cfo_max_hz: default_cfo_max(),
            channel: ChannelMode::Awgn,
            profile: FadingProfile::model_b(),
            alignment: Alignment::Ideal,
            master_seed,
            oversample: default_oversample(),
            filter_taps: default_taps(),
            fractions: default_fractions(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.task, self.block_len) {
            (Task::Detection, Some(b)) if BLOCK_LENS.contains(&b) => {}
            (Task::Detection, b) => {
                return Err(invalid(format!(
                    "detection block length {b:?} not in {BLOCK_LENS:?}"
                )))
            }
            (Task::Cfo, Some(_)) => return Err(invalid("block_len applies to detection only")),
            (Task::Cfo, None) => {}
        }
        if !(self.snr_min_db.is_finite()
            && self.snr_max_db.is_finite()
            && self.snr_min_db <= self.snr_max_db)
        {
            return Err(invalid(format!(
                "SNR range [{}, {}] is not a finite interval",
                self.snr_min_db, self.snr_max_db
            )));
        }
        if !(self.cfo_max_hz >= 0.0 && self.cfo_max_hz <= 15_625.0) {
            return Err(invalid(format!(
                "cfo_max_hz {} outside [0, 15625]",
                self.cfo_max_hz
            )));
        }
        check_fractions(&self.fractions)?;
        self.profile.validate()
    }

    /// Values per record.
    pub fn width(&self) -> usize {
        self.block_len.unwrap_or(STF_SAMPLES)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        config_hash(self)
    }

    pub fn link(&self) -> Result<Link> {
        Link::new(PreambleSpec::default(), self.oversample, self.filter_taps)
    }
}

/// SHA-256 (hex) of a value's JSON serialization.
pub fn config_hash<T: Serialize>(v: &T) -> String {
    let js = serde_json::to_vec(v).expect("config serializes");
    hex::encode(Sha256::digest(&js))
}

fn check_fractions(f: &[f64; 3]) -> Result<()> {
    if f.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid(format!(
            "split fractions {f:?} must be in [0,1] and sum to 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Block amplitudes (detection) or STF phases (CFO).
    pub values: Vec<f32>,
    /// Start sample within the block or -1 (detection); CFO in Hz.
    pub label: f32,
    /// NaN for imported records.
    pub snr_db: f32,
    pub seed: u64,
    pub channel: ChannelKind,
}

impl Record {
    /// Packet start, for detection records.
    pub fn start(&self) -> Option<usize> {
        (self.label >= 0.0).then_some(self.label as usize)
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.label.to_le_bytes());
        out.extend_from_slice(&self.snr_db.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.channel as u32).to_le_bytes());
    }

    /// SHA-256 over the encoded record; identifies a record across files.
    pub fn digest(&self) -> [u8; 32] {
        let mut b = Vec::new();
        self.write_to(&mut b);
        Sha256::digest(&b).into()
    }
}

/// A set of same-task, same-width records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub width: usize,
    pub records: Vec<Record>,
}

fn record_bytes(width: usize) -> usize {
    4 * width + 20
}

impl Dataset {
    pub fn new(task: Task, width: usize, records: Vec<Record>) -> Result<Self> {
        if width == 0 {
            return Err(invalid("record width must be positive"));
        }
        for (i, r) in records.iter().enumerate() {
            if r.values.len() != width {
                return Err(invalid(format!(
                    "record {i} has {} values, expected {width}",
                    r.values.len()
                )));
            }
        }
        Ok(Dataset {
            task,
            width,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.len() * record_bytes(self.width));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.task.id().to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for r in &self.records {
            r.write_to(&mut out);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(CoreError::Format("not a DS01 record file".into()));
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let task = Task::from_id(u32_at(4))?;
        let width = u32_at(8) as usize;
        let count = u32_at(12) as usize;
        if width == 0 {
            return Err(CoreError::Format("record width 0".into()));
        }
        let rb = record_bytes(width);
        let body = &bytes[HEADER_LEN..];
        if body.len() != count * rb {
            return Err(CoreError::Format(format!(
                "header announces {count} records of {rb} bytes, body holds {}",
                body.len()
            )));
        }
        let f32_at = |b: &[u8], at: usize| f32::from_le_bytes(b[at..at + 4].try_into().unwrap());
        let mut records = Vec::with_capacity(count);
        for chunk in body.chunks_exact(rb) {
            let values = (0..width).map(|k| f32_at(chunk, 4 * k)).collect();
            let tail = 4 * width;
            records.push(Record {
                values,
                label: f32_at(chunk, tail),
                snr_db: f32_at(chunk, tail + 4),
                seed: u64::from_le_bytes(chunk[tail + 8..tail + 16].try_into().unwrap()),
                channel: ChannelKind::from_id(u32::from_le_bytes(
                    chunk[tail + 16..tail + 20].try_into().unwrap(),
                ))?,
            });
        }
        Dataset::new(task, width, records)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Dataset::decode(&fs::read(path)?)
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            task: self.task,
            width: self.width,
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Largest-remainder split sizes; ties go to the earlier part.
pub fn split_counts(n: usize, fractions: &[f64; 3]) -> Result<[usize; 3]> {
    check_fractions(fractions)?;
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    Ok(counts)
}

/// Seeded shuffle into train / validation / test.
pub fn split(data: &Dataset, fractions: &[f64; 3], seed: u64) -> Result<[Dataset; 3]> {
    let counts = split_counts(data.len(), fractions)?;
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut seed::rng(seed, STREAM_SPLIT));
    let (a, rest) = idx.split_at(counts[0]);
    let (b, c) = rest.split_at(counts[1]);
    Ok([data.subset(a), data.subset(b), data.subset(c)])
}

/// Everything drawn for one detection record.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionDraw {
    pub label: Option<usize>,
    /// Packet start in the stream, if any.
    pub packet_at: Option<usize>,
    pub channel: ChannelConfig,
    pub kind: ChannelKind,
    /// Stream length; the block is `[DETECTION_PRE, DETECTION_PRE + B)`.
    pub stream_len: usize,
}

/// Everything drawn for one CFO record.
#[derive(Debug, Clone, PartialEq)]
pub struct CfoDraw {
    pub channel: ChannelConfig,
    pub kind: ChannelKind,
    pub stream_len: usize,
}

fn draw_channel(cfg: &GenConfig, rng: &mut impl Rng, seed: u64) -> (ChannelConfig, ChannelKind) {
    let snr = if cfg.snr_max_db > cfg.snr_min_db {
        rng.random_range(cfg.snr_min_db..cfg.snr_max_db)
    } else {
        cfg.snr_min_db
    };
    let cfo = if cfg.cfo_max_hz > 0.0 {
        rng.random_range(-cfg.cfo_max_hz..=cfg.cfo_max_hz)
    } else {
        0.0
    };
    let multipath = match cfg.channel {
        ChannelMode::Awgn => false,
        ChannelMode::Multipath => true,
        ChannelMode::Mixed => rng.random_bool(0.5),
    };
    let (fading, kind) = if multipath {
        (
            Fading::Multipath(cfg.profile.clone()),
            ChannelKind::Multipath,
        )
    } else {
        (Fading::AwgnOnly, ChannelKind::Awgn)
    };
    (
        ChannelConfig {
            snr_db: snr,
            cfo_hz: cfo,
            timing_offset: 0,
            fading,
            seed,
        },
        kind,
    )
}

/// Half the blocks hold a start (uniform over the block); a quarter are
/// noise only; a quarter are cut from the interior or tail of a packet that
/// started `1..560` samples before the block.
pub fn draw_detection(cfg: &GenConfig, record_seed: u64) -> Result<DetectionDraw> {
    let b = cfg
        .block_len
        .ok_or_else(|| invalid("detection draw needs a block length"))?;
    let ndp = PreambleSpec::default().ndp_len();
    let mut rng = seed::rng(record_seed, STREAM_PARAMS);
    let u: f64 = rng.random();
    let (label, packet_at) = if u < 0.5 {
        let t = rng.random_range(0..b);
        (Some(t), Some(DETECTION_PRE + t))
    } else if u < 0.75 {
        (None, None)
    } else {
        let o = rng.random_range(1..ndp);
        (None, Some(DETECTION_PRE - o))
    };
    let (mut channel, kind) = draw_channel(cfg, &mut rng, record_seed);
    channel.timing_offset = packet_at.unwrap_or(0);
    Ok(DetectionDraw {
        label,
        packet_at,
        channel,
        kind,
        stream_len: DETECTION_PRE + b + DETECTION_POST,
    })
}

pub fn draw_cfo(cfg: &GenConfig, record_seed: u64) -> CfoDraw {
    let mut rng = seed::rng(record_seed, STREAM_PARAMS);
    let (mut channel, kind) = draw_channel(cfg, &mut rng, record_seed);
    channel.timing_offset = CFO_PRE;
    CfoDraw {
        channel,
        kind,
        stream_len: CFO_PRE + PreambleSpec::default().ndp_len() + CFO_POST,
    }
}

/// Complex 1 MHz stream behind detection record `record_seed`.
pub fn detection_stream(
    link: &Link,
    cfg: &GenConfig,
    record_seed: u64,
) -> Result<(DetectionDraw, Vec<C64>)> {
    let d = draw_detection(cfg, record_seed)?;
    let y = link.render(&d.channel, d.packet_at, d.stream_len)?;
    Ok((d, y))
}

/// Complex 1 MHz stream behind CFO record `record_seed`.
pub fn cfo_stream(link: &Link, cfg: &GenConfig, record_seed: u64) -> Result<(CfoDraw, Vec<C64>)> {
    let d = draw_cfo(cfg, record_seed);
    let y = link.render(&d.channel, Some(CFO_PRE), d.stream_len)?;
    Ok((d, y))
}

/// STF start used for a CFO record under `alignment`.
pub fn stf_start(y: &[C64], alignment: Alignment, spec: &PreambleSpec, sync: &SyncConfig) -> usize {
    match alignment {
        Alignment::Ideal => CFO_PRE,
        Alignment::Detector => detect_packet(y, spec, sync).start().unwrap_or(CFO_PRE),
    }
}

fn phases(y: &[C64], at: usize) -> Vec<f32> {
    y[at..at + STF_SAMPLES]
        .iter()
        .map(|v| v.arg() as f32)
        .collect()
}

/// Builds record `index` of the set described by `cfg`.
pub fn make_record(link: &Link, cfg: &GenConfig, index: u64) -> Result<Record> {
    let s = seed::derive(cfg.master_seed, index);
    match cfg.task {
        Task::Detection => {
            let b = cfg.width();
            let (d, y) = detection_stream(link, cfg, s)?;
            Ok(Record {
                values: y[DETECTION_PRE..DETECTION_PRE + b]
                    .iter()
                    .map(|v| v.norm() as f32)
                    .collect(),
                label: d.label.map_or(NO_PACKET, |t| t as f32),
                snr_db: d.channel.snr_db as f32,
                seed: s,
                channel: d.kind,
            })
        }
        Task::Cfo => {
            let (d, y) = cfo_stream(link, cfg, s)?;
            let at = stf_start(&y, cfg.alignment, link.spec(), &SyncConfig::default());
            Ok(Record {
                values: phases(&y, at),
                label: d.channel.cfo_hz as f32,
                snr_db: d.channel.snr_db as f32,
                seed: s,
                channel: d.kind,
            })
        }
    }
}

/// Generates all `cfg.n` records in index order (computed in parallel).
pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let link = cfg.link()?;
    let records = (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| make_record(&link, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(cfg.task, cfg.width(), records)
}

pub fn gen_detection_set(cfg: &GenConfig) -> Result<Dataset> {
    if cfg.task != Task::Detection {
        return Err(invalid("gen_detection_set needs a detection config"));
    }
    generate(cfg)
}

pub fn gen_cfo_set(cfg: &GenConfig) -> Result<Dataset> {
    if cfg.task != Task::Cfo {
        return Err(invalid("gen_cfo_set needs a CFO config"));
    }
    generate(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFiles {
    pub train: String,
    pub val: String,
    pub test: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub task: Task,
    pub width: usize,
    pub counts: SplitCounts,
    pub files: SplitFiles,
    /// Hash of `generation` (or of the import settings).
    pub config_hash: String,
    pub master_seed: Option<u64>,
    /// Generation config; absent for imported sets.
    pub generation: Option<GenConfig>,
    /// Free-form description of where the records came from.
    pub source: String,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// A dataset directory: manifest plus three record files.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub manifest: DatasetManifest,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl SplitSet {
    pub fn from_parts(
        parts: [Dataset; 3],
        config_hash: String,
        generation: Option<GenConfig>,
        source: String,
    ) -> Self {
        let [train, val, test] = parts;
        SplitSet {
            manifest: DatasetManifest {
                format_version: FORMAT_VERSION,
                task: train.task,
                width: train.width,
                counts: SplitCounts {
                    train: train.len(),
                    val: val.len(),
                    test: test.len(),
                },
                files: SplitFiles {
                    train: "train.ds".into(),
                    val: "val.ds".into(),
                    test: "test.ds".into(),
                },
                config_hash,
                master_seed: generation.as_ref().map(|g| g.master_seed),
                generation,
                source,
            },
            train,
            val,
            test,
        }
    }

    /// Generates and splits with a split seed derived from the master seed.
    pub fn generate(cfg: &GenConfig) -> Result<Self> {
        let all = generate(cfg)?;
        let parts = split(
            &all,
            &cfg.fractions,
            seed::derive(cfg.master_seed, u64::MAX),
        )?;
        Ok(SplitSet::from_parts(
            parts,
            cfg.hash(),
            Some(cfg.clone()),
            "simulated".into(),
        ))
    }

    pub fn part(&self, name: &str) -> Result<&Dataset> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            _ => Err(invalid(format!("unknown split {name:?} (train|val|test)"))),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let f = &self.manifest.files;
        self.train.write(&dir.join(&f.train))?;
        self.val.write(&dir.join(&f.val))?;
        self.test.write(&dir.join(&f.test))?;
        let mut js = serde_json::to_string_pretty(&self.manifest)?;
        js.push('\n');
        fs::write(dir.join(MANIFEST_NAME), js)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest =
            serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_NAME))?)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(CoreError::Format(format!(
                "unsupported dataset format {}",
                manifest.format_version
            )));
        }
        let load = |name: &str, want: usize| -> Result<Dataset> {
            let d = Dataset::read(&dir.join(name))?;
            if d.task != manifest.task || d.width != manifest.width || d.len() != want {
                return Err(CoreError::Format(format!(
                    "{name} disagrees with the manifest ({:?}/{}/{} vs {:?}/{}/{want})",
                    d.task,
                    d.width,
                    d.len(),
                    manifest.task,
                    manifest.width
                )));
            }
            Ok(d)
        };
        let c = &manifest.counts;
        let train = load(&manifest.files.train, c.train)?;
        let val = load(&manifest.files.val, c.val)?;
        let test = load(&manifest.files.test, c.test)?;
        Ok(SplitSet {
            manifest,
            train,
            val,
            test,
        })
    }

    /// Paths of the files `write` produces, manifest first.
    pub fn file_paths(&self, dir: &Path) -> Vec<PathBuf> {
        let f = &self.manifest.files;
        vec![
            dir.join(MANIFEST_NAME),
            dir.join(&f.train),
            dir.join(&f.val),
            dir.join(&f.test),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportConfig {
    /// Detection block length.
    pub block_len: usize,
    pub sync: SyncConfig,
    pub fractions: [f64; 3],
    pub seed: u64,
}

/// Records derived from a captured stream, labeled by the conventional
/// receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Imported {
    pub detection: Dataset,
    pub cfo: Dataset,
}

/// Runs the conventional receiver over a 1 MHz capture.
///
/// Detection records: the stream is cut into consecutive blocks of
/// `block_len`, each labeled with the first detected start inside it.
/// CFO records: one per detected packet whose STF and LTF fit in the
/// capture, with the STF phases at the detected start and the conventional
/// estimate as label.
pub fn import_samples(y: &[C64], cfg: &ImportConfig) -> Result<Imported> {
    if !BLOCK_LENS.contains(&cfg.block_len) {
        return Err(invalid(format!(
            "block length {} not in {BLOCK_LENS:?}",
            cfg.block_len
        )));
    }
    let spec = PreambleSpec::default();
    cfg.sync.validate(&spec)?;
    let starts: Vec<usize> = scan_stream(y, &spec, &cfg.sync)
        .iter()
        .filter_map(|r| r.start())
        .collect();
    let b = cfg.block_len;
    let mut det = Vec::new();
    for (k, block) in y.chunks_exact(b).enumerate() {
        let lo = k * b;
        let label = starts
            .iter()
            .find(|&&s| s >= lo && s < lo + b)
            .map_or(NO_PACKET, |&s| (s - lo) as f32);
        det.push(Record {
            values: block.iter().map(|v| v.norm() as f32).collect(),
            label,
            snr_db: f32::NAN,
            seed: k as u64,
            channel: ChannelKind::Captured,
        });
    }
    let mut cfo = Vec::new();
    for (k, &s) in starts.iter().enumerate() {
        if s + spec.stf_len + spec.ltf_len > y.len() {
            continue;
        }
        let est = estimate_cfo(y, s, &spec, &cfg.sync)?;
        cfo.push(Record {
            values: phases(y, s),
            label: est.total_hz as f32,
            snr_db: f32::NAN,
            seed: k as u64,
            channel: ChannelKind::Captured,
        });
    }
    Ok(Imported {
        detection: Dataset::new(Task::Detection, b, det)?,
        cfo: Dataset::new(Task::Cfo, STF_SAMPLES, cfo)?,
    })
}

/// Imports a `WV01` capture (must be at 1 MHz) into two split sets.
/// An empty capture yields empty sets.
pub fn import_iq(path: &Path, cfg: &ImportConfig) -> Result<[SplitSet; 2]> {
    let y = match crate::phy::wavefile::read(path)? {
        Some(w) => {
            if w.oversample_factor != 1 || (w.sample_rate - 1e6).abs() > 0.5 {
                return Err(CoreError::Format(format!(
                    "capture at {} Hz (x{}) must be at 1 MHz",
                    w.sample_rate, w.oversample_factor
                )));
            }
            w.samples
        }
        None => Vec::new(),
    };
    let imp = import_samples(&y, cfg)?;
    let hash = config_hash(cfg);
    let source = format!("imported from {}", path.display());
    let mut out = Vec::new();
    for d in [imp.detection, imp.cfo] {
        let parts = split(&d, &cfg.fractions, cfg.seed)?;
        out.push(SplitSet::from_parts(
            parts,
            hash.clone(),
            None,
            source.clone(),
        ));
    }
    let cfo = out.pop().unwrap();
    let det = out.pop().unwrap();
    Ok([det, cfo])
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn largest_remainder() {
        let f = [0.7, 0.15, 0.15];
        assert_eq!(split_counts(10, &f).unwrap(), [7, 2, 1]);
        assert_eq!(split_counts(50_000, &f).unwrap(), [35_000, 7_500, 7_500]);
        assert_eq!(split_counts(0, &f).unwrap(), [0, 0, 0]);
        assert!(split_counts(10, &[0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn header_checks() {
        let d = Dataset::new(Task::Cfo, 2, vec![]).unwrap();
        let mut b = d.encode();
        assert_eq!(Dataset::decode(&b).unwrap(), d);
        b[0] = b'X';
        assert!(matches!(Dataset::decode(&b), Err(CoreError::Format(_))));
    }

    #[test]
    fn config_json_defaults() {
        let c: GenConfig = serde_json::from_str(r#"{"task":"cfo","n":5,"master_seed":1}"#).unwrap();
        assert_eq!(c, GenConfig::cfo(5, 1));
        assert!(
            serde_json::from_str::<GenConfig>(r#"{"task":"cfo","n":5,"master_seed":1,"x":0}"#)
                .is_err()
        );
    }
}
