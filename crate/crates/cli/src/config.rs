//! The run configuration every command is reduced to before it executes.
//!
//! A `RunConfig` is what gets recorded in the provenance log, so replaying
//! one (`halow run`) repeats the command exactly.

use std::path::PathBuf;

use clap::ValueEnum;
use halow_core::channel::FadingProfile;
use halow_core::dataset::{Alignment, ChannelMode, GenConfig, Task};
use halow_core::models::{CellKind, BLOCK_LENS};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Overrides `seed` when set.
pub const SEED_ENV: &str = "HALOW_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Gen,
    Train,
    Eval,
    Flops,
    Simulate,
    Import,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Gen => "gen",
            CommandKind::Train => "train",
            CommandKind::Eval => "eval",
            CommandKind::Flops => "flops",
            CommandKind::Simulate => "simulate",
            CommandKind::Import => "import",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TaskArg {
    Detection,
    Cfo,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Detection => Task::Detection,
            TaskArg::Cfo => Task::Cfo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    /// 1D-CNN packet detector.
    Cnn,
    /// ReLU DNN CFO estimator.
    Dnn,
    /// Recurrent CFO estimator (see `cell`).
    Rnn,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema, ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum CellArg {
    #[default]
    Lstm,
    Gru,
}

impl From<CellArg> for CellKind {
    fn from(c: CellArg) -> CellKind {
        match c {
            CellArg::Lstm => CellKind::Lstm,
            CellArg::Gru => CellKind::Gru,
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema, ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum ChannelArg {
    #[default]
    Awgn,
    Multipath,
    Mixed,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema, ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentArg {
    #[default]
    Ideal,
    Detector,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema, ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    #[default]
    Conventional,
    Model,
    Both,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema, ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    Train,
    Val,
    #[default]
    Test,
}

impl SplitArg {
    pub fn name(self) -> &'static str {
        match self {
            SplitArg::Train => "train",
            SplitArg::Val => "val",
            SplitArg::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Dataset directory (train, eval).
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Output directory, or checkpoint / wave file for train / simulate.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Checkpoint to evaluate.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Capture to import.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Tapped-delay-line profile (JSON) for multipath channels.
    #[serde(default)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Hyper {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    /// Early stopping on validation loss; absent trains all epochs.
    #[serde(default)]
    pub patience: Option<usize>,
}

fn default_epochs() -> usize {
    400
}
fn default_batch() -> usize {
    80
}
fn default_lr() -> f64 {
    0.001
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            epochs: default_epochs(),
            batch: default_batch(),
            learning_rate: default_lr(),
            patience: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ChannelRanges {
    #[serde(default = "default_snr_min")]
    pub snr_min_db: f64,
    #[serde(default = "default_snr_max")]
    pub snr_max_db: f64,
    #[serde(default = "default_cfo_max")]
    pub cfo_max_hz: f64,
    #[serde(default)]
    pub mode: ChannelArg,
    #[serde(default)]
    pub alignment: AlignmentArg,
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

impl Default for ChannelRanges {
    fn default() -> Self {
        ChannelRanges {
            snr_min_db: default_snr_min(),
            snr_max_db: default_snr_max(),
            cfo_max_hz: default_cfo_max(),
            mode: ChannelArg::Awgn,
            alignment: AlignmentArg::Ideal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EvalArgs {
    #[serde(default)]
    pub method: MethodArg,
    #[serde(default)]
    pub split: SplitArg,
    #[serde(default = "default_bin")]
    pub bin_width_db: f64,
}

fn default_bin() -> f64 {
    1.0
}

impl Default for EvalArgs {
    fn default() -> Self {
        EvalArgs {
            method: MethodArg::Conventional,
            split: SplitArg::Test,
            bin_width_db: default_bin(),
        }
    }
}

/// Single-packet link round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SimArgs {
    #[serde(default = "default_sim_snr")]
    pub snr_db: f64,
    #[serde(default)]
    pub cfo_hz: f64,
    /// Packet start in 1 MHz samples.
    #[serde(default = "default_offset")]
    pub offset: usize,
    /// Total samples written.
    #[serde(default = "default_len")]
    pub length: usize,
}

fn default_sim_snr() -> f64 {
    20.0
}
fn default_offset() -> usize {
    100
}
fn default_len() -> usize {
    1_000
}

impl Default for SimArgs {
    fn default() -> Self {
        SimArgs {
            snr_db: default_sim_snr(),
            cfo_hz: 0.0,
            offset: default_offset(),
            length: default_len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub task: Option<TaskArg>,
    #[serde(default)]
    pub paths: Paths,
    /// Master seed (gen), weight-init and shuffle seed (train), split seed
    /// (import), channel seed (simulate).
    pub seed: u64,
    /// Record count (gen).
    #[serde(default)]
    pub n: Option<usize>,
    /// Detection block length B.
    #[serde(default)]
    pub block_len: Option<usize>,
    #[serde(default)]
    pub model: Option<ModelArg>,
    #[serde(default)]
    pub cell: CellArg,
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default)]
    pub channel: ChannelRanges,
    #[serde(default)]
    pub eval: EvalArgs,
    #[serde(default)]
    pub simulate: SimArgs,
    /// train / validation / test.
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
}

fn default_fractions() -> [f64; 3] {
    [0.70, 0.15, 0.15]
}

impl RunConfig {
    pub fn new(command: CommandKind, seed: u64) -> Self {
        RunConfig {
            command,
            task: None,
            paths: Paths::default(),
            seed,
            n: None,
            block_len: None,
            model: None,
            cell: CellArg::Lstm,
            hyper: Hyper::default(),
            channel: ChannelRanges::default(),
            eval: EvalArgs::default(),
            simulate: SimArgs::default(),
            fractions: default_fractions(),
        }
    }

    /// Parses and checks unknown fields and types.
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::Config(format!("run config: {e}")))
    }

    pub fn apply_seed_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not a u64")))?;
        }
        Ok(())
    }

    /// Per-command requirements beyond what the schema expresses.
    pub fn validate(&self) -> Result<(), CliError> {
        let need = |what: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{} needs {what}",
                    self.command.name()
                )))
            }
        };
        if let Some(b) = self.block_len {
            if !BLOCK_LENS.contains(&b) {
                return Err(CliError::Config(format!(
                    "block length {b} not in {BLOCK_LENS:?}"
                )));
            }
        }
        match self.command {
            CommandKind::Gen => {
                need("an output directory", self.paths.out.is_some())?;
                self.gen_config()?;
            }
            CommandKind::Train => {
                need("a dataset directory", self.paths.data.is_some())?;
                need("a checkpoint path", self.paths.out.is_some())?;
                need("a model", self.model.is_some())?;
                let h = &self.hyper;
                if h.epochs == 0
                    || h.batch == 0
                    || !(h.learning_rate > 0.0 && h.learning_rate.is_finite())
                {
                    return Err(CliError::Config(
                        "epochs, batch and learning rate must be positive".into(),
                    ));
                }
            }
            CommandKind::Eval => {
                need("a dataset directory", self.paths.data.is_some())?;
                need("an output directory", self.paths.out.is_some())?;
                if self.eval.method != MethodArg::Conventional {
                    need("a checkpoint", self.paths.model.is_some())?;
                }
                if !(self.eval.bin_width_db > 0.0 && self.eval.bin_width_db.is_finite()) {
                    return Err(CliError::Config("bin width must be positive".into()));
                }
            }
            CommandKind::Flops => {}
            CommandKind::Simulate => {
                need("an output wave file", self.paths.out.is_some())?;
                let s = &self.simulate;
                if !s.snr_db.is_finite() || !s.cfo_hz.is_finite() {
                    return Err(CliError::Config("SNR and CFO must be finite".into()));
                }
                if s.offset >= s.length {
                    return Err(CliError::Config(format!(
                        "offset {} outside a {}-sample stream",
                        s.offset, s.length
                    )));
                }
            }
            CommandKind::Import => {
                need("an input capture", self.paths.input.is_some())?;
                need("an output directory", self.paths.out.is_some())?;
                need("a block length", self.block_len.is_some())?;
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<FadingProfile, CliError> {
        match &self.paths.profile {
            None => Ok(FadingProfile::model_b()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("profile {}: {e}", p.display())))?;
                FadingProfile::from_json(&text).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    pub fn gen_config(&self) -> Result<GenConfig, CliError> {
        let task = self
            .task
            .ok_or_else(|| CliError::Config("gen needs --task".into()))?;
        let n = self
            .n
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config("gen needs a positive --n".into()))?;
        let mut g = match task {
            TaskArg::Detection => GenConfig::detection(
                n,
                self.block_len
                    .ok_or_else(|| CliError::Config("detection needs --block".into()))?,
                self.seed,
            ),
            TaskArg::Cfo => {
                if self.block_len.is_some() {
                    return Err(CliError::Config("--block applies to detection only".into()));
                }
                GenConfig::cfo(n, self.seed)
            }
        };
        let c = &self.channel;
        g.snr_min_db = c.snr_min_db;
        g.snr_max_db = c.snr_max_db;
        g.cfo_max_hz = c.cfo_max_hz;
        g.channel = match c.mode {
            ChannelArg::Awgn => ChannelMode::Awgn,
            ChannelArg::Multipath => ChannelMode::Multipath,
            ChannelArg::Mixed => ChannelMode::Mixed,
        };
        g.alignment = match c.alignment {
            AlignmentArg::Ideal => Alignment::Ideal,
            AlignmentArg::Detector => Alignment::Detector,
        };
        g.profile = self.profile()?;
        g.fractions = self.fractions;
        g.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(g)
    }
}

/// JSON schema of `RunConfig`.
pub fn schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schema serializes")
}
