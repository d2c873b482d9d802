//! `halow`: dataset generation, training, evaluation and FLOP accounting for
//! the 802.11ah 1 MHz synchronization lab.
//!
//! Every subcommand is turned into a [`config::RunConfig`], checked, run, and
//! recorded as one line of `provenance.jsonl` next to its output. Errors go
//! to stderr as a single JSON object; exit codes are 2 (configuration),
//! 3 (data) and 4 (numeric failure).

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Provenance;
use config::*;
use error::CliError;

#[derive(Parser)]
#[command(name = "halow", version, about = "802.11ah 1 MHz synchronization lab")]
struct Cli {
    /// Worker threads for parallel generation and evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a detection or CFO dataset (train/val/test).
    Gen(GenArgs),
    /// Train a detector or CFO estimator on a dataset.
    Train(TrainArgs),
    /// Score the conventional receiver and/or a checkpoint on a split.
    Eval(EvalCmd),
    /// Per-layer FLOP breakdown and comparison with published totals.
    Flops(FlopsArgs),
    /// Send one packet through the channel and write the 1 MHz stream.
    Simulate(SimulateCmd),
    /// Turn a 1 MHz IQ capture into detection and CFO datasets.
    Import(ImportArgs),
    /// Execute a run config, or replay a line of a provenance log.
    Run(RunArgs),
    /// Print the JSON schema of run configs.
    Schema,
}

#[derive(Args)]
struct ChannelFlags {
    #[arg(long = "snr-min", default_value_t = 1.0)]
    snr_min: f64,
    #[arg(long = "snr-max", default_value_t = 25.0)]
    snr_max: f64,
    #[arg(long = "cfo-max", default_value_t = 15_625.0)]
    cfo_max: f64,
    #[arg(long, value_enum, default_value_t = ChannelArg::Awgn)]
    channel: ChannelArg,
    /// Tapped-delay-line profile (JSON); defaults to the indoor profile.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Where CFO records take their STF phases from.
    #[arg(long, value_enum, default_value_t = AlignmentArg::Ideal)]
    alignment: AlignmentArg,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Block length B (detection).
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    channel: ChannelFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = CellArg::Lstm)]
    cell: CellArg,
    /// Expected block length; checked against the dataset.
    #[arg(long)]
    block: Option<usize>,
    #[arg(long, default_value_t = 400)]
    epochs: usize,
    #[arg(long, default_value_t = 80)]
    batch: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint manifest path (weights go beside it as .bin).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Conventional)]
    method: MethodArg,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    #[arg(long = "bin-width", default_value_t = 1.0)]
    bin_width: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FlopsArgs {
    /// Restrict to one model; all by default.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, value_enum, default_value_t = CellArg::Lstm)]
    cell: CellArg,
    #[arg(long)]
    block: Option<usize>,
    /// Also write flops.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateCmd {
    #[arg(long, default_value_t = 20.0)]
    snr: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    cfo: f64,
    #[arg(long, default_value_t = 100)]
    offset: usize,
    #[arg(long, default_value_t = 1000)]
    length: usize,
    #[arg(long, value_enum, default_value_t = ChannelArg::Awgn)]
    channel: ChannelArg,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    block: usize,
    /// Split shuffle seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// A run config, or a provenance log.
    config: PathBuf,
    /// Provenance line to replay (1-based); the last one by default.
    #[arg(long)]
    line: Option<usize>,
}

impl ChannelFlags {
    fn into_ranges(self) -> (ChannelRanges, Option<PathBuf>) {
        (
            ChannelRanges {
                snr_min_db: self.snr_min,
                snr_max_db: self.snr_max,
                cfo_max_hz: self.cfo_max,
                mode: self.channel,
                alignment: self.alignment,
            },
            self.profile,
        )
    }
}

fn load_run(a: &RunArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.config.display())))?;
    if a.line.is_none() {
        if let Ok(c) = serde_json::from_str::<RunConfig>(&text) {
            return Ok(c);
        }
    }
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let pick = match a.line {
        Some(0) => None,
        Some(k) => lines.get(k - 1),
        None => lines.last(),
    };
    let line = pick.ok_or_else(|| {
        CliError::Config(format!("{}: no such provenance line", a.config.display()))
    })?;
    if let Ok(p) = serde_json::from_str::<Provenance>(line) {
        return Ok(p.config);
    }
    // report the run-config parse error, the more likely intent
    RunConfig::from_json(&text)
}

fn to_config(cmd: Cmd) -> Result<Option<RunConfig>, CliError> {
    let cfg = match cmd {
        Cmd::Schema => {
            println!("{}", serde_json::to_string_pretty(&schema())?);
            return Ok(None);
        }
        Cmd::Run(a) => load_run(&a)?,
        Cmd::Gen(a) => {
            let mut c = RunConfig::new(CommandKind::Gen, a.seed);
            c.task = Some(a.task);
            c.block_len = a.block;
            c.n = Some(a.n);
            (c.channel, c.paths.profile) = a.channel.into_ranges();
            c.paths.out = Some(a.out);
            c
        }
        Cmd::Train(a) => {
            let mut c = RunConfig::new(CommandKind::Train, a.seed);
            c.paths.data = Some(a.data);
            c.paths.out = Some(a.out);
            c.model = Some(a.model);
            c.cell = a.cell;
            c.block_len = a.block;
            c.hyper = Hyper {
                epochs: a.epochs,
                batch: a.batch,
                learning_rate: a.lr,
                patience: a.patience,
            };
            c
        }
        Cmd::Eval(a) => {
            let mut c = RunConfig::new(CommandKind::Eval, 0);
            c.paths.data = Some(a.data);
            c.paths.model = a.checkpoint;
            c.paths.out = Some(a.out);
            c.eval = EvalArgs {
                method: a.method,
                split: a.split,
                bin_width_db: a.bin_width,
            };
            c
        }
        Cmd::Flops(a) => {
            let mut c = RunConfig::new(CommandKind::Flops, 0);
            c.model = a.model;
            c.cell = a.cell;
            c.block_len = a.block;
            c.paths.out = a.out;
            c
        }
        Cmd::Simulate(a) => {
            let mut c = RunConfig::new(CommandKind::Simulate, a.seed);
            c.simulate = SimArgs {
                snr_db: a.snr,
                cfo_hz: a.cfo,
                offset: a.offset,
                length: a.length,
            };
            c.channel.mode = a.channel;
            c.paths.profile = a.profile;
            c.paths.out = Some(a.out);
            c
        }
        Cmd::Import(a) => {
            let mut c = RunConfig::new(CommandKind::Import, a.seed);
            c.paths.input = Some(a.input);
            c.block_len = Some(a.block);
            c.paths.out = Some(a.out);
            c
        }
    };
    Ok(Some(cfg))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let Some(mut cfg) = to_config(cli.cmd)? else {
        return Ok(());
    };
    cfg.apply_seed_env()?;
    commands::execute(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
