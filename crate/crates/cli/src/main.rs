mod commands;
mod config;
mod runlog;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use eegbands::dataset::{SyntheticConfig, Task};
use eegbands::dsp::{BandEdges, BandName, DEFAULT_ORDER};
use eegbands::experiment::ExperimentConfig;
use eegbands::segmentation::{LobeName, SplitMode};
use eegbands::training::{Seeds, TrainConfig};

use config::{Paths, RunConfig, SynthSettings, OUT_DIR_ENV};

/// Band- and lobe-specific classification of envisioned-speech EEG.
///
/// Settings resolve as built-in defaults, then `--config`, then the
/// EEGBANDS_OUT_DIR environment variable (output directory only), then flags.
#[derive(Parser)]
#[command(name = "eegbands", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a band-coded synthetic dataset and its manifest.
    Synth(SynthArgs),
    /// Copy externally supplied recordings into the canonical CSV layout.
    Import(ImportArgs),
    /// Train and test one (lobe, band) cell.
    Train(TrainArgs),
    /// Run the lobe × band grid and write tables and confusion matrices.
    Sweep(SweepArgs),
    /// Regenerate tables and figures from a stored results JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory for results and run.log.
    #[arg(long, value_name = "DIR", env = OUT_DIR_ENV, default_value_os_t = Paths::default().out_dir)]
    out_dir: PathBuf,
    /// Log progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = Task::default())]
    task: Task,
    #[arg(long, default_value_t = SynthSettings::default().subjects)]
    subjects: u32,
    #[arg(long, default_value_t = SynthSettings::default().seed)]
    seed: u64,
    /// Where to write the manifest; recordings go to `recordings/` beside it.
    #[arg(long, value_name = "FILE", default_value_os_t = Paths::default().manifest)]
    manifest: PathBuf,
    /// Lower edge of the class-coding band, Hz.
    #[arg(long, default_value_t = SyntheticConfig::default().code_low_hz)]
    code_low_hz: f64,
    /// Upper edge of the class-coding band, Hz.
    #[arg(long, default_value_t = SyntheticConfig::default().code_high_hz)]
    code_high_hz: f64,
    #[arg(long, default_value_t = SyntheticConfig::default().amplitude)]
    amplitude: f64,
    #[arg(long, default_value_t = SyntheticConfig::default().noise_std)]
    noise_std: f64,
    /// Code classes only on this lobe's channels [default: every channel].
    #[arg(long, value_name = "LOBE")]
    coded_lobe: Option<LobeName>,
}

#[derive(Args)]
struct ImportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Manifest describing the external recordings.
    #[arg(long, value_name = "FILE")]
    source: PathBuf,
    /// Import only this task [default: every task].
    #[arg(long)]
    task: Option<Task>,
    /// Destination manifest; recordings go to `recordings/` beside it.
    #[arg(long, value_name = "FILE", default_value_os_t = Paths::default().manifest)]
    manifest: PathBuf,
}

#[derive(Args)]
struct OptimArgs {
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().adam_beta1)]
    adam_beta1: f64,
    #[arg(long, default_value_t = TrainConfig::default().adam_beta2)]
    adam_beta2: f64,
    #[arg(long, default_value_t = TrainConfig::default().adam_eps)]
    adam_eps: f64,
    /// Epochs without a strictly better validation accuracy before stopping.
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    patience: usize,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    max_epochs: usize,
    #[arg(long, default_value_t = Seeds::default().init)]
    init_seed: u64,
    #[arg(long, default_value_t = Seeds::default().shuffle)]
    shuffle_seed: u64,
    #[arg(long, default_value_t = Seeds::default().dropout)]
    dropout_seed: u64,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = Task::default())]
    task: Task,
    #[arg(long, value_name = "FILE", default_value_os_t = Paths::default().manifest)]
    manifest: PathBuf,
    /// Directory for cached window sets [default: no cache].
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Band-edge preset: methodology or introduction.
    #[arg(long, default_value_t = BandEdges::default())]
    band_edges: BandEdges,
    /// Butterworth prototype order.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    filter_order: usize,
    /// Split granularity: window or recording.
    #[arg(long, default_value_t = SplitMode::default())]
    split: SplitMode,
    #[arg(long, default_value_t = ExperimentConfig::default().split_seed)]
    split_seed: u64,
    #[command(flatten)]
    optim: OptimArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = LobeName::All)]
    lobe: LobeName,
    #[arg(long, default_value_t = BandName::All)]
    band: BandName,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated lobes.
    #[arg(long, value_delimiter = ',', default_values_t = LobeName::ALL)]
    lobes: Vec<LobeName>,
    /// Comma-separated bands.
    #[arg(long, value_delimiter = ',', default_values_t = BandName::ALL)]
    bands: Vec<BandName>,
    /// Independent training runs per cell.
    #[arg(long, default_value_t = ExperimentConfig::default().repeat)]
    repeat: usize,
    /// Cells trained concurrently; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Confusion-matrix figures only for these lobes [default: all].
    #[arg(long, value_delimiter = ',', value_name = "LOBES")]
    figure_lobes: Option<Vec<LobeName>>,
    /// Confusion-matrix figures only for these bands [default: all].
    #[arg(long, value_delimiter = ',', value_name = "BANDS")]
    figure_bands: Option<Vec<BandName>>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = Task::default())]
    task: Task,
    /// Stored grid [default: <out-dir>/results_<task>.json].
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Figures only for these lobes [default: all].
    #[arg(long, value_delimiter = ',')]
    lobes: Option<Vec<LobeName>>,
    /// Figures only for these bands [default: all].
    #[arg(long, value_delimiter = ',')]
    bands: Option<Vec<BandName>>,
}

/// True if `id` was set on the command line or through its environment
/// variable rather than left at its default.
fn given(m: &ArgMatches, id: &str) -> bool {
    matches!(
        m.value_source(id),
        Some(ValueSource::CommandLine | ValueSource::EnvVariable)
    )
}

macro_rules! overlay {
    ($m:expr, $( $id:literal => $assign:expr ),* $(,)?) => {
        $( if given($m, $id) { $assign; } )*
    };
}

fn resolve_common(m: &ArgMatches, args: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if m.value_source("out_dir") == Some(ValueSource::CommandLine) {
        cfg.paths.out_dir = args.out_dir.clone();
    }
    Ok(cfg)
}

fn resolve_data(m: &ArgMatches, a: &DataArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = resolve_common(m, &a.common)?;
    let e = &mut cfg.experiment;
    overlay!(m,
        "task" => cfg.task = a.task,
        "manifest" => cfg.paths.manifest = a.manifest.clone(),
        "cache_dir" => cfg.paths.cache_dir = a.cache_dir.clone(),
        "band_edges" => e.band_edges = a.band_edges,
        "filter_order" => e.filter_order = a.filter_order,
        "split" => e.split_mode = a.split,
        "split_seed" => e.split_seed = a.split_seed,
        "batch_size" => e.train.batch_size = a.optim.batch_size,
        "learning_rate" => e.train.learning_rate = a.optim.learning_rate,
        "adam_beta1" => e.train.adam_beta1 = a.optim.adam_beta1,
        "adam_beta2" => e.train.adam_beta2 = a.optim.adam_beta2,
        "adam_eps" => e.train.adam_eps = a.optim.adam_eps,
        "patience" => e.train.patience = a.optim.patience,
        "max_epochs" => e.train.max_epochs = a.optim.max_epochs,
        "init_seed" => e.train.seeds.init = a.optim.init_seed,
        "shuffle_seed" => e.train.seeds.shuffle = a.optim.shuffle_seed,
        "dropout_seed" => e.train.seeds.dropout = a.optim.dropout_seed,
    );
    Ok(cfg)
}

fn run(matches: &ArgMatches) -> anyhow::Result<()> {
    let cli = Cli::from_arg_matches(matches)?;
    let (_, m) = matches.subcommand().expect("subcommand required");
    let verbose = match &cli.command {
        Command::Synth(a) => a.common.verbose,
        Command::Import(a) => a.common.verbose,
        Command::Train(a) => a.data.common.verbose,
        Command::Sweep(a) => a.data.common.verbose,
        Command::Report(a) => a.common.verbose,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if verbose { "info" } else { "warn" }))
        .format_timestamp(None)
        .init();

    match cli.command {
        Command::Synth(a) => {
            let mut cfg = resolve_common(m, &a.common)?;
            let s = &mut cfg.synthetic;
            overlay!(m,
                "task" => cfg.task = a.task,
                "manifest" => cfg.paths.manifest = a.manifest.clone(),
                "subjects" => s.subjects = a.subjects,
                "seed" => s.seed = a.seed,
                "code_low_hz" => s.signal.code_low_hz = a.code_low_hz,
                "code_high_hz" => s.signal.code_high_hz = a.code_high_hz,
                "amplitude" => s.signal.amplitude = a.amplitude,
                "noise_std" => s.signal.noise_std = a.noise_std,
            );
            if let Some(lobe) = a.coded_lobe {
                s.signal.coded_channels = lobe.channels().to_vec();
            }
            commands::synth(&cfg)
        }
        Command::Import(a) => {
            let mut cfg = resolve_common(m, &a.common)?;
            overlay!(m, "manifest" => cfg.paths.manifest = a.manifest.clone());
            commands::import(&cfg, &a.source, a.task)
        }
        Command::Train(a) => {
            let cfg = resolve_data(m, &a.data)?;
            commands::train(&cfg, a.lobe, a.band)
        }
        Command::Sweep(a) => {
            let mut cfg = resolve_data(m, &a.data)?;
            overlay!(m,
                "lobes" => cfg.experiment.lobes = a.lobes.clone(),
                "bands" => cfg.experiment.bands = a.bands.clone(),
                "repeat" => cfg.experiment.repeat = a.repeat,
                "workers" => cfg.workers = a.workers,
            );
            let figures = eegbands::experiment::CellFilter {
                lobes: a.figure_lobes,
                bands: a.figure_bands,
            };
            commands::sweep(&cfg, &figures)
        }
        Command::Report(a) => {
            let mut cfg = resolve_common(m, &a.common)?;
            overlay!(m, "task" => cfg.task = a.task);
            let input = a
                .input
                .unwrap_or_else(|| cfg.paths.out_dir.join(format!("results_{}.json", cfg.task.name())));
            let figures = eegbands::experiment::CellFilter {
                lobes: a.lobes,
                bands: a.bands,
            };
            commands::report(&cfg, &input, &figures)
        }
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
