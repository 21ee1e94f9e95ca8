//! Command-line front end: synthesize datasets, score channel pairings,
//! export features, and cross-validate classifiers.
//!
//! Every command is deterministic given its flags and input files. Reports
//! go to stdout as JSON; CSV tables land in the directory given by `--out`.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failed to
//! converge.

mod dataset;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lfpsync::pipeline::{self, ClassifierKind, PairMode, PipelineConfig, PipelineOutput};
use lfpsync::preprocess::extract_epochs;
use lfpsync::features::build_feature_matrix;
use lfpsync::synth::{synth_recording, SynthConfig};
use serde::Serialize;

/// Command-line failure categories; each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The invocation or configuration is wrong (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Input data is unreadable or invalid (exit 2).
    #[error("{0}")]
    Data(String),
    /// A solver hit its iteration cap (exit 3).
    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }
}

impl From<lfpsync::Error> for CliError {
    fn from(err: lfpsync::Error) -> CliError {
        let text = err.to_string();
        match err {
            lfpsync::Error::Convergence { .. } => CliError::Convergence(text),
            lfpsync::Error::Config(_) => CliError::Usage(text),
            _ => CliError::Data(text),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "lfpsync",
    version,
    about = "Behavior classification for deep-brain local field potentials"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic labeled dataset directory.
    Synth(SynthArgs),
    /// Score the nine left/right channel pairings by phase synchronization.
    Sync(SyncArgs),
    /// Extract the per-trial feature matrix of one channel pairing.
    Features(FeaturesArgs),
    /// Cross-validate a classifier with leave-one-out folds.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Dataset directory to create.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator settings as JSON; explicit flags override single fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective generator settings as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    /// Seed for all random draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials generated per behavior class.
    #[arg(long)]
    trials: Option<usize>,
    /// Amplitude of the shared waveform planted in the coupled pair.
    #[arg(long)]
    snr: Option<f64>,
    /// Seconds between consecutive event onsets (at least 2).
    #[arg(long)]
    spacing: Option<f64>,
    /// Coupled left,right bipolar channel indices, e.g. 2,1.
    #[arg(long, value_parser = parse_index_pair)]
    coupled_pair: Option<(usize, usize)>,
}

#[derive(Args)]
struct SyncArgs {
    /// Dataset directory.
    dataset: PathBuf,
    /// Band-pass corners in Hz, e.g. 1,100.
    #[arg(long, value_parser = parse_band)]
    band: Option<(f64, f64)>,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Dataset directory.
    dataset: PathBuf,
    /// Channel pairing: `auto` or `L,R` indices (e.g. 2,1).
    #[arg(long, value_parser = parse_single_pair)]
    pair: Option<PairMode>,
    /// Pipeline settings as JSON; explicit flags override single fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective settings as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    /// Band-pass corners in Hz, e.g. 1,100.
    #[arg(long, value_parser = parse_band)]
    band: Option<(f64, f64)>,
    /// Time-axis block length for spectrogram averaging.
    #[arg(long)]
    downsample_factor: Option<usize>,
    /// Write the feature rows as CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset directory.
    dataset: PathBuf,
    /// Classifier to score, or `all` for every kind side by side.
    #[arg(long)]
    classifier: Option<ClassifierArg>,
    /// Channel pairing: `auto`, `all` (sweep every pair), or `L,R` indices.
    #[arg(long, value_parser = parse_pair_mode)]
    pair: Option<PairMode>,
    /// Fit the PCA projection once on all trials instead of per fold.
    #[arg(long)]
    global_pca: bool,
    /// Soft-margin penalty C.
    #[arg(long)]
    c: Option<f64>,
    /// Kernel-weight norm exponent p.
    #[arg(long)]
    p: Option<f64>,
    /// Fraction of variance the PCA projection must retain, in (0, 1].
    #[arg(long)]
    pca_fraction: Option<f64>,
    /// Time-axis block length for spectrogram averaging.
    #[arg(long)]
    downsample_factor: Option<usize>,
    /// Band-pass corners in Hz, e.g. 1,100.
    #[arg(long, value_parser = parse_band)]
    band: Option<(f64, f64)>,
    /// Pipeline settings as JSON; explicit flags override single fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective settings as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    /// Directory for the CSV report tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    SvmLinear,
    SvmPoly,
    SvmRbf,
    Mkl,
    All,
}

impl ClassifierArg {
    fn kind(self) -> Option<ClassifierKind> {
        match self {
            ClassifierArg::SvmLinear => Some(ClassifierKind::SvmLinear),
            ClassifierArg::SvmPoly => Some(ClassifierKind::SvmPoly),
            ClassifierArg::SvmRbf => Some(ClassifierKind::SvmRbf),
            ClassifierArg::Mkl => Some(ClassifierKind::Mkl),
            ClassifierArg::All => None,
        }
    }
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| "expected LO,HI in Hz (e.g. 1,100)".to_string())?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad low corner: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad high corner: {e}"))?;
    Ok((lo, hi))
}

fn parse_index_pair(s: &str) -> Result<(usize, usize), String> {
    let (l, r) = s
        .split_once(',')
        .ok_or_else(|| "expected L,R indices (e.g. 2,1)".to_string())?;
    let l: usize = l.trim().parse().map_err(|e| format!("bad left index: {e}"))?;
    let r: usize = r.trim().parse().map_err(|e| format!("bad right index: {e}"))?;
    Ok((l, r))
}

fn parse_pair_mode(s: &str) -> Result<PairMode, String> {
    match s {
        "auto" => Ok(PairMode::Auto),
        "all" => Ok(PairMode::All),
        _ => parse_index_pair(s)
            .map(|(left, right)| PairMode::Fixed { left, right })
            .map_err(|_| "expected auto, all, or L,R indices (e.g. 2,1)".to_string()),
    }
}

fn parse_single_pair(s: &str) -> Result<PairMode, String> {
    match parse_pair_mode(s)? {
        PairMode::All => Err("this command works on one pairing; pass auto or L,R".to_string()),
        mode => Ok(mode),
    }
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot encode output: {e}")))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct SynthSummary {
    out: String,
    seed: u64,
    channels: usize,
    samples_per_channel: usize,
    duration_s: f64,
    events: usize,
    trials_per_class: usize,
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let mut cfg: SynthConfig = match &args.config {
        Some(path) => read_json_config(path)?,
        None => SynthConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.trials {
        cfg.n_trials_per_class = v;
    }
    if let Some(v) = args.snr {
        cfg.coupling_snr = v;
    }
    if let Some(v) = args.spacing {
        cfg.trial_spacing_s = v;
    }
    if let Some(v) = args.coupled_pair {
        cfg.coupled_pair = v;
    }
    if args.dump_config {
        return print_json(&cfg);
    }
    let out = args.out.as_deref().ok_or_else(|| {
        CliError::Usage("--out <DIR> is required (or use --dump-config)".to_string())
    })?;
    let rec = synth_recording(&cfg)?;
    dataset::save(out, &rec)?;
    print_json(&SynthSummary {
        out: out.display().to_string(),
        seed: cfg.seed,
        channels: rec.channels.len(),
        samples_per_channel: rec.channels[0].len(),
        duration_s: rec.channels[0].len() as f64 / rec.sample_rate_hz,
        events: rec.events.len(),
        trials_per_class: cfg.n_trials_per_class,
    })
}

#[derive(Serialize)]
struct SyncOutput<'a> {
    selected: (usize, usize),
    selected_names: (&'a str, &'a str),
    band_hz: (f64, f64),
    matrix: &'a [[f64; 3]; 3],
    skipped_bins: &'a [[usize; 3]; 3],
    left_names: &'a [String; 3],
    right_names: &'a [String; 3],
}

fn cmd_sync(args: SyncArgs) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::default();
    if let Some(b) = args.band {
        cfg.band_hz = b;
    }
    let rec = dataset::load(&args.dataset)?;
    let prepared = pipeline::prepare(&rec, &cfg)?;
    let (l, r) = prepared.sync.selected;
    print_json(&SyncOutput {
        selected: prepared.sync.selected,
        selected_names: (
            &prepared.bipolar.left_names[l],
            &prepared.bipolar.right_names[r],
        ),
        band_hz: prepared.sync.band_hz,
        matrix: &prepared.sync.matrix,
        skipped_bins: &prepared.sync.skipped_bins,
        left_names: &prepared.bipolar.left_names,
        right_names: &prepared.bipolar.right_names,
    })
}

#[derive(Serialize)]
struct FeatureSummary<'a> {
    pair: (usize, usize),
    pair_names: (&'a str, &'a str),
    n_trials: usize,
    dims: usize,
    labels: Vec<&'static str>,
    dropped_samples: usize,
    config_digest: u64,
}

fn cmd_features(args: FeaturesArgs) -> Result<(), CliError> {
    let mut cfg: PipelineConfig = match &args.config {
        Some(path) => read_json_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(b) = args.band {
        cfg.band_hz = b;
    }
    if let Some(v) = args.downsample_factor {
        cfg.downsample_factor = v;
    }
    if let Some(pm) = args.pair {
        cfg.pair = pm;
    }
    if args.dump_config {
        return print_json(&cfg);
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let rec = dataset::load(&args.dataset)?;
    let prepared = pipeline::prepare(&rec, &cfg)?;
    let pair = match cfg.pair {
        PairMode::Auto => prepared.sync.selected,
        PairMode::Fixed { left, right } => (left, right),
        PairMode::All => {
            return Err(CliError::Usage(
                "features works on one pairing; set pair to auto or fixed indices".to_string(),
            ))
        }
    };
    let fs = rec.sample_rate_hz;
    let left_epochs = extract_epochs(
        &prepared.bipolar.left[pair.0],
        &rec.events,
        cfg.epoch_pre_s,
        cfg.epoch_post_s,
        fs,
    )?;
    let right_epochs = extract_epochs(
        &prepared.bipolar.right[pair.1],
        &rec.events,
        cfg.epoch_pre_s,
        cfg.epoch_post_s,
        fs,
    )?;
    let matrix = build_feature_matrix(
        &left_epochs,
        &right_epochs,
        &cfg.spectrogram,
        fs,
        cfg.downsample_factor,
        pair,
    )?;
    print_json(&FeatureSummary {
        pair,
        pair_names: (
            &prepared.bipolar.left_names[pair.0],
            &prepared.bipolar.right_names[pair.1],
        ),
        n_trials: matrix.n_trials(),
        dims: matrix.dims(),
        labels: matrix.labels.iter().map(|l| l.code()).collect(),
        dropped_samples: matrix.dropped_samples,
        config_digest: matrix.config_digest,
    })?;
    if let Some(path) = &args.out {
        let mut csv = String::from("label");
        for k in 0..matrix.dims() {
            csv.push_str(&format!(",x{k}"));
        }
        csv.push('\n');
        for (row, label) in matrix.rows.iter().zip(&matrix.labels) {
            csv.push_str(label.code());
            for v in row {
                csv.push_str(&format!(",{v}"));
            }
            csv.push('\n');
        }
        fs::write(path, csv)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct KeyedOutput<'a> {
    classifier: &'static str,
    output: &'a PipelineOutput,
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let mut cfg: PipelineConfig = match &args.config {
        Some(path) => read_json_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(b) = args.band {
        cfg.band_hz = b;
    }
    if let Some(v) = args.c {
        cfg.c = v;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.pca_fraction {
        cfg.pca_fraction = v;
    }
    if let Some(v) = args.downsample_factor {
        cfg.downsample_factor = v;
    }
    if let Some(pm) = args.pair {
        cfg.pair = pm;
    }
    if args.global_pca {
        cfg.global_pca = true;
    }
    if let Some(choice) = args.classifier {
        if let Some(kind) = choice.kind() {
            cfg.classifier = kind;
        }
    }
    let run_all = args.classifier == Some(ClassifierArg::All);
    if args.dump_config {
        if run_all {
            return Err(CliError::Usage(
                "--dump-config describes one run; pick a single classifier".to_string(),
            ));
        }
        return print_json(&cfg);
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let rec = dataset::load(&args.dataset)?;
    let kinds: Vec<ClassifierKind> = if run_all {
        ClassifierKind::ALL.to_vec()
    } else {
        vec![cfg.classifier]
    };
    let mut outputs = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let mut one = cfg.clone();
        one.classifier = kind;
        outputs.push((kind, pipeline::run(&rec, &one)?));
    }
    if outputs.len() == 1 {
        print_json(&outputs[0].1)?;
    } else {
        let keyed: Vec<KeyedOutput> = outputs
            .iter()
            .map(|(kind, output)| KeyedOutput {
                classifier: kind.as_str(),
                output,
            })
            .collect();
        print_json(&keyed)?;
    }
    if let Some(dir) = &args.out {
        tables::write_all(dir, cfg.pair, &rec.channel_names, &outputs)?;
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here too; they are not failures.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Synth(args) => cmd_synth(args),
        Cmd::Sync(args) => cmd_sync(args),
        Cmd::Features(args) => cmd_features(args),
        Cmd::Eval(args) => cmd_eval(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
