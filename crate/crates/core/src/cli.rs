//! Command-line front end. Every output file gets a `<file>.run.json` sidecar
//! holding the resolved command and configuration, and `replay <sidecar>`
//! re-executes it.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::encoder::{train, EncoderModel, ScalePreset};
use crate::error::{arg_err, Error, Result};
use crate::eval::{
    data_size_sweep, evaluate_model, tstr_trts, write_sweep_csv, ConfusionCounts, Metrics, DEFAULT_DELTA,
};
use crate::io::{load_angle_matrix, load_dataset, load_signal_rows, load_weights, save_dataset, save_signal_rows, DataFormat};
use crate::mmd::{two_sample_tests, Bandwidth, MmdReport};
use crate::preprocess::{preprocess_pipeline, CoaWeights};
use crate::prony::{label_report, LabelReport};
use crate::signal::split_dataset;
use crate::synth::{gen_dataset, uniform_noise_like, RingdownSpec};
use crate::vmd::{augment, decompose};
use crate::{Label, LabeledDataset, LabeledSample, Signal};

pub const SIDECAR_SUFFIX: &str = ".run.json";

#[derive(Debug, Parser)]
#[command(name = "trustaug", version, about = "VMD augmentation, kernel MMD vetting and Encoder validation for ringdown data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings that override the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// VMD bandwidth penalty.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Number of VMD modes.
    #[arg(long = "k-modes", visible_alias = "k", global = true)]
    pub k_modes: Option<usize>,
    /// Damping ratio at or above which a sample is stable.
    #[arg(long = "zeta-threshold", global = true)]
    pub zeta_threshold: Option<f64>,
    #[arg(long, global = true, value_parser = parse_scale)]
    pub scale: Option<ScalePreset>,
    /// Sampling rate of CSV input (Hz).
    #[arg(long, global = true)]
    pub fs: Option<f64>,
}

fn parse_scale(s: &str) -> std::result::Result<ScalePreset, String> {
    match s {
        "paper" => Ok(ScalePreset::Paper),
        "desk" => Ok(ScalePreset::Desk),
        _ => Err(format!("expected paper or desk, got {s:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a labeled synthetic ringdown corpus.
    Gen(GenArgs),
    /// Uniform noise vectors shaped like an existing file.
    Noise(NoiseArgs),
    /// Center-of-angle removal, unwrapping, deviation and detrending.
    Preprocess(PreprocessArgs),
    /// Decompose each signal into VMD modes.
    Decompose(DecomposeArgs),
    /// Sum all VMD modes except the trend mode.
    Augment(AugmentArgs),
    /// Label signals by Prony damping of the dominant mode.
    Label(LabelArgs),
    /// Stratified train/test split.
    Split(SplitArgs),
    /// Kernel MMD two-sample test.
    MmdTest(MmdArgs),
    /// Train an Encoder classifier.
    Train(TrainArgs),
    /// Predict stability with a trained model.
    Classify(ClassifyArgs),
    /// Score a model, or cross-evaluate original against augmented data.
    Evaluate(EvaluateArgs),
    /// Accuracy against training-set size.
    Sweep(SweepArgs),
    /// Re-run the command recorded in a sidecar.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Fraction of unstable samples.
    #[arg(long, default_value_t = 0.5)]
    pub balance: f64,
    /// Noise standard deviation as a fraction of primary amplitude.
    #[arg(long)]
    pub noise_fraction: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    /// File whose row count and length the noise copies.
    #[arg(long)]
    pub like: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub high: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PreprocessArgs {
    /// Angle matrix CSV, one bus per row, radians.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Center-of-angle weights, normalized to sum to one.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Mode rows, K per input signal in input order.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AugmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnError {
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LabelArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// What to do with a sample that cannot be labeled.
    #[arg(long, value_enum, default_value_t = OnError::Fail)]
    pub on_error: OnError,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub train_fraction: f64,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MmdArgs {
    pub x: PathBuf,
    pub y: PathBuf,
    /// Significance levels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.05, 0.1])]
    pub levels: Vec<f64>,
    /// Fixed RBF bandwidth instead of the median heuristic.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Upper bound K of the kernel.
    #[arg(long)]
    pub kernel_bound: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Model checkpoint (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Threshold on the unstable probability.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Trained model to score on `--in`.
    #[arg(long, requires = "input", conflicts_with_all = ["original", "augmented"])]
    pub model: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Original corpus for cross-evaluation.
    #[arg(long, requires = "augmented")]
    pub original: Option<PathBuf>,
    /// Augmented corpus, sample i derived from original sample i.
    #[arg(long, requires = "original")]
    pub augmented: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub test_fraction: f64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub sidecar: PathBuf,
}

/// Contents of a `.run.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub outputs: Vec<PathBuf>,
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(SIDECAR_SUFFIX);
    PathBuf::from(s)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Exit status for an error: 2 for bad arguments or configuration, else 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses `argv` (program name first), runs, and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Command::Replay(r) = &cli.command {
        let text = std::fs::read_to_string(&r.sidecar)?;
        let sc: Sidecar =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad sidecar {}: {e}", r.sidecar.display())))?;
        if matches!(sc.command, Command::Replay(_)) {
            return Err(Error::Config("a sidecar cannot record a replay".into()));
        }
        sc.config.validate()?;
        return execute(&sc.command, &sc.config);
    }
    let config = resolve_config(&cli.global)?;
    execute(&cli.command, &config)
}

/// Configuration file plus flag overrides.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let text = match &g.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut cfg = RunConfig::resolve(text.as_deref(), g.scale)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
        cfg.encoder.seed = seed;
    }
    if let Some(a) = g.alpha {
        cfg.vmd.bandwidth_penalty = a;
    }
    if let Some(k) = g.k_modes {
        cfg.vmd.k_modes = k;
    }
    if let Some(z) = g.zeta_threshold {
        cfg.label.damping_ratio_threshold = z;
    }
    if let Some(fs) = g.fs {
        cfg.fs = fs;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Folds per-command settings into the configuration, so the sidecar
/// records exactly what ran.
fn command_config(cmd: &Command, base: &RunConfig) -> Result<RunConfig> {
    let mut cfg = base.clone();
    match cmd {
        Command::Gen(a) => {
            if let Some(f) = a.noise_fraction {
                cfg.corpus.noise_fraction = f;
            }
        }
        Command::MmdTest(a) => {
            if let Some(s) = a.sigma {
                cfg.kernel.bandwidth_sigma = Bandwidth::Fixed(s);
            }
            if let Some(k) = a.kernel_bound {
                cfg.kernel.kernel_bound = k;
            }
        }
        Command::Train(a) => {
            if let Some(e) = a.epochs {
                cfg.encoder.epochs = e;
            }
            if let Some(lr) = a.learning_rate {
                cfg.encoder.learning_rate = lr;
            }
            if let Some(b) = a.batch_size {
                cfg.encoder.batch_size = b;
            }
        }
        Command::Evaluate(EvaluateArgs { epochs: Some(e), .. }) | Command::Sweep(SweepArgs { epochs: Some(e), .. }) => {
            cfg.encoder.epochs = *e;
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cmd: &Command, base: &RunConfig) -> Result<()> {
    let cfg = command_config(cmd, base)?;
    let outputs = match cmd {
        Command::Gen(a) => run_gen(a, &cfg)?,
        Command::Noise(a) => run_noise(a, &cfg)?,
        Command::Preprocess(a) => run_preprocess(a, &cfg)?,
        Command::Decompose(a) => run_decompose(a, &cfg)?,
        Command::Augment(a) => run_augment(a, &cfg)?,
        Command::Label(a) => run_label(a, &cfg)?,
        Command::Split(a) => run_split(a, &cfg)?,
        Command::MmdTest(a) => run_mmd(a, &cfg)?,
        Command::Train(a) => run_train(a, &cfg)?,
        Command::Classify(a) => run_classify(a, &cfg)?,
        Command::Evaluate(a) => run_evaluate(a, &cfg)?,
        Command::Sweep(a) => run_sweep(a, &cfg)?,
        Command::Replay(_) => return arg_err("replay cannot be nested"),
    };
    let sc = Sidecar {
        tool: "trustaug".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.clone(),
        config: cfg,
        outputs,
    };
    let text = serde_json::to_string_pretty(&sc)?;
    for out in &sc.outputs {
        std::fs::write(sidecar_path(out), &text)?;
    }
    Ok(())
}

/// Signals from a dataset file, with labels when present.
pub fn read_signals(path: &Path, fs: f64) -> Result<(Vec<Signal>, Option<Vec<Label>>)> {
    match DataFormat::from_path(path) {
        DataFormat::Json => {
            let d = load_dataset(path, DataFormat::Json, fs)?;
            Ok((d.signals().into_iter().cloned().collect(), Some(d.labels())))
        }
        DataFormat::Csv => load_signal_rows(path, fs),
    }
}

pub fn read_dataset(path: &Path, fs: f64) -> Result<LabeledDataset> {
    load_dataset(path, DataFormat::from_path(path), fs)
}

fn write_signals(path: &Path, signals: &[Signal], labels: Option<&[Label]>) -> Result<()> {
    match (DataFormat::from_path(path), labels) {
        (DataFormat::Csv, _) => save_signal_rows(path, signals, labels),
        (DataFormat::Json, Some(l)) => {
            let samples = signals.iter().zip(l).map(|(s, &l)| LabeledSample::new(s.clone(), l)).collect();
            save_dataset(path, &LabeledDataset::new(samples)?, DataFormat::Json)
        }
        (DataFormat::Json, None) => arg_err(format!("{}: JSON output needs labels; use a .csv path", path.display())),
    }
}

fn write_dataset(path: &Path, d: &LabeledDataset) -> Result<()> {
    save_dataset(path, d, DataFormat::from_path(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn run_gen(a: &GenArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let corpus = gen_dataset(a.n, a.balance, cfg.seed, &cfg.corpus, &cfg.label)?;
    write_dataset(&a.out, &corpus.dataset)?;
    let truth_path = suffixed(&a.out, ".truth.json");
    let truth: &[RingdownSpec] = &corpus.truth;
    write_json(&truth_path, &truth)?;
    Ok(vec![a.out.clone(), truth_path])
}

fn run_noise(a: &NoiseArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (like, _) = read_signals(&a.like, cfg.fs)?;
    let noise = uniform_noise_like(&like, a.low, a.high, cfg.seed)?;
    write_signals(&a.out, &noise, None)?;
    Ok(vec![a.out.clone()])
}

fn run_preprocess(a: &PreprocessArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let m = load_angle_matrix(&a.input, cfg.fs)?;
    let w = match &a.weights {
        Some(p) => CoaWeights::normalized(load_weights(p)?)?,
        None => CoaWeights::uniform(m.n_buses())?,
    };
    let rows = preprocess_pipeline(&m, &w)?;
    write_signals(&a.out, &rows, None)?;
    Ok(vec![a.out.clone()])
}

#[derive(Serialize)]
struct ModeSummary {
    sample: usize,
    center_freqs: Vec<f64>,
    iterations_used: usize,
    converged: bool,
}

fn run_decompose(a: &DecomposeArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (signals, _) = read_signals(&a.input, cfg.fs)?;
    let mut modes = Vec::new();
    let mut summary = Vec::with_capacity(signals.len());
    for (i, s) in signals.iter().enumerate() {
        let m = decompose(s, &cfg.vmd)?;
        summary.push(ModeSummary {
            sample: i,
            center_freqs: m.center_freqs.clone(),
            iterations_used: m.iterations_used,
            converged: m.converged,
        });
        modes.extend(m.modes);
    }
    save_signal_rows(&a.out, &modes, None)?;
    let info = suffixed(&a.out, ".modes.json");
    write_json(&info, &summary)?;
    Ok(vec![a.out.clone(), info])
}

fn run_augment(a: &AugmentArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (signals, labels) = read_signals(&a.input, cfg.fs)?;
    let out = signals.iter().map(|s| augment(s, &cfg.vmd)).collect::<Result<Vec<_>>>()?;
    write_signals(&a.out, &out, labels.as_deref())?;
    Ok(vec![a.out.clone()])
}

#[derive(Serialize)]
struct LabelEntry {
    sample: usize,
    #[serde(flatten)]
    report: Option<LabelReport>,
    error: Option<String>,
}

fn run_label(a: &LabelArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (signals, _) = read_signals(&a.input, cfg.fs)?;
    let mut kept = Vec::with_capacity(signals.len());
    let mut entries = Vec::with_capacity(signals.len());
    for (i, s) in signals.iter().enumerate() {
        match label_report(s, &cfg.labeling_vmd, &cfg.label) {
            Ok(r) => {
                kept.push(LabeledSample::new(s.clone(), r.label));
                entries.push(LabelEntry { sample: i, report: Some(r), error: None });
            }
            Err(e @ (Error::Label(_) | Error::Fit(_))) if a.on_error == OnError::Skip => {
                entries.push(LabelEntry { sample: i, report: None, error: Some(e.to_string()) });
            }
            Err(Error::Label(e) | Error::Fit(e)) => return Err(Error::Label(format!("sample {i}: {e}"))),
            Err(e) => return Err(e),
        }
    }
    write_dataset(&a.out, &LabeledDataset::new(kept)?)?;
    let report = suffixed(&a.out, ".report.json");
    write_json(&report, &entries)?;
    Ok(vec![a.out.clone(), report])
}

fn run_split(a: &SplitArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let d = read_dataset(&a.input, cfg.fs)?;
    let (train_set, test_set) = split_dataset(&d, a.train_fraction, cfg.seed)?;
    write_dataset(&a.train_out, &train_set)?;
    write_dataset(&a.test_out, &test_set)?;
    Ok(vec![a.train_out.clone(), a.test_out.clone()])
}

#[derive(Serialize)]
struct MmdOutput {
    x_rows: usize,
    y_rows: usize,
    reports: Vec<MmdReport>,
}

fn run_mmd(a: &MmdArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (x, _) = read_signals(&a.x, cfg.fs)?;
    let (y, _) = read_signals(&a.y, cfg.fs)?;
    // Equal sample counts are required; the larger set is truncated.
    let m = x.len().min(y.len());
    let xv: Vec<Vec<f64>> = x[..m].iter().map(|s| s.samples().to_vec()).collect();
    let yv: Vec<Vec<f64>> = y[..m].iter().map(|s| s.samples().to_vec()).collect();
    let reports = two_sample_tests(&xv, &yv, &cfg.kernel, &a.levels)?;
    let out = MmdOutput { x_rows: x.len(), y_rows: y.len(), reports };
    println!("{}", serde_json::to_string_pretty(&out)?);
    match &a.out {
        Some(p) => {
            write_json(p, &out)?;
            Ok(vec![p.clone()])
        }
        None => Ok(Vec::new()),
    }
}

fn run_train(a: &TrainArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let d = read_dataset(&a.input, cfg.fs)?;
    let mut model = EncoderModel::new(cfg.encoder.clone())?;
    let report = train(&mut model, &d, &cfg.encoder)?;
    model.save(&a.out)?;
    let history = suffixed(&a.out, ".history.csv");
    let mut w = std::io::BufWriter::new(File::create(&history)?);
    writeln!(w, "epoch,loss,accuracy")?;
    for (i, (l, acc)) in report.epoch_loss.iter().zip(&report.epoch_accuracy).enumerate() {
        writeln!(w, "{},{l},{acc}", i + 1)?;
    }
    w.flush()?;
    Ok(vec![a.out.clone(), history])
}

fn run_classify(a: &ClassifyArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let model = EncoderModel::load(&a.model)?;
    let (signals, _) = read_signals(&a.input, cfg.fs)?;
    let probs = model.forward(&signals)?;
    let mut w = std::io::BufWriter::new(File::create(&a.out)?);
    writeln!(w, "sample,p_unstable,label")?;
    for (i, p) in probs.iter().enumerate() {
        let pu = p[Label::Unstable.index()];
        writeln!(w, "{i},{pu},{}", crate::encoder::label_from_probability(pu, a.delta))?;
    }
    w.flush()?;
    Ok(vec![a.out.clone()])
}

#[derive(Serialize)]
struct ModelScore {
    counts: ConfusionCounts,
    metrics: Metrics,
}

fn run_evaluate(a: &EvaluateArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match (&a.model, &a.input, &a.original, &a.augmented) {
        (Some(model), Some(input), None, None) => {
            let model = EncoderModel::load(model)?;
            let d = read_dataset(input, cfg.fs)?;
            let counts = evaluate_model(&model, &d, a.delta)?;
            write_json(&a.out, &ModelScore { counts, metrics: Metrics::from_counts(&counts) })?;
        }
        (None, None, Some(orig), Some(aug)) => {
            if a.delta != DEFAULT_DELTA {
                return arg_err("cross-evaluation uses the default threshold");
            }
            let table = tstr_trts(&read_dataset(orig, cfg.fs)?, &read_dataset(aug, cfg.fs)?, &cfg.encoder)?;
            write_json(&a.out, &table)?;
        }
        _ => return arg_err("give either --model with --in, or --original with --augmented"),
    }
    Ok(vec![a.out.clone()])
}

fn run_sweep(a: &SweepArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let d = read_dataset(&a.input, cfg.fs)?;
    let rows = data_size_sweep(&d, &a.sizes, a.test_fraction, &cfg.encoder)?;
    let mut w = std::io::BufWriter::new(File::create(&a.out)?);
    write_sweep_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(vec![a.out.clone()])
}
