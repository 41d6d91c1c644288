use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use beatnote::bench::{bench, bench_windows};
use beatnote::config::{self, KeyValues};
use beatnote::formats::{self, open_dataset, write_dataset_file};
use beatnote::report::{self, EstimateRow, EstimateWriter, LabelWriter};
use beatnote::Estimator;
use beatnote_core::eval::{sweep_frequency, FreqStats, SweepConfig, SweepReport};
use beatnote_core::mask::{MaskConfig, MaskStream};
use beatnote_core::rng::derive_seed;
use beatnote_core::train::{train_with, EpochRecord, TrainConfig, TrainObserver};
use beatnote_core::{generate_dataset, EstimateMethod, FrequencyEstimator, Model, ParamRanges, SingleTone};

#[derive(Parser)]
#[command(name = "beatnote", version, about = "Beat-note frequency estimation: data, training, sweeps, masks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a BNDS dataset
    Gen(GenArgs),
    /// Train the denoise+regress network
    Train(TrainArgs),
    /// Monte Carlo precision sweep over a frequency grid
    EvalSweep(SweepArgs),
    /// Estimate the frequency of every record in a dataset
    Infer(InferArgs),
    /// Label a stream of frames 0 (good), 1 (anomaly) or 2 (split mode)
    Mask(MaskArgs),
    /// Measure single-window latency
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    St,
    Nn,
}

#[derive(Args)]
struct EstimatorArgs {
    /// Estimator
    #[arg(long, value_enum, default_value = "st")]
    method: Method,
    /// Model file (required with --method nn)
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    /// Sample rate, Hz
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Samples per window
    #[arg(long)]
    n_samples: Option<usize>,
}

impl WindowArgs {
    fn apply(&self, ranges: &mut ParamRanges) {
        if let Some(fs) = self.sample_rate {
            ranges.sample_rate_hz = fs;
        }
        if let Some(n) = self.n_samples {
            ranges.n_samples = n;
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// key = value file with range keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Records (ignored with --grid)
    #[arg(long, default_value_t = 1000)]
    count: u64,
    /// Sweep layout f0:f1:step; --trials records per grid frequency
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Store `1 + depth * noisy` as the noisy window (fringe intensity)
    #[arg(long)]
    intensity_depth: Option<f64>,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch CSV
    #[arg(long)]
    history: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per grid frequency
    #[arg(long)]
    trials: Option<u64>,
    /// f0:f1:step in Hz
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    window: WindowArgs,
    /// Summarize an estimate list (from `infer`) instead of simulating
    #[arg(long, conflicts_with = "grid")]
    estimates: Option<PathBuf>,
    /// Write every estimate as `target_hz,estimate_hz`
    #[arg(long)]
    dump_estimates: Option<PathBuf>,
    /// Report CSV (standard output when omitted); the configuration goes to
    /// `<out>.meta`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Estimates CSV (standard output when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// key = value file with mask keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ref_mean: Option<f64>,
    #[arg(long)]
    ref_sigma: Option<f64>,
    #[arg(long)]
    k_sigma: Option<f64>,
    #[arg(long)]
    contrast_threshold: Option<f64>,
    /// Build the reference band from the first N frames
    #[arg(long)]
    calibration: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Windows to time (at least 100)
    #[arg(long, default_value_t = 10_000)]
    windows: usize,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Problems with the invocation itself; mapped to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::EvalSweep(a) => cmd_sweep(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Mask(a) => cmd_mask(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_config(path: Option<&Path>) -> anyhow::Result<KeyValues> {
    match path {
        Some(p) => Ok(KeyValues::load(p)?),
        None => Ok(KeyValues::default()),
    }
}

fn parse_grid(text: &str) -> anyhow::Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[a, b, c]) => Ok((a, b, c)),
        _ => Err(usage(format!("--grid expects f0:f1:step, got {text:?}"))),
    }
}

fn estimator(args: &EstimatorArgs) -> anyhow::Result<Estimator> {
    match (args.method, &args.model) {
        (Method::St, _) => Ok(Estimator::SingleTone(SingleTone::default())),
        (Method::Nn, None) => Err(usage("--method nn requires --model")),
        (Method::Nn, Some(p)) => {
            let m = formats::load_model(p).with_context(|| format!("loading model {}", p.display()))?;
            Ok(Estimator::NeuralNet(Box::new(m)))
        }
    }
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    let mut kv = load_config(a.config.as_deref())?;
    let mut ranges = ParamRanges::default();
    config::apply_ranges(&mut kv, &mut ranges)?;
    kv.finish()?;
    a.window.apply(&mut ranges);
    ranges.validate()?;
    let depth = a.intensity_depth;
    let to_intensity = move |mut r: beatnote_core::DatasetRecord| {
        if let Some(d) = depth {
            let fs = r.noisy.sample_rate_hz();
            let s = r.noisy.samples().iter().map(|v| 1.0 + d * v).collect();
            r.noisy = beatnote_core::SignalWindow::new(s, fs).expect("finite intensity");
        }
        r
    };
    match &a.grid {
        None => {
            let records = generate_dataset(a.count, &ranges, a.seed)?.map(to_intensity);
            write_dataset_file(&a.out, ranges.n_samples, ranges.sample_rate_hz, records)?;
        }
        Some(g) => {
            // same per-frequency streams as eval-sweep with this seed
            let (f0, f1, step) = parse_grid(g)?;
            let sweep = SweepConfig { f_start: f0, f_stop: f1, f_step: step, trials_per_freq: a.trials, seed: a.seed, ranges: ranges.clone(), ..SweepConfig::default() };
            sweep.validate()?;
            let grid = sweep.grid();
            let mut records = Vec::with_capacity(grid.len() * a.trials as usize);
            for (i, &f) in grid.iter().enumerate() {
                records.extend(generate_dataset(a.trials, &sweep.ranges_at(f), derive_seed(a.seed, i as u64))?.map(to_intensity));
            }
            write_dataset_file(&a.out, ranges.n_samples, ranges.sample_rate_hz, records.into_iter())?;
        }
    }
    Ok(())
}

struct Progress {
    start: Instant,
    checkpoint: PathBuf,
    error: Option<anyhow::Error>,
}

impl TrainObserver for Progress {
    fn now(&mut self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn on_epoch(&mut self, r: &EpochRecord) {
        eprintln!(
            "epoch {:>3}  train {:.6e}  val {:.6e}  val_freq {:.3e}  {:.1}s",
            r.epoch, r.train_loss, r.val_loss, r.val_freq_loss, r.seconds
        );
    }

    fn on_improvement(&mut self, model: &Model<f32>, _: &EpochRecord) {
        if let Err(e) = formats::save_model(&self.checkpoint, model) {
            self.error.get_or_insert(e.into());
        }
    }
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<()> {
    let mut kv = load_config(a.config.as_deref())?;
    let mut cfg = TrainConfig::default();
    config::apply_train(&mut kv, &mut cfg)?;
    kv.finish()?;
    a.window.apply(&mut cfg.ranges);
    cfg.architecture.input_len = cfg.ranges.n_samples;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let mut progress = Progress { start: Instant::now(), checkpoint: a.out.clone(), error: None };
    let (model, history) = train_with(&cfg, &mut progress)?;
    if let Some(e) = progress.error {
        return Err(e.context("writing checkpoint"));
    }
    formats::save_model(&a.out, &model)?;
    if let Some(h) = &a.history {
        report::write_history(File::create(h)?, &history.epochs)?;
    }
    eprintln!("best epoch {} (val {:.6e})", history.best_epoch, history.best_val_loss());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> anyhow::Result<()> {
    let mut kv = load_config(a.config.as_deref())?;
    let mut cfg = SweepConfig::default();
    config::apply_sweep(&mut kv, &mut cfg)?;
    kv.finish()?;
    a.window.apply(&mut cfg.ranges);
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials_per_freq = t;
    }
    if let Some(g) = &a.grid {
        (cfg.f_start, cfg.f_stop, cfg.f_step) = parse_grid(g)?;
    }
    let report = match &a.estimates {
        Some(path) => {
            if a.dump_estimates.is_some() {
                return Err(usage("--dump-estimates needs a simulated sweep"));
            }
            let rows = report::read_estimates(File::open(path).with_context(|| format!("opening {}", path.display()))?)
                .map_err(|e| anyhow::anyhow!("{path:?}: {e}"))?;
            cfg.estimator = match a.estimator.method {
                Method::St => EstimateMethod::SingleTone,
                Method::Nn => EstimateMethod::NeuralNet,
            };
            report::report_from_estimates(&rows, cfg.clone())?
        }
        None => {
            cfg.validate()?;
            let est = estimator(&a.estimator)?;
            cfg.estimator = est.method();
            let mut dump = match &a.dump_estimates {
                Some(p) => Some(csv::Writer::from_writer(BufWriter::new(File::create(p)?))),
                None => None,
            };
            if let Some(d) = dump.as_mut() {
                d.write_record(["target_hz", "estimate_hz"])?;
            }
            let mut rows = Vec::new();
            for (i, &f) in cfg.grid().iter().enumerate() {
                let (estimates, dropped) = sweep_frequency(&cfg, i, &est)?;
                if let Some(d) = dump.as_mut() {
                    for e in &estimates {
                        d.write_record([f.to_string(), e.to_string()])?;
                    }
                }
                rows.push(FreqStats::from_estimates(f, &estimates, dropped, cfg.bin_width_hz)?);
            }
            if let Some(mut d) = dump {
                d.flush()?;
            }
            SweepReport { config: cfg.clone(), rows }
        }
    };
    report::write_report(output(a.out.as_deref())?, &report)?;
    if let Some(out) = &a.out {
        let mut meta = out.clone().into_os_string();
        meta.push(".meta");
        std::fs::write(PathBuf::from(meta), config::sweep_echo(&report.config))?;
    }
    Ok(())
}

fn cmd_infer(a: InferArgs) -> anyhow::Result<()> {
    let est = estimator(&a.estimator)?;
    let reader = open_dataset(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let fs = reader.header().sample_rate_hz;
    let mut out = EstimateWriter::new(output(a.out.as_deref())?)?;
    const CHUNK: usize = 512;
    let mut pending = Vec::with_capacity(CHUNK);
    let mut index = 0u64;
    let mut flush = |pending: &mut Vec<(f64, beatnote_core::SignalWindow)>, out: &mut EstimateWriter<_>| -> anyhow::Result<()> {
        let windows: Vec<_> = pending.iter().map(|(_, w)| w.clone()).collect();
        for ((true_hz, _), r) in pending.drain(..).zip(est.estimate_many(&windows)) {
            let (estimate_hz, amplitude) = match r {
                Ok(e) => (Some(e.frequency_hz), Some(e.amplitude)),
                Err(_) => (None, None),
            };
            out.push(&EstimateRow { index, true_hz, estimate_hz, amplitude })?;
            index += 1;
        }
        Ok(())
    };
    for rec in reader {
        let rec = rec.with_context(|| format!("reading {}", a.input.display()))?;
        pending.push((f64::from(rec.frequency_hz), rec.noisy_window(fs)?));
        if pending.len() == CHUNK {
            flush(&mut pending, &mut out)?;
        }
    }
    flush(&mut pending, &mut out)?;
    out.finish()?;
    Ok(())
}

fn cmd_mask(a: MaskArgs) -> anyhow::Result<()> {
    let mut kv = load_config(a.config.as_deref())?;
    let mut cfg = MaskConfig::default();
    let mut have_ref = kv.take::<f64>("ref_mean")?.map(|v| cfg.ref_mean_hz = v).is_some();
    have_ref &= kv.take::<f64>("ref_sigma")?.map(|v| cfg.ref_sigma_hz = v).is_some();
    config::apply_mask(&mut kv, &mut cfg)?;
    kv.finish()?;
    if let (Some(m), Some(s)) = (a.ref_mean, a.ref_sigma) {
        (cfg.ref_mean_hz, cfg.ref_sigma_hz) = (m, s);
        have_ref = true;
    } else if a.ref_mean.is_some() || a.ref_sigma.is_some() {
        return Err(usage("--ref-mean and --ref-sigma go together"));
    }
    if let Some(k) = a.k_sigma {
        cfg.k_sigma = k;
    }
    if let Some(c) = a.contrast_threshold {
        cfg.contrast_threshold = c;
    }
    if !have_ref && a.calibration.is_none() {
        return Err(usage("give --ref-mean/--ref-sigma or --calibration N"));
    }
    let est = estimator(&a.estimator)?;
    let mut stream = match a.calibration {
        Some(n) => MaskStream::calibrating(est, cfg, n)?,
        None => MaskStream::new(est, cfg)?,
    };
    let reader = open_dataset(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let fs = reader.header().sample_rate_hz;
    let mut out = LabelWriter::new(output(a.out.as_deref())?)?;
    for rec in reader {
        let rec = rec.with_context(|| format!("reading {}", a.input.display()))?;
        out.push(&stream.push(&rec.noisy_window(fs)?))?;
    }
    out.finish()?;
    if stream.failures() > 0 {
        eprintln!("{} frames labeled 1 after estimator failure", stream.failures());
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    if a.windows < 100 {
        return Err(usage("--windows must be at least 100"));
    }
    let est = estimator(&a.estimator)?;
    let mut ranges = ParamRanges::default();
    a.window.apply(&mut ranges);
    let windows = bench_windows(a.windows, &ranges, a.seed)?;
    let report = bench(&est, &windows);
    if report.p99_us > 10_000.0 {
        eprintln!("warning: p99 latency {:.0} us exceeds the 10 ms frame budget", report.p99_us);
    }
    let mut out = output(a.out.as_deref())?;
    out.write_all(report.to_text().as_bytes())?;
    out.flush()?;
    Ok(())
}
