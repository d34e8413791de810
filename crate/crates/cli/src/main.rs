use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use i2e_core::energy::{EnergyModel, EnergyReport};
use i2e_core::stats::{self, CalibrationOptions, EventRateStats, RateCurve, Representation};
use i2e_core::{
    build_canonical_kernels, sample_kernel_set, Augment, ConversionConfig, Padding, TimestepOrder,
};
use i2e_cli::bench::bench;
use i2e_cli::corpus::load_corpus;
use i2e_cli::pipeline::{run_pipeline, validate_dataset, OutputLayout, PipelineConfig, RunManifest};
use i2e_cli::preprocess::PreprocessConfig;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser)]
#[command(name = "i2e", version, about = "Convert static images into binary event streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an image directory into a sharded event dataset
    Convert(ConvertArgs),
    /// Per-sample event rates (CSV) and corpus aggregates (JSON)
    Stats(StatsArgs),
    /// Find the sensitivity that hits a target mean event rate
    Calibrate(CalibrateArgs),
    /// Shannon entropy of image and event representations
    Entropy(EntropyArgs),
    /// First-layer energy estimate
    Energy(EnergyArgs),
    /// Time the convolution path against the shift-subtract reference
    Bench(BenchArgs),
    /// Re-check hashes, decoding and statistics of a converted dataset
    Validate(ValidateArgs),
    /// Print the kernel set and timestep order as JSON
    Kernels(KernelArgs),
}

#[derive(Args, Clone)]
struct ConversionArgs {
    /// Sensitivity s_th0
    #[arg(long = "sth0", default_value_t = 0.12)]
    s_th0: f64,
    #[arg(long, default_value_t = 8)]
    timesteps: usize,
    /// Group order, e.g. gab
    #[arg(long, default_value = "gab")]
    order: String,
    /// replicate or zero
    #[arg(long, default_value = "replicate")]
    padding: String,
    /// canonical or random kernel selection
    #[arg(long, default_value = "canonical")]
    augment: String,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

impl ConversionArgs {
    fn config(&self) -> Result<ConversionConfig> {
        let cfg = ConversionConfig {
            s_th0: self.s_th0,
            timesteps: self.timesteps,
            order: TimestepOrder::parse(&self.order)?,
            padding: self.padding.parse::<Padding>()?,
            augment: self.augment.parse::<Augment>()?,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
    #[arg(long, default_value_t = 224)]
    size: usize,
    #[command(flatten)]
    conversion: ConversionArgs,
    /// dense, sparse or both
    #[arg(long, default_value = "both")]
    layout: String,
    #[arg(long, default_value_t = 1000)]
    shard_size: usize,
    /// Horizontal flip probability (training mode)
    #[arg(long, default_value_t = 0.0)]
    flip_prob: f64,
    /// Zero padding for random crops (training mode)
    #[arg(long, default_value_t = 0)]
    crop_padding: usize,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 224)]
    size: usize,
    #[command(flatten)]
    conversion: ConversionArgs,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Per-sample CSV destination, `-` for stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 0.05)]
    target_rate: f64,
    #[arg(long, default_value_t = 0.0025)]
    tolerance: f64,
    /// Write a rate-versus-s_th0 table as CSV
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    sweep_points: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReprArg {
    Gray,
    Value,
    Events,
    All,
}

#[derive(Args)]
struct EntropyArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "all")]
    representation: ReprArg,
    /// Per-sample CSV destination, `-` for stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Markdown,
}

#[derive(Args)]
struct EnergyArgs {
    /// Firing rate of the event input
    #[arg(long, default_value_t = 0.05)]
    fr: f64,
    /// Take the firing rate from a converted dataset's manifest
    #[arg(long, conflicts_with = "fr")]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    timesteps: u64,
    #[arg(long, default_value_t = 224)]
    size: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: TableFormat,
}

#[derive(Args)]
struct BenchArgs {
    /// Image directory; a synthetic corpus is used when omitted
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 224)]
    size: usize,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[command(flatten)]
    conversion: ConversionArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Dataset directory containing manifest.json
    dir: PathBuf,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, default_value = "gab")]
    order: String,
    /// Sample an equivalent kernel set with this seed
    #[arg(long)]
    sample_seed: Option<u64>,
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn csv_writer(dest: &Path) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = if dest == Path::new("-") {
        Box::new(std::io::stdout())
    } else {
        Box::new(
            std::fs::File::create(dest).with_context(|| format!("creating {}", dest.display()))?,
        )
    };
    Ok(csv::Writer::from_writer(sink))
}

fn run_convert(args: ConvertArgs) -> Result<()> {
    let cfg = PipelineConfig {
        input: args.input,
        output: args.output,
        preprocess: PreprocessConfig {
            size: args.size,
            train: args.flip_prob > 0.0 || args.crop_padding > 0,
            flip_prob: args.flip_prob,
            crop_padding: args.crop_padding,
        },
        conversion: args.conversion.config()?,
        shard_size: args.shard_size,
        layout: args.layout.parse::<OutputLayout>()?,
        workers: args.workers,
    };
    let manifest = run_pipeline(&cfg)?;
    print_json(&serde_json::json!({
        "output": cfg.output,
        "samples": manifest.samples.len(),
        "skipped": manifest.skipped.len(),
        "shards": manifest.shards.len(),
        "event_rate": manifest.event_rate,
        "timings": manifest.timings,
    }))
}

fn run_stats(args: StatsArgs) -> Result<()> {
    let cfg = args.corpus.conversion.config()?;
    let (index, images) = load_corpus(&args.corpus.input, args.corpus.size)?;
    let rates = EventRateStats::measure(&images, &cfg)?;
    if let Some(dest) = &args.csv {
        let mut w = csv_writer(dest)?;
        w.write_record(["id", "label", "event_rate"])?;
        for (s, r) in index.samples.iter().zip(&rates.rates) {
            w.write_record([s.id.clone(), s.label.to_string(), r.to_string()])?;
        }
        w.flush()?;
    }
    if args.csv.as_deref() != Some(Path::new("-")) {
        print_json(&serde_json::json!({
            "samples": images.len(),
            "skipped": index.skipped.len(),
            "config": cfg,
            "summary": rates.summary,
            "bin_width": rates.bin_width,
            "histogram": rates.histogram,
        }))?;
    }
    Ok(())
}

fn run_calibrate(args: CalibrateArgs) -> Result<()> {
    let cfg = args.corpus.conversion.config()?;
    let (_, images) = load_corpus(&args.corpus.input, args.corpus.size)?;
    let curve = RateCurve::build(&images, &cfg)?;
    if let Some(dest) = &args.sweep {
        let n = args.sweep_points.max(1);
        let grid: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let mut w = csv_writer(dest)?;
        for p in stats::sweep(&curve, &grid) {
            w.serialize(p)?;
        }
        w.flush()?;
    }
    let opts = CalibrationOptions {
        tolerance: args.tolerance,
        ..Default::default()
    };
    let cal = stats::calibrate_curve(&curve, args.target_rate, opts)?;
    print_json(&serde_json::json!({
        "samples": images.len(),
        "calibration": cal,
    }))
}

fn run_entropy(args: EntropyArgs) -> Result<()> {
    let cfg = args.corpus.conversion.config()?;
    let (index, images) = load_corpus(&args.corpus.input, args.corpus.size)?;
    let reprs = match args.representation {
        ReprArg::Gray => vec![Representation::Grayscale],
        ReprArg::Value => vec![Representation::ValueMap],
        ReprArg::Events => vec![Representation::EventStream],
        ReprArg::All => vec![
            Representation::Grayscale,
            Representation::ValueMap,
            Representation::EventStream,
        ],
    };
    let reports = reprs
        .into_iter()
        .map(|r| stats::entropy_report(&images, r, &cfg))
        .collect::<i2e_core::Result<Vec<_>>>()?;
    if let Some(dest) = &args.csv {
        let mut w = csv_writer(dest)?;
        w.write_record(["id", "representation", "entropy_bits"])?;
        for rep in &reports {
            for (s, h) in index.samples.iter().zip(&rep.per_sample) {
                w.write_record([s.id.clone(), rep.representation.to_string(), h.to_string()])?;
            }
        }
        w.flush()?;
    }
    if args.csv.as_deref() != Some(Path::new("-")) {
        let summary: Vec<_> = reports
            .iter()
            .map(|r| {
                serde_json::json!({
                    "representation": r.representation,
                    "alphabet_size": r.alphabet_size,
                    "symbol_model": r.symbol_model,
                    "mean_bits": r.mean,
                    "std_bits": r.std,
                })
            })
            .collect();
        print_json(&serde_json::json!({ "samples": images.len(), "reports": summary }))?;
    }
    Ok(())
}

fn run_energy(args: EnergyArgs) -> Result<()> {
    let fr = match &args.dataset {
        Some(dir) => RunManifest::load(dir)?.event_rate.mean,
        None => args.fr,
    };
    let model = EnergyModel {
        fr,
        timesteps: args.timesteps,
        ..Default::default()
    };
    let report = EnergyReport::first_layer(
        &i2e_core::energy::LayerSpec::resnet_stem(3),
        &i2e_core::energy::LayerSpec::resnet_stem(2),
        args.size,
        args.size,
        &model,
    )?;
    match args.format {
        TableFormat::Json => print_json(&report),
        TableFormat::Markdown => {
            print!("{}", report.to_markdown());
            Ok(())
        }
    }
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let cfg = args.conversion.config()?;
    let images = match &args.input {
        Some(dir) => load_corpus(dir, args.size)?.1,
        None => i2e_core::synth::natural_corpus(args.samples, args.size, args.size, cfg.seed),
    };
    let report = bench(&images, &cfg, args.repeats)?;
    print_json(&report)
}

fn run_validate(args: ValidateArgs) -> Result<()> {
    let report = validate_dataset(&args.dir)?;
    print_json(&report)
}

fn run_kernels(args: KernelArgs) -> Result<()> {
    let order = TimestepOrder::parse(&args.order)?;
    let set = match args.sample_seed {
        Some(seed) => sample_kernel_set(seed),
        None => build_canonical_kernels(),
    };
    print_json(&serde_json::json!({
        "order": order.ascii(),
        "labels": order.labels(),
        "permutation": order.permutation(),
        "kernels": set.to_json(),
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Convert(a) => run_convert(a),
        Command::Stats(a) => run_stats(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Entropy(a) => run_entropy(a),
        Command::Energy(a) => run_energy(a),
        Command::Bench(a) => run_bench(a),
        Command::Validate(a) => run_validate(a),
        Command::Kernels(a) => run_kernels(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage_error(&e) {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}

/// Invalid flag values surface as configuration errors after parsing.
fn is_usage_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<i2e_core::Error>(),
            Some(i2e_core::Error::InvalidConfig(_) | i2e_core::Error::InvalidOrder(_))
        ) || matches!(
            c.downcast_ref::<i2e_cli::PipelineError>(),
            Some(
                i2e_cli::PipelineError::Config(_)
                    | i2e_cli::PipelineError::Core(
                        i2e_core::Error::InvalidConfig(_) | i2e_core::Error::InvalidOrder(_)
                    )
            )
        )
    })
}
