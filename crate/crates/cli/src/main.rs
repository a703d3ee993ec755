//! `stl`: command-line front end for the STL activation toolkit.
//!
//! Tables go to stdout (or `--output`) as CSV; summaries go to stderr.
//! Exit status is 0 on success, 1 on a domain or I/O error and 2 on a
//! usage error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stl_core::activation::{
    activation_grad, activation_value, softmax, Activation, ActivationKind,
};
use stl_core::bench::{
    compare_runtimes, write_bench_csv, BenchRow, BENCH_N, BRANCH_MIX_RANGE, DEFAULT_REPEATS,
    WIDE_RANGE,
};
use stl_core::fast_log::{audit_log2, Log2Mode, DEFAULT_LUT_SIZE};
use stl_core::micronet::{
    compare_activations, train, write_comparison_csv, write_history_csv, write_synthetic_digits,
    DatasetRef, HistoryRow, TrainConfig,
};
use stl_core::props::{render_property_table, write_property_csv, PropertyGrid, SuiteConfig};
use stl_core::report::write_rows;
use stl_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "stl",
    version,
    about = "Signed and truncated logarithm activation toolkit"
)]
struct Cli {
    /// Write the table here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an activation. Softmax takes a comma-separated vector.
    Eval(PointArgs),
    /// Evaluate an activation's derivative. Softmax is not supported.
    Grad(PointArgs),
    /// Run the property checks and print one row per activation.
    Props(PropsArgs),
    /// Compare the fast log2 approximation with the library log2 on [1, 2).
    FastlogAudit(AuditArgs),
    /// Time elementwise evaluation over a random batch.
    Bench(BenchArgs),
    /// Train one network and print its per-epoch history.
    Train(TrainArgs),
    /// Train the same network once per (activation, seed).
    Compare(CompareArgs),
    /// Write a synthetic MNIST-format digit set as two IDX files.
    SynthIdx(SynthArgs),
}

#[derive(Args)]
struct PointArgs {
    #[arg(long, default_value = "stl")]
    kind: ActivationKind,
    /// Input value, or comma-separated values for softmax.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Parameter for stl, prelu, elu and nlrelu.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct PropsArgs {
    /// Comma-separated activation names; all eleven by default.
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<ActivationKind>,
    /// Half-width of the uniformly sampled interval.
    #[arg(long, default_value_t = 2.0)]
    inner: f64,
    /// Largest |x| reached by the log-spaced tails.
    #[arg(long, default_value_t = 1e4)]
    outer: f64,
    #[arg(long, default_value_t = 2001)]
    uniform: usize,
    /// Log-spaced points on each side.
    #[arg(long, default_value_t = 1000)]
    log_points: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Polynomial,
    Lut,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Polynomial)]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_LUT_SIZE)]
    lut_size: usize,
    #[arg(long, default_value_t = 1000)]
    grid_size: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    /// [-10000, 10000]
    Wide,
    /// [-2, 2], where both branches are taken
    Mixed,
    Both,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = BENCH_N)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, value_enum, default_value_t = RangeArg::Both)]
    range: RangeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Blobs,
    Idx,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, value_enum, default_value_t = DatasetArg::Blobs)]
    dataset: DatasetArg,
    #[arg(long, required_if_eq("dataset", "idx"))]
    images: Option<PathBuf>,
    #[arg(long, required_if_eq("dataset", "idx"))]
    labels: Option<PathBuf>,
    /// Use only the first N IDX samples.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 600)]
    samples: usize,
    #[arg(long, default_value_t = 0.15)]
    noise: f64,
    /// Seed of the blob generator.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn dataset(&self) -> DatasetRef {
        match self.dataset {
            DatasetArg::Blobs => {
                DatasetRef::blobs(self.classes, self.samples, self.noise, self.data_seed)
            }
            DatasetArg::Idx => DatasetRef::idx(
                self.images.clone().expect("clap enforces --images"),
                self.labels.clone().expect("clap enforces --labels"),
                self.limit,
            ),
        }
    }
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "32")]
    hidden: Vec<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value = "stl")]
    activation: ActivationKind,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, value_delimiter = ',', default_value = "relu,tanh,softsign,stl")]
    activations: Vec<ActivationKind>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    /// Also write the per-epoch history of every run here.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    seed: u64,
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })
}

fn write_error(source: io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source,
    }
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn with_alpha(kind: ActivationKind, alpha: Option<f64>) -> Result<ActivationKind> {
    match (kind, alpha) {
        (ActivationKind::Scalar(a), Some(alpha)) => {
            Ok(ActivationKind::Scalar(a.with_param(alpha)?))
        }
        _ => Ok(kind),
    }
}

fn scalar_activation(kind: ActivationKind, alpha: Option<f64>) -> Result<Activation> {
    with_alpha(kind, alpha)?.scalar()
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("bad number `{t}`: {e}")))
        })
        .collect()
}

fn point(args: &PointArgs, gradient: bool, out: &mut dyn Write) -> Result<()> {
    let xs = parse_values(&args.x)?;
    let kind = with_alpha(args.kind, args.alpha)?;
    let values = match (kind, gradient) {
        (ActivationKind::Softmax, false) => softmax(&xs)?,
        _ => {
            let [x] = xs[..] else {
                return Err(Error::InvalidConfig(format!(
                    "{} takes a single --x value, got {}",
                    kind.name(),
                    xs.len()
                )));
            };
            let f = if gradient {
                activation_grad
            } else {
                activation_value
            };
            vec![f(kind, x)?]
        }
    };
    let text: Vec<String> = values.iter().map(f64::to_string).collect();
    writeln!(out, "{}", text.join(",")).map_err(write_error)?;
    Ok(())
}

fn props(args: &PropsArgs, out: &mut dyn Write) -> Result<()> {
    let kinds = if args.kinds.is_empty() {
        ActivationKind::ALL.to_vec()
    } else {
        args.kinds.clone()
    };
    let cfg = SuiteConfig {
        grid: PropertyGrid::symmetric(args.inner, args.outer, args.uniform, args.log_points)?,
        ..SuiteConfig::default()
    };
    let reports = render_property_table(&kinds, &cfg);
    for r in &reports {
        let mism = r.mismatches();
        if !mism.is_empty() {
            eprintln!(
                "{}: differs from the declared table in {}",
                r.kind.name(),
                mism.join(", ")
            );
        }
    }
    write_property_csv(&reports, out)
}

fn fastlog_audit(args: &AuditArgs, out: &mut dyn Write) -> Result<()> {
    let mode = match args.mode {
        ModeArg::Polynomial => Log2Mode::Polynomial,
        ModeArg::Lut => Log2Mode::lut(args.lut_size)?,
    };
    let audit = audit_log2(&mode, args.grid_size)?;
    eprintln!(
        "{}: max_abs_err={:.7} at m={:.6} (bound {})",
        mode.name(),
        audit.max_abs_err,
        audit.argmax,
        mode.error_bound()
    );
    write_rows(&audit.rows, out)
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let ranges: &[(&str, (f64, f64))] = match args.range {
        RangeArg::Wide => &[("wide", WIDE_RANGE)],
        RangeArg::Mixed => &[("mixed", BRANCH_MIX_RANGE)],
        RangeArg::Both => &[("wide", WIDE_RANGE), ("mixed", BRANCH_MIX_RANGE)],
    };
    let mut rows = Vec::new();
    let mut meta = vec![
        ("n", args.n.to_string()),
        ("seed", args.seed.to_string()),
        ("repeats", args.repeats.to_string()),
        (
            "threads",
            "1 (timed regions are single-threaded; no CPU pinning)".to_string(),
        ),
    ];
    for &(name, range) in ranges {
        meta.push(("range", format!("{name}=[{}, {})", range.0, range.1)));
        for r in compare_runtimes(args.n, range, args.seed, args.repeats)? {
            let mut row = BenchRow::from(&r);
            row.label = format!("{name}:{}", row.label);
            eprintln!("{:<28} median {:>10.3} us", row.label, r.median * 1e6);
            rows.push(row);
        }
    }
    write_bench_csv(&rows, &meta, out)
}

fn run_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let config = TrainConfig {
        epochs: args.hyper.epochs,
        batch_size: args.hyper.batch_size,
        learning_rate: args.hyper.lr,
        seed: args.seed,
        dataset: args.data.dataset(),
        activation: scalar_activation(args.activation, args.alpha)?,
        hidden: args.hyper.hidden.clone(),
    };
    let outcome = train(&config)?;
    eprintln!("final test accuracy {:.4}", outcome.final_accuracy());
    let rows: Vec<HistoryRow> = outcome
        .history
        .iter()
        .map(|h| HistoryRow {
            activation: config.activation.name().to_string(),
            seed: config.seed,
            epoch: h.epoch,
            loss: h.loss,
            test_accuracy: h.test_accuracy,
        })
        .collect();
    write_history_csv(&rows, out)
}

fn run_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let kinds = args
        .activations
        .iter()
        .map(|&k| k.scalar())
        .collect::<Result<Vec<_>>>()?;
    let base = TrainConfig {
        epochs: args.hyper.epochs,
        batch_size: args.hyper.batch_size,
        learning_rate: args.hyper.lr,
        seed: 0,
        dataset: args.data.dataset(),
        activation: kinds[0],
        hidden: args.hyper.hidden.clone(),
    };
    let (rows, history) = compare_activations(&base, &kinds, &args.seeds)?;
    if let Some(path) = &args.history {
        write_history_csv(&history, create(path)?)?;
    }
    write_comparison_csv(&rows, out)
}

fn synth(args: &SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&args.dir).map_err(|source| Error::Io {
        path: args.dir.clone(),
        source,
    })?;
    let (images, labels) = write_synthetic_digits(&args.dir, args.n, args.seed)?;
    eprintln!("wrote {} and {}", images.display(), labels.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Command::SynthIdx(args) = &cli.command {
        return synth(args);
    }
    let mut out = open_output(cli.output.as_ref())?;
    match &cli.command {
        Command::Eval(a) => point(a, false, &mut out)?,
        Command::Grad(a) => point(a, true, &mut out)?,
        Command::Props(a) => props(a, &mut out)?,
        Command::FastlogAudit(a) => fastlog_audit(a, &mut out)?,
        Command::Bench(a) => bench(a, &mut out)?,
        Command::Train(a) => run_train(a, &mut out)?,
        Command::Compare(a) => run_compare(a, &mut out)?,
        Command::SynthIdx(_) => unreachable!("handled above"),
    }
    out.flush().map_err(write_error)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
