//! `signcon`: train, evaluate and benchmark sign-constrained linear models.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use signcon::dataio::{self, ModelHeader};
use signcon::experiment::{self, Solver, TrialSpec, TrialSummary};
use signcon::{
    metrics, objective, pegasos, sdca, ConvergenceTrace, DataMatrix, DualUpdate, Error, LossFamily, LossSpec,
    PrimalModel, Sign, SignPattern, TrainConfig,
};

#[derive(Parser)]
#[command(name = "signcon", version, about = "Sign-constrained Pegasos and SDCA solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it as plain text.
    Train(TrainArgs),
    /// Score a model on a dataset, or run paired constrained/unconstrained trials.
    Eval(EvalArgs),
    /// Trace SDCA and Pegasos (k = 10, 100) against a reference optimum.
    BenchConvergence(BenchArgs),
    /// Write a seeded synthetic dataset in SVM-light format.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    ScPega,
    ScSdca,
}

#[derive(Clone, Copy, ValueEnum)]
enum Update {
    Auto,
    ClosedForm,
    LowerBound,
}

impl From<Update> for DualUpdate {
    fn from(u: Update) -> Self {
        match u {
            Update::Auto => DualUpdate::Auto,
            Update::ClosedForm => DualUpdate::ClosedForm,
            Update::LowerBound => DualUpdate::LowerBound,
        }
    }
}

#[derive(clap::Args)]
struct LossArgs {
    /// hinge, smoothed-hinge, logistic, square, absolute, softmax, max-hinge, top-k
    #[arg(long)]
    loss: String,
    /// Smoothing width for the smoothed hinge.
    #[arg(long)]
    gamma: Option<f64>,
    /// `k` for the top-k hinge.
    #[arg(long)]
    topk: Option<usize>,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    loss: LossArgs,
    /// A positive number, or `1/n`.
    #[arg(long)]
    lambda: String,
    #[arg(long, value_enum)]
    algo: Algo,
    /// `none`, an inline spec such as `pos=1,3-6;neg=2`, or a sign file.
    #[arg(long, default_value = "none")]
    signs: String,
    #[arg(long)]
    iters: usize,
    /// Burn-in before tail averaging (SDCA).
    #[arg(long)]
    t0: Option<usize>,
    /// Mini-batch size (Pegasos).
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinate step used by SDCA.
    #[arg(long, value_enum, default_value = "auto")]
    update: Update,
    #[arg(long)]
    out: PathBuf,
    /// Write a CSV convergence trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Trace sampling stride in epochs.
    #[arg(long, default_value_t = 1.0)]
    trace_every: f64,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long, required_unless_present = "trials", requires = "data")]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated: roc, prbep, accuracy.
    #[arg(long, default_value = "roc,prbep")]
    metrics: String,
    /// Run this many paired trials on synthetic data instead.
    #[arg(long, conflicts_with = "model")]
    trials: Option<usize>,
    #[arg(long, default_value_t = 10)]
    n_train: usize,
    #[arg(long, default_value_t = 167)]
    n_test: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value = "1/n")]
    lambda: String,
    #[arg(long, default_value = "none")]
    signs: String,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    trace_every: f64,
    /// Directory for `sdca.csv`, `pegasos-k10.csv` and `pegasos-k100.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Classification,
    Regression,
    Multiclass,
    Phishing,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Sign pattern of the planted weights.
    #[arg(long, default_value = "none")]
    signs: String,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// A failure tagged with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_)
            | Error::InvalidLabels(_)
            | Error::Unsupported { .. }
            | Error::Arity { .. }
            | Error::DimensionMismatch { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        // library errors keep their classification through `context`
        match error.downcast_ref::<Error>() {
            Some(
                Error::InvalidConfig(_)
                | Error::InvalidLabels(_)
                | Error::Unsupported { .. }
                | Error::Arity { .. }
                | Error::DimensionMismatch { .. },
            ) => Failure { code: 2, error },
            _ => Failure { code: 1, error },
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        error: anyhow::anyhow!(msg.into()),
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::BenchConvergence(a) => bench(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_loss(args: &LossArgs) -> CliResult<LossFamily> {
    let family = match (args.loss.as_str(), args.gamma, args.topk) {
        ("smoothed-hinge", Some(g), None) => format!("smoothed-hinge@{g}").parse()?,
        ("smoothed-hinge", None, _) => return Err(usage("smoothed-hinge needs --gamma")),
        ("top-k", None, Some(k)) => format!("top-k@{k}").parse()?,
        ("top-k", _, None) => return Err(usage("top-k needs --topk")),
        (name, None, None) => name.parse()?,
        (name, _, _) => return Err(usage(format!("--gamma/--topk do not apply to `{name}`"))),
    };
    Ok(family)
}

fn parse_lambda(s: &str, n: usize) -> CliResult<f64> {
    let v = if s == "1/n" {
        1.0 / n as f64
    } else {
        s.parse::<f64>()
            .map_err(|_| usage(format!("--lambda expects a number or 1/n, got `{s}`")))?
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(usage(format!("--lambda must be positive, got {v}")));
    }
    Ok(v)
}

/// Loads an SVM-light file and narrows its labels to what `family` needs.
fn load_data(path: &Path, family: LossFamily, min_classes: usize) -> CliResult<DataMatrix> {
    let data = dataio::read_svmlight_file(path).with_context(|| format!("reading {}", path.display()))?;
    let labels = if family.needs_binary_labels() {
        data.labels().to_binary()?
    } else if family.is_multiclass() {
        data.labels().to_classes(min_classes)?
    } else {
        data.labels().to_real()?
    };
    Ok(data.with_labels(labels)?)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_trace(path: &Path, trace: &ConvergenceTrace) -> CliResult<()> {
    let mut out = create(path)?;
    dataio::write_trace_csv(trace, &mut out)?;
    out.flush().context("writing trace")?;
    Ok(())
}

fn train(a: TrainArgs) -> CliResult<()> {
    let family = resolve_loss(&a.loss)?;
    let data = load_data(&a.data, family, 0)?;
    let loss = LossSpec::new(family, data.labels())?;
    let lambda = parse_lambda(&a.lambda, data.len())?;
    let pattern = dataio::load_sign_spec(&a.signs, data.dim(), loss.outputs())?;
    let mut config = TrainConfig::new(lambda, a.iters)
        .with_seed(a.seed)
        .with_batch_size(a.batch)
        .with_dual_update(a.update.into());
    if let Some(t0) = a.t0 {
        config = config.with_burn_in(t0);
    }
    if a.trace.is_some() {
        config = config.with_trace_every(a.trace_every);
    }
    let (model, trace) = match a.algo {
        Algo::ScPega => {
            if a.t0.is_some() {
                return Err(usage("--t0 applies to sc-sdca only"));
            }
            let run = pegasos::train_pegasos(&data, &loss, &config, &pattern)?;
            (run.averaged, run.trace)
        }
        Algo::ScSdca => {
            if a.batch != 1 {
                return Err(usage("--batch applies to sc-pega only"));
            }
            let run = sdca::train_sdca(&data, &loss, &config, &pattern)?;
            (run.averaged, run.trace)
        }
    };
    let header = ModelHeader {
        lambda,
        loss: family.to_string(),
        seed: a.seed,
    };
    let mut out = create(&a.out)?;
    dataio::write_model(&model, &header, &mut out)?;
    out.flush().context("writing model")?;
    if let Some(path) = &a.trace {
        write_trace(path, &trace)?;
    }
    let p = objective::primal_objective(&model, &data, &loss, lambda)?;
    println!("primal_objective {p}");
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult<()> {
    if let Some(trials) = a.trials {
        return eval_trials(&a, trials);
    }
    let (Some(model_path), Some(data_path)) = (&a.model, &a.data) else {
        return Err(usage("eval needs --model and --data, or --trials"));
    };
    let file = File::open(model_path).with_context(|| format!("opening {}", model_path.display()))?;
    let (model, header) = dataio::read_model(BufReader::new(file))?;
    let family: LossFamily = header.loss.parse()?;
    let data = load_data(data_path, family, model.outputs())?;
    let data = if data.dim() < model.dim() { data.widen(model.dim())? } else { data };
    LossSpec::new(family, data.labels())?;
    let scores = model.score_all(&data)?;
    let mut out = io::stdout().lock();
    for metric in a.metrics.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        let value = if family.is_multiclass() {
            multiclass_metric(metric, &model, &data)?
        } else {
            let y = data.labels().values().expect("scalar labels");
            match metric {
                "roc" => metrics::roc_auc(&scores, y)?,
                "prbep" => metrics::prbep(&scores, y)?,
                "accuracy" => metrics::accuracy(&scores, y)?,
                other => return Err(usage(format!("unknown metric `{other}`"))),
            }
        };
        writeln!(out, "{metric} {value}").context("writing to stdout")?;
    }
    Ok(())
}

fn multiclass_metric(metric: &str, model: &PrimalModel, data: &DataMatrix) -> CliResult<f64> {
    match metric {
        "accuracy" => {
            let predicted: Vec<usize> = data.columns().map(|x| model.predict_class(x)).collect();
            let truth: Vec<usize> = (0..data.len())
                .map(|i| match data.labels().target(i) {
                    signcon::Target::Class(c) => c,
                    signcon::Target::Value(_) => unreachable!("class labels checked"),
                })
                .collect();
            Ok(metrics::class_accuracy(&predicted, &truth)?)
        }
        other => Err(usage(format!("metric `{other}` needs binary labels; use accuracy"))),
    }
}

fn eval_trials(a: &EvalArgs, trials: usize) -> CliResult<()> {
    let d = a.dim;
    if d == 0 {
        return Err(usage("--dim must be positive"));
    }
    // every coordinate constrained, alternating +, −
    let signs: Vec<Sign> = (0..d)
        .map(|h| if h % 2 == 0 { Sign::Positive } else { Sign::Negative })
        .collect();
    let pattern = SignPattern::new(signs);
    let data = dataio::synth_classification(a.seed, a.n_train + a.n_test, d, &pattern, a.noise)?;
    let spec = TrialSpec {
        n_train: a.n_train,
        trials,
        seed: a.seed,
        lambda: a.lambda,
        epochs: a.epochs,
        loss: LossFamily::Hinge,
        solver: Solver::Sdca,
    };
    let outcomes = experiment::paired_sign_trials(&data, &pattern, &spec)?;
    let s = TrialSummary::of(&outcomes).ok_or_else(|| usage("--trials must be positive"))?;
    println!("trials {trials}");
    println!("roc_unconstrained {}", s.mean_unconstrained);
    println!("roc_constrained {}", s.mean_constrained);
    println!("roc_delta {}", s.mean_improvement());
    println!("improved_fraction {}", s.improved_fraction);
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let family = resolve_loss(&a.loss)?;
    let data = load_data(&a.data, family, 0)?;
    let loss = LossSpec::new(family, data.labels())?;
    let lambda = parse_lambda(&a.lambda, data.len())?;
    let pattern = dataio::load_sign_spec(&a.signs, data.dim(), loss.outputs())?;
    let bench = experiment::convergence_benchmark(&data, &loss, lambda, &pattern, a.epochs, a.seed, a.trace_every)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    println!("p_star {}", bench.p_star);
    for curve in &bench.curves {
        // the gap column holds P(w) − P★ here
        let mut trace = ConvergenceTrace::new();
        for row in curve.trace.rows() {
            let mut row = row.clone();
            row.primal = row.primal_average.unwrap_or(row.primal);
            row.gap = Some(row.primal - bench.p_star);
            trace.push(row);
        }
        let final_gap = trace.last().and_then(|r| r.gap).unwrap_or(f64::NAN);
        write_trace(&a.out.join(format!("{}.csv", curve.name)), &trace)?;
        println!("{} final_gap {final_gap}", curve.name);
    }
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let data = match a.kind {
        Kind::Phishing => dataio::synth_phishing_like(a.seed, a.n)?,
        Kind::Classification => {
            let p = dataio::load_sign_spec(&a.signs, a.dim, 1)?;
            dataio::synth_classification(a.seed, a.n, a.dim, &p, a.noise)?
        }
        Kind::Regression => {
            let p = dataio::load_sign_spec(&a.signs, a.dim, 1)?;
            dataio::synth_regression(a.seed, a.n, a.dim, &p, a.noise)?
        }
        Kind::Multiclass => {
            let p = dataio::load_sign_spec(&a.signs, a.dim, a.classes)?;
            dataio::synth_multiclass(a.seed, a.n, a.dim, a.classes, &p, a.noise)?
        }
    };
    let mut out = create(&a.out)?;
    dataio::write_svmlight(&data, &mut out)?;
    out.flush().context("writing data")?;
    Ok(())
}
