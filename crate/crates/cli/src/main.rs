use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ksvm::bench::{boundary_grid, emit_report, run_bench, BenchConfig, ReportFormat};
use ksvm::datagen::{generate_scenario, load_csv, load_feature_csv, save_csv, Dataset};
use ksvm::evaluation::{cross_validate, grid_search, ExpRange, FittedModel, GridSearchConfig};
use ksvm::svm::{DEFAULT_ALPHA_EXP, DEFAULT_PENALTY_EXP};
use ksvm::{
    KMeansConfig, KsvmConfig, KsvmError, Label, Method, NoiseDistribution, ScenarioSpec, TaskGeometry, TrainParams,
};

/// Flying versus mobile robot classification with SVM and k-SVM.
#[derive(Parser)]
#[command(name = "ksvm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-cohort scenario as CSV.
    Gen(GenArgs),
    /// Train a model on a labeled CSV and write it as JSON.
    Train(TrainArgs),
    /// Label the points of a CSV with a trained model.
    Predict(PredictArgs),
    /// Cross-validate a method and report per-class accuracies.
    Cv(CvArgs),
    /// Cross-validated grid search over (M, alpha) = (2^m, 2^a).
    Grid(GridArgs),
    /// Run the SVM versus k-SVM benchmark.
    Bench(BenchArgs),
    /// Sample a model's decision function on a 2-D lattice.
    Boundary(BoundaryArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Total number of robots.
    #[arg(long)]
    n: usize,
    /// Number of mobile robots.
    #[arg(long)]
    r: usize,
    #[arg(long, default_value = "normal")]
    dist: NoiseDistribution,
    #[arg(long, default_value = "encirclement")]
    task: TaskGeometry,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature dimension.
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Cohort-center separation in noise standard deviations.
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodName {
    Svm,
    Ksvm,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value = "ksvm")]
    method: MethodName,
    /// Penalty M (default 2^7).
    #[arg(long = "M")]
    penalty: Option<f64>,
    /// Kernel width alpha (default 2^-9).
    #[arg(long)]
    alpha: Option<f64>,
    /// k-means clusters per class (k-SVM only).
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Refinement rounds after the first k-SVM fit.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// KKT tolerance of the solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl MethodArgs {
    fn method(&self) -> Method<f64> {
        let mut svm = TrainParams::new(
            self.penalty.unwrap_or(2f64.powi(DEFAULT_PENALTY_EXP)),
            self.alpha.unwrap_or(2f64.powi(DEFAULT_ALPHA_EXP)),
        );
        if let Some(tol) = self.tol {
            svm = svm.with_tolerance(tol);
        }
        match self.method {
            MethodName::Svm => Method::Svm(svm),
            MethodName::Ksvm => Method::Ksvm(KsvmConfig {
                kmeans: KMeansConfig {
                    seed: self.seed,
                    ..KMeansConfig::with_clusters(self.k)
                },
                refine_iterations: self.refine,
                ..KsvmConfig::new(self.k, svm)
            }),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Points to label; a trailing label column is accepted and ignored.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 5, conflicts_with = "loo")]
    folds: usize,
    /// Leave-one-out: as many folds as points.
    #[arg(long)]
    loo: bool,
    #[command(flatten)]
    method: MethodArgs,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Exponent range for M, `start:end[:step]`.
    #[arg(long, default_value = "0:12", allow_hyphen_values = true)]
    m_exp: ExpRange,
    /// Exponent range for alpha, `start:end[:step]`.
    #[arg(long, default_value = "-12:1", allow_hyphen_values = true)]
    alpha_exp: ExpRange,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark configuration; defaults apply to omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path(s); `.csv` or `.md`.
    #[arg(long)]
    out: Vec<PathBuf>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long)]
    model: PathBuf,
    /// `start:end` of the first coordinate.
    #[arg(long, allow_hyphen_values = true)]
    xrange: Range,
    /// `start:end` of the second coordinate.
    #[arg(long, allow_hyphen_values = true)]
    yrange: Range,
    #[arg(long, default_value_t = 100)]
    res: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug)]
struct Range(f64, f64);

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected start:end, got {s:?}"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number"));
        Ok(Range(num(a)?, num(b)?))
    }
}

enum Failure {
    Error(KsvmError),
    /// The model was written but the solver hit its budget.
    NotConverged,
}

impl From<KsvmError> for Failure {
    fn from(e: KsvmError) -> Self {
        Failure::Error(e)
    }
}

type Outcome = Result<(), Failure>;

fn write(path: &Path, text: &str) -> Result<(), KsvmError> {
    fs::write(path, text).map_err(|source| KsvmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String, KsvmError> {
    fs::read_to_string(path).map_err(|source| KsvmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn gen(args: GenArgs) -> Outcome {
    let mut spec = ScenarioSpec::new(args.n, args.r, args.dist, args.task, args.seed);
    spec.dimension = args.q;
    if let Some(sigma) = args.sigma {
        spec.noise.sigma = sigma;
    }
    if let Some(separation) = args.separation {
        spec.geometry.separation = separation;
    }
    let data: Dataset<f64> = generate_scenario(&spec)?;
    save_csv(&data, &args.out)?;
    Ok(())
}

fn converged(model: &FittedModel<f64>) -> bool {
    model.svm().stats.converged
}

fn train(args: TrainArgs) -> Outcome {
    let data: Dataset<f64> = load_csv(&args.input)?;
    let model = args.method.method().fit(&data)?;
    write(&args.out, &model.to_json()?)?;
    eprintln!(
        "trained {} on {} points: {} support vectors",
        method_name(&model),
        data.len(),
        model.n_support()
    );
    if converged(&model) {
        Ok(())
    } else {
        eprintln!("warning: solver stopped before meeting the requested KKT tolerance");
        Err(Failure::NotConverged)
    }
}

fn method_name(model: &FittedModel<f64>) -> &'static str {
    match model {
        FittedModel::Svm(_) => "svm",
        FittedModel::Ksvm(_) => "ksvm",
    }
}

fn load_model(path: &Path) -> Result<FittedModel<f64>, KsvmError> {
    FittedModel::from_json(&read(path)?)
}

fn predict(args: PredictArgs) -> Outcome {
    let model = load_model(&args.model)?;
    let points: Vec<Vec<f64>> = load_feature_csv(&args.input, model.svm().dimension)?;
    let mut out = String::new();
    for x in &points {
        let label = match &model {
            FittedModel::Svm(m) => m.predict(x)?,
            FittedModel::Ksvm(m) => m.predict(x)?,
        };
        out.push_str(if label == Label::Mobile { "1\n" } else { "-1\n" });
    }
    write(&args.out, &out)?;
    Ok(())
}

fn cv(args: CvArgs) -> Outcome {
    let data: Dataset<f64> = load_csv(&args.input)?;
    let folds = if args.loo { data.len() } else { args.folds };
    let report = cross_validate(&data, &args.method.method(), folds, args.method.seed)?;
    let json = serde_json::to_string_pretty(&report).map_err(KsvmError::from)?;
    match &args.out {
        Some(path) => write(path, &json)?,
        None => println!("{json}"),
    }
    eprintln!(
        "{folds}-fold CV: flying accuracy {:.4}, mobile accuracy {:.4}, error {:.4}",
        report.accuracy_flying, report.accuracy_mobile, report.overall_error
    );
    Ok(())
}

fn grid(args: GridArgs) -> Outcome {
    let data: Dataset<f64> = load_csv(&args.input)?;
    let config = GridSearchConfig {
        m_exponents: args.m_exp,
        alpha_exponents: args.alpha_exp,
        fold_count: args.folds,
        seed: args.method.seed,
    };
    let result = grid_search(&data, &config, &args.method.method())?;
    write(&args.out, &result.to_csv())?;
    let best = result.best_cell();
    println!(
        "best: M = 2^{}, alpha = 2^{}, error {:.4}",
        best.m_exp, best.alpha_exp, best.report.overall_error
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Outcome {
    let config: BenchConfig = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?).map_err(KsvmError::from)?,
        None => BenchConfig::default(),
    };
    let outputs: Vec<PathBuf> = args.out.iter().chain(&config.outputs).cloned().collect();
    if outputs.is_empty() {
        return Err(
            KsvmError::Precondition("no report path given (use --out or `outputs` in the config)".into()).into(),
        );
    }
    let formats = outputs
        .iter()
        .map(|p| ReportFormat::from_path(p))
        .collect::<Result<Vec<_>, _>>()?;
    let report = run_bench(&config)?;
    for (path, format) in outputs.iter().zip(formats) {
        emit_report(&report, format, path)?;
    }
    Ok(())
}

fn boundary(args: BoundaryArgs) -> Outcome {
    let model = load_model(&args.model)?;
    let grid = boundary_grid(
        &model,
        (args.xrange.0, args.xrange.1),
        (args.yrange.0, args.yrange.1),
        args.res,
    )?;
    write(&args.out, &grid.to_csv())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a),
        Command::Grid(a) => grid(a),
        Command::Bench(a) => bench(a),
        Command::Boundary(a) => boundary(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => ExitCode::from(4),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                KsvmError::Io { .. } => 3,
                KsvmError::Internal(_) => 1,
                _ => 2,
            })
        }
    }
}
