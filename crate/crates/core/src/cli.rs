//! Command-line surface: argument definitions, CSV/JSON formats and the
//! command implementations behind the `ccm` binary.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 solver
//! non-convergence (the report is still written).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cv::{build_prediction_matrix, fit_ensemble, fit_weights, CvScheme, FittedEnsemble, SolverChoice};
use crate::data::{Dataset, Matrix, PointWeights, PredictionMatrix, SolverKind, WeightVector};
use crate::density::{density_weights, DensityConfig};
use crate::error::Error;
use crate::es::{EsConfig, EsTrace};
use crate::metrics::{self, labels_from_threshold, roc_curve, RocCurve, YoudenPoint};
use crate::models::{Kernel, KnnRegressor, ModelSpec, RbfModel, Regressor};
use crate::par::{self, Execution};
use crate::qp::{build_qp, solve_qp, SolverConfig};
use crate::synth::{evaluate_msg, generate_msg, latin_hypercube, Bounds, MsgLandscape};

#[derive(Debug, Parser)]
#[command(name = "ccm", version, about = "Optimal convex combinations of regression models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-validate models (or read predictions) and optimize ensemble weights.
    Fit(FitArgs),
    /// Per-point k-NN density weights.
    Density(DensityArgs),
    /// Sample a Max-Set-of-Gaussians landscape on a Latin hypercube design.
    Synth(SynthArgs),
    /// Objective values on a barycentric grid over a three-model simplex.
    Ternary(TernaryArgs),
    /// Score saved ensemble weights on data.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    None,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverFlag {
    Qp,
    Es,
}

/// `loo` or `k:<folds>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvFlag {
    Loo,
    KFold(usize),
}

impl FromStr for CvFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "loo" {
            return Ok(CvFlag::Loo);
        }
        s.strip_prefix("k:")
            .and_then(|k| k.parse().ok())
            .map(CvFlag::KFold)
            .ok_or_else(|| format!("expected `loo` or `k:<folds>`, got `{s}`"))
    }
}

impl CvFlag {
    fn scheme(self, seed: u64) -> CvScheme {
        match self {
            CvFlag::Loo => CvScheme::LeaveOneOut,
            CvFlag::KFold(folds) => CvScheme::k_fold(folds, seed),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Comma-separated model ids: rbf-gaussian, rbf-exponential, rbf-spline, knn, ridge.
    #[arg(long, value_delimiter = ',', conflicts_with = "predictions")]
    pub models: Option<Vec<String>>,
    /// CSV of precomputed out-of-fold predictions, one column per model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value = "loo")]
    pub cv: CvFlag,
    /// Shape parameter of the RBF kernels.
    #[arg(long, default_value_t = 1.0)]
    pub rbf_theta: f64,
    /// Neighbor count of the knn model.
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[arg(long, value_enum, default_value = "none")]
    pub weighting: Weighting,
    #[arg(long, default_value_t = 20)]
    pub density_k: usize,
    #[arg(long, value_enum, default_value = "qp")]
    pub solver: SolverFlag,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub es_budget: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub kkt_tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Held-out data in the same format as --data (or --predictions).
    #[arg(long)]
    pub test_file: Option<PathBuf>,
    /// Targets at or above this value count as active for ROC analysis.
    #[arg(long)]
    pub roc_threshold: Option<f64>,
    /// ES search trace as CSV (only with --solver es).
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Column excluded from the features.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub density_k: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub components: usize,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub low: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub high: f64,
    /// Dataset CSV (x1..xd, y).
    #[arg(long)]
    pub out: PathBuf,
    /// Landscape JSON; defaults to the dataset path with extension `landscape.json`.
    #[arg(long)]
    pub landscape_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TernaryArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub target: String,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[arg(long, value_enum, default_value = "none")]
    pub weighting: Weighting,
    #[arg(long, default_value_t = 20)]
    pub density_k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Weights report written by `fit`.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// CSV with a `beta` column (as written by `density`).
    #[arg(long)]
    pub point_weights: Option<PathBuf>,
    #[arg(long)]
    pub roc_threshold: Option<f64>,
    /// Metrics JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// (actual, predicted) pairs CSV.
    #[arg(long)]
    pub pairs_out: Option<PathBuf>,
    /// ROC curve CSV (threshold, fpr, tpr).
    #[arg(long)]
    pub roc_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Usage,
    Data,
    NonConvergence,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::NonConvergence => 4,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub category: ErrorCategory,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { category: ErrorCategory::Usage, message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        Self { category: ErrorCategory::Data, message: message.into() }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let category = match &e {
            Error::InvalidConfig(_) => ErrorCategory::Usage,
            Error::Stage { source, .. } if matches!(**source, Error::InvalidConfig(_)) => ErrorCategory::Usage,
            _ => ErrorCategory::Data,
        };
        Self { category, message: e.to_string() }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::data(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::data(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::data(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Density(a) => cmd_density(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Ternary(a) => cmd_ternary(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

// ---------------------------------------------------------------------------
// CSV formats

/// A numeric CSV table with a mandatory header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Table> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if headers.is_empty() {
            return Err(CliError::data(format!("{}: missing header row", path.display())));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    CliError::data(format!(
                        "{}: row {}, column `{}`: `{field}` is not a number",
                        path.display(),
                        r + 1,
                        headers[c]
                    ))
                })?;
                columns[c].push(v);
            }
        }
        Ok(Table { headers, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    fn require(&self, name: &str, path: &Path) -> CliResult<&[f64]> {
        self.column(name).ok_or_else(|| CliError::data(format!("{}: no column named `{name}`", path.display())))
    }

    /// Every column except `exclude`, as (names, matrix).
    fn others(&self, exclude: Option<&str>) -> CliResult<(Vec<String>, Matrix)> {
        let keep: Vec<usize> = (0..self.headers.len()).filter(|&i| Some(self.headers[i].as_str()) != exclude).collect();
        let names = keep.iter().map(|&i| self.headers[i].clone()).collect();
        let cols: Vec<&[f64]> = keep.iter().map(|&i| self.columns[i].as_slice()).collect();
        Ok((names, Matrix::from_columns(&cols)?))
    }
}

pub struct CsvOut {
    writer: csv::Writer<Box<dyn Write>>,
}

impl CsvOut {
    pub fn create(path: Option<&Path>) -> CliResult<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
            None => Box::new(io::stdout()),
        };
        Ok(Self { writer: csv::Writer::from_writer(sink) })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    /// Numbers use Rust's shortest round-trip formatting.
    pub fn numbers(&mut self, values: &[f64]) -> CliResult<()> {
        self.row(values.iter().map(|v| v.to_string()))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush()?;
        Ok(())
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dataset_from(table: &Table, target: &str, path: &Path) -> CliResult<Dataset> {
    let y = table.require(target, path)?.to_vec();
    let (names, points) = table.others(Some(target))?;
    if names.is_empty() {
        return Err(CliError::data(format!("{}: no feature columns besides `{target}`", path.display())));
    }
    Ok(Dataset::new(points, y)?.with_feature_names(names)?)
}

/// Model columns of a predictions CSV, skipping the target column if present.
fn predictions_from(table: &Table, target: &str) -> CliResult<PredictionMatrix> {
    let (names, m) = table.others(Some(target))?;
    Ok(PredictionMatrix::new(m, names)?)
}

fn model_specs(args: &ModelArgs) -> CliResult<Vec<ModelSpec>> {
    let ids = args.models.as_ref().ok_or_else(|| CliError::usage("one of --models or --predictions is required"))?;
    if args.rbf_theta.is_nan() || args.rbf_theta <= 0.0 {
        return Err(CliError::usage("--rbf-theta must be positive"));
    }
    ids.iter()
        .map(|id| {
            let spec: ModelSpec = id.trim().parse()?;
            Ok(match spec {
                ModelSpec::Rbf(m) => ModelSpec::Rbf(m.with_shape(args.rbf_theta)),
                ModelSpec::Knn(k) => ModelSpec::Knn(KnnRegressor { k_neighbors: args.knn_k, ..k }),
                other => other,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsReport {
    pub models: Vec<String>,
    pub alpha: Vec<f64>,
    pub rmse: f64,
    /// `null` unless density weighting was used.
    pub wrmse: Option<f64>,
    pub solver: SolverKind,
    pub iterations: usize,
    pub kkt_residual: Option<f64>,
    pub converged: bool,
    pub active_models: Vec<String>,
    pub seed: u64,
    pub config_echo: ConfigEcho,
    /// ROC of the cross-validated ensemble predictions (with --roc-threshold).
    pub roc: Option<RocSummary>,
    pub test: Option<TestSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub data: String,
    pub target: String,
    pub predictions: Option<String>,
    pub models: Option<Vec<ModelSpec>>,
    pub cv: Option<CvScheme>,
    pub weighting: Option<DensityConfig>,
    pub solver: SolverChoice,
    pub test_file: Option<String>,
    pub roc_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub threshold: f64,
    pub auc: f64,
    pub youden: YoudenPoint,
}

impl RocSummary {
    fn new(threshold: f64, curve: &RocCurve) -> Self {
        Self { threshold, auc: curve.auc, youden: curve.youden }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub n: usize,
    pub rmse: f64,
    pub roc: Option<RocSummary>,
}

fn roc_for(predicted: &[f64], actual: &[f64], threshold: f64) -> CliResult<RocCurve> {
    let labels = labels_from_threshold(actual, threshold);
    roc_curve(predicted, &labels).map_err(|e| CliError::data(format!("ROC at threshold {threshold}: {e}")))
}

fn solver_choice(args: &FitArgs) -> SolverChoice {
    match args.solver {
        SolverFlag::Qp => SolverChoice::Qp(SolverConfig {
            max_iterations: args.max_iterations,
            kkt_tolerance: args.kkt_tolerance,
            ..SolverConfig::default()
        }),
        SolverFlag::Es => SolverChoice::Es(EsConfig { budget: args.es_budget, ..EsConfig::with_seed(args.seed) }),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let table = Table::read(&args.data)?;
    let dataset = dataset_from(&table, &args.target, &args.data)?;
    let weighting = match args.weighting {
        Weighting::None => None,
        Weighting::Density => Some(DensityConfig::with_k(args.density_k)),
    };
    let solver = solver_choice(args);
    if args.trace_out.is_some() && args.solver != SolverFlag::Es {
        return Err(CliError::usage("--trace-out requires --solver es"));
    }

    let mut echo = ConfigEcho {
        data: display(&args.data),
        target: args.target.clone(),
        predictions: None,
        models: None,
        cv: None,
        weighting,
        solver,
        test_file: args.test_file.as_deref().map(display),
        roc_threshold: args.roc_threshold,
    };

    let (report, problem, trace, ensemble): (_, _, Option<EsTrace>, Option<FittedEnsemble>) =
        match &args.model_args.predictions {
            Some(pred_path) => {
                let preds = predictions_from(&Table::read(pred_path)?, &args.target)?;
                if preds.n_points() != dataset.len() {
                    return Err(CliError::data(format!(
                        "{} prediction rows for {} data rows",
                        preds.n_points(),
                        dataset.len()
                    )));
                }
                let density = weighting.map(|cfg| density_weights(dataset.points(), &cfg)).transpose()?;
                echo.predictions = Some(display(pred_path));
                let (r, p, t) = fit_weights(&preds, dataset.targets(), density.as_ref().map(|d| &d.weights), &solver)?;
                (r, p, t, None)
            }
            None => {
                let specs = model_specs(&args.model_args)?;
                let scheme = args.model_args.cv.scheme(args.seed);
                echo.models = Some(specs.clone());
                echo.cv = Some(scheme);
                let e = fit_ensemble(&dataset, &specs, &scheme, weighting.as_ref(), &solver)?;
                (e.fit.report.clone(), e.fit.problem.clone(), e.fit.es_trace.clone(), Some(e))
            }
        };

    if let (Some(path), Some(t)) = (&args.trace_out, &trace) {
        write_trace(path, t)?;
    }

    let roc = match args.roc_threshold {
        Some(thr) => {
            let cv_pred = problem.predictions().ensemble_predict(&report.alpha)?;
            Some(RocSummary::new(thr, &roc_for(&cv_pred, dataset.targets(), thr)?))
        }
        None => None,
    };

    let test = match &args.test_file {
        Some(path) => {
            let t = Table::read(path)?;
            let (predicted, actual) = match &ensemble {
                Some(e) => {
                    let ds = dataset_from(&t, &args.target, path)?;
                    (e.predict(ds.points())?, ds.targets().to_vec())
                }
                None => {
                    let actual = t.require(&args.target, path)?.to_vec();
                    let preds = aligned_predictions(&t, &args.target, &report.model_names, path)?;
                    (preds.ensemble_predict(&report.alpha)?, actual)
                }
            };
            let roc = args
                .roc_threshold
                .map(|thr| roc_for(&predicted, &actual, thr).map(|c| RocSummary::new(thr, &c)))
                .transpose()?;
            Some(TestSummary { n: actual.len(), rmse: metrics::rmse(&predicted, &actual)?, roc })
        }
        None => None,
    };

    let converged = report.converged;
    let out = WeightsReport {
        models: report.model_names.clone(),
        alpha: report.alpha.as_slice().to_vec(),
        rmse: report.rmse,
        wrmse: weighting.map(|_| report.wrmse),
        solver: report.solver,
        iterations: report.iterations,
        kkt_residual: report.kkt_residual,
        converged,
        active_models: report.active_models.clone(),
        seed: args.seed,
        config_echo: echo,
        roc,
        test,
    };
    write_json(Some(&args.out), &out)?;

    if !converged {
        return Err(CliError {
            category: ErrorCategory::NonConvergence,
            message: format!(
                "solver stopped after {} iterations with KKT residual {:?}; report written to {}",
                report.iterations,
                report.kkt_residual,
                args.out.display()
            ),
        });
    }
    Ok(())
}

fn write_trace(path: &Path, trace: &EsTrace) -> CliResult<()> {
    let s = trace.best.alpha.len();
    let mut w = CsvOut::create(Some(path))?;
    let mut header = vec!["evaluation_index".to_string()];
    header.extend((1..=s).map(|j| format!("alpha_{j}")));
    header.push("objective".into());
    w.row(&header)?;
    for (k, e) in trace.evaluations.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(e.alpha.as_slice().iter().map(|a| a.to_string()));
        row.push(e.objective.to_string());
        w.row(&row)?;
    }
    w.finish()
}

/// Prediction columns of `table` in the order of `models`.
fn aligned_predictions(table: &Table, target: &str, models: &[String], path: &Path) -> CliResult<PredictionMatrix> {
    let available: Vec<&String> = table.headers.iter().filter(|h| h.as_str() != target).collect();
    if available.len() != models.len() || models.iter().any(|m| table.column(m).is_none()) {
        return Err(CliError::data(format!(
            "{}: prediction columns {:?} do not match the report's models {:?}",
            path.display(),
            available,
            models
        )));
    }
    let cols: Vec<&[f64]> = models.iter().map(|m| table.column(m).expect("checked")).collect();
    Ok(PredictionMatrix::new(Matrix::from_columns(&cols)?, models.to_vec())?)
}

// ---------------------------------------------------------------------------
// density

pub fn cmd_density(args: &DensityArgs) -> CliResult<()> {
    let table = Table::read(&args.data)?;
    if let Some(t) = &args.target {
        table.require(t, &args.data)?;
    }
    let (_, points) = table.others(args.target.as_deref())?;
    let result = density_weights(&points, &DensityConfig::with_k(args.density_k))?;
    let mut w = CsvOut::create(args.out.as_deref())?;
    w.row(["index", "raw_density", "beta"])?;
    for (i, (d, b)) in result.raw_density.iter().zip(result.weights.as_slice()).enumerate() {
        w.row([i.to_string(), d.to_string(), b.to_string()])?;
    }
    w.finish()
}

/// Reads the `beta` column of a density CSV.
pub fn read_point_weights(path: &Path) -> CliResult<PointWeights> {
    let t = Table::read(path)?;
    Ok(PointWeights::new(t.require("beta", path)?.to_vec())?)
}

// ---------------------------------------------------------------------------
// synth

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    if args.dim == 0 || args.components == 0 || args.samples == 0 {
        return Err(CliError::usage("--dim, --components and --samples must be positive"));
    }
    if args.low.is_nan() || args.high.is_nan() || args.low >= args.high {
        return Err(CliError::usage("--low must be below --high"));
    }
    let domain = Bounds::cube(args.dim, args.low, args.high);
    let landscape = generate_msg(args.dim, args.components, args.seed, &domain)?;
    // decorrelate the design from the landscape
    let design = latin_hypercube(args.samples, args.dim, args.seed.wrapping_add(0x9e37_79b9_7f4a_7c15), &domain)?;
    let y = evaluate_msg(&landscape, &design)?;

    let mut w = CsvOut::create(Some(&args.out))?;
    let mut header: Vec<String> = (1..=args.dim).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.row(&header)?;
    for (i, yi) in y.iter().enumerate() {
        let mut row = design.row(i).to_vec();
        row.push(*yi);
        w.numbers(&row)?;
    }
    w.finish()?;

    let json_path = args.landscape_out.clone().unwrap_or_else(|| args.out.with_extension("landscape.json"));
    write_json(Some(&json_path), &landscape)
}

pub fn read_landscape(path: &Path) -> CliResult<MsgLandscape> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

// ---------------------------------------------------------------------------
// ternary

/// Barycentric grid points `(i, j, m - i - j) / m`; `(m + 1)(m + 2) / 2` rows.
pub fn barycentric_grid(step: f64) -> CliResult<Vec<[f64; 3]>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(CliError::usage("--step must lie in (0, 1]"));
    }
    let m = (1.0 / step).round();
    if (m * step - 1.0).abs() > 1e-9 {
        return Err(CliError::usage(format!("--step {step} does not divide 1")));
    }
    let m = m as usize;
    let mf = m as f64;
    Ok((0..=m)
        .flat_map(|i| (0..=m - i).map(move |j| [i as f64 / mf, j as f64 / mf, (m - i - j) as f64 / mf]))
        .collect())
}

pub fn cmd_ternary(args: &TernaryArgs) -> CliResult<()> {
    let grid = barycentric_grid(args.step)?;
    let data_table = args.data.as_ref().map(|p| Table::read(p).map(|t| (p, t))).transpose()?;

    let (preds, targets) = match &args.model_args.predictions {
        Some(path) => {
            let t = Table::read(path)?;
            let preds = predictions_from(&t, &args.target)?;
            let targets = match (&data_table, t.column(&args.target)) {
                (Some((p, dt)), _) => dt.require(&args.target, p)?.to_vec(),
                (None, Some(y)) => y.to_vec(),
                (None, None) => {
                    return Err(CliError::usage(format!(
                        "targets needed: pass --data or include `{}` in the predictions file",
                        args.target
                    )))
                }
            };
            (preds, targets)
        }
        None => {
            let (p, dt) = data_table.as_ref().ok_or_else(|| CliError::usage("--models requires --data"))?;
            let ds = dataset_from(dt, &args.target, p)?;
            let specs = model_specs(&args.model_args)?;
            let pm = build_prediction_matrix(&ds, &specs, &args.model_args.cv.scheme(args.seed))?;
            (pm, ds.targets().to_vec())
        }
    };
    if preds.n_models() != 3 {
        return Err(CliError::usage(format!("ternary grid needs exactly 3 models, got {}", preds.n_models())));
    }
    let beta = match args.weighting {
        Weighting::None => None,
        Weighting::Density => {
            let (p, dt) = data_table.as_ref().ok_or_else(|| CliError::usage("--weighting density requires --data"))?;
            let ds = dataset_from(dt, &args.target, p)?;
            Some(density_weights(ds.points(), &DensityConfig::with_k(args.density_k))?.weights)
        }
    };

    let problem = build_qp(&preds, &targets, beta.as_ref())?;
    let optimum = solve_qp(&problem, &SolverConfig::default())?;
    let values = par::map_range(grid.len(), Execution::default(), |k| problem.wrmse(&grid[k]));

    let mut w = CsvOut::create(Some(&args.out))?;
    w.row(["alpha1", "alpha2", "alpha3", "rmse", "optimum"])?;
    for (a, v) in grid.iter().zip(&values) {
        w.row([a[0].to_string(), a[1].to_string(), a[2].to_string(), v.to_string(), "0".into()])?;
    }
    let a = optimum.alpha.as_slice();
    w.row([a[0].to_string(), a[1].to_string(), a[2].to_string(), optimum.wrmse.to_string(), "1".into()])?;
    w.finish()
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n: usize,
    pub rmse: f64,
    pub wrmse: Option<f64>,
    pub roc: Option<RocSummary>,
}

pub fn read_report(path: &Path) -> CliResult<WeightsReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let report = read_report(&args.weights)?;
    let alpha = WeightVector::new(report.alpha.clone())
        .map_err(|e| CliError::data(format!("{}: {e}", args.weights.display())))?;
    if alpha.len() != report.models.len() {
        return Err(CliError::data("report alpha and models differ in length"));
    }

    let (predicted, actual) = match &args.predictions {
        Some(path) => {
            let t = Table::read(path)?;
            let preds = aligned_predictions(&t, &args.target, &report.models, path)?;
            let actual = match (&args.data, t.column(&args.target)) {
                (Some(dp), _) => Table::read(dp)?.require(&args.target, dp)?.to_vec(),
                (None, Some(y)) => y.to_vec(),
                (None, None) => return Err(CliError::usage("targets needed: pass --data or a target column")),
            };
            if actual.len() != preds.n_points() {
                return Err(CliError::data(format!(
                    "{} targets for {} prediction rows",
                    actual.len(),
                    preds.n_points()
                )));
            }
            (preds.ensemble_predict(&alpha)?, actual)
        }
        None => {
            let dp = args.data.as_ref().ok_or_else(|| CliError::usage("--data or --predictions is required"))?;
            let specs =
                report.config_echo.models.clone().ok_or_else(|| {
                    CliError::usage("report was fitted from external predictions; pass --predictions")
                })?;
            let ds = dataset_from(&Table::read(dp)?, &args.target, dp)?;
            let train_path = PathBuf::from(&report.config_echo.data);
            let train = dataset_from(&Table::read(&train_path)?, &report.config_echo.target, &train_path)?;
            (refit_and_predict(&specs, &alpha, &train, ds.points())?, ds.targets().to_vec())
        }
    };

    let wrmse = match &args.point_weights {
        Some(p) => Some(metrics::wrmse(&predicted, &actual, &read_point_weights(p)?)?),
        None => None,
    };
    let curve = args.roc_threshold.map(|thr| roc_for(&predicted, &actual, thr)).transpose()?;
    let metrics_out = EvalMetrics {
        n: actual.len(),
        rmse: metrics::rmse(&predicted, &actual)?,
        wrmse,
        roc: curve.as_ref().map(|c| RocSummary::new(args.roc_threshold.expect("set"), c)),
    };

    if let Some(p) = &args.pairs_out {
        let mut w = CsvOut::create(Some(p))?;
        w.row(["actual", "predicted"])?;
        for (a, p) in actual.iter().zip(&predicted) {
            w.numbers(&[*a, *p])?;
        }
        w.finish()?;
    }
    if let (Some(p), Some(c)) = (&args.roc_out, &curve) {
        let mut w = CsvOut::create(Some(p))?;
        w.row(["threshold", "fpr", "tpr"])?;
        for pt in &c.points {
            w.numbers(&[pt.threshold, pt.fpr, pt.tpr])?;
        }
        w.finish()?;
    }
    write_json(args.out.as_deref(), &metrics_out)
}

fn refit_and_predict(
    specs: &[ModelSpec],
    alpha: &WeightVector,
    train: &Dataset,
    query: &Matrix,
) -> CliResult<Vec<f64>> {
    if specs.len() != alpha.len() {
        return Err(CliError::data("report models and alpha differ in length"));
    }
    let deploy = crate::cv::deployment_weights(alpha);
    let mut out = vec![0.0; query.nrows()];
    for (j, w) in deploy {
        let pred = specs[j].fit(train.points(), train.targets())?.predict(query)?;
        out.iter_mut().zip(pred).for_each(|(o, p)| *o += w * p);
    }
    Ok(out)
}

/// The three RBF kernels used by the synthetic benchmark, with a common shape.
pub fn rbf_trio_with_shape(theta: f64) -> Vec<ModelSpec> {
    [Kernel::Gaussian, Kernel::Spline, Kernel::Exponential]
        .into_iter()
        .map(|k| ModelSpec::Rbf(RbfModel::new(k).with_shape(theta)))
        .collect()
}
