//! Cross-validation harness and the end-to-end ensemble pipeline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FitReport, Matrix, PointWeights, PredictionMatrix, WeightVector, ACTIVE_THRESHOLD};
use crate::density::{density_weights, DensityConfig, DensityResult};
use crate::error::{Error, Result};
use crate::es::{es_optimize, EsConfig, EsTrace};
use crate::models::{FittedModel, Regressor};
use crate::par::{self, Execution};
use crate::qp::{build_qp, solve_qp, QpProblem, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CvScheme {
    LeaveOneOut,
    KFold { folds: usize, shuffle_seed: u64 },
}

impl CvScheme {
    pub fn k_fold(folds: usize, shuffle_seed: u64) -> Self {
        CvScheme::KFold { folds, shuffle_seed }
    }

    /// Validation folds as index lists; every index in `0..n` appears in
    /// exactly one fold.
    pub fn folds(&self, n: usize) -> Result<Vec<Vec<usize>>> {
        match *self {
            CvScheme::LeaveOneOut => {
                if n < 2 {
                    return Err(Error::Degenerate(format!("leave-one-out needs n >= 2, got {n}")));
                }
                Ok((0..n).map(|i| vec![i]).collect())
            }
            CvScheme::KFold { folds, shuffle_seed } => {
                if folds < 2 || folds > n {
                    return Err(Error::InvalidConfig(format!("{folds} folds for {n} points")));
                }
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
                let mut out = vec![Vec::new(); folds];
                for (pos, i) in order.into_iter().enumerate() {
                    out[pos % folds].push(i);
                }
                out.iter_mut().for_each(|f| f.sort_unstable());
                Ok(out)
            }
        }
    }
}

/// Out-of-fold predictions: entry `(i, j)` is model `j` fitted without the
/// fold containing point `i`, evaluated at point `i`.
pub fn build_prediction_matrix<R: Regressor>(
    data: &Dataset,
    models: &[R],
    scheme: &CvScheme,
) -> Result<PredictionMatrix> {
    build_prediction_matrix_with(data, models, scheme, Execution::default())
}

pub fn build_prediction_matrix_with<R: Regressor>(
    data: &Dataset,
    models: &[R],
    scheme: &CvScheme,
    exec: Execution,
) -> Result<PredictionMatrix> {
    if models.is_empty() {
        return Err(Error::Empty("model list"));
    }
    let n = data.len();
    let s = models.len();
    let folds = scheme.folds(n)?;

    // One task per (fold, model); results are assembled in task order.
    let tasks = folds.len() * s;
    let results = par::try_map_range(tasks, exec, |task| {
        let (f, j) = (task / s, task % s);
        let held_out = &folds[f];
        let train: Vec<usize> = complement(held_out, n);
        let train_y: Vec<f64> = train.iter().map(|&i| data.targets()[i]).collect();
        let fit_error = |e: Error| Error::ModelFit { model: models[j].name(), fold: f, source: Box::new(e) };
        let fitted = models[j].fit(&data.points().select_rows(&train), &train_y).map_err(fit_error)?;
        let preds = fitted.predict(&data.points().select_rows(held_out)).map_err(fit_error)?;
        if preds.iter().any(|p| !p.is_finite()) {
            return Err(fit_error(Error::NonFinite("out-of-fold predictions")));
        }
        Ok(preds)
    })?;

    let mut entries = Matrix::zeros(n, s);
    for (task, preds) in results.into_iter().enumerate() {
        let (f, j) = (task / s, task % s);
        for (&i, p) in folds[f].iter().zip(preds) {
            entries.set(i, j, p);
        }
    }
    PredictionMatrix::new(entries, models.iter().map(|m| m.name()).collect())
}

fn complement(sorted_held_out: &[usize], n: usize) -> Vec<usize> {
    let mut held = sorted_held_out.iter().peekable();
    (0..n)
        .filter(|i| {
            if held.peek() == Some(&i) {
                held.next();
                false
            } else {
                true
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", content = "config", rename_all = "lowercase")]
pub enum SolverChoice {
    Qp(SolverConfig),
    Es(EsConfig),
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Qp(SolverConfig::default())
    }
}

/// Result of optimizing weights on a prediction matrix.
#[derive(Debug, Clone)]
pub struct WeightFit {
    pub report: FitReport,
    pub problem: QpProblem,
    pub density: Option<DensityResult>,
    /// Present when the ES solver ran.
    pub es_trace: Option<EsTrace>,
}

/// Weight optimization on already computed predictions (external models).
pub fn fit_weights(
    predictions: &PredictionMatrix,
    targets: &[f64],
    beta: Option<&PointWeights>,
    solver: &SolverChoice,
) -> Result<(FitReport, QpProblem, Option<EsTrace>)> {
    let problem = build_qp(predictions, targets, beta).map_err(Error::in_stage("build_qp"))?;
    let (report, trace) = match solver {
        SolverChoice::Qp(cfg) => (solve_qp(&problem, cfg).map_err(Error::in_stage("solve"))?, None),
        SolverChoice::Es(cfg) => {
            let t = es_optimize(&problem, cfg).map_err(Error::in_stage("solve"))?;
            (t.best.clone(), Some(t))
        }
    };
    Ok((report, problem, trace))
}

/// A deployable ensemble: the active models refitted on all data, with the
/// weights renormalized over them.
pub struct FittedEnsemble {
    pub fit: WeightFit,
    pub members: Vec<EnsembleMember>,
}

pub struct EnsembleMember {
    pub name: String,
    pub weight: f64,
    pub model: Box<dyn FittedModel>,
}

impl FittedEnsemble {
    pub fn report(&self) -> &FitReport {
        &self.fit.report
    }

    pub fn predict(&self, query: &Matrix) -> Result<Vec<f64>> {
        let mut out = vec![0.0; query.nrows()];
        for m in &self.members {
            for (o, p) in out.iter_mut().zip(m.model.predict(query)?) {
                *o += m.weight * p;
            }
        }
        Ok(out)
    }
}

impl std::fmt::Debug for FittedEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FittedEnsemble")
            .field("report", &self.fit.report)
            .field("members", &self.members.iter().map(|m| (&m.name, m.weight)).collect::<Vec<_>>())
            .finish()
    }
}

/// Weights kept for deployment: entries above the activity threshold,
/// renormalized to sum to one.
pub fn deployment_weights(alpha: &WeightVector) -> Vec<(usize, f64)> {
    let kept: Vec<(usize, f64)> =
        alpha.as_slice().iter().copied().enumerate().filter(|&(_, a)| a > ACTIVE_THRESHOLD).collect();
    let total: f64 = kept.iter().map(|(_, a)| a).sum();
    kept.into_iter().map(|(j, a)| (j, a / total)).collect()
}

/// Density weighting (optional), cross-validation, weight optimization and
/// final refit of every active model on the full dataset.
pub fn fit_ensemble<R: Regressor>(
    data: &Dataset,
    models: &[R],
    scheme: &CvScheme,
    weighting: Option<&DensityConfig>,
    solver: &SolverChoice,
) -> Result<FittedEnsemble> {
    let density =
        weighting.map(|cfg| density_weights(data.points(), cfg)).transpose().map_err(Error::in_stage("density"))?;
    let predictions = build_prediction_matrix(data, models, scheme).map_err(Error::in_stage("cross-validation"))?;
    let (report, problem, es_trace) =
        fit_weights(&predictions, data.targets(), density.as_ref().map(|d| &d.weights), solver)?;

    let deploy = deployment_weights(&report.alpha);
    let fitted = par::try_map_range(deploy.len(), Execution::default(), |k| {
        models[deploy[k].0].fit(data.points(), data.targets())
    })
    .map_err(Error::in_stage("refit"))?;
    let members = deploy
        .iter()
        .zip(fitted)
        .map(|(&(j, w), model)| EnsembleMember { name: models[j].name(), weight: w, model })
        .collect();

    Ok(FittedEnsemble { fit: WeightFit { report, problem, density, es_trace }, members })
}
