//! Shared data model: dense matrices, datasets, prediction matrices, simplex
//! weight vectors and fit reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(alpha) == 1`.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Most negative entry accepted (and clamped to zero) in a weight vector.
pub const SIMPLEX_NEG_TOL: f64 = -1e-12;
/// Weights above this count a model as active.
pub const ACTIVE_THRESHOLD: f64 = 1e-6;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} values for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!("row {i} has {} columns, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Builds a matrix whose columns are the given equal-length vectors.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        if let Some(bad) = columns.iter().position(|c| c.as_ref().len() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "column {bad} has {} rows, expected {rows}",
                columns[bad].as_ref().len()
            )));
        }
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.as_ref().iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, so guard the degenerate column count
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: indices.len(), cols: self.cols, data }
    }

    /// Matrix-vector product `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self.rows_iter().map(|r| dot(r, x)).collect())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample points with their observed objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Matrix,
    targets: Vec<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(points: Matrix, targets: Vec<f64>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::Empty("dataset has no points"));
        }
        if points.ncols() == 0 {
            return Err(Error::Empty("dataset has no feature columns"));
        }
        if targets.len() != points.nrows() {
            return Err(Error::DimensionMismatch(format!("{} targets for {} points", targets.len(), points.nrows())));
        }
        if !points.is_finite() {
            return Err(Error::NonFinite("dataset points"));
        }
        if !targets.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("dataset targets"));
        }
        Ok(Self { points, targets, feature_names: None })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{} feature names for {} columns", names.len(), self.dim())));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Cross-validated predictions: one row per sample point, one column per model.
///
/// The orientation is `n x s`, so `A * alpha - y` is a residual over the
/// sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    entries: Matrix,
    model_names: Vec<String>,
}

impl PredictionMatrix {
    pub fn new(entries: Matrix, model_names: Vec<String>) -> Result<Self> {
        if entries.ncols() == 0 {
            return Err(Error::Empty("prediction matrix has no models"));
        }
        if entries.nrows() == 0 {
            return Err(Error::Empty("prediction matrix has no rows"));
        }
        if model_names.len() != entries.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} model names for {} prediction columns",
                model_names.len(),
                entries.ncols()
            )));
        }
        if !entries.is_finite() {
            return Err(Error::NonFinite("prediction matrix"));
        }
        Ok(Self { entries, model_names })
    }

    /// Names default to `m1..ms`.
    pub fn unnamed(entries: Matrix) -> Result<Self> {
        let names = (1..=entries.ncols()).map(|j| format!("m{j}")).collect();
        Self::new(entries, names)
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }

    pub fn n_points(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.entries.ncols()
    }

    /// The ensemble prediction `A * alpha`.
    pub fn ensemble_predict(&self, alpha: &WeightVector) -> Result<Vec<f64>> {
        self.entries.mul_vec(alpha.as_slice())
    }
}

/// A point of the probability simplex: non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates `raw` against the simplex, clamps tiny negatives to zero
    /// and renormalizes.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        if !raw.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("weight vector"));
        }
        if let Some(v) = raw.iter().find(|&&v| v < SIMPLEX_NEG_TOL) {
            return Err(Error::InvalidWeights(format!("negative entry {v}")));
        }
        let clamped: Vec<f64> = raw.into_iter().map(|v| v.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidWeights(format!("entries sum to {sum}")));
        }
        Ok(Self(renormalize(clamped, sum)))
    }

    /// Crate-internal constructor for vectors that are feasible by
    /// construction (projections, grid points) up to rounding.
    pub(crate) fn from_feasible(raw: Vec<f64>) -> Self {
        let clamped: Vec<f64> = raw.into_iter().map(|v| v.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        debug_assert!((sum - 1.0).abs() <= SIMPLEX_SUM_TOL, "infeasible weights, sum {sum}");
        Self(renormalize(clamped, sum))
    }

    pub fn uniform(s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::Empty("weight vector"));
        }
        Ok(Self(vec![1.0 / s as f64; s]))
    }

    /// The simplex vertex selecting model `j` alone.
    pub fn corner(s: usize, j: usize) -> Result<Self> {
        if j >= s {
            return Err(Error::DimensionMismatch(format!("corner {j} of a {s}-model simplex")));
        }
        let mut v = vec![0.0; s];
        v[j] = 1.0;
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        WeightVector::new(raw).map_err(serde::de::Error::custom)
    }
}

// Division by a sum that is already 1 up to rounding noise is skipped, which
// keeps construction idempotent.
fn renormalize(mut v: Vec<f64>, sum: f64) -> Vec<f64> {
    let noise = 4.0 * f64::EPSILON * v.len() as f64;
    if (sum - 1.0).abs() > noise {
        v.iter_mut().for_each(|x| *x /= sum);
    }
    v
}

/// Per-point weights in `(0, 1]` for the weighted RMSE.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PointWeights(Vec<f64>);

impl PointWeights {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Empty("point weights"));
        }
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b > 0.0 && **b <= 1.0)) {
            return Err(Error::InvalidWeights(format!("point weight {b} outside (0, 1]")));
        }
        Ok(Self(beta))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Qp,
    Es,
}

/// Outcome of a weight optimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub alpha: WeightVector,
    pub model_names: Vec<String>,
    /// Unweighted RMSE of the mixed prediction.
    pub rmse: f64,
    /// Weighted RMSE; equals `rmse` when the problem carries no point weights.
    pub wrmse: f64,
    pub solver: SolverKind,
    pub iterations: usize,
    /// Optimality certificate; `Some` exactly when `solver == Qp`.
    pub kkt_residual: Option<f64>,
    pub converged: bool,
    pub active_models: Vec<String>,
}

impl FitReport {
    pub(crate) fn active_names(alpha: &WeightVector, names: &[String]) -> Vec<String> {
        alpha.as_slice().iter().zip(names).filter(|(a, _)| **a > ACTIVE_THRESHOLD).map(|(_, n)| n.clone()).collect()
    }
}
