//! Base regressors: RBF interpolants with three correlation kernels, k-nearest
//! neighbors and ridge regression.
//!
//! Fitting consumes a training set and yields an immutable [`FittedModel`];
//! an unfitted model has no `predict`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{dot, Matrix};
use crate::error::{Error, Result};

pub trait Regressor: Send + Sync {
    /// Label used as the prediction-matrix column name.
    fn name(&self) -> String;

    fn fit(&self, points: &Matrix, targets: &[f64]) -> Result<Box<dyn FittedModel>>;
}

impl<R: Regressor + ?Sized> Regressor for Box<R> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn fit(&self, points: &Matrix, targets: &[f64]) -> Result<Box<dyn FittedModel>> {
        (**self).fit(points, targets)
    }
}

pub trait FittedModel: Send + Sync {
    fn predict(&self, query: &Matrix) -> Result<Vec<f64>>;
}

fn check_training(points: &Matrix, targets: &[f64]) -> Result<()> {
    if points.nrows() == 0 {
        return Err(Error::Empty("training set"));
    }
    if targets.len() != points.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {} training points",
            targets.len(),
            points.nrows()
        )));
    }
    if !points.is_finite() || !targets.iter().all(|t| t.is_finite()) {
        return Err(Error::NonFinite("training set"));
    }
    Ok(())
}

fn check_query(query: &Matrix, dim: usize) -> Result<()> {
    if query.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "query has {} columns, model was fitted on {dim}",
            query.ncols()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `exp(-theta r^2)`
    Gaussian,
    /// `exp(-theta r)`
    Exponential,
    /// Product over coordinates of the compactly supported cubic spline
    /// correlation of the DACE toolbox, with `xi = theta |d_j|`:
    /// `1 - 15 xi^2 + 30 xi^3` on `[0, 0.2]`, `1.25 (1 - xi)^3` on `(0.2, 1)`,
    /// `0` beyond.
    Spline,
}

impl Kernel {
    fn correlation(self, theta: f64, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Gaussian => {
                let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-theta * r2).exp()
            }
            Kernel::Exponential => {
                let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-theta * r2.sqrt()).exp()
            }
            Kernel::Spline => a.iter().zip(b).map(|(x, y)| cubic_spline(theta * (x - y).abs())).product(),
        }
    }
}

fn cubic_spline(xi: f64) -> f64 {
    if xi <= 0.2 {
        1.0 - xi * xi * (15.0 - 30.0 * xi)
    } else if xi < 1.0 {
        1.25 * (1.0 - xi).powi(3)
    } else {
        0.0
    }
}

/// Radial-basis interpolant with a jointly fitted constant trend, so far from
/// the data the prediction reverts to the trend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    pub kernel: Kernel,
    pub shape: f64,
    pub nugget: f64,
}

impl RbfModel {
    pub fn new(kernel: Kernel) -> Self {
        Self { kernel, shape: 1.0, nugget: 1e-10 }
    }

    pub fn with_shape(mut self, shape: f64) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_nugget(mut self, nugget: f64) -> Self {
        self.nugget = nugget;
        self
    }

    /// Fits and returns the concrete model (weights and trend are inspectable).
    pub fn fit_rbf(&self, points: &Matrix, targets: &[f64]) -> Result<FittedRbf> {
        check_training(points, targets)?;
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            return Err(Error::InvalidConfig(format!("RBF shape {} must be positive", self.shape)));
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return Err(Error::InvalidConfig(format!("RBF nugget {} must be non-negative", self.nugget)));
        }
        let n = points.nrows();
        let mut base = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in i..n {
                let k = self.kernel.correlation(self.shape, points.row(i), points.row(j));
                base[(i, j)] = k;
                base[(j, i)] = k;
            }
            base[(i, n)] = 1.0;
            base[(n, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from_slice(targets);

        // Escalate the nugget by factors of 100 until the bordered system solves.
        let mut nugget = self.nugget;
        loop {
            let mut system = base.clone();
            for i in 0..n {
                system[(i, i)] += nugget;
            }
            if let Some(sol) = system.lu().solve(&rhs) {
                if sol.iter().all(|v| v.is_finite()) {
                    return Ok(FittedRbf {
                        model: *self,
                        centers: points.clone(),
                        weights: sol.rows(0, n).iter().copied().collect(),
                        trend: sol[n],
                    });
                }
            }
            nugget = if nugget == 0.0 { 1e-12 } else { nugget * 100.0 };
            if nugget > 1e-6 {
                return Err(Error::Singular(format!("{:?} kernel matrix singular even with nugget 1e-6", self.kernel)));
            }
        }
    }
}

impl Regressor for RbfModel {
    fn name(&self) -> String {
        match self.kernel {
            Kernel::Gaussian => "rbf-gaussian",
            Kernel::Exponential => "rbf-exponential",
            Kernel::Spline => "rbf-spline",
        }
        .to_string()
    }

    fn fit(&self, points: &Matrix, targets: &[f64]) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(self.fit_rbf(points, targets)?))
    }
}

#[derive(Debug, Clone)]
pub struct FittedRbf {
    model: RbfModel,
    centers: Matrix,
    weights: Vec<f64>,
    trend: f64,
}

impl FittedRbf {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn trend(&self) -> f64 {
        self.trend
    }

    fn predict_one(&self, x: &[f64]) -> f64 {
        let RbfModel { kernel, shape, .. } = self.model;
        self.centers.rows_iter().zip(&self.weights).map(|(c, w)| w * kernel.correlation(shape, x, c)).sum::<f64>()
            + self.trend
    }
}

impl FittedModel for FittedRbf {
    fn predict(&self, query: &Matrix) -> Result<Vec<f64>> {
        check_query(query, self.centers.ncols())?;
        Ok(query.rows_iter().map(|x| self.predict_one(x)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeighting {
    Uniform,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnRegressor {
    pub k_neighbors: usize,
    pub weighting: KnnWeighting,
}

impl Default for KnnRegressor {
    fn default() -> Self {
        Self { k_neighbors: 5, weighting: KnnWeighting::Uniform }
    }
}

impl KnnRegressor {
    pub fn new(k_neighbors: usize, weighting: KnnWeighting) -> Self {
        Self { k_neighbors, weighting }
    }
}

impl Regressor for KnnRegressor {
    fn name(&self) -> String {
        "knn".to_string()
    }

    fn fit(&self, points: &Matrix, targets: &[f64]) -> Result<Box<dyn FittedModel>> {
        check_training(points, targets)?;
        if self.k_neighbors == 0 {
            return Err(Error::InvalidConfig("kNN needs k_neighbors >= 1".into()));
        }
        if points.nrows() < self.k_neighbors {
            return Err(Error::Degenerate(format!(
                "kNN with k = {} on {} training points",
                self.k_neighbors,
                points.nrows()
            )));
        }
        Ok(Box::new(FittedKnn { config: *self, points: points.clone(), targets: targets.to_vec() }))
    }
}

struct FittedKnn {
    config: KnnRegressor,
    points: Matrix,
    targets: Vec<f64>,
}

impl FittedKnn {
    fn predict_one(&self, x: &[f64]) -> f64 {
        let k = self.config.k_neighbors;
        let mut dists: Vec<(f64, usize)> = self
            .points
            .rows_iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        // ties broken by training index
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, order);
            dists.truncate(k);
        }
        dists.sort_unstable_by(order);

        match self.config.weighting {
            KnnWeighting::Uniform => dists.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64,
            KnnWeighting::InverseDistance => {
                let exact: Vec<usize> = dists.iter().filter(|d| d.0 == 0.0).map(|&(_, i)| i).collect();
                if !exact.is_empty() {
                    return exact.iter().map(|&i| self.targets[i]).sum::<f64>() / exact.len() as f64;
                }
                let (num, den) = dists.iter().fold((0.0, 0.0), |(num, den), &(d2, i)| {
                    let w = 1.0 / d2.sqrt();
                    (num + w * self.targets[i], den + w)
                });
                num / den
            }
        }
    }
}

impl FittedModel for FittedKnn {
    fn predict(&self, query: &Matrix) -> Result<Vec<f64>> {
        check_query(query, self.points.ncols())?;
        Ok(query.rows_iter().map(|x| self.predict_one(x)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeRegressor {
    pub lambda: f64,
    pub intercept: bool,
}

impl Default for RidgeRegressor {
    fn default() -> Self {
        Self { lambda: 1e-6, intercept: true }
    }
}

impl RidgeRegressor {
    pub fn new(lambda: f64, intercept: bool) -> Self {
        Self { lambda, intercept }
    }

    /// Solves `(X'X + lambda I) w = X'y` on centered data when an intercept is
    /// used, so the intercept itself is not penalized.
    pub fn fit_ridge(&self, points: &Matrix, targets: &[f64]) -> Result<FittedRidge> {
        check_training(points, targets)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("ridge lambda {} must be non-negative", self.lambda)));
        }
        let (n, d) = (points.nrows(), points.ncols());
        let (x_mean, y_mean) = if self.intercept {
            let xm: Vec<f64> = (0..d).map(|j| points.rows_iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
            (xm, targets.iter().sum::<f64>() / n as f64)
        } else {
            (vec![0.0; d], 0.0)
        };
        let x = DMatrix::from_fn(n, d, |i, j| points.get(i, j) - x_mean[j]);
        let y = DVector::from_iterator(n, targets.iter().map(|t| t - y_mean));
        let mut gram = x.transpose() * &x;
        for j in 0..d {
            gram[(j, j)] += self.lambda;
        }
        let rhs = x.transpose() * y;
        let coef = match gram.clone().cholesky() {
            Some(ch) if self.lambda > 0.0 => ch.solve(&rhs),
            _ => gram
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|e| Error::Singular(format!("ridge normal equations: {e}")))?,
        };
        let coefficients: Vec<f64> = coef.iter().copied().collect();
        let intercept = y_mean - dot(&coefficients, &x_mean);
        Ok(FittedRidge { coefficients, intercept })
    }
}

impl Regressor for RidgeRegressor {
    fn name(&self) -> String {
        "ridge".to_string()
    }

    fn fit(&self, points: &Matrix, targets: &[f64]) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(self.fit_ridge(points, targets)?))
    }
}

#[derive(Debug, Clone)]
pub struct FittedRidge {
    coefficients: Vec<f64>,
    intercept: f64,
}

impl FittedRidge {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}

impl FittedModel for FittedRidge {
    fn predict(&self, query: &Matrix) -> Result<Vec<f64>> {
        check_query(query, self.coefficients.len())?;
        Ok(query.rows_iter().map(|x| dot(x, &self.coefficients) + self.intercept).collect())
    }
}

/// A zoo member selected by its CLI identifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    Rbf(RbfModel),
    Knn(KnnRegressor),
    Ridge(RidgeRegressor),
}

impl ModelSpec {
    pub const IDS: [&'static str; 5] = ["rbf-gaussian", "rbf-exponential", "rbf-spline", "knn", "ridge"];

    /// The three RBF kernels with default hyperparameters.
    pub fn rbf_trio() -> Vec<ModelSpec> {
        [Kernel::Gaussian, Kernel::Spline, Kernel::Exponential]
            .into_iter()
            .map(|k| ModelSpec::Rbf(RbfModel::new(k)))
            .collect()
    }

    fn as_regressor(&self) -> &dyn Regressor {
        match self {
            ModelSpec::Rbf(m) => m,
            ModelSpec::Knn(m) => m,
            ModelSpec::Ridge(m) => m,
        }
    }
}

impl Regressor for ModelSpec {
    fn name(&self) -> String {
        self.as_regressor().name()
    }

    fn fit(&self, points: &Matrix, targets: &[f64]) -> Result<Box<dyn FittedModel>> {
        self.as_regressor().fit(points, targets)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rbf-gaussian" => ModelSpec::Rbf(RbfModel::new(Kernel::Gaussian)),
            "rbf-exponential" => ModelSpec::Rbf(RbfModel::new(Kernel::Exponential)),
            "rbf-spline" => ModelSpec::Rbf(RbfModel::new(Kernel::Spline)),
            "knn" => ModelSpec::Knn(KnnRegressor::default()),
            "ridge" => ModelSpec::Ridge(RidgeRegressor::default()),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown model `{other}` (expected one of {})",
                    ModelSpec::IDS.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(xs: &[f64]) -> Matrix {
        Matrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn rbf_gaussian_interpolates() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let m = RbfModel::new(Kernel::Gaussian).fit(&pts, &[0.0, 1.0]).unwrap();
        let p = m.predict(&Matrix::from_rows(&[[0.0, 0.0]]).unwrap()).unwrap();
        assert!(p[0].abs() <= 1e-6);
    }

    #[test]
    fn rbf_exponential_far_field_reverts_to_trend() {
        let pts = Matrix::from_rows(&[[0.0], [0.5], [1.2], [2.0]]).unwrap();
        let theta = 2.0;
        let m = RbfModel::new(Kernel::Exponential).with_shape(theta).fit_rbf(&pts, &[1.0, -0.5, 2.0, 0.3]).unwrap();
        // every center lies within distance 2 of the origin side, query is
        // 10/theta beyond the last one
        let far = 2.0 + 10.0 / theta;
        let p = m.predict(&col(&[far])).unwrap()[0];
        let bound: f64 = m.weights().iter().map(|w| w.abs()).sum::<f64>() * (-10.0f64).exp();
        assert!((p - m.trend()).abs() <= bound);
        let direct: f64 =
            [0.0, 0.5, 1.2, 2.0].iter().zip(m.weights()).map(|(c, w)| w * (-theta * (far - c)).exp()).sum::<f64>()
                + m.trend();
        assert!((p - direct).abs() < 1e-14);
    }

    #[test]
    fn spline_kernel_is_continuous_and_compact() {
        assert!((cubic_spline(0.2) - 0.64).abs() < 1e-15);
        assert!((cubic_spline(0.2 + 1e-12) - 0.64).abs() < 1e-10);
        assert_eq!(cubic_spline(0.0), 1.0);
        assert_eq!(cubic_spline(1.0), 0.0);
        assert_eq!(cubic_spline(3.0), 0.0);
    }

    #[test]
    fn ridge_recovers_linear_map() {
        let xs = [0.0, 1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let m = RidgeRegressor::new(0.0, true).fit_ridge(&col(&xs), &ys).unwrap();
        assert!((m.coefficients()[0] - 2.0).abs() <= 1e-8);
        let p = m.predict(&col(&[3.0])).unwrap()[0];
        assert!((p - 6.0).abs() <= 1e-8);
    }

    #[test]
    fn ridge_constant_targets() {
        let pts = Matrix::from_rows(&[[0.0, 1.0], [2.0, -1.0], [3.0, 3.0]]).unwrap();
        let m = RidgeRegressor::default().fit(&pts, &[5.0; 3]).unwrap();
        let p = m.predict(&Matrix::from_rows(&[[10.0, -7.0], [0.3, 0.2]]).unwrap()).unwrap();
        assert!(p.iter().all(|v| (v - 5.0).abs() <= 1e-8));
    }

    #[test]
    fn knn_examples() {
        let pts = col(&[0.0, 1.0, 2.0]);
        let m = KnnRegressor::new(1, KnnWeighting::Uniform).fit(&pts, &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.predict(&col(&[1.0])).unwrap(), vec![5.0]);

        // query equidistant from three targets
        let pts = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [5.0, 5.0]]).unwrap();
        let m = KnnRegressor::new(3, KnnWeighting::Uniform).fit(&pts, &[1.0, 2.0, 3.0, 9.0]).unwrap();
        assert_eq!(m.predict(&Matrix::from_rows(&[[0.0, 0.0]]).unwrap()).unwrap(), vec![2.0]);

        let m = KnnRegressor::new(2, KnnWeighting::InverseDistance).fit(&col(&[0.0, 3.0]), &[1.0, 4.0]).unwrap();
        // weights 1/1 and 1/2
        assert!((m.predict(&col(&[1.0])).unwrap()[0] - (1.0 + 2.0) / 1.5).abs() < 1e-15);
        assert_eq!(m.predict(&col(&[3.0])).unwrap()[0], 4.0);
    }

    #[test]
    fn fit_and_predict_errors() {
        assert!(KnnRegressor::new(3, KnnWeighting::Uniform).fit(&col(&[0.0, 1.0]), &[0.0, 1.0]).is_err());
        let m = RidgeRegressor::default().fit(&col(&[0.0, 1.0]), &[0.0, 1.0]).unwrap();
        assert!(m.predict(&Matrix::zeros(1, 2)).is_err());
        assert!(RbfModel::new(Kernel::Gaussian).with_shape(0.0).fit(&col(&[0.0]), &[1.0]).is_err());
        assert!("forest".parse::<ModelSpec>().is_err());
        for id in ModelSpec::IDS {
            assert_eq!(id.parse::<ModelSpec>().unwrap().name(), id);
        }
    }

    #[test]
    fn rbf_with_duplicate_points_escalates_nugget() {
        let pts = col(&[0.0, 0.0, 1.0]);
        let m = RbfModel::new(Kernel::Gaussian).with_nugget(0.0).fit(&pts, &[1.0, 1.0, 2.0]).unwrap();
        let p = m.predict(&col(&[1.0])).unwrap()[0];
        assert!((p - 2.0).abs() < 1e-4);
    }

    fn cloud() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (3usize..12).prop_flat_map(|n| {
            (prop::collection::vec(-3.0f64..3.0, 2 * n), prop::collection::vec(-2.0f64..2.0, n), -50.0f64..50.0)
        })
    }

    proptest! {
        #[test]
        fn translation_consistency((xs, ys, shift) in cloud()) {
            let pts = Matrix::new(ys.len(), 2, xs).unwrap();
            let shifted: Vec<f64> = ys.iter().map(|y| y + shift).collect();
            let query = Matrix::from_rows(&[[0.1, -0.2], [2.5, 2.5], [9.0, -9.0]]).unwrap();
            let zoo: Vec<Box<dyn Regressor>> = vec![
                Box::new(RbfModel::new(Kernel::Exponential).with_shape(3.0)),
                Box::new(RbfModel::new(Kernel::Spline)),
                Box::new(KnnRegressor::new(3, KnnWeighting::InverseDistance)),
                Box::new(RidgeRegressor::default()),
            ];
            for m in &zoo {
                let a = m.fit(&pts, &ys).unwrap().predict(&query).unwrap();
                let b = m.fit(&pts, &shifted).unwrap().predict(&query).unwrap();
                for (a, b) in a.iter().zip(&b) {
                    prop_assert!((a + shift - b).abs() <= 1e-6 * (1.0 + shift.abs()), "{}", m.name());
                }
            }
        }

        #[test]
        fn knn_in_target_range_and_order_invariant((xs, ys, _s) in cloud()) {
            let n = ys.len();
            let pts = Matrix::new(n, 2, xs.clone()).unwrap();
            let query = Matrix::from_rows(&[[0.1, -0.2], [2.5, 2.5]]).unwrap();
            let knn = KnnRegressor::new(3, KnnWeighting::Uniform);
            let p = knn.fit(&pts, &ys).unwrap().predict(&query).unwrap();
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(p.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));

            let rev: Vec<usize> = (0..n).rev().collect();
            let pts_rev = pts.select_rows(&rev);
            let ys_rev: Vec<f64> = rev.iter().map(|&i| ys[i]).collect();
            let q = knn.fit(&pts_rev, &ys_rev).unwrap().predict(&query).unwrap();
            // identical neighbor sets unless distances tie exactly
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn rbf_interpolates_training_data((xs, ys, _s) in cloud()) {
            let pts = Matrix::new(ys.len(), 2, xs).unwrap();
            // well-separated points are not guaranteed by the strategy, so use
            // a narrow kernel that keeps the system well conditioned
            let m = RbfModel::new(Kernel::Gaussian).with_shape(50.0).with_nugget(0.0);
            if let Ok(f) = m.fit(&pts, &ys) {
                let p = f.predict(&pts).unwrap();
                let min_sep = (0..ys.len()).flat_map(|i| (0..i).map(move |j| (i, j)))
                    .map(|(i, j)| pts.row(i).iter().zip(pts.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                if min_sep > 0.05 {
                    for (a, b) in p.iter().zip(&ys) {
                        prop_assert!((a - b).abs() <= 1e-6);
                    }
                }
            }
        }
    }
}
