//! Simplex-constrained convex quadratic program for optimal model weights.
//!
//! Minimizing `||A alpha - y||^2` over the probability simplex is the QP
//!
//! ```text
//! minimize  1/2 alpha' Q alpha + c' alpha   s.t. alpha >= 0, sum(alpha) = 1
//! Q = A'A,  c = -A'y
//! ```
//!
//! and the weighted variant replaces `A` and `y` by their rows scaled with the
//! point weights. `Q` is positive semidefinite, so the problem is convex.
//!
//! The solver is accelerated projected gradient (step `1/L`, `L` the largest
//! eigenvalue of `Q`) with function-value restarts, plus an equality-constrained
//! Newton polish on the current support. Optimality is certified by the
//! projected-gradient fixed-point residual.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{dot, FitReport, Matrix, PointWeights, PredictionMatrix, SolverKind, WeightVector};
use crate::error::{Error, Result};

/// The quadratic program together with the (weighted) least-squares data it
/// was built from, so errors are always reported from the residual form.
#[derive(Debug, Clone)]
pub struct QpProblem {
    q: Vec<f64>,
    c: Vec<f64>,
    const_term: f64,
    s: usize,
    predictions: PredictionMatrix,
    targets: Vec<f64>,
    weights: Option<PointWeights>,
    weighted_design: Matrix,
    weighted_targets: Vec<f64>,
}

/// Builds `Q = Ã'Ã`, `c = -Ã'ỹ`, `const_term = ỹ'ỹ` with `Ã = diag(beta) A`
/// and `ỹ = diag(beta) y`; without `beta` the rows are left unscaled.
pub fn build_qp(predictions: &PredictionMatrix, targets: &[f64], beta: Option<&PointWeights>) -> Result<QpProblem> {
    let n = predictions.n_points();
    let s = predictions.n_models();
    if targets.len() != n {
        return Err(Error::DimensionMismatch(format!("{} targets for {n} prediction rows", targets.len())));
    }
    if !targets.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    if let Some(b) = beta {
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("{} point weights for {n} rows", b.len())));
        }
    }

    let a = predictions.entries();
    let scale = |i: usize| beta.map_or(1.0, |b| b.as_slice()[i]);
    let mut design = Vec::with_capacity(n * s);
    let mut wy = Vec::with_capacity(n);
    for (i, y) in targets.iter().enumerate() {
        let bi = scale(i);
        design.extend(a.row(i).iter().map(|v| bi * v));
        wy.push(bi * y);
    }
    let design = Matrix::new(n, s, design)?;

    let mut q = vec![0.0; s * s];
    let mut c = vec![0.0; s];
    for (row, &yi) in design.rows_iter().zip(&wy) {
        for j in 0..s {
            for k in j..s {
                q[j * s + k] += row[j] * row[k];
            }
            c[j] -= row[j] * yi;
        }
    }
    for j in 0..s {
        for k in 0..j {
            q[j * s + k] = q[k * s + j];
        }
    }
    let const_term = dot(&wy, &wy);

    Ok(QpProblem {
        q,
        c,
        const_term,
        s,
        predictions: predictions.clone(),
        targets: targets.to_vec(),
        weights: beta.cloned(),
        weighted_design: design,
        weighted_targets: wy,
    })
}

impl QpProblem {
    /// Row-major `s x s` Hessian.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn const_term(&self) -> f64 {
        self.const_term
    }

    pub fn n_models(&self) -> usize {
        self.s
    }

    pub fn n_points(&self) -> usize {
        self.targets.len()
    }

    pub fn model_names(&self) -> &[String] {
        self.predictions.model_names()
    }

    pub fn predictions(&self) -> &PredictionMatrix {
        &self.predictions
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn weights(&self) -> Option<&PointWeights> {
        self.weights.as_ref()
    }

    /// `1/2 alpha' Q alpha + c' alpha`.
    pub fn objective(&self, alpha: &[f64]) -> f64 {
        quad_objective(&self.q, &self.c, alpha)
    }

    pub fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        quad_gradient(&self.q, &self.c, alpha)
    }

    /// `||Ã alpha - ỹ||^2`, computed from the residuals.
    pub fn squared_residual(&self, alpha: &[f64]) -> f64 {
        self.weighted_design
            .rows_iter()
            .zip(&self.weighted_targets)
            .map(|(r, y)| {
                let e = dot(r, alpha) - y;
                e * e
            })
            .sum()
    }

    /// Unweighted RMSE of the mixed prediction.
    pub fn rmse(&self, alpha: &[f64]) -> f64 {
        let sse: f64 = self
            .predictions
            .entries()
            .rows_iter()
            .zip(&self.targets)
            .map(|(r, y)| {
                let e = dot(r, alpha) - y;
                e * e
            })
            .sum();
        (sse / self.n_points() as f64).sqrt()
    }

    /// Weighted RMSE; the plain RMSE when the problem has no point weights.
    pub fn wrmse(&self, alpha: &[f64]) -> f64 {
        match self.weights {
            Some(_) => (self.squared_residual(alpha) / self.n_points() as f64).sqrt(),
            None => self.rmse(alpha),
        }
    }

    fn check_len(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.s {
            return Err(Error::DimensionMismatch(format!(
                "weight vector of length {} for {} models",
                alpha.len(),
                self.s
            )));
        }
        Ok(())
    }

    pub(crate) fn report(
        &self,
        alpha: WeightVector,
        solver: SolverKind,
        iterations: usize,
        kkt_residual: Option<f64>,
        converged: bool,
    ) -> FitReport {
        let a = alpha.as_slice();
        FitReport {
            rmse: self.rmse(a),
            wrmse: self.wrmse(a),
            active_models: FitReport::active_names(&alpha, self.model_names()),
            model_names: self.model_names().to_vec(),
            alpha,
            solver,
            iterations,
            kkt_residual,
            converged,
        }
    }
}

fn quad_objective(q: &[f64], c: &[f64], x: &[f64]) -> f64 {
    let s = x.len();
    let mut quad = 0.0;
    for j in 0..s {
        quad += x[j] * dot(&q[j * s..(j + 1) * s], x);
    }
    0.5 * quad + dot(c, x)
}

fn quad_gradient(q: &[f64], c: &[f64], x: &[f64]) -> Vec<f64> {
    let s = x.len();
    (0..s).map(|j| dot(&q[j * s..(j + 1) * s], x) + c[j]).collect()
}

/// Euclidean projection onto the probability simplex (sort-based, exact).
pub fn project_to_simplex(v: &[f64]) -> Result<WeightVector> {
    if v.is_empty() {
        return Err(Error::Empty("vector to project"));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("vector to project"));
    }
    Ok(WeightVector::from_feasible(simplex_projection(v)))
}

fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (m, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (m + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn kkt_inf_norm(q: &[f64], c: &[f64], alpha: &[f64]) -> f64 {
    let g = quad_gradient(q, c, alpha);
    let step: Vec<f64> = alpha.iter().zip(&g).map(|(a, g)| a - g).collect();
    simplex_projection(&step).iter().zip(alpha).map(|(p, a)| (a - p).abs()).fold(0.0, f64::max)
}

/// `||alpha - P(alpha - grad f(alpha))||_inf` with `P` the simplex projection;
/// zero exactly at the optimum.
pub fn kkt_residual(problem: &QpProblem, alpha: &WeightVector) -> Result<f64> {
    problem.check_len(alpha.as_slice())?;
    Ok(kkt_inf_norm(&problem.q, &problem.c, alpha.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    /// Ridge added to `diag(Q)`. Escalated to `1e-10 * trace(Q) / s` when `Q`
    /// has (numerically) zero curvature along a direction inside the simplex.
    pub ridge_epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 10_000, kkt_tolerance: 1e-8, ridge_epsilon: 0.0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.kkt_tolerance > 0.0 && self.kkt_tolerance.is_finite()) {
            return Err(Error::InvalidConfig("kkt_tolerance must be positive".into()));
        }
        if !(self.ridge_epsilon >= 0.0 && self.ridge_epsilon.is_finite()) {
            return Err(Error::InvalidConfig("ridge_epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

// Curvature along the simplex below this fraction of the largest eigenvalue
// counts as degenerate.
const DEGENERACY_RATIO: f64 = 1e-12;
const POLISH_INTERVAL: usize = 5;

/// Solves the QP from the uniform weight vector.
///
/// Non-convergence within `max_iterations` is not an error: the best iterate
/// comes back with `converged == false`.
pub fn solve_qp(problem: &QpProblem, config: &SolverConfig) -> Result<FitReport> {
    config.validate()?;
    let s = problem.s;
    let uniform = WeightVector::uniform(s)?;
    if s == 1 {
        return Ok(problem.report(uniform, SolverKind::Qp, 0, Some(0.0), true));
    }
    let trace: f64 = (0..s).map(|j| problem.q[j * s + j]).sum();
    if trace <= 0.0 {
        // Q = 0 implies c = 0: every feasible point is optimal.
        return Ok(problem.report(uniform, SolverKind::Qp, 0, Some(0.0), true));
    }

    let q_mat = DMatrix::from_row_slice(s, s, &problem.q);
    let lipschitz = SymmetricEigen::new(q_mat.clone()).eigenvalues.max();
    let mut ridge = config.ridge_epsilon;
    if min_tangent_curvature(&q_mat) <= DEGENERACY_RATIO * lipschitz {
        ridge = ridge.max(1e-10 * trace / s as f64);
    }
    let mut q = problem.q.clone();
    for j in 0..s {
        q[j * s + j] += ridge;
    }
    let c = &problem.c;
    // residual form; the expanded quadratic cancels badly near exact fits
    let objective = |x: &[f64]| 0.5 * problem.squared_residual(x) + 0.5 * ridge * dot(x, x);
    let step = 1.0 / (lipschitz + ridge);

    let mut x = uniform.into_inner();
    let mut fx = objective(&x);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut residual = kkt_inf_norm(&q, c, &x);
    let mut iterations = 0;

    while residual > config.kkt_tolerance && iterations < config.max_iterations {
        iterations += 1;
        let mut next = gradient_step(&q, c, &y, step);
        let mut f_next = objective(&next);
        if f_next > fx {
            // momentum overshoot: restart from the last iterate
            t = 1.0;
            next = gradient_step(&q, c, &x, step);
            f_next = objective(&next);
        }
        if !f_next.is_finite() || next.iter().any(|v| v.is_nan()) {
            return Err(Error::SolverNan(iterations));
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        y = next.iter().zip(&x).map(|(n, o)| n + momentum * (n - o)).collect();
        // accept monotonically; the restart guarantees f_next <= fx up to rounding
        if f_next <= fx {
            x = next;
            fx = f_next;
        }
        t = t_next;
        residual = kkt_inf_norm(&q, c, &x);

        if residual > config.kkt_tolerance && iterations % POLISH_INTERVAL == 0 {
            if let Some(p) = polish_on_support(&q, c, &x) {
                let rp = kkt_inf_norm(&q, c, &p);
                let fp = objective(&p);
                if rp < residual && fp <= fx + 1e-12 * fx.abs().max(1.0) {
                    x = p;
                    fx = fp;
                    y = x.clone();
                    t = 1.0;
                    residual = rp;
                }
            }
        }
    }

    // a final Newton step on the support sharpens a merely tolerable iterate
    if let Some(p) = polish_on_support(&q, c, &x) {
        let rp = kkt_inf_norm(&q, c, &p);
        if rp <= residual && objective(&p) <= objective(&x) + 1e-14 * objective(&x).abs().max(1e-300) {
            x = p;
            residual = rp;
        }
    }

    let converged = residual <= config.kkt_tolerance;
    let alpha = WeightVector::from_feasible(x);
    Ok(problem.report(alpha, SolverKind::Qp, iterations, Some(residual), converged))
}

fn gradient_step(q: &[f64], c: &[f64], from: &[f64], step: f64) -> Vec<f64> {
    let g = quad_gradient(q, c, from);
    let v: Vec<f64> = from.iter().zip(&g).map(|(a, g)| a - step * g).collect();
    simplex_projection(&v)
}

/// Smallest eigenvalue of `Q` restricted to `{d : sum(d) = 0}`, using an
/// orthonormal (Helmert) basis of that subspace.
fn min_tangent_curvature(q: &DMatrix<f64>) -> f64 {
    let s = q.nrows();
    let basis = DMatrix::from_fn(s, s - 1, |i, k| {
        let k1 = (k + 1) as f64;
        let norm = (k1 * (k1 + 1.0)).sqrt();
        match i.cmp(&(k + 1)) {
            std::cmp::Ordering::Less => 1.0 / norm,
            std::cmp::Ordering::Equal => -k1 / norm,
            std::cmp::Ordering::Greater => 0.0,
        }
    });
    let reduced = basis.transpose() * q * &basis;
    SymmetricEigen::new(reduced).eigenvalues.min()
}

/// Solves the equality-constrained QP on the support of `alpha`
/// (`Q_SS a + c_S = lambda 1`, `1'a = 1`). Returns `None` when the system is
/// singular or the solution leaves the simplex.
fn polish_on_support(q: &[f64], c: &[f64], alpha: &[f64]) -> Option<Vec<f64>> {
    let s = alpha.len();
    let support: Vec<usize> = (0..s).filter(|&i| alpha[i] > 0.0).collect();
    let m = support.len();
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = q[i * s + j];
        }
        kkt[(a, m)] = 1.0;
        kkt[(m, a)] = 1.0;
        rhs[a] = -c[i];
    }
    rhs[m] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    let mut out = vec![0.0; s];
    for (a, &i) in support.iter().enumerate() {
        let v = sol[a];
        if !v.is_finite() || v < -1e-12 {
            return None;
        }
        out[i] = v.max(0.0);
    }
    let sum: f64 = out.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return None;
    }
    out.iter_mut().for_each(|v| *v /= sum);
    Some(out)
}
