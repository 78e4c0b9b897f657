//! (1+1)-Evolution Strategy with the 1/5th success rule on the weight simplex.
//!
//! A heuristic baseline for [`crate::qp::solve_qp`]: it minimizes the same
//! quadratic objective, repairing each Gaussian mutation back onto the simplex
//! by Euclidean projection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{FitReport, SolverKind, WeightVector};
use crate::error::{Error, Result};
use crate::qp::{project_to_simplex, QpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsConfig {
    /// Total objective evaluations, including the starting point.
    pub budget: usize,
    pub initial_sigma: f64,
    /// Generations between step-size updates.
    pub adaptation_interval: usize,
    pub sigma_factor: f64,
    pub seed: u64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self { budget: 2000, initial_sigma: 0.25, adaptation_interval: 20, sigma_factor: 1.22, seed: 0 }
    }
}

impl EsConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("ES budget must be at least 1".into()));
        }
        if !(self.initial_sigma > 0.0 && self.initial_sigma.is_finite()) {
            return Err(Error::InvalidConfig("ES initial sigma must be positive".into()));
        }
        if self.adaptation_interval == 0 {
            return Err(Error::InvalidConfig("ES adaptation interval must be at least 1".into()));
        }
        if !(self.sigma_factor > 1.0 && self.sigma_factor.is_finite()) {
            return Err(Error::InvalidConfig("ES sigma factor must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsEvaluation {
    pub alpha: WeightVector,
    pub objective: f64,
    /// Whether this point became the parent.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsTrace {
    pub evaluations: Vec<EsEvaluation>,
    pub best: FitReport,
    /// Objective of `best.alpha`; the minimum over the trace.
    pub best_objective: f64,
}

pub fn es_optimize(problem: &QpProblem, config: &EsConfig) -> Result<EsTrace> {
    config.validate()?;
    let s = problem.n_models();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut parent = WeightVector::uniform(s)?;
    let mut parent_f = problem.objective(parent.as_slice());
    let mut evaluations = vec![EsEvaluation { alpha: parent.clone(), objective: parent_f, accepted: true }];

    // The simplex is a single point for one model; nothing to search.
    let budget = if s == 1 { 1 } else { config.budget };
    let mut sigma = config.initial_sigma;
    let mut successes = 0usize;
    let mut generation = 0usize;

    while evaluations.len() < budget {
        let mutated: Vec<f64> = parent
            .as_slice()
            .iter()
            .map(|a| {
                let z: f64 = StandardNormal.sample(&mut rng);
                a + sigma * z
            })
            .collect();
        let child = project_to_simplex(&mutated)?;
        let child_f = problem.objective(child.as_slice());
        let accepted = child_f <= parent_f;
        evaluations.push(EsEvaluation { alpha: child.clone(), objective: child_f, accepted });
        if accepted {
            parent = child;
            parent_f = child_f;
            successes += 1;
        }

        generation += 1;
        if generation.is_multiple_of(config.adaptation_interval) {
            let rate = successes as f64 / config.adaptation_interval as f64;
            if rate > 0.2 {
                sigma *= config.sigma_factor;
            } else if rate < 0.2 {
                sigma /= config.sigma_factor;
            }
            successes = 0;
        }
    }

    // The parent is always the best point seen: acceptance is elitist.
    let best = problem.report(parent, SolverKind::Es, evaluations.len(), None, true);
    Ok(EsTrace { evaluations, best, best_objective: parent_f })
}
