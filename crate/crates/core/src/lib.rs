//! Optimal convex combinations of heterogeneous regression models.
//!
//! Given out-of-fold predictions of `s` base models at `n` training points,
//! the weight vector `alpha` on the probability simplex that minimizes the
//! (optionally density-weighted) RMSE of the mixed prediction is the solution
//! of a convex quadratic program. This crate builds that program, solves it
//! exactly, and provides the surrounding pipeline: k-NN density weights,
//! a small model zoo, a cross-validation harness, a (1+1)-ES baseline,
//! synthetic Max-Set-of-Gaussians benchmarks and ROC evaluation.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default); every such loop also has a sequential path selectable via
//! [`Execution`].

pub mod cli;
pub mod cv;
pub mod data;
pub mod density;
pub mod error;
pub mod es;
pub mod metrics;
pub mod models;
pub mod par;
pub mod qp;
pub mod synth;

pub use cv::{build_prediction_matrix, fit_ensemble, CvScheme, FittedEnsemble, SolverChoice};
pub use data::{Dataset, FitReport, Matrix, PointWeights, PredictionMatrix, SolverKind, WeightVector};
pub use density::{density_weights, knn_median_density, DensityConfig, DensityResult};
pub use error::{Error, Result};
pub use es::{es_optimize, EsConfig, EsTrace};
pub use metrics::{rmse, roc_curve, wrmse, RocCurve};
pub use models::{FittedModel, ModelSpec, Regressor};
pub use par::Execution;
pub use qp::{build_qp, kkt_residual, project_to_simplex, solve_qp, QpProblem, SolverConfig};
pub use synth::{evaluate_msg, generate_msg, latin_hypercube, Bounds, MsgLandscape};
