use std::hint::black_box;

use ccm::cli::barycentric_grid;
use ccm::cv::build_prediction_matrix_with;
use ccm::density::knn_median_density_with;
use ccm::synth::evaluate_msg_with;
use ccm::{build_qp, generate_msg, latin_hypercube, Bounds, CvScheme, Dataset, Execution, ModelSpec, PredictionMatrix};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn density(c: &mut Criterion) {
    let domain = Bounds::cube(5, 0.0, 1.0);
    let points = latin_hypercube(2000, 5, 1, &domain).unwrap();
    let mut g = c.benchmark_group("knn_density_n2000_d5");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| knn_median_density_with(black_box(&points), 20, exec).unwrap())
        });
    }
    g.finish();
}

fn loo_matrix(c: &mut Criterion) {
    let domain = Bounds::cube(4, -5.0, 5.0);
    let landscape = generate_msg(4, 40, 3, &domain).unwrap();
    let x = latin_hypercube(80, 4, 4, &domain).unwrap();
    let y = evaluate_msg_with(&landscape, &x, Execution::Sequential).unwrap();
    let data = Dataset::new(x, y).unwrap();
    let models = ModelSpec::rbf_trio();
    let mut g = c.benchmark_group("loo_rbf_trio_n80");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_prediction_matrix_with(&data, &models, &CvScheme::LeaveOneOut, exec).unwrap())
        });
    }
    g.finish();
}

fn msg_evaluation(c: &mut Criterion) {
    let domain = Bounds::cube(4, -5.0, 5.0);
    let landscape = generate_msg(4, 160, 5, &domain).unwrap();
    let x = latin_hypercube(10_000, 4, 6, &domain).unwrap();
    let mut g = c.benchmark_group("msg_eval_160x10000");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate_msg_with(&landscape, black_box(&x), exec).unwrap())
        });
    }
    g.finish();
}

fn ternary_grid(c: &mut Criterion) {
    let n = 500;
    let cols: Vec<Vec<f64>> = (0..3).map(|j| (0..n).map(|i| ((i * (j + 2)) as f64 * 0.37).sin()).collect()).collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let pm = PredictionMatrix::unnamed(ccm::Matrix::from_columns(&refs).unwrap()).unwrap();
    let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
    let problem = build_qp(&pm, &y, None).unwrap();
    let grid = barycentric_grid(0.005).unwrap();
    let mut g = c.benchmark_group("ternary_grid_step0.005");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ccm::par::map_range(grid.len(), exec, |k| problem.wrmse(&grid[k])))
        });
    }
    g.finish();
}

criterion_group!(benches, density, loo_matrix, msg_evaluation, ternary_grid);
criterion_main!(benches);
