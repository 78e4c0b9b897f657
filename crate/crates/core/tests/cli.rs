use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ccm::cli::{EvalMetrics, WeightsReport};
use ccm::{evaluate_msg, Matrix, MsgLandscape};
use serde_json::Value;

fn ccm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccm")).args(args).current_dir(dir).output().expect("spawn ccm")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = ccm(dir, args);
    assert!(out.status.success(), "ccm {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
    (headers, rows)
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr is one JSON object")
}

#[test]
fn synth_writes_dataset_consistent_with_landscape() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--dim", "2", "--components", "7", "--samples", "40", "--seed", "3", "--out", "d.csv"]);
    let (headers, rows) = read_csv(&dir.path().join("d.csv"));
    assert_eq!(headers, ["x1", "x2", "y"]);
    assert_eq!(rows.len(), 40);

    let landscape: MsgLandscape =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d.landscape.json")).unwrap()).unwrap();
    let pts: Vec<Vec<f64>> = rows.iter().map(|r| r[..2].to_vec()).collect();
    let y = evaluate_msg(&landscape, &Matrix::from_rows(&pts).unwrap()).unwrap();
    for (r, v) in rows.iter().zip(&y) {
        assert_eq!(r[2], *v);
        assert!(r[0] >= -5.0 && r[0] <= 5.0);
    }
}

#[test]
fn fit_from_predictions_finds_bracketing_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("data.csv"), "x,y\n0,2\n1,2\n2,2\n").unwrap();
    fs::write(dir.path().join("pred.csv"), "low,high\n1,3\n1,3\n1,3\n").unwrap();
    ok(dir.path(), &["fit", "--data", "data.csv", "--target", "y", "--predictions", "pred.csv", "--out", "w.json"]);
    let report: WeightsReport = serde_json::from_str(&fs::read_to_string(dir.path().join("w.json")).unwrap()).unwrap();
    assert_eq!(report.models, ["low", "high"]);
    assert!((report.alpha[0] - 0.5).abs() < 1e-12);
    assert!(report.rmse < 1e-12);
    assert!(report.converged);
    assert_eq!(report.wrmse, None);
    assert!(report.kkt_residual.unwrap() <= 1e-8);

    // scoring the same predictions reproduces the training RMSE
    ok(
        dir.path(),
        &[
            "eval",
            "--weights",
            "w.json",
            "--predictions",
            "pred.csv",
            "--data",
            "data.csv",
            "--target",
            "y",
            "--out",
            "m.json",
        ],
    );
    let m: EvalMetrics = serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(m.n, 3);
    assert!(m.rmse < 1e-12);
}

#[test]
fn density_cli_matches_clustered_example() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), "x,y\n0,1\n0.01,1\n0.02,1\n10,1\n20,1\n30,1\n").unwrap();
    ok(dir.path(), &["density", "--data", "p.csv", "--target", "y", "--density-k", "2", "--out", "b.csv"]);
    let (headers, rows) = read_csv(&dir.path().join("b.csv"));
    assert_eq!(headers, ["index", "raw_density", "beta"]);
    let expected = [0.015 / 5.8375, 0.01 / 5.8375, 0.015 / 5.8375, 1.0, 1.0, 1.0];
    for (r, e) in rows.iter().zip(expected) {
        assert!((r[2] - e).abs() < 1e-12);
    }

    fs::write(dir.path().join("g.csv"), "x\n0\n1\n2\n3\n4\n5\n").unwrap();
    let out = ok(dir.path(), &["density", "--data", "g.csv", "--density-k", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",1")), "{text}");
}

#[test]
fn ternary_grid_has_all_barycentric_points_and_optimum() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pred.csv"), "a,b,c,y\n1,3,2,2.5\n0,1,4,1\n2,2,1,1.5\n").unwrap();
    ok(dir.path(), &["ternary", "--predictions", "pred.csv", "--target", "y", "--step", "0.1", "--out", "t.csv"]);
    let (headers, rows) = read_csv(&dir.path().join("t.csv"));
    assert_eq!(headers, ["alpha1", "alpha2", "alpha3", "rmse", "optimum"]);
    assert_eq!(rows.len(), 66 + 1);
    let optimum = rows.iter().find(|r| r[4] == 1.0).unwrap();
    let grid_min = rows.iter().filter(|r| r[4] == 0.0).map(|r| r[3]).fold(f64::INFINITY, f64::min);
    assert!(optimum[3] <= grid_min + 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pred.csv"), "a,b,y\n1,3,2\n").unwrap();
    let out = ccm(dir.path(), &["ternary", "--predictions", "pred.csv", "--target", "y", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = ccm(dir.path(), &["fit", "--data", "x.csv", "--target", "y", "--cv", "folds", "--out", "w.json"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.path().join("d.csv"), "x,y\n0,1\n1,2\n2,3\n").unwrap();
    let out = ccm(dir.path(), &["fit", "--data", "d.csv", "--target", "y", "--models", "nope", "--out", "w.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = ccm(dir.path(), &["density", "--data", "missing.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "data");

    fs::write(dir.path().join("bad.csv"), "x,y\n0,1\nabc,2\n").unwrap();
    let out = ccm(dir.path(), &["density", "--data", "bad.csv", "--target", "y"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("abc"));

    fs::write(dir.path().join("same.csv"), "x\n1\n1\n1\n").unwrap();
    let out = ccm(dir.path(), &["density", "--data", "same.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn non_convergence_exits_4_and_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut pred = String::from("m1,m2,m3\n");
    let mut data = String::from("x,y\n");
    for i in 0..20 {
        let f = i as f64;
        pred.push_str(&format!("{},{},{}\n", f, f * f * 0.1, f.sin()));
        data.push_str(&format!("{},{}\n", f, (f * 0.7).cos() * 5.0));
    }
    fs::write(dir.path().join("pred.csv"), pred).unwrap();
    fs::write(dir.path().join("d.csv"), data).unwrap();
    let out = ccm(
        dir.path(),
        &[
            "fit",
            "--data",
            "d.csv",
            "--target",
            "y",
            "--predictions",
            "pred.csv",
            "--max-iterations",
            "1",
            "--kkt-tolerance",
            "1e-300",
            "--out",
            "w.json",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "non_convergence");
    let report: WeightsReport = serde_json::from_str(&fs::read_to_string(dir.path().join("w.json")).unwrap()).unwrap();
    assert!(!report.converged);
    assert_eq!(report.iterations, 1);
}

#[test]
fn fit_with_models_test_file_and_eval_refit() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["synth", "--dim", "2", "--components", "10", "--samples", "40", "--seed", "1", "--out", "train.csv"]);
    ok(p, &["synth", "--dim", "2", "--components", "10", "--samples", "20", "--seed", "1", "--out", "test.csv"]);
    ok(
        p,
        &[
            "fit",
            "--data",
            "train.csv",
            "--target",
            "y",
            "--models",
            "rbf-gaussian,knn,ridge",
            "--cv",
            "k:4",
            "--weighting",
            "density",
            "--density-k",
            "5",
            "--test-file",
            "test.csv",
            "--out",
            "w.json",
        ],
    );
    let report: WeightsReport = serde_json::from_str(&fs::read_to_string(p.join("w.json")).unwrap()).unwrap();
    assert_eq!(report.models, ["rbf-gaussian", "knn", "ridge"]);
    assert!(report.wrmse.is_some());
    let test = report.test.expect("test section");
    assert_eq!(test.n, 20);

    // refitting from the report reproduces the test RMSE
    ok(
        p,
        &[
            "eval",
            "--weights",
            "w.json",
            "--data",
            "test.csv",
            "--target",
            "y",
            "--out",
            "m.json",
            "--pairs-out",
            "pairs.csv",
        ],
    );
    let m: EvalMetrics = serde_json::from_str(&fs::read_to_string(p.join("m.json")).unwrap()).unwrap();
    assert!((m.rmse - test.rmse).abs() < 1e-12, "{} vs {}", m.rmse, test.rmse);
    let (headers, rows) = read_csv(&p.join("pairs.csv"));
    assert_eq!(headers, ["actual", "predicted"]);
    assert_eq!(rows.len(), 20);
}

#[test]
fn es_trace_export() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["synth", "--dim", "2", "--components", "5", "--samples", "30", "--seed", "4", "--out", "d.csv"]);
    ok(
        p,
        &[
            "fit",
            "--data",
            "d.csv",
            "--target",
            "y",
            "--models",
            "rbf-gaussian,rbf-spline,rbf-exponential",
            "--solver",
            "es",
            "--es-budget",
            "300",
            "--seed",
            "9",
            "--trace-out",
            "trace.csv",
            "--out",
            "w.json",
        ],
    );
    let (headers, rows) = read_csv(&p.join("trace.csv"));
    assert_eq!(headers, ["evaluation_index", "alpha_1", "alpha_2", "alpha_3", "objective"]);
    assert_eq!(rows.len(), 300);
    let report: WeightsReport = serde_json::from_str(&fs::read_to_string(p.join("w.json")).unwrap()).unwrap();
    assert_eq!(report.kkt_residual, None);
    assert_eq!(report.iterations, 300);
    let best = rows.iter().map(|r| r[4]).fold(f64::INFINITY, f64::min);
    assert_eq!(rows.last().map(|r| r[0]), Some(299.0));
    assert!(best.is_finite());

    let out = ccm(
        p,
        &["fit", "--data", "d.csv", "--target", "y", "--models", "knn", "--trace-out", "t.csv", "--out", "w2.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn roc_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let report = serde_json::json!({
            "models": ["a", "b"], "alpha": [1.0, 0.0], "rmse": 0.0, "wrmse": null, "solver": "qp",
            "iterations": 0, "kkt_residual": 0.0, "converged": true, "active_models": ["a"], "seed": 0,
            "config_echo": {"data": "d.csv", "target": "y", "predictions": "pred.csv", "models": null, "cv": null,
                "weighting": null, "solver": {"solver": "qp", "config": {"max_iterations": 10000, "kkt_tolerance": 1e-8, "ridge_epsilon": 0.0}},
                "test_file": null, "roc_threshold": null},
        "roc": null, "test": null
    });
    fs::write(p.join("w.json"), report.to_string()).unwrap();
    fs::write(p.join("pred.csv"), "a,b,y\n0.1,0,0\n0.4,0,1\n0.35,0,0\n0.8,0,1\n").unwrap();
    let out = ccm(
        p,
        &[
            "eval",
            "--weights",
            "w.json",
            "--predictions",
            "pred.csv",
            "--target",
            "y",
            "--roc-threshold",
            "0.5",
            "--roc-out",
            "roc.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m: EvalMetrics = serde_json::from_slice(&out.stdout).unwrap();
    let roc = m.roc.unwrap();
    assert_eq!(roc.auc, 1.0);
    assert_eq!(roc.youden.j, 1.0);
    let (headers, rows) = read_csv(&p.join("roc.csv"));
    assert_eq!(headers, ["threshold", "fpr", "tpr"]);
    assert_eq!(rows[0], [f64::INFINITY, 0.0, 0.0]);
    assert_eq!(rows.last().unwrap()[1..], [1.0, 1.0]);
}
