use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aspca_cli::io::{self, Orientation};
use aspca_core::{aspca_fit, fit_nr, label_agreement, sparse_pc_scores, threshold_omega};
use tempfile::TempDir;

fn aspca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aspca"))
        .args(args)
        .env_remove("ASPCA_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = aspca(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &TempDir, setting: &str, d: usize, n: usize, seed: u64) -> PathBuf {
    let out = p(dir, &format!("{setting}.csv"));
    ok(&[
        "simulate", "--setting", setting, "--d", &d.to_string(), "--n", &n.to_string(),
        "--seed", &seed.to_string(), "--out", s(&out),
    ]);
    out
}

#[test]
fn pca_fit_on_toy_file_has_full_support() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "toy.csv");
    fs::write(&input, "# toy\n1,2,3,4,10\n0,1,0,1,0\n2,-1,0,3,1\n").unwrap();
    let prefix = p(&dir, "toy");
    ok(&["fit", s(&input), "--method", "pca", "-m", "2", "--out", s(&prefix)]);
    let dirs = io::read_directions(&p(&dir, "toy_directions.csv")).unwrap();
    assert_eq!(dirs.len(), 2);
    for d in &dirs {
        assert_eq!(d.entries.iter().map(|e| e.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        let n2: f64 = d.entries.iter().map(|e| e.1 * e.1).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
    }
    let values = io::read_values(&p(&dir, "toy_values.csv")).unwrap();
    assert_eq!(values.iter().map(|v| v.k_support).collect::<Vec<_>>(), vec![3, 3]);
    assert!(values[0].lambda_hat >= values[1].lambda_hat);
}

#[test]
fn aspca_support_column_matches_library() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "s1", 256, 16, 3);
    let prefix = p(&dir, "fit");
    ok(&["fit", s(&input), "-m", "1", "--method", "aspca", "--out", s(&prefix)]);
    let values = io::read_values(&p(&dir, "fit_values.csv")).unwrap();
    let x = io::read_matrix(&input, Orientation::VariablesInRows).unwrap();
    let comps = aspca_fit(&x, 1).unwrap();
    assert_eq!(values.len(), 1);
    assert_eq!(values[0].k_support, comps[0].direction.support_size());
    assert_eq!(values[0].lambda_tilde, comps[0].lambda_tilde);
    let dirs = io::read_directions(&p(&dir, "fit_directions.csv")).unwrap();
    assert_eq!(dirs[0].entries, comps[0].direction.entries());
}

#[test]
fn triplets_reproduce_in_process_scores() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "s2", 128, 12, 5);
    let prefix = p(&dir, "fit");
    ok(&["fit", s(&input), "-m", "2", "--out", s(&prefix)]);
    let scores = p(&dir, "scores.csv");
    let svg = p(&dir, "scores.svg");
    ok(&[
        "scores", s(&input), s(&p(&dir, "fit_directions.csv")), "--out", s(&scores), "--svg", s(&svg),
    ]);
    let (got, labels) = io::read_scores(&scores).unwrap();
    assert!(labels.is_none());

    let x = io::read_matrix(&input, Orientation::VariablesInRows).unwrap();
    let comps = aspca_fit(&x, 2).unwrap();
    for (c, comp) in comps.iter().enumerate() {
        let expected = sparse_pc_scores(&x, comp.direction.entries()).unwrap();
        for (a, b) in got[c].iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<circle").count(), 12);
}

#[test]
fn normalized_scores_use_unit_directions() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "s1", 64, 8, 1);
    ok(&["fit", s(&input), "--out", s(&p(&dir, "f"))]);
    let raw = p(&dir, "raw.csv");
    let unit = p(&dir, "unit.csv");
    let dirs = p(&dir, "f_directions.csv");
    ok(&["scores", s(&input), s(&dirs), "--out", s(&raw)]);
    ok(&["scores", s(&input), s(&dirs), "--normalized", "--out", s(&unit)]);
    let (a, _) = io::read_scores(&raw).unwrap();
    let (b, _) = io::read_scores(&unit).unwrap();
    let entries = &io::read_directions(&dirs).unwrap()[0].entries;
    let nrm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    for (x, y) in a[0].iter().zip(&b[0]) {
        assert!((x / nrm - y).abs() < 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn cluster_recovers_mixture_labels() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "s3", 500, 60, 11);
    let truth = io::read_labels(&p(&dir, "s3_labels.csv")).unwrap();
    let out = p(&dir, "cluster.csv");
    let svg = p(&dir, "cluster.svg");
    ok(&[
        "cluster", s(&input), "--method", "shrink", "--omega", "0.5", "-m", "2", "--out", s(&out), "--svg", s(&svg),
    ]);
    let (scores, labels) = io::read_scores(&out).unwrap();
    let labels = labels.unwrap();
    assert_eq!(scores.len(), 2);
    assert!(label_agreement(&labels, &truth).unwrap() >= 0.95);

    let x = io::read_matrix(&input, Orientation::VariablesInRows).unwrap();
    let nr = fit_nr(&x).unwrap();
    let dir1 = threshold_omega(&nr, 0, 0.5).unwrap();
    assert_eq!(scores[0], sparse_pc_scores(&x, dir1.entries()).unwrap());
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<circle").count(), 60);
}

#[test]
fn cluster_with_one_outlying_sample() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "tiny.csv");
    // samples in rows: one sample far from the other three
    fs::write(&input, "0,0,0\n0.1,0,0.1\n0,0.1,0\n9,9,9\n").unwrap();
    let out = p(&dir, "c.csv");
    ok(&["cluster", s(&input), "--orientation", "samples", "--method", "pca", "--out", s(&out)]);
    let (_, labels) = io::read_scores(&out).unwrap();
    let labels = labels.unwrap();
    assert_eq!(labels.len(), 4);
    let outlier = labels[3];
    assert!(labels[..3].iter().all(|&l| l != outlier));
}

#[test]
fn simulate_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.csv");
    let b = p(&dir, "b.csv");
    for out in [&a, &b] {
        ok(&["simulate", "--setting", "s1", "--d", "64", "--n", "8", "--seed", "7", "--out", s(out)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let x = io::read_matrix(&a, Orientation::VariablesInRows).unwrap();
    assert_eq!((x.d(), x.n()), (64, 8));
    assert!(p(&dir, "a_model.txt").exists());
    assert!(!p(&dir, "a_labels.csv").exists());
}

#[test]
fn simulate_from_model_file_matches_setting() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.csv");
    ok(&["simulate", "--setting", "s4", "--d", "32", "--seed", "2", "--out", s(&a)]);
    let b = p(&dir, "b.csv");
    ok(&["simulate", "--model", s(&p(&dir, "a_model.txt")), "--seed", "2", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let x = io::read_matrix(&b, Orientation::VariablesInRows).unwrap();
    assert_eq!(x.n(), 6);
}

#[test]
fn simulate_samples_orientation_round_trips() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "v.csv");
    let b = p(&dir, "s.csv");
    ok(&["simulate", "--setting", "s2", "--d", "40", "--n", "6", "--seed", "9", "--out", s(&a)]);
    ok(&[
        "simulate", "--setting", "s2", "--d", "40", "--n", "6", "--seed", "9", "--orientation", "samples",
        "--out", s(&b),
    ]);
    let x = io::read_matrix(&a, Orientation::VariablesInRows).unwrap();
    let y = io::read_matrix(&b, Orientation::SamplesInRows).unwrap();
    assert_eq!(x, y);
}

#[test]
fn default_output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_aspca"))
        .args(["simulate", "--setting", "s1", "--d", "16", "--n", "5", "--seed", "1"])
        .env("ASPCA_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(p(&dir, "s1_d16_n5_seed1.csv").exists());
}

#[test]
fn bench_grid_rows_and_ordering() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "bench.csv");
    ok(&[
        "bench", "--setting", "s1", "--d-grid", "64:256", "--reps", "50", "--estimators", "pca,aspca",
        "--seed", "1", "--out", s(&out),
    ]);
    let recs = io::read_bench(&out).unwrap();
    assert_eq!(recs.len(), 8);
    let get = |est: &str| {
        recs.iter()
            .find(|r| r.d == 256 && r.estimator == est && r.component == 1)
            .unwrap()
            .mean_mse
    };
    assert!(get("aspca") < get("pca"));
    assert!(recs.iter().all(|r| r.replications == 50 && r.mean_mse >= 0.0));
}

#[test]
fn bench_without_timing_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.csv");
    let b = p(&dir, "b.csv");
    ok(&["bench", "--setting", "s4", "--d-grid", "64", "--reps", "8", "--estimators", "aspca,tspca:0.05", "--no-timing", "--out", s(&a)]);
    ok(&["bench", "--setting", "s4", "--d-grid", "64", "--reps", "8", "--estimators", "aspca,tspca:0.05", "--no-timing", "--sequential", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let recs = io::read_bench(&a).unwrap();
    assert_eq!(recs[1].param, Some(0.05));
    assert_eq!(recs[0].seconds, 0.0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(aspca(&["simulate", "--setting", "s9", "--d", "64"]).status.code(), Some(2));
    assert_eq!(aspca(&["bench", "--setting", "s1", "--d-grid", "64", "--estimators", "lasso"]).status.code(), Some(2));

    let input = simulate(&dir, "s1", 32, 8, 1);
    let o = aspca(&["fit", s(&input), "--method", "tspca"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aspca(&["fit", s(&input), "--method", "aspca", "--zeta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aspca(&["fit", s(&input), "-m", "99"]);
    assert_eq!(o.status.code(), Some(2));

    let ragged = p(&dir, "ragged.csv");
    fs::write(&ragged, "1,2,3,4\n1,2,3\n").unwrap();
    assert_eq!(aspca(&["fit", s(&ragged)]).status.code(), Some(3));
    let text = p(&dir, "text.csv");
    fs::write(&text, "1,2,3,4\n1,2,abc,4\n").unwrap();
    assert_eq!(aspca(&["fit", s(&text)]).status.code(), Some(3));
    assert_eq!(aspca(&["fit", s(&p(&dir, "missing.csv"))]).status.code(), Some(3));

    // observations e_1..e_5 give a flat dual spectrum, so λ̃_1 vanishes
    let simplex = p(&dir, "simplex.csv");
    fs::write(&simplex, "1,0,0,0,0\n0,1,0,0,0\n0,0,1,0,0\n0,0,0,1,0\n0,0,0,0,1\n").unwrap();
    let o = aspca(&["fit", s(&simplex), "--out", s(&p(&dir, "x"))]);
    assert_eq!(o.status.code(), Some(4));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("component 1") && msg.contains("lambda_tilde"), "{msg}");
    // conventional PCA needs no NR component
    ok(&["fit", s(&simplex), "--method", "pca", "--out", s(&p(&dir, "y"))]);

    let input64 = simulate(&dir, "s2", 64, 8, 2);
    ok(&["fit", s(&input), "--out", s(&p(&dir, "small"))]);
    let o = aspca(&["scores", s(&input), s(&p(&dir, "small_directions.csv"))]);
    assert_eq!(o.status.code(), Some(0));
    let big = p(&dir, "big_directions.csv");
    fs::write(&big, "component,index,value\n1,60,1.0\n").unwrap();
    assert_eq!(aspca(&["scores", s(&input), s(&big)]).status.code(), Some(3));
    assert_eq!(aspca(&["scores", s(&input64), s(&big), "--out", s(&p(&dir, "sc.csv"))]).status.code(), Some(0));
}
