use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ksvm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksvm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = ksvm(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn generated(dir: &Path) {
    ok(
        dir,
        &[
            "gen", "--n", "60", "--r", "30", "--dist", "uniform", "--seed", "3", "--out", "d.csv",
        ],
    );
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path());
    fs::rename(dir.path().join("d.csv"), dir.path().join("first.csv")).unwrap();
    generated(dir.path());
    let a = fs::read_to_string(dir.path().join("first.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().filter(|l| l.ends_with(",1")).count(), 30);
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    for method in ["svm", "ksvm"] {
        ok(
            d,
            &[
                "train", "--in", "d.csv", "--method", method, "--k", "4", "--out", "m.json",
            ],
        );
        ok(
            d,
            &["predict", "--model", "m.json", "--in", "d.csv", "--out", "labels.csv"],
        );
        let labels = fs::read_to_string(d.join("labels.csv")).unwrap();
        assert_eq!(labels.lines().count(), 60);
        assert!(labels.lines().all(|l| l == "1" || l == "-1"));
    }
}

#[test]
fn cv_grid_and_boundary_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    ok(
        d,
        &[
            "cv", "--in", "d.csv", "--method", "svm", "--folds", "3", "--out", "cv.json",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("cv.json")).unwrap()).unwrap();
    assert!(report.get("overall_error").is_some());

    let out = ok(
        d,
        &[
            "grid",
            "--in",
            "d.csv",
            "--m-exp",
            "0:2",
            "--alpha-exp",
            "-4:-3",
            "--folds",
            "3",
            "--out",
            "g.csv",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("best:"));
    // header plus 3 x 2 cells x 3 folds
    assert_eq!(fs::read_to_string(d.join("g.csv")).unwrap().lines().count(), 1 + 18);

    ok(d, &["train", "--in", "d.csv", "--method", "svm", "--out", "m.json"]);
    ok(
        d,
        &[
            "boundary", "--model", "m.json", "--xrange", "-30:30", "--yrange", "-30:30", "--res", "4", "--out", "b.csv",
        ],
    );
    assert_eq!(fs::read_to_string(d.join("b.csv")).unwrap().lines().count(), 1 + 16);
}

#[test]
fn bench_writes_every_requested_format() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("bench.json"),
        r#"{"sizes":[40],"repeats":2,"distributions":["normal"],"record_timings":false,"outputs":["r.md"]}"#,
    )
    .unwrap();
    ok(d, &["bench", "--config", "bench.json", "--out", "r.csv"]);
    assert_eq!(fs::read_to_string(d.join("r.csv")).unwrap().lines().count(), 3);
    assert!(fs::read_to_string(d.join("r.md")).unwrap().contains("k-SVM error"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        ksvm(d, &["train", "--in", "absent.csv", "--out", "m.json"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        ksvm(d, &["gen", "--n", "3", "--r", "5", "--out", "x.csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(ksvm(d, &["bench", "--out", "r.txt"]).status.code(), Some(2));
    assert!(!d.join("r.txt").exists());
    assert_eq!(ksvm(d, &["frobnicate"]).status.code(), Some(2));

    fs::write(d.join("bad.csv"), "1.0,2.0,1\nnot,a,row\n").unwrap();
    assert_eq!(
        ksvm(d, &["train", "--in", "bad.csv", "--out", "m.json"]).status.code(),
        Some(2)
    );

    generated(d);
    let out = ksvm(
        d,
        &[
            "train", "--in", "d.csv", "--method", "svm", "--tol", "1e-300", "--out", "nc.json",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(d.join("nc.json").exists());
}
