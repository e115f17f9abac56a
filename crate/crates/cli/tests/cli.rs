use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rollinf_core::polymodel::OperatorSet;
use rollinf_core::{DMatrix, Operators, Scheme};

fn rollinf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollinf"))
        .current_dir(dir)
        .args(args)
        .env_remove("ROLLINF_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = rollinf(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &[&str] = &["--grid", "8", "--steps", "30", "--dt", "0.01"];

/// Small swe train/valid/test data, a 4-dimensional basis and reduced training data.
fn pipeline(dir: &Path) {
    fn with<'a>(base: &[&'a str]) -> Vec<&'a str> {
        [base, SMALL].concat()
    }
    ok(dir, &with(&["generate", "--out", "train/d.manifest", "--mu1", "0.25,0.45", "--mu2", "1.2,1.6"]));
    ok(dir, &with(&["generate", "--out", "valid/d.manifest", "--mu1", "0.3", "--mu2", "1.3"]));
    ok(dir, &with(&["generate", "--out", "test/d.manifest", "--mu1", "0.4", "--mu2", "1.5"]));
    ok(dir, &["basis", "--input", "train/d.manifest", "--n", "4", "--out", "basis"]);
    ok(dir, &["project", "--input", "train/d.manifest", "--basis", "basis", "--out", "red/d.manifest"]);
}

fn read(path: PathBuf) -> Vec<u8> {
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn basis_writes_matrix_and_singular_values() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &[&["generate", "--out", "data.manifest"][..], SMALL].concat());
    ok(dir, &["basis", "--input", "data.manifest", "--n", "10", "--out", "basis/"]);
    assert!(dir.join("basis/basis.rom1").is_file());
    let sv = std::fs::read_to_string(dir.join("basis/singular_values.csv")).unwrap();
    // The full spectrum is kept for energy plots.
    let sv: Vec<f64> = sv.lines().map(|l| l.parse().unwrap()).collect();
    assert!(sv.len() >= 10);
    assert!(sv.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn missing_manifest_exits_2_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rollinf(tmp.path(), &["basis", "--input", "nowhere/data.manifest", "--n", "3", "--out", "b"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/data.manifest"));
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(rollinf(tmp.path(), &["basis", "--n", "3"]).status.code(), Some(1));
    assert_eq!(rollinf(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    let out = rollinf(tmp.path(), &["sweep", "--axis", "trajectory-count", "--values", "5", "--out", "s"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(rollinf(tmp.path(), &["--help"]).status.success());
}

#[test]
fn missing_certificate_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let ops = Operators::from_blocks(
        &[DMatrix::from_element(1, 1, 0.0), DMatrix::from_element(1, 1, 1.0)],
        &DMatrix::zeros(1, 0),
    )
    .unwrap();
    OperatorSet {
        params: vec![vec![]],
        operators: vec![ops],
        dt: 0.01,
        scheme: Scheme::ForwardEuler,
    }
    .save(&tmp.path().join("m"))
    .unwrap();
    let out = rollinf(tmp.path(), &["stability", "--models", "m", "--realizations", "3", "--out", "g.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pipeline_runs_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline(dir);
    ok(dir, &["train-static", "--input", "red/d.manifest", "--out", "static"]);
    for out in ["roll_a", "roll_b"] {
        ok(
            dir,
            &[
                "train-rollout", "--train", "red/d.manifest", "--valid", "valid/d.manifest", "--basis", "basis", "--out", out,
                "--iters", "5", "--roll-length", "5", "--lrs", "1e-4,1e-3", "--init", "static", "--train-seed", "3",
            ],
        );
    }
    for f in ["losses.csv", "models.txt", "model_e0_A1.rom1", "model_e3_A2.rom1"] {
        assert_eq!(read(dir.join("roll_a").join(f)), read(dir.join("roll_b").join(f)), "{f}");
    }
    let summary = std::fs::read_to_string(dir.join("roll_a/summary.txt")).unwrap();
    assert!(summary.contains("seed = 3"));

    ok(
        dir,
        &["evaluate", "--truth", "test/d.manifest", "--basis", "basis", "--model", "rollout=roll_a", "--model", "static=static", "--out", "eval.csv"],
    );
    let table = std::fs::read_to_string(dir.join("eval.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("entry,rollout,static,projection"));
    let mean: Vec<f64> = table.lines().last().unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(mean.len(), 3);
    assert!(mean.iter().all(|e| e.is_finite() && *e >= 0.0));
    assert!(mean[0] >= mean[2] && mean[1] >= mean[2], "model errors are bounded below by projection: {mean:?}");

    ok(dir, &["simulate", "--models", "roll_a", "--initial", "test/d.manifest", "--basis", "basis", "--out", "sim/d.manifest"]);
    assert!(dir.join("sim/d.manifest").is_file());

    for out in ["g1.csv", "g2.csv"] {
        ok(dir, &["stability", "--models", "static", "--param", "0.4,1.5", "--realizations", "20", "--seed", "5", "--out", out]);
    }
    assert_eq!(read(dir.join("g1.csv")), read(dir.join("g2.csv")));
}

#[test]
fn quadratic_generation_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for out in ["a/q.manifest", "b/q.manifest"] {
        ok(dir, &["generate", "--system", "quadratic", "--n", "3", "--trajectories", "2", "--steps", "20", "--seed", "4", "--out", out]);
    }
    assert_eq!(read(dir.join("a/q_e1_states.rom1")), read(dir.join("b/q_e1_states.rom1")));
    assert!(dir.join("a/q_truth.manifest").is_file());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline(dir);
    std::fs::write(dir.join("run.cfg"), "[train]\nlearning_rates = 1e-4\nmax_iters = 2\n[roll]\nlength = 3\n").unwrap();
    let common = ["train-rollout", "--config", "run.cfg", "--train", "red/d.manifest", "--valid", "valid/d.manifest", "--basis", "basis"];
    ok(dir, &[&common[..], &["--out", "from_file"]].concat());
    ok(dir, &[&common[..], &["--out", "from_flag", "--lrs", "1e-3"]].concat());
    let file = std::fs::read_to_string(dir.join("from_file/summary.txt")).unwrap();
    let flag = std::fs::read_to_string(dir.join("from_flag/summary.txt")).unwrap();
    assert!(file.contains("selected_learning_rate = 0.0001"), "{file}");
    assert!(flag.contains("selected_learning_rate = 0.001"), "{flag}");
    // Two iterations plus the final objective.
    assert_eq!(std::fs::read_to_string(dir.join("from_file/losses.csv")).unwrap().lines().count(), 3);
}

#[test]
fn sweep_emits_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = Command::new(env!("CARGO_BIN_EXE_rollinf"))
        .current_dir(dir)
        .args([
            "sweep", "--axis", "roll-length", "--values", "1,10,50,100", "--grid", "8", "--steps", "100", "--dt", "0.005",
            "--basis-dim", "4", "--iters", "2", "--lrs", "1e-4", "--out", "sw", "--jobs", "4",
        ])
        .env("ROLLINF_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sw/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,rollout_error,static_error,projection_error");
    assert_eq!(lines.len(), 5);
    for (line, x) in lines[1..].iter().zip(["1", "10", "50", "100"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], x);
        assert!(cols[1..].iter().all(|v| v.parse::<f64>().unwrap() >= 0.0));
    }
    // Static and projection columns do not depend on the roll-out length.
    let col = |i: usize| lines[1..].iter().map(|l| l.split(',').nth(i).unwrap().to_string()).collect::<Vec<_>>();
    assert!(col(2).windows(2).all(|w| w[0] == w[1]));
    assert!(col(3).windows(2).all(|w| w[0] == w[1]));
    for i in 0..4 {
        assert!(dir.join(format!("sw/point_{i}.csv")).is_file());
    }
}

#[test]
fn bad_thread_cap_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rollinf"))
        .current_dir(tmp.path())
        .args(["sweep", "--axis", "noise", "--values", "1", "--out", "s"])
        .env("ROLLINF_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
