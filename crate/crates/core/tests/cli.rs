//! End-to-end checks of the `gbtune` binary: flag parsing, output shape,
//! and the documented exit codes (0 ok, 1 usage, 2 data, 3 runtime).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gbtune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbtune"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn banknote() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/banknote.csv")
}

fn write_tiny_csv(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.csv");
    let mut file = fs::File::create(&path).unwrap();
    writeln!(file, "x,z,y").unwrap();
    for i in 0..48 {
        let y = i % 2;
        writeln!(file, "{},{},{y}", i as f64 + y as f64 * 40.0, i % 7).unwrap();
    }
    path
}

#[test]
fn tune_random_prints_summary_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_csv(dir.path());
    let out = gbtune(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--method",
        "random",
        "--trials",
        "3",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("method: random"), "stdout: {text}");
    assert!(text.contains("trials: 3"));
    assert!(text.contains("best_mean_gini:"));
    assert!(text.contains("best_params: {"));
}

#[test]
fn tune_randomized_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_csv(dir.path());
    let report = dir.path().join("row.csv");
    let out = gbtune(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--method",
        "randomized",
        "--rate",
        "0.5",
        "--trials",
        "4",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("full_data_mean_gini:"));
    let text = fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("dataset,method,rate,mean_gini,time_seconds")
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("tiny,randomized,0.5,"), "row: {row}");
}

#[test]
fn tune_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_csv(dir.path());
    let run = || {
        let out = gbtune(&[
            "tune",
            "--data",
            data.to_str().unwrap(),
            "--target",
            "y",
            "--method",
            "tpe",
            "--trials",
            "5",
            "--seed",
            "11",
        ]);
        assert!(out.status.success());
        stdout_of(&out)
            .lines()
            .find(|l| l.starts_with("best_params:"))
            .unwrap()
            .to_string()
    };
    assert_eq!(run(), run());
}

#[test]
fn sweep_prints_rows_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_csv(dir.path());
    let out = gbtune(&[
        "sweep",
        "--data",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--rates",
        "0.5,1.0",
        "--trials",
        "3",
        "--folds",
        "2",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.starts_with("rate,mean_gini,time_seconds\n"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("0.5,")));
    assert!(text.lines().any(|l| l.starts_with("1,")));
    assert!(text.contains("selected_rate: "));
}

#[test]
fn bench_runs_from_config_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_csv(dir.path());
    let report = dir.path().join("report.csv");
    let config = dir.path().join("bench.json");
    fs::write(
        &config,
        serde_json::json!({
            "datasets": [{"name": "tiny", "path": data, "target": "y"}],
            "methods": ["random", "randomized"],
            "rate": 0.5,
            "budgets": {"random_trials": 3, "smbo_trials": 3},
            "space": {
                "eta": {"dist": "loguniform", "lo": 0.05, "hi": 0.3},
                "n_rounds": {"dist": "quniform", "lo": 10.0, "hi": 20.0, "q": 10.0},
            },
            "seed": 3,
            "output": report,
        })
        .to_string(),
    )
    .unwrap();
    let out = gbtune(&["bench", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 3, "report: {text}");
    assert!(text.lines().nth(1).unwrap().starts_with("tiny,random,,"));
    assert!(
        text.lines().nth(2).unwrap().starts_with("tiny,randomized,0.5,"),
        "report: {text}"
    );
}

#[test]
fn bench_without_output_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_csv(dir.path());
    let config = dir.path().join("bench.json");
    fs::write(
        &config,
        serde_json::json!({
            "datasets": [{"name": "tiny", "path": data, "target": "y"}],
            "methods": ["random"],
            "budgets": {"random_trials": 2},
            "space": {"eta": {"dist": "loguniform", "lo": 0.05, "hi": 0.3}},
            "format": "markdown",
        })
        .to_string(),
    )
    .unwrap();
    let out = gbtune(&["bench", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("| dataset | method | rate | mean_gini | time_seconds |"));
    assert!(text.contains("| tiny | random |"));
}

// --- exit codes -------------------------------------------------------------

#[test]
fn usage_errors_exit_one() {
    // Unknown flag.
    let out = gbtune(&["tune", "--nonsense"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));

    // Missing required --rate for randomized.
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_csv(dir.path());
    let out = gbtune(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--method",
        "randomized",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("--rate"));

    // --rate with a full-data method.
    let out = gbtune(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--method",
        "grid",
        "--rate",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Out-of-range rate reaches the library's range check.
    let out = gbtune(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--method",
        "randomized",
        "--rate",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
}

#[test]
fn data_errors_exit_two() {
    // Nonexistent file.
    let out = gbtune(&[
        "tune",
        "--data",
        "/nonexistent/nope.csv",
        "--target",
        "y",
        "--method",
        "random",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));

    // Missing target column.
    let out = gbtune(&[
        "tune",
        "--data",
        banknote().to_str().unwrap(),
        "--target",
        "no_such_column",
        "--method",
        "random",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("no_such_column"));

    // Unparseable cell.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y\n1.0,0\nnot_a_number,1\n").unwrap();
    let out = gbtune(&[
        "tune",
        "--data",
        bad.to_str().unwrap(),
        "--target",
        "y",
        "--method",
        "random",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));

    // Malformed bench config JSON.
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{not json").unwrap();
    let out = gbtune(&["bench", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["tune", "--help"][..], &["--version"][..]] {
        let out = gbtune(args);
        assert_eq!(out.status.code(), Some(0), "args: {args:?}");
    }
}
