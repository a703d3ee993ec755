use std::path::Path;
use std::process::{Command, Output};

fn stl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn eval_and_grad_print_values() {
    let out = stl(&["eval", "--kind", "stl", "--x", "-5"]);
    assert_eq!(code(&out), 0);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v + 2.609_437_912_434_1).abs() < 1e-12);

    let out = stl(&["grad", "--x", "3", "--alpha", "0.5"]);
    let g: f64 = stdout(&out).trim().parse().unwrap();
    assert!((g - 0.5 / 3.0).abs() < 1e-15);

    let out = stl(&["eval", "--kind", "softmax", "--x", "1,2,3"]);
    let p: Vec<f64> = stdout(&out)
        .trim()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(p.len(), 3);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&stl(&[])), 2);
    assert_eq!(code(&stl(&["eval", "--kind", "bogus", "--x", "1"])), 2);
    assert_eq!(code(&stl(&["fastlog-audit", "--mode", "cubic"])), 2);
    assert_eq!(code(&stl(&["train", "--dataset", "idx"])), 2);
}

#[test]
fn domain_errors_exit_1() {
    for args in [
        &["eval", "--x", "1", "--alpha", "-1"][..],
        &["eval", "--x", "abc"],
        &["grad", "--kind", "softmax", "--x", "1"],
        &["fastlog-audit", "--mode", "lut", "--lut-size", "100"],
        &["bench", "--repeats", "2"],
        &[
            "train",
            "--dataset",
            "idx",
            "--images",
            "/nonexistent/a",
            "--labels",
            "/nonexistent/b",
        ],
    ] {
        let out = stl(args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn props_table_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("props.csv");
    let out = stl(&[
        "props",
        "--kinds",
        "stl,relu,softmax",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let names: Vec<&str> = rows.iter().map(|r| &r[col("activation")]).collect();
    assert_eq!(names, ["relu", "softmax", "stl"]);
    let stl_row = &rows[2];
    assert_eq!(&stl_row[col("odd")], "pass");
    assert_eq!(&stl_row[col("range")], "unbounded");
}

#[test]
fn audit_reports_the_polynomial_bound() {
    let out = stl(&["fastlog-audit", "--grid-size", "10000"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let max = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(max > 0.0049 && max <= 0.006);
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_abs_err"));
}

#[test]
fn bench_writes_metadata_and_rows() {
    let out = stl(&["bench", "--n", "2000", "--repeats", "5", "--range", "both"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("# seed=7")));
    assert_eq!(
        text.lines().filter(|l| l.starts_with("# range=")).count(),
        2
    );
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 18);
    assert!(text.contains("wide:stl-fast-poly") && text.contains("mixed:relu-grad"));
}

fn assert_history(path: &Path, expect_rows: usize) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        headers,
        ["activation", "seed", "epoch", "loss", "test_accuracy"]
    );
    assert_eq!(reader.records().count(), expect_rows);
}

#[test]
fn train_and_compare_on_synthetic_digits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = stl(&["synth-idx", "--dir", d.to_str().unwrap(), "--n", "200"]);
    assert_eq!(code(&out), 0);
    let images = d.join("images.idx3-ubyte");
    let labels = d.join("labels.idx1-ubyte");

    let history = d.join("train.csv");
    let out = stl(&[
        "train",
        "--dataset",
        "idx",
        "--images",
        images.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--epochs",
        "3",
        "--hidden",
        "8",
        "--output",
        history.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_history(&history, 3);

    let table = d.join("compare.csv");
    let runs = d.join("runs.csv");
    let out = stl(&[
        "compare",
        "--epochs",
        "2",
        "--activations",
        "relu,stl",
        "--seeds",
        "0,1",
        "--history",
        runs.to_str().unwrap(),
        "--output",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_history(&runs, 2 * 2 * 2);
    let mut reader = csv::Reader::from_path(&table).unwrap();
    assert_eq!(reader.records().count(), 2);
}
