use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metrics_ci_core::stats::{normal_approx_ci_from_accuracy, normal_quantile};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_metrics-ci");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
    stdout(&out)
}

fn assert_valid(schema_name: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(schema_name);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}\n{instance}");
}

fn first_json(text: &str) -> Value {
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn ci_prints_json_then_text() {
    let out = ok(&["ci", "--acc", "0.9", "--n", "3925", "--z", "1"]);
    let v = first_json(&out);
    assert_valid("ci.schema.json", &v);
    assert!((v["half_width"].as_f64().unwrap() - 0.0047885).abs() < 1e-6);
    assert!(out
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("accuracy 0.9 ± 0.004788521"));

    let v = first_json(&ok(&["ci", "--acc", "1.0", "--n", "100", "--z", "1.96"]));
    assert_eq!(v["lower"], 1.0);
    assert_eq!(v["upper"], 1.0);
}

#[test]
fn ci_exit_codes() {
    for args in [
        vec!["ci", "--acc", "0.9", "--n", "10"],
        vec![
            "ci",
            "--acc",
            "0.9",
            "--correct",
            "9",
            "--n",
            "10",
            "--z",
            "1",
        ],
        vec![
            "ci", "--acc", "0.9", "--n", "10", "--z", "1", "--level", "0.9",
        ],
        vec!["ci", "--acc", "0.9", "--z", "1"],
        vec!["nonsense"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    for args in [
        vec!["ci", "--acc", "1.5", "--n", "10", "--z", "1"],
        vec!["ci", "--acc", "0.5", "--n", "0", "--z", "1"],
        vec!["ci", "--correct", "11", "--n", "10", "--z", "1"],
        vec!["ci", "--acc", "0.5", "--n", "10", "--level", "1.0"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr(&out).starts_with("metrics-ci: "));
    }
}

#[test]
fn compare_report() {
    let input = fixture("predictions.csv");
    let input = input.to_str().unwrap();
    for args in [
        vec!["compare", "--input", input],
        vec!["compare", "--input", input, "--level", "0.95", "--mcnemar"],
    ] {
        let v = first_json(&ok(&args));
        assert_valid("compare.schema.json", &v);
        let overlap = v["overlap"].as_array().unwrap();
        for (i, row) in overlap.iter().enumerate() {
            assert_eq!(row[i], true);
            for (j, cell) in row.as_array().unwrap().iter().enumerate() {
                assert_eq!(*cell, overlap[j][i]);
            }
        }
    }
    let v = first_json(&ok(&["compare", "--input", input, "--mcnemar"]));
    let result = &v["mcnemar"][0]["result"];
    assert_eq!(
        (result["b"].as_u64(), result["c"].as_u64()),
        (Some(11), Some(6))
    );

    let v = first_json(&ok(&["compare", "--input", input, "--group-by", "seed"]));
    assert_eq!(v["groups"].as_array().unwrap().len(), 2);
    assert!(v.get("mcnemar").is_none());
}

#[test]
fn compare_orders_folds_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        &dir,
        "folds.csv",
        "model,fold,seed,sample_id,label,prediction\nm,10,0,a,x,x\nm,2,0,b,x,x\nm,9,0,c,x,y\n",
    );
    let v = first_json(&ok(&["compare", "--input", &input, "--group-by", "fold"]));
    let labels: Vec<&str> = v["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["2", "9", "10"]);
}

#[test]
fn compare_errors() {
    let input = fixture("predictions.csv");
    let input = input.to_str().unwrap();
    assert_eq!(
        run(&[
            "compare",
            "--input",
            input,
            "--group-by",
            "fold",
            "--mcnemar"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["compare", "--input", input, "--group-by", "epoch"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["compare", "--input", "/nonexistent/predictions.csv"])
            .status
            .code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let one = write(
        &dir,
        "one.csv",
        "model,fold,seed,sample_id,label,prediction\nm,0,0,1,a,a\nm,0,0,2,a,b\n",
    );
    assert_eq!(
        run(&["compare", "--input", &one, "--mcnemar"])
            .status
            .code(),
        Some(2)
    );
    let unpaired = write(
        &dir,
        "unpaired.csv",
        "model,fold,seed,sample_id,label,prediction\na,0,0,s1,x,x\na,0,0,s2,x,x\nb,0,0,s1,x,y\n",
    );
    let out = run(&["compare", "--input", &unpaired, "--mcnemar"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("s2"), "{}", stderr(&out));
}

#[test]
fn augment_columns_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        &dir,
        "estimates.csv",
        "group,accuracy,n\nm,0.9,3925\nperfect,1.0,50\n",
    );
    let out = ok(&["augment", "--input", &input, "--z", "1"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("group,accuracy,n,z1,lo1,hi1"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .skip(1)
        .map(|f| f.parse().unwrap())
        .collect();
    assert!((row[3] - 0.8952115).abs() < 1e-6);
    assert!((row[4] - 0.9047885).abs() < 1e-6);
    assert_eq!(lines.next(), Some("perfect,1,50,1,1,1"));

    let out = ok(&["augment", "--input", &input, "--z", "1", "--z", "1.96"]);
    assert!(out.lines().all(|l| l.split(',').count() == 9));
    assert_eq!(out, ok(&["augment", "--input", &input, "--z", "1,1.96"]));
}

#[test]
fn augment_reread_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let output = dir.path().join("augmented.csv");
    let input = fixture("estimates.csv");
    ok(&[
        "augment",
        "--input",
        input.to_str().unwrap(),
        "--level",
        "0.6826895,0.95",
        "--output",
        output.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&output).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let acc: f64 = f[1].parse().unwrap();
        let n: u64 = f[2].parse().unwrap();
        for cols in [&f[3..6], &f[6..9]] {
            let z: f64 = cols[0].parse().unwrap();
            let ci = normal_approx_ci_from_accuracy(acc, n, z).unwrap();
            assert!((ci.lower - cols[1].parse::<f64>().unwrap()).abs() < 1e-9);
            assert!((ci.upper - cols[2].parse::<f64>().unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn augment_rejects_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let bad_acc = write(&dir, "a.csv", "group,accuracy,n\nm,0.9,3925\nx,1.5,10\n");
    let out = run(&["augment", "--input", &bad_acc, "--z", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    let bad_n = write(&dir, "b.csv", "group,accuracy,n\nm,0.9,0\n");
    let out = run(&["augment", "--input", &bad_n, "--z", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    assert_eq!(
        run(&["augment", "--input", &bad_n, "--z", "1,2,3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn augment_svg_golden() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("chart.svg");
    let input = fixture("estimates.csv");
    let args = [
        "augment",
        "--input",
        input.to_str().unwrap(),
        "--z",
        "1,1.96",
        "--svg",
        svg.to_str().unwrap(),
        "--title",
        "holdout accuracy",
    ];
    ok(&args);
    let first = std::fs::read(&svg).unwrap();
    assert_eq!(
        first,
        std::fs::read(golden("augment_three_series.svg")).unwrap()
    );
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.matches(r#"class="whisker primary""#).count(), 3);
    assert_eq!(text.matches(r#"class="whisker secondary""#).count(), 3);
    ok(&args);
    assert_eq!(std::fs::read(&svg).unwrap(), first);
}

#[test]
fn folds_output() {
    let labels = fixture("labels_small.csv");
    let labels = labels.to_str().unwrap();
    let a = run(&["folds", "--input", labels, "--k", "5", "--seed", "2024"]);
    let b = run(&["folds", "--input", labels, "--k", "5", "--seed", "2024"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        a.stdout,
        std::fs::read(golden("folds_small_k5_seed2024.csv")).unwrap()
    );
    assert!(stderr(&a).contains("warning:") && stderr(&a).contains("fish"));

    let dir = tempfile::tempdir().unwrap();
    let two = write(&dir, "two.csv", "sample_id,label\na,x\nb,x\n");
    let out = ok(&["folds", "--input", &two, "--k", "2"]);
    let mut folds: Vec<&str> = out
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    folds.sort();
    assert_eq!(folds, ["0", "1"]);
    assert_eq!(
        run(&["folds", "--input", &two, "--k", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn dist_bins_and_qq() {
    let dir = tempfile::tempdir().unwrap();
    let ensemble = golden("ensemble_p0.9_n670_f20_s6_tau0.01_seed42.csv");
    let ensemble = ensemble.to_str().unwrap();
    for bins in ["25", "15"] {
        let out = ok(&["dist", "--input", ensemble, "--bins", bins]);
        assert_eq!(out.lines().next(), Some("bin_lo,bin_hi,count"));
        assert_eq!(out.lines().count() - 1, bins.parse::<usize>().unwrap());
        let total: u64 = out
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 120);
    }

    let n = 50;
    let mut csv = String::from("accuracy\n");
    for i in 1..=n {
        let v = 0.9 + 0.01 * normal_quantile((i as f64 - 0.5) / n as f64).unwrap();
        csv.push_str(&format!("{v}\n"));
    }
    let perfect = write(&dir, "perfect.csv", &csv);
    let out = run(&["dist", "--input", &perfect, "--qq"]);
    assert_eq!(out.status.code(), Some(0));
    let summary = stderr(&out);
    let dev: f64 = summary
        .trim()
        .rsplit("max_abs_deviation = ")
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-9, "{summary}");
    let text = stdout(&out);
    let (hist, qq) = text.split_once("\n\n").unwrap();
    assert_eq!(hist.lines().count(), 16);
    assert_eq!(qq.lines().next(), Some("theoretical,sample"));
    assert_eq!(qq.lines().count(), n + 1);

    let short = write(&dir, "short.csv", "accuracy\n0.9\n0.91\n");
    assert_eq!(
        run(&["dist", "--input", &short, "--qq"]).status.code(),
        Some(1)
    );
    let empty = write(&dir, "empty.csv", "accuracy\n");
    assert_eq!(run(&["dist", "--input", &empty]).status.code(), Some(1));
    let no_col = write(&dir, "nocol.csv", "acc\n0.9\n");
    assert_eq!(run(&["dist", "--input", &no_col]).status.code(), Some(1));
}

#[test]
fn simulate_outputs() {
    let v = first_json(&ok(&[
        "simulate", "coverage", "--p", "0.9", "--n", "3925", "--z", "1", "--trials", "100000",
        "--seed", "1",
    ]));
    assert_valid("coverage.schema.json", &v);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["config", "z", "coverage", "nominal", "clamp_events"]);
    let coverage = v["coverage"].as_f64().unwrap();
    assert!((0.66..=0.70).contains(&coverage), "{coverage}");

    let v = first_json(&ok(&[
        "simulate", "coverage", "--trials", "1", "--seed", "3",
    ]));
    assert!(v["coverage"] == 0.0 || v["coverage"] == 1.0);

    let v = first_json(&ok(&[
        "simulate",
        "multiseed",
        "--tau",
        "0.01",
        "--folds",
        "20",
        "--seeds",
        "6",
        "--seed",
        "42",
    ]));
    assert_valid("multiseed.schema.json", &v);
    assert!(v["ratio"].as_f64().unwrap() > 1.0);

    assert_eq!(
        run(&["simulate", "coverage", "--p", "1.5"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["simulate", "multiseed", "--folds", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["simulate", "coverage", "--z", "1", "--level", "0.9"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn multiseed_ensemble_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ensemble.csv");
    ok(&[
        "simulate",
        "multiseed",
        "--tau",
        "0.01",
        "--seeds",
        "6",
        "--seed",
        "42",
        "--ensemble",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(golden("ensemble_p0.9_n670_f20_s6_tau0.01_seed42.csv")).unwrap()
    );
}
