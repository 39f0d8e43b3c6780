//! End-to-end tests that drive the installed binary the way a shell user
//! would: generate clouds, estimate dimensions, run the replicated tables,
//! and check exit codes and artifact formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dimest::{summarize, Method, ReplicateRecord};

fn dimest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimest"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn assert_success(out: &Output) {
    assert!(out.status.success(), "stderr: {}", stderr(out));
}

/// Two points at distance 1 in one ambient dimension.
fn two_point_file(dir: &Path) -> String {
    let path = dir.join("two.csv");
    fs::write(&path, "0.0\n1.0\n").unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_exits_cleanly() {
    let out = dimest(&["--help"]);
    assert_success(&out);
    assert!(stdout(&out).contains("Usage"));
}

#[test]
fn generate_is_deterministic_and_embeds_in_ambient_space() {
    let args = ["--seed", "7", "generate", "--kind", "hypercube", "--d", "3", "--k", "2", "--n", "10"];
    let first = dimest(&args);
    let second = dimest(&args);
    assert_success(&first);
    assert_eq!(first.stdout, second.stdout, "same seed must give the same bytes");
    let text = stdout(&first);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 10);
    for row in rows {
        let fields: Vec<f64> = row.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 3);
        // a k = 2 hypercube sample pads the trailing ambient coordinate
        assert_eq!(fields[2], 0.0);
    }
}

#[test]
fn sphere_requires_codimension_one() {
    let out = dimest(&["generate", "--kind", "sphere", "--d", "4", "--k", "2", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("ambient_dim - 1"), "stderr: {}", stderr(&out));
}

#[test]
fn capacity_of_two_points_at_the_gap_radius_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_point_file(dir.path());
    let out = dimest(&["estimate", &input, "--estimator", "cap", "--r", "0.5"]);
    assert_success(&out);
    let estimates: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(estimates[0]["method"], "cap");
    assert_eq!(estimates[0]["value"], 1.0);
    assert_eq!(estimates[0]["rounded"], 1);
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = dimest(&["estimate", "/no/such/file.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no such input"));
}

#[test]
fn conflicting_scale_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_point_file(dir.path());
    let out = dimest(&["estimate", &input, "--r", "0.5", "--window", "0.01,0.1,5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimation_failure_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_point_file(dir.path());
    // no pair sits within 0.9, so the correlation estimator has no usable scale
    let out = dimest(&["estimate", &input, "--estimator", "cd", "--r", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn pointwise_recovers_a_planar_sample() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("plane.csv");
    let input = input.to_string_lossy().into_owned();
    let gen = dimest(&[
        "--seed", "7", "generate", "--kind", "hypercube", "--d", "3", "--k", "2", "--n", "2500",
        "--out", &input,
    ]);
    assert_success(&gen);
    let out = dimest(&["estimate", &input, "--estimator", "pw"]);
    assert_success(&out);
    let estimates: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let value = estimates[0]["value"].as_f64().unwrap();
    assert!((1.9..=2.5).contains(&value), "pw value {value}");
    assert_eq!(estimates[0]["rounded"], 2);
}

#[test]
fn table_artifacts_are_consistent_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_string_lossy().into_owned();
    let args = [
        "--seed", "11", "--out-dir", &out_dir, "table1", "--dims", "2,3", "--n", "300",
        "--replicates", "3",
    ];
    let run = dimest(&args);
    assert_success(&run);
    for name in ["table1_raw.csv", "table1_aggregate.json", "table1_plot.csv"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
        assert!(stdout(&run).contains(name));
    }

    // one aggregate row per (d, k) pair with k <= d
    let aggregate: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1_aggregate.json")).unwrap())
            .unwrap();
    let rows = aggregate.as_array().unwrap();
    let keys: Vec<(i64, i64)> =
        rows.iter().map(|r| (r["d"].as_i64().unwrap(), r["dim"].as_i64().unwrap())).collect();
    assert_eq!(keys, vec![(2, 2), (3, 2), (3, 3)]);

    // the aggregate statistics must be recomputable from the raw records
    let raw = fs::read_to_string(dir.path().join("table1_raw.csv")).unwrap();
    let mut lines = raw.lines();
    assert_eq!(lines.next(), Some("d,dim,replicate,estimator,value,rounded"));
    let mut records = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        if fields[0] == "3" && fields[1] == "3" {
            records.push(ReplicateRecord {
                replicate: fields[2].parse().unwrap(),
                estimator: fields[3].parse().unwrap(),
                value: fields[4].parse().unwrap(),
                rounded: fields[5].parse().unwrap(),
            });
        }
    }
    let cube33 = &rows[2]["estimators"]["cd"]["summary"];
    let recomputed = summarize(&records, Method::Correlation, 3, 3).unwrap();
    assert_eq!(cube33["mean"].as_f64().unwrap(), recomputed.mean);
    assert_eq!(cube33["std"].as_f64().unwrap(), recomputed.std);
    assert_eq!(
        cube33["proportion_correct"].as_f64().unwrap(),
        recomputed.proportion_correct
    );

    // a second run with the same seed reproduces the data artifacts bytewise
    let dir2 = tempfile::tempdir().unwrap();
    let out_dir2 = dir2.path().to_string_lossy().into_owned();
    let args2 = [
        "--seed", "11", "--out-dir", &out_dir2, "table1", "--dims", "2,3", "--n", "300",
        "--replicates", "3",
    ];
    assert_success(&dimest(&args2));
    for name in ["table1_raw.csv", "table1_plot.csv"] {
        assert_eq!(
            fs::read(dir.path().join(name)).unwrap(),
            fs::read(dir2.path().join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn noise_inflates_the_pointwise_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_string_lossy().into_owned();
    let run = dimest(&[
        "--seed", "5", "--out-dir", &out_dir, "noise", "--sigmas", "0,0.05", "--n", "400",
        "--replicates", "2",
    ]);
    assert_success(&run);
    let plot = fs::read_to_string(dir.path().join("noise_plot.csv")).unwrap();
    let mut by_sigma = std::collections::BTreeMap::new();
    for line in plot.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "pw");
        by_sigma.insert(fields[0].to_string(), fields[2].parse::<f64>().unwrap());
    }
    assert!(by_sigma["0.05"] > by_sigma["0"], "noise rows: {by_sigma:?}");
}

#[test]
fn gap_check_holds_exactly_on_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.csv");
    let rows: String = (0..50).map(|i| format!("{}\n", i as f64 / 49.0)).collect();
    fs::write(&path, rows).unwrap();
    let out = dimest(&["lemma1-check", &path.to_string_lossy(), "--r", "0.3"]);
    assert_success(&out);
    let reports: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(reports[0]["holds"], true);
    // one ambient dimension means interval arithmetic, not Monte Carlo
    assert_eq!(reports[0]["mc_margin"], 0.0);
}

#[test]
fn invariance_check_flags_small_samples() {
    let out = dimest(&["cd-invariance", "--n", "150", "--replicates", "2"]);
    assert_success(&out);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["reliable"], false);
    assert_eq!(report["replicates"], 2);
}

#[test]
fn config_sets_defaults_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dimest.toml");
    fs::write(&cfg, "sample_size = 200\nreplicates = 2\n\n[correlation]\nlo = 0.001\nhi = 0.05\n")
        .unwrap();
    let out_dir = dir.path().to_string_lossy().into_owned();
    let cfg_path = cfg.to_string_lossy().into_owned();

    let run = dimest(&[
        "--seed", "3", "--config", &cfg_path, "--out-dir", &out_dir, "table1", "--dims", "2",
    ]);
    assert_success(&run);
    let aggregate: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1_aggregate.json")).unwrap())
            .unwrap();
    assert_eq!(aggregate[0]["replicates"], 2);
    assert_eq!(aggregate[0]["sample_size"], 200);

    let run = dimest(&[
        "--seed", "3", "--config", &cfg_path, "--out-dir", &out_dir, "table1", "--dims", "2",
        "--replicates", "3",
    ]);
    assert_success(&run);
    let aggregate: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1_aggregate.json")).unwrap())
            .unwrap();
    assert_eq!(aggregate[0]["replicates"], 3, "the flag must beat the config file");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = dimest(&["--config", &cfg.to_string_lossy(), "cd-invariance", "--n", "150"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus"), "stderr: {}", stderr(&out));
}
