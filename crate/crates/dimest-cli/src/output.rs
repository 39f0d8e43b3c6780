//! Artifact writers for the table and sweep commands. Each command leaves
//! three files in the output directory:
//!
//!   {stem}_raw.csv        per-replicate values, one row per estimate
//!   {stem}_aggregate.json per-row means, deviations, and timings
//!   {stem}_plot.csv       plot-ready curves (x, series = estimator, y = mean)
//!
//! Raw and plot files are byte-identical across reruns of the same command;
//! the aggregate carries wall-clock timings and is not.

use std::fs;
use std::path::{Path, PathBuf};

use dimest::{EstimatorOutcome, ExperimentResult, Method, Result};

/// One labeled experiment inside a multi-row artifact.
pub struct RunRow {
    /// CSV fields prefixed to every row, matching the label header.
    pub label: String,
    /// Extra key/value pairs merged into this row's aggregate object.
    pub extra: serde_json::Value,
    pub result: ExperimentResult,
}

fn requested_methods(result: &ExperimentResult) -> Vec<Method> {
    let mut seen = Vec::new();
    for &m in &result.spec.estimators {
        if !seen.contains(&m) {
            seen.push(m);
        }
    }
    seen
}

/// Writes the three-artifact family for `rows` and reports the paths.
pub fn write_artifacts(
    out_dir: &Path,
    stem: &str,
    label_header: &str,
    rows: &[RunRow],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let raw_path = out_dir.join(format!("{stem}_raw.csv"));
    let mut raw = format!("{label_header},replicate,estimator,value,rounded\n");
    for row in rows {
        for r in &row.result.records {
            raw.push_str(&format!(
                "{},{},{},{},{}\n",
                row.label, r.replicate, r.estimator, r.value, r.rounded
            ));
        }
    }
    fs::write(&raw_path, raw)?;

    let aggregate_path = out_dir.join(format!("{stem}_aggregate.json"));
    let aggregates: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            let mut value = row.result.aggregate_json();
            let obj = value.as_object_mut().expect("aggregate is an object");
            if let Some(extra) = row.extra.as_object() {
                for (k, v) in extra {
                    obj.insert(k.clone(), v.clone());
                }
            }
            value
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&aggregates).expect("serializable aggregates");
    text.push('\n');
    fs::write(&aggregate_path, text)?;

    let plot_path = out_dir.join(format!("{stem}_plot.csv"));
    let mut plot = format!("{label_header},estimator,mean,std,proportion_correct\n");
    for row in rows {
        for method in requested_methods(&row.result) {
            if let Some(EstimatorOutcome::Ok { summary }) = row.result.outcomes.get(&method) {
                plot.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.label, method, summary.mean, summary.std, summary.proportion_correct
                ));
            }
        }
    }
    fs::write(&plot_path, plot)?;

    Ok(vec![raw_path, aggregate_path, plot_path])
}
