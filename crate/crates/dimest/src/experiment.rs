//! Replicated estimation runs: a generator, a noise level, and an estimator
//! set, repeated over seeded replicates and aggregated into tables.
//!
//! Replicate seeds are derived from (master seed, replicate, stage), so a
//! sweep that varies only the noise level reuses the identical base clouds,
//! and results never depend on scheduling or thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::estimators::{
    box_counting_dimension, capacity_dimension, capacity_dimension_two_scale,
    correlation_dimension, pointwise_dimension, DimensionEstimate, Method,
};
use crate::generators::{add_noise, GeneratorKind, GeneratorSpec, NoiseSpec};
use crate::parallel;
use crate::schedule::{QuantileWindow, ScaleSchedule};
use crate::seeding::{derive_seed, STAGE_NOISE, STAGE_SAMPLE, STAGE_VARIANT, STAGE_VOLUME};
use crate::volume::{fit_volume_polynomial, polynomial_volume_dimension, volume_dimension};

/// Schedule override for one estimator inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    /// Data-driven grid between pairwise distance quantiles.
    Window { lo: f64, hi: f64, scales: usize },
    /// Fixed geometric grid.
    Geometric { r_min: f64, r_max: f64, scales: usize },
    /// Fixed radii, strictly decreasing.
    Explicit { radii: Vec<f64> },
}

impl ScheduleSpec {
    pub fn build(&self, cloud: &PointCloud) -> Result<ScaleSchedule> {
        match self {
            ScheduleSpec::Window { lo, hi, scales } => {
                ScaleSchedule::data_driven(cloud, QuantileWindow::new(*lo, *hi, *scales))
            }
            ScheduleSpec::Geometric { r_min, r_max, scales } => {
                ScaleSchedule::geometric(*r_min, *r_max, *scales)
            }
            ScheduleSpec::Explicit { radii } => ScaleSchedule::explicit(radii.clone()),
        }
    }
}

/// Default Monte Carlo budget for the volume-backed estimators.
pub const DEFAULT_MC_BUDGET: u64 = 200_000;

/// One replicated run: which data, how much of it, and which estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub generator: GeneratorSpec,
    pub noise: NoiseSpec,
    pub sample_size: usize,
    pub replicates: usize,
    pub estimators: Vec<Method>,
    pub master_seed: u64,
    /// Per-estimator schedule overrides; estimators not listed use their
    /// default data-driven window.
    #[serde(default)]
    pub schedule_overrides: BTreeMap<Method, ScheduleSpec>,
    pub mc_budget: u64,
    /// Quantile of per-point values the global pointwise estimator reports.
    pub quantile: f64,
}

impl ExperimentSpec {
    pub fn new(
        generator: GeneratorSpec,
        sample_size: usize,
        replicates: usize,
        estimators: Vec<Method>,
        master_seed: u64,
    ) -> Self {
        ExperimentSpec {
            generator,
            noise: NoiseSpec::none(),
            sample_size,
            replicates,
            estimators,
            master_seed,
            schedule_overrides: BTreeMap::new(),
            mc_budget: DEFAULT_MC_BUDGET,
            quantile: crate::estimators::POINTWISE_QUANTILE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.noise.validate()?;
        if self.sample_size < 2 {
            return Err(Error::invalid("experiments need a sample size of at least 2"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("experiments need at least one replicate"));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("the estimator set must not be empty"));
        }
        if !self.quantile.is_finite() || self.quantile <= 0.0 || self.quantile > 1.0 {
            return Err(Error::invalid(format!(
                "quantile must lie in (0, 1], got {}",
                self.quantile
            )));
        }
        Ok(())
    }

    fn methods(&self) -> Vec<Method> {
        let mut seen = Vec::new();
        for &m in &self.estimators {
            if !seen.contains(&m) {
                seen.push(m);
            }
        }
        seen
    }
}

/// One successful estimate inside a replicated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    /// 1-based replicate index.
    pub replicate: usize,
    pub estimator: Method,
    pub value: f64,
    pub rounded: i64,
}

/// One failed estimate inside a replicated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub estimator: Method,
    pub reason: String,
}

/// Aggregate statistics of the successful replicates of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub mean: f64,
    /// Sample standard deviation; zero with fewer than two values.
    pub std: f64,
    /// Fraction of successful replicates whose rounded value hit the
    /// generator's intrinsic dimension.
    pub proportion_correct: f64,
    pub completed: usize,
    pub failed: usize,
}

/// Per-estimator outcome: a summary, or a failure when more than 20% of
/// replicates failed for that estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EstimatorOutcome {
    Ok { summary: EstimatorSummary },
    Failed { reason: String, completed: usize, failed: usize },
}

/// Everything a replicated run produced. `timings` is wall-clock and is the
/// only field exempt from determinism guarantees.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<ReplicateFailure>,
    pub outcomes: BTreeMap<Method, EstimatorOutcome>,
    /// Total seconds spent inside each estimator across replicates.
    pub timings: BTreeMap<Method, f64>,
}

/// Statistics of `records` for one estimator, or `None` without any.
pub fn summarize(
    records: &[ReplicateRecord],
    method: Method,
    true_dim: i64,
    replicates: usize,
) -> Option<EstimatorSummary> {
    let values: Vec<(f64, i64)> = records
        .iter()
        .filter(|r| r.estimator == method)
        .map(|r| (r.value, r.rounded))
        .collect();
    if values.is_empty() {
        return None;
    }
    let completed = values.len();
    let n = completed as f64;
    let mean = values.iter().map(|(v, _)| *v).sum::<f64>() / n;
    let std = if completed > 1 {
        (values.iter().map(|(v, _)| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let hits = values.iter().filter(|(_, r)| *r == true_dim).count();
    Some(EstimatorSummary {
        mean,
        std,
        proportion_correct: hits as f64 / n,
        completed,
        failed: replicates - completed,
    })
}

impl ExperimentResult {
    pub fn summary(&self, method: Method) -> Option<&EstimatorSummary> {
        match self.outcomes.get(&method) {
            Some(EstimatorOutcome::Ok { summary }) => Some(summary),
            _ => None,
        }
    }

    /// Equality of everything except wall-clock timings.
    pub fn deterministic_eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.records == other.records
            && self.failures == other.failures
            && self.outcomes == other.outcomes
    }

    /// Raw per-replicate values as CSV: `replicate,estimator,value,rounded`.
    /// Byte-identical across reruns of the same spec.
    pub fn write_raw_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "replicate,estimator,value,rounded")?;
        for r in &self.records {
            writeln!(writer, "{},{},{},{}", r.replicate, r.estimator, r.value, r.rounded)?;
        }
        Ok(())
    }

    pub fn raw_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_raw_csv(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    /// Aggregate view: the spec, per-estimator outcomes, and timings.
    pub fn aggregate_json(&self) -> serde_json::Value {
        serde_json::json!({
            "generator": self.spec.generator,
            "sigma": self.spec.noise.sigma,
            "sample_size": self.spec.sample_size,
            "replicates": self.spec.replicates,
            "master_seed": self.spec.master_seed,
            "estimators": self.outcomes,
            "timings_seconds": self.timings,
        })
    }
}

/// Runs one estimator on an existing cloud.
///
/// Without a schedule the estimator's default data-driven window is used.
/// `quantile` only affects the pointwise estimator; `mc_budget` and
/// `mc_seed` only the volume-backed ones.
pub fn estimate_on_cloud(
    cloud: &PointCloud,
    method: Method,
    schedule: Option<&ScheduleSpec>,
    quantile: f64,
    mc_budget: u64,
    mc_seed: u64,
) -> Result<DimensionEstimate> {
    let build = || -> Result<ScaleSchedule> {
        match schedule {
            Some(s) => s.build(cloud),
            None => ScaleSchedule::data_driven(cloud, method.default_window()),
        }
    };
    // the ratio-form estimators are only defined below unit radius, so they
    // use the sub-unit part of the schedule, mirroring how the correlation
    // estimator drops radii without pairs
    let sub_unit = |schedule: &ScaleSchedule| -> Result<Vec<f64>> {
        let usable: Vec<f64> = schedule.radii().iter().copied().filter(|&r| r < 1.0).collect();
        if usable.is_empty() {
            return Err(Error::estimation(
                "every scheduled radius is at or above 1; ratio estimators need \
                 radii in (0, 1), so rescale the data or pass explicit radii",
            ));
        }
        Ok(usable)
    };
    match method {
        Method::BoxCounting => box_counting_dimension(cloud, &build()?),
        Method::Capacity => {
            let radii = sub_unit(&build()?)?;
            if radii.len() == 1 {
                capacity_dimension(cloud, radii[0])
            } else {
                capacity_dimension_two_scale(cloud, radii[0], *radii.last().unwrap())
            }
        }
        Method::Correlation => correlation_dimension(cloud, &build()?),
        Method::Pointwise => pointwise_dimension(cloud, &build()?, quantile),
        Method::Volume => {
            let radii = sub_unit(&build()?)?;
            let r = (radii[0] * radii.last().unwrap()).sqrt();
            volume_dimension(cloud, r, mc_budget, mc_seed)
        }
        Method::PolyVolume => {
            let diameter = cloud.diameter();
            let (fit_radius, r0) = if diameter > 0.0 {
                let fit_radius = 0.1 * diameter;
                (fit_radius, (0.01 * diameter).min(0.99 * fit_radius).min(0.99))
            } else {
                (0.5, 0.01)
            };
            let grid = (cloud.ambient_dim() + 2).max(40);
            let poly = fit_volume_polynomial(cloud, fit_radius, grid, mc_budget, mc_seed)?;
            polynomial_volume_dimension(&poly, r0)
        }
    }
}

fn run_estimator(
    cloud: &PointCloud,
    method: Method,
    spec: &ExperimentSpec,
    mc_seed: u64,
) -> Result<DimensionEstimate> {
    estimate_on_cloud(
        cloud,
        method,
        spec.schedule_overrides.get(&method),
        spec.quantile,
        spec.mc_budget,
        mc_seed,
    )
}

type ReplicateRow = (Method, std::result::Result<(f64, i64), String>, f64);

fn run_replicate(spec: &ExperimentSpec, methods: &[Method], replicate: u64) -> Vec<ReplicateRow> {
    let gen_seed = derive_seed(spec.master_seed, replicate, STAGE_SAMPLE);
    let noise_seed = derive_seed(spec.master_seed, replicate, STAGE_NOISE);
    let mc_seed = derive_seed(spec.master_seed, replicate, STAGE_VOLUME);
    let generator = GeneratorSpec { seed: gen_seed, ..spec.generator };
    let cloud = match generator
        .sample(spec.sample_size)
        .and_then(|c| add_noise(&c, &spec.noise, noise_seed))
    {
        Ok(c) => c,
        Err(e) => {
            // spec was validated upfront, so this is unreachable in practice
            let reason = e.to_string();
            return methods
                .iter()
                .map(|&m| (m, Err(reason.clone()), 0.0))
                .collect();
        }
    };
    methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let outcome = run_estimator(&cloud, m, spec, mc_seed)
                .map(|est| (est.value, est.rounded))
                .map_err(|e| e.to_string());
            (m, outcome, start.elapsed().as_secs_f64())
        })
        .collect()
}

/// Runs all replicates of `spec` and aggregates per-estimator outcomes.
///
/// Individual replicate failures are tolerated up to 20% per estimator and
/// recorded; beyond that the estimator's outcome is `Failed`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let methods = spec.methods();
    let replicate_rows: Vec<Vec<ReplicateRow>> =
        parallel::map_indices(spec.replicates, |b0| {
            run_replicate(spec, &methods, b0 as u64 + 1)
        });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut timings: BTreeMap<Method, f64> = BTreeMap::new();
    for (b0, rows) in replicate_rows.into_iter().enumerate() {
        let replicate = b0 + 1;
        for (method, outcome, seconds) in rows {
            *timings.entry(method).or_insert(0.0) += seconds;
            match outcome {
                Ok((value, rounded)) => records.push(ReplicateRecord {
                    replicate,
                    estimator: method,
                    value,
                    rounded,
                }),
                Err(reason) => failures.push(ReplicateFailure {
                    replicate,
                    estimator: method,
                    reason,
                }),
            }
        }
    }
    let true_dim = spec.generator.intrinsic_dim as i64;
    let mut outcomes = BTreeMap::new();
    for &method in &methods {
        let failed = failures.iter().filter(|f| f.estimator == method).count();
        let summary = summarize(&records, method, true_dim, spec.replicates);
        let outcome = if failed * 5 > spec.replicates || summary.is_none() {
            let reason = failures
                .iter()
                .find(|f| f.estimator == method)
                .map(|f| f.reason.clone())
                .unwrap_or_else(|| "no replicates completed".to_string());
            EstimatorOutcome::Failed {
                reason,
                completed: spec.replicates - failed,
                failed,
            }
        } else {
            EstimatorOutcome::Ok { summary: summary.unwrap() }
        };
        outcomes.insert(method, outcome);
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        records,
        failures,
        outcomes,
        timings,
    })
}

/// Reruns `base` at each noise level, sharing the master seed so every
/// level sees the identical base clouds.
pub fn noise_sweep(base: &ExperimentSpec, sigmas: &[f64]) -> Result<Vec<ExperimentResult>> {
    if sigmas.is_empty() {
        return Err(Error::invalid("noise sweep needs at least one sigma"));
    }
    sigmas
        .iter()
        .map(|&sigma| {
            let spec = ExperimentSpec {
                noise: NoiseSpec { sigma },
                ..base.clone()
            };
            run_experiment(&spec)
        })
        .collect()
}

/// Outcome of comparing the correlation estimate on two absolutely
/// continuous distributions with the same support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub sample_size: usize,
    pub replicates: usize,
    /// Replicates of the uniform square whose estimate rounded to 2.
    pub uniform_hits: usize,
    /// Same for the square with per-coordinate density 2x.
    pub triangular_hits: usize,
    pub uniform_rate: f64,
    pub triangular_rate: f64,
    /// Both rates at or above 0.9.
    pub passes: bool,
    /// Small samples cannot support the check; below 500 points this is
    /// false and the report is advisory only.
    pub reliable: bool,
}

/// Checks that the rounded correlation estimate does not distinguish the
/// uniform unit square from a reweighted one (density `2x` per coordinate):
/// both should round to 2 in at least 90% of replicates.
pub fn cd_invariance_check(
    sample_size: usize,
    replicates: usize,
    master_seed: u64,
) -> Result<InvarianceReport> {
    use rand::{Rng, SeedableRng};
    if sample_size < 2 {
        return Err(Error::invalid("invariance check needs at least two points"));
    }
    if replicates == 0 {
        return Err(Error::invalid("invariance check needs at least one replicate"));
    }
    let rounds = |cloud: &PointCloud| -> bool {
        ScaleSchedule::data_driven(cloud, Method::Correlation.default_window())
            .and_then(|s| correlation_dimension(cloud, &s))
            .map(|est| est.rounded == 2)
            .unwrap_or(false)
    };
    let hits: Vec<(bool, bool)> = parallel::map_indices(replicates, |b0| {
        let b = b0 as u64 + 1;
        let uniform_spec = GeneratorSpec::new(
            GeneratorKind::Hypercube,
            2,
            2,
            derive_seed(master_seed, b, STAGE_SAMPLE),
        );
        let uniform = uniform_spec.sample(sample_size).expect("valid spec");
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(master_seed, b, STAGE_VARIANT));
        let coords: Vec<f64> = (0..sample_size * 2)
            .map(|_| rng.random::<f64>().sqrt())
            .collect();
        let triangular = PointCloud::from_flat(coords, 2).expect("finite coords");
        (rounds(&uniform), rounds(&triangular))
    });
    let uniform_hits = hits.iter().filter(|(u, _)| *u).count();
    let triangular_hits = hits.iter().filter(|(_, t)| *t).count();
    let uniform_rate = uniform_hits as f64 / replicates as f64;
    let triangular_rate = triangular_hits as f64 / replicates as f64;
    Ok(InvarianceReport {
        sample_size,
        replicates,
        uniform_hits,
        triangular_hits,
        uniform_rate,
        triangular_rate,
        passes: uniform_rate >= 0.9 && triangular_rate >= 0.9,
        reliable: sample_size >= 500,
    })
}
