//! Command-line front end: generate synthetic clouds, run single
//! estimates, and reproduce the replicated benchmark tables and sweeps.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when an
//! estimator fails on valid input.

mod config;
mod output;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use config::Config;
use dimest::seeding::{derive_seed, STAGE_NOISE};
use dimest::{
    add_noise, capacity_volume_gap, cd_invariance_check, estimate_on_cloud, noise_sweep,
    run_experiment, Error, ExperimentSpec, GeneratorKind, GeneratorSpec, Method, NoiseSpec,
    PointCloud, Result, ScheduleSpec, DEFAULT_MC_BUDGET, POINTWISE_QUANTILE,
};
use output::RunRow;

#[derive(Parser)]
#[command(name = "dimest", version, about = "Intrinsic dimension estimation toolkit")]
struct Cli {
    /// Master seed for all randomized work.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads (parallel builds only; defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory where table and sweep artifacts are written.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// TOML file overriding estimator windows and run sizes.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic point cloud and write it as CSV.
    Generate {
        /// Ground-truth set: hypercube, sphere, affine, swiss_roll, helix.
        #[arg(long)]
        kind: String,
        /// Ambient dimension.
        #[arg(long)]
        d: usize,
        /// Intrinsic dimension.
        #[arg(long)]
        k: usize,
        /// Number of points.
        #[arg(long)]
        n: usize,
        /// Additive Gaussian noise level.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate intrinsic dimension from a point cloud CSV.
    Estimate {
        /// Input CSV, one point per row.
        input: PathBuf,
        /// Comma-separated estimators: bc, cap, cd, pw, vol, polyvol.
        #[arg(long, default_value = "cd,pw")]
        estimator: String,
        /// Explicit radii, comma-separated.
        #[arg(long, conflicts_with_all = ["window", "geometric"])]
        r: Option<String>,
        /// Pairwise distance quantile window as lo,hi,scales.
        #[arg(long, conflicts_with = "geometric")]
        window: Option<String>,
        /// Geometric radius grid as r_min,r_max,scales.
        #[arg(long)]
        geometric: Option<String>,
        /// Quantile reported by the pointwise estimator.
        #[arg(long)]
        quantile: Option<f64>,
        /// Monte Carlo draws for the volume estimators.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Replicated hypercube table: every intrinsic dimension 2..=d per
    /// ambient dimension.
    Table1 {
        /// Comma-separated ambient dimensions.
        #[arg(long, default_value = "2,3,5")]
        dims: String,
        /// Points per replicate.
        #[arg(long)]
        n: Option<usize>,
        /// Replicates per row.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Replicated manifold benchmark subset.
    Table2 {
        /// Comma-separated manifold ids: m1, m2, m5, m7, m9.
        #[arg(long, default_value = "m1,m2,m5,m7,m9")]
        manifolds: String,
        /// Points per replicate.
        #[arg(long)]
        n: Option<usize>,
        /// Replicates per manifold.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Noise sweep on a fixed generator.
    Noise {
        /// Comma-separated noise levels.
        #[arg(long, default_value = "0,0.005,0.05")]
        sigmas: String,
        /// Ground-truth set: hypercube, sphere, affine, swiss_roll, helix.
        #[arg(long, default_value = "hypercube")]
        kind: String,
        /// Ambient dimension.
        #[arg(long, default_value_t = 5)]
        d: usize,
        /// Intrinsic dimension.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Points per replicate.
        #[arg(long)]
        n: Option<usize>,
        /// Replicates per noise level.
        #[arg(long)]
        replicates: Option<usize>,
        /// Comma-separated estimators.
        #[arg(long, default_value = "pw")]
        estimator: String,
    },
    /// Check the packing/volume gap bound on a point cloud CSV.
    #[command(name = "lemma1-check")]
    Lemma1Check {
        /// Input CSV, one point per row.
        input: PathBuf,
        /// Comma-separated radii in (0, 1).
        #[arg(long, default_value = "0.1,0.3,0.7")]
        r: String,
        /// Monte Carlo draws for the volume side.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Compare rounded correlation estimates between a uniform square and
    /// a reweighted one with the same support.
    CdInvariance {
        /// Points per replicate.
        #[arg(long, default_value_t = 2500)]
        n: usize,
        /// Replicate pairs.
        #[arg(long, default_value_t = 10)]
        replicates: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::Estimation(_) => 2,
            _ => 1,
        });
    }
}

fn parse_kind(name: &str) -> Result<GeneratorKind> {
    GeneratorKind::from_str(name)
}

fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for part in list.split(',').filter(|p| !p.is_empty()) {
        let m = Method::from_str(part.trim())?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Error::InvalidInput("no estimators requested".to_string()));
    }
    Ok(methods)
}

fn parse_numbers<T: FromStr>(list: &str, what: &str) -> Result<Vec<T>> {
    let mut values = Vec::new();
    for part in list.split(',').filter(|p| !p.is_empty()) {
        values.push(
            part.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidInput(format!("bad {what} value: {part}")))?,
        );
    }
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("empty {what} list")));
    }
    Ok(values)
}

/// Builds a schedule from at most one of the three schedule flags.
fn parse_schedule(
    r: Option<&str>,
    window: Option<&str>,
    geometric: Option<&str>,
) -> Result<Option<ScheduleSpec>> {
    if let Some(list) = r {
        let mut radii: Vec<f64> = parse_numbers(list, "radius")?;
        radii.sort_by(|a, b| b.total_cmp(a));
        radii.dedup();
        return Ok(Some(ScheduleSpec::Explicit { radii }));
    }
    if let Some(text) = window {
        let parts: Vec<f64> = parse_numbers(text, "window")?;
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "window needs lo,hi,scales; got {text}"
            )));
        }
        return Ok(Some(ScheduleSpec::Window {
            lo: parts[0],
            hi: parts[1],
            scales: parts[2] as usize,
        }));
    }
    if let Some(text) = geometric {
        let parts: Vec<f64> = parse_numbers(text, "geometric grid")?;
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "geometric grid needs r_min,r_max,scales; got {text}"
            )));
        }
        return Ok(Some(ScheduleSpec::Geometric {
            r_min: parts[0],
            r_max: parts[1],
            scales: parts[2] as usize,
        }));
    }
    Ok(None)
}

fn load_cloud(path: &PathBuf) -> Result<PointCloud> {
    if !path.is_file() {
        return Err(Error::InvalidInput(format!(
            "no such input: {}",
            path.display()
        )));
    }
    PointCloud::load_csv(path)
}

/// Experiment spec with config defaults and flag overrides applied.
fn experiment_spec(
    generator: GeneratorSpec,
    n: usize,
    replicates: usize,
    estimators: Vec<Method>,
    seed: u64,
    config: &Config,
) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(generator, n, replicates, estimators, seed);
    for method in spec.estimators.clone() {
        if let Some(schedule) = config.schedule_override(method) {
            spec.schedule_overrides.insert(method, schedule);
        }
    }
    if let Some(q) = config.quantile() {
        spec.quantile = q;
    }
    if let Some(budget) = config.mc_budget {
        spec.mc_budget = budget;
    }
    spec
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        dimest::configure_threads(threads)?;
    }
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Generate { kind, d, k, n, sigma, out } => {
            let spec = GeneratorSpec::new(parse_kind(&kind)?, d, k, cli.seed);
            let mut cloud = spec.sample(n)?;
            if sigma != 0.0 {
                let noise_seed = derive_seed(cli.seed, 1, STAGE_NOISE);
                cloud = add_noise(&cloud, &NoiseSpec { sigma }, noise_seed)?;
            }
            match out {
                Some(path) => cloud.save_csv(path)?,
                None => cloud.write_csv(std::io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Estimate { input, estimator, r, window, geometric, quantile, samples } => {
            let cloud = load_cloud(&input)?;
            let methods = parse_methods(&estimator)?;
            let flag_schedule = parse_schedule(r.as_deref(), window.as_deref(), geometric.as_deref())?;
            let quantile = quantile
                .or_else(|| config.quantile())
                .unwrap_or(POINTWISE_QUANTILE);
            let budget = samples.or(config.mc_budget).unwrap_or(DEFAULT_MC_BUDGET);
            let mut estimates = Vec::new();
            for method in methods {
                let schedule = flag_schedule
                    .clone()
                    .or_else(|| config.schedule_override(method));
                estimates.push(estimate_on_cloud(
                    &cloud,
                    method,
                    schedule.as_ref(),
                    quantile,
                    budget,
                    cli.seed,
                )?);
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&estimates).expect("serializable estimates")
            );
            Ok(())
        }
        Command::Table1 { dims, n, replicates } => {
            let dims: Vec<usize> = parse_numbers(&dims, "dimension")?;
            for &d in &dims {
                if d < 2 {
                    return Err(Error::InvalidInput(
                        "hypercube tables need ambient dimension at least 2".to_string(),
                    ));
                }
            }
            let n = n.or(config.sample_size).unwrap_or(2500);
            let replicates = replicates.or(config.replicates).unwrap_or(20);
            let estimators = vec![
                Method::BoxCounting,
                Method::Capacity,
                Method::Correlation,
                Method::Pointwise,
            ];
            let mut rows = Vec::new();
            for &d in &dims {
                for k in 2..=d {
                    let generator = GeneratorSpec::new(GeneratorKind::Hypercube, d, k, 0);
                    let spec = experiment_spec(
                        generator,
                        n,
                        replicates,
                        estimators.clone(),
                        cli.seed,
                        &config,
                    );
                    rows.push(RunRow {
                        label: format!("{d},{k}"),
                        extra: serde_json::json!({ "d": d, "dim": k }),
                        result: run_experiment(&spec)?,
                    });
                }
            }
            report_artifacts(output::write_artifacts(&cli.out_dir, "table1", "d,dim", &rows)?)
        }
        Command::Table2 { manifolds, n, replicates } => {
            let ids: Vec<String> = manifolds
                .split(',')
                .filter(|p| !p.is_empty())
                .map(|p| p.trim().to_lowercase())
                .collect();
            if ids.is_empty() {
                return Err(Error::InvalidInput("empty manifold list".to_string()));
            }
            let n = n.or(config.sample_size).unwrap_or(2500);
            let replicates = replicates.or(config.replicates).unwrap_or(20);
            let estimators = vec![
                Method::BoxCounting,
                Method::Capacity,
                Method::Correlation,
                Method::Pointwise,
            ];
            let mut rows = Vec::new();
            for id in &ids {
                let generator = manifold_generator(id)?;
                let spec = experiment_spec(
                    generator,
                    n,
                    replicates,
                    estimators.clone(),
                    cli.seed,
                    &config,
                );
                rows.push(RunRow {
                    label: id.clone(),
                    extra: serde_json::json!({ "manifold": id }),
                    result: run_experiment(&spec)?,
                });
            }
            report_artifacts(output::write_artifacts(&cli.out_dir, "table2", "manifold", &rows)?)
        }
        Command::Noise { sigmas, kind, d, k, n, replicates, estimator } => {
            let sigmas: Vec<f64> = parse_numbers(&sigmas, "sigma")?;
            let n = n.or(config.sample_size).unwrap_or(2500);
            let replicates = replicates.or(config.replicates).unwrap_or(10);
            let estimators = parse_methods(&estimator)?;
            let generator = GeneratorSpec::new(parse_kind(&kind)?, d, k, 0);
            let base = experiment_spec(generator, n, replicates, estimators, cli.seed, &config);
            let results = noise_sweep(&base, &sigmas)?;
            let rows: Vec<RunRow> = sigmas
                .iter()
                .zip(results)
                .map(|(sigma, result)| RunRow {
                    label: format!("{sigma}"),
                    extra: serde_json::json!({}),
                    result,
                })
                .collect();
            report_artifacts(output::write_artifacts(&cli.out_dir, "noise", "sigma", &rows)?)
        }
        Command::Lemma1Check { input, r, samples } => {
            let cloud = load_cloud(&input)?;
            let radii: Vec<f64> = parse_numbers(&r, "radius")?;
            let budget = samples.or(config.mc_budget).unwrap_or(DEFAULT_MC_BUDGET);
            let reports = radii
                .iter()
                .map(|&radius| capacity_volume_gap(&cloud, radius, budget, cli.seed))
                .collect::<Result<Vec<_>>>()?;
            println!(
                "{}",
                serde_json::to_string_pretty(&reports).expect("serializable reports")
            );
            Ok(())
        }
        Command::CdInvariance { n, replicates } => {
            let report = cd_invariance_check(n, replicates, cli.seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("serializable report")
            );
            Ok(())
        }
    }
}

fn manifold_generator(id: &str) -> Result<GeneratorSpec> {
    let (kind, d, k) = match id {
        "m1" => (GeneratorKind::Sphere, 11, 10),
        "m2" => (GeneratorKind::Affine, 5, 3),
        "m5" => (GeneratorKind::Helix, 3, 2),
        "m7" => (GeneratorKind::SwissRoll, 3, 2),
        "m9" => (GeneratorKind::Affine, 20, 20),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown manifold {other}; known ids: m1, m2, m5, m7, m9"
            )))
        }
    };
    Ok(GeneratorSpec::new(kind, d, k, 0))
}

fn report_artifacts(paths: Vec<PathBuf>) -> Result<()> {
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}
