//! End-to-end acceptance checks, one test per criterion. Every test prints
//! a single PASS/FAIL line (run with `--nocapture` to see them all) and
//! asserts its condition, so the suite doubles as a report and a gate.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dimest::{
    capacity_volume_gap, cd_invariance_check, exact_volume_1d, empirical_volume_profile,
    fit_condition, fit_volume_polynomial, noise_sweep, polynomial_volume_dimension,
    run_experiment, unit_ball_volume, ExperimentResult, ExperimentSpec, GeneratorKind,
    GeneratorSpec, Method, PointCloud,
};

const TABLE1_SEED: u64 = 101;
const TABLE2_SEED: u64 = 202;
const NOISE_SEED: u64 = 303;
const INVARIANCE_SEED: u64 = 404;
const RERUN_SEED: u64 = 505;

fn verdict(name: &str, ok: bool, detail: String) {
    println!("{name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

struct Table1 {
    /// One result per (ambient, intrinsic) hypercube row.
    rows: Vec<(usize, usize, ExperimentResult)>,
    seconds: f64,
}

fn table1() -> &'static Table1 {
    static TABLE1: OnceLock<Table1> = OnceLock::new();
    TABLE1.get_or_init(|| {
        let start = Instant::now();
        let grid = [(2usize, 2usize), (3, 2), (3, 3), (5, 2), (5, 3), (5, 4), (5, 5)];
        let rows = grid
            .iter()
            .map(|&(d, k)| {
                let spec = ExperimentSpec::new(
                    GeneratorSpec::new(GeneratorKind::Hypercube, d, k, 0),
                    2500,
                    20,
                    vec![
                        Method::Correlation,
                        Method::Pointwise,
                        Method::BoxCounting,
                        Method::Capacity,
                    ],
                    TABLE1_SEED,
                );
                (d, k, run_experiment(&spec).expect("table run"))
            })
            .collect();
        Table1 { rows, seconds: start.elapsed().as_secs_f64() }
    })
}

fn mean(result: &ExperimentResult, method: Method) -> f64 {
    result.summary(method).expect("estimator summary").mean
}

fn proportion(result: &ExperimentResult, method: Method) -> f64 {
    result.summary(method).expect("estimator summary").proportion_correct
}

#[test]
fn a01_hypercube_table_hits_reference_bands() {
    let t = table1();
    // reference means and half-widths for (dim, correlation, pointwise);
    // the d = 5 correlation reference sits below 5 by design, so only its
    // pointwise band is gated
    let bands: &[(usize, Option<(f64, f64)>, (f64, f64))] = &[
        (2, Some((1.89, 0.2)), (2.15, 0.2)),
        (3, Some((2.86, 0.2)), (3.16, 0.2)),
        (5, None, (5.01, 0.3)),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (bd, cd_band, pw_band) in bands {
        let (_, _, result) = t
            .rows
            .iter()
            .find(|(d, k, _)| d == bd && k == bd)
            .expect("diagonal row");
        let cd = mean(result, Method::Correlation);
        let pw = mean(result, Method::Pointwise);
        let pw_prop = proportion(result, Method::Pointwise);
        if let Some((c, w)) = cd_band {
            ok &= (cd - c).abs() <= *w;
        }
        ok &= (pw - pw_band.0).abs() <= pw_band.1;
        ok &= pw_prop >= 0.9;
        detail.push(format!("d={bd}: cd={cd:.3} pw={pw:.3} pw_prop={pw_prop:.2}"));
    }
    ok &= t.seconds < 600.0;
    detail.push(format!("wall={:.1}s", t.seconds));
    verdict("acceptance 01 hypercube table bands", ok, detail.join(", "));
}

#[test]
fn a02_coarse_estimators_undershoot_in_higher_dimensions() {
    let t = table1();
    let mut ok = true;
    let mut detail = Vec::new();
    for (d, k, result) in t.rows.iter().filter(|(_, k, _)| *k >= 3) {
        let bc = mean(result, Method::BoxCounting);
        let cap = mean(result, Method::Capacity);
        ok &= bc < *k as f64 && cap < *k as f64;
        detail.push(format!("({d},{k}): bc={bc:.3} cap={cap:.3}"));
    }
    verdict("acceptance 02 coarse estimators undershoot", ok, detail.join(", "));
}

#[test]
fn a03_manifold_table_recovers_intrinsic_dimension() {
    let sphere = ExperimentSpec::new(
        GeneratorSpec::new(GeneratorKind::Sphere, 11, 10, 0),
        2500,
        5,
        vec![Method::Pointwise],
        TABLE2_SEED,
    );
    let sphere_result = run_experiment(&sphere).expect("sphere run");
    let affine = ExperimentSpec::new(
        GeneratorSpec::new(GeneratorKind::Affine, 5, 3, 0),
        2500,
        5,
        vec![Method::Correlation, Method::Pointwise],
        TABLE2_SEED,
    );
    let affine_result = run_experiment(&affine).expect("affine run");
    let sphere_pw = proportion(&sphere_result, Method::Pointwise);
    let affine_cd = proportion(&affine_result, Method::Correlation);
    let affine_pw = proportion(&affine_result, Method::Pointwise);
    let ok = sphere_pw >= 0.8 && affine_cd >= 0.8 && affine_pw >= 0.8;
    verdict(
        "acceptance 03 manifold table",
        ok,
        format!(
            "sphere(11,10) pw_prop={sphere_pw:.2} (mean {:.2}), affine(5,3) cd_prop={affine_cd:.2} pw_prop={affine_pw:.2}",
            mean(&sphere_result, Method::Pointwise)
        ),
    );
}

#[test]
fn a04_noise_inflates_the_pointwise_estimate() {
    let base = ExperimentSpec::new(
        GeneratorSpec::new(GeneratorKind::Hypercube, 5, 2, 0),
        2500,
        10,
        vec![Method::Pointwise],
        NOISE_SEED,
    );
    let sweep = noise_sweep(&base, &[0.0, 0.005, 0.05]).expect("noise sweep");
    let clean = mean(&sweep[0], Method::Pointwise);
    let mild = mean(&sweep[1], Method::Pointwise);
    let strong = mean(&sweep[2], Method::Pointwise);
    let ok = strong > clean && (mild - clean).abs() <= 0.3;
    verdict(
        "acceptance 04 noise response",
        ok,
        format!("pw at sigma 0/0.005/0.05 = {clean:.3}/{mild:.3}/{strong:.3}"),
    );
}

#[test]
fn a05_capacity_volume_gap_bound_holds() {
    let mut ok = true;
    let mut exact_checks = 0usize;
    let mut mc_checks = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    for i in 0..50u64 {
        let n = rng.random_range(2..=60usize);
        let coords: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let cloud = PointCloud::from_flat(coords, 1).unwrap();
        for &r in &[0.1, 0.3, 0.7] {
            let gap = capacity_volume_gap(&cloud, r, 1000, i).expect("exact gap");
            ok &= gap.holds && gap.mc_margin == 0.0;
            exact_checks += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7002);
    for i in 0..10u64 {
        let n = rng.random_range(2..=40usize);
        let coords: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
        let cloud = PointCloud::from_flat(coords, 2).unwrap();
        for &r in &[0.2, 0.5] {
            let gap = capacity_volume_gap(&cloud, r, 500_000, i).expect("mc gap");
            ok &= gap.holds;
            mc_checks += 1;
        }
    }
    verdict(
        "acceptance 05 capacity-volume gap",
        ok,
        format!("{exact_checks} exact checks, {mc_checks} monte carlo checks"),
    );
}

fn brute_pairs(points: &[Vec<f64>], r: f64) -> u64 {
    let mut count = 0u64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 < r * r {
                count += 1;
            }
        }
    }
    count
}

fn brute_within(points: &[Vec<f64>], x: &[f64], r: f64, strict: bool) -> usize {
    points
        .iter()
        .filter(|p| {
            let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if strict {
                d2 < r * r
            } else {
                d2 <= r * r
            }
        })
        .count()
}

fn brute_box_count(points: &[Vec<f64>], r: f64) -> usize {
    let d = points[0].len();
    let mut mins = vec![f64::INFINITY; d];
    for p in points {
        for (m, &v) in mins.iter_mut().zip(p) {
            *m = m.min(v);
        }
    }
    let cells: std::collections::HashSet<Vec<i64>> = points
        .iter()
        .map(|p| {
            p.iter()
                .zip(&mins)
                .map(|(v, m)| ((v - m) / r).floor() as i64)
                .collect()
        })
        .collect();
    cells.len()
}

#[test]
fn a06_windowed_counts_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7003);
    let mut checks = 0usize;
    for _ in 0..200 {
        let n = rng.random_range(2..=300usize);
        let d = rng.random_range(1..=6usize);
        let scale = rng.random_range(0.5..2.0f64);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * scale).collect())
            .collect();
        let cloud = PointCloud::new(points.clone()).unwrap();
        let r = rng.random_range(0.01..1.0) * scale * (d as f64).sqrt();
        let pairs = brute_pairs(&points, r);
        assert_eq!(cloud.count_pairs_within(r).unwrap(), pairs);
        let total_pairs = (n * (n - 1) / 2) as f64;
        assert_eq!(
            dimest::pair_fraction(&cloud, r).unwrap(),
            pairs as f64 / total_pairs
        );
        assert_eq!(cloud.box_count(r).unwrap(), brute_box_count(&points, r));
        let center = &points[rng.random_range(0..n)];
        for strict in [false, true] {
            assert_eq!(
                cloud.count_within(center, r, strict).unwrap(),
                brute_within(&points, center, r, strict)
            );
        }
        let radii = [r, r * 0.5, r * 0.1];
        let multi = cloud.count_pairs_within_multi(&radii).unwrap();
        for (k, &rk) in radii.iter().enumerate() {
            assert_eq!(multi[k], brute_pairs(&points, rk));
        }
        checks += 1;
    }
    verdict(
        "acceptance 06 windowed counts vs brute force",
        checks == 200,
        format!("{checks} random instances, exact equality"),
    );
}

#[test]
fn a07_monte_carlo_matches_exact_volumes() {
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(7004);
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let n = rng.random_range(2..=50usize);
        let coords: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let cloud = PointCloud::from_flat(coords, 1).unwrap();
        let r = rng.random_range(0.05..0.45f64);
        let exact = exact_volume_1d(&cloud, r).unwrap();
        let mc = &empirical_volume_profile(&cloud, &[r], 200_000, i).unwrap()[0];
        let pull = (mc.value - exact.value).abs() / mc.std_error.max(1e-300);
        worst = worst.max(pull);
        ok &= (mc.value - exact.value).abs() <= 3.0 * mc.std_error;
    }
    for (d, center) in [(2usize, vec![0.3, 0.4]), (3, vec![0.3, 0.4, 0.5])] {
        let cloud = PointCloud::from_flat(center, d).unwrap();
        let r = 0.25f64;
        let truth = unit_ball_volume(d).unwrap() * r.powi(d as i32);
        let mc = &empirical_volume_profile(&cloud, &[r], 400_000, d as u64).unwrap()[0];
        let pull = (mc.value - truth).abs() / mc.std_error.max(1e-300);
        worst = worst.max(pull);
        ok &= (mc.value - truth).abs() <= 3.0 * mc.std_error;
    }
    verdict(
        "acceptance 07 monte carlo vs exact volumes",
        ok,
        format!("52 comparisons, worst deviation {worst:.2} standard errors"),
    );
}

#[test]
fn a08_polynomial_fit_recovers_segment_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7005);
    let coords: Vec<f64> = (0..2000).flat_map(|_| [rng.random::<f64>(), 0.0]).collect();
    let segment = PointCloud::from_flat(coords, 2).unwrap();
    let poly = fit_volume_polynomial(&segment, 0.2, 40, 200_000, 7006).unwrap();
    let theta1 = poly.coefficients[1];
    let theta2 = poly.coefficients[2];
    let estimate = polynomial_volume_dimension(&poly, 0.01).unwrap();
    let condition = fit_condition(&poly, 0.01).unwrap();
    let mut ok = (theta1 - 2.0).abs() <= 0.15;
    ok &= (theta2 - std::f64::consts::PI).abs() <= 0.3;
    ok &= estimate.rounded == 1;
    ok &= condition.leading_index == 1 && condition.satisfied;

    let point = PointCloud::from_flat(vec![0.5, 0.5], 2).unwrap();
    let point_poly = fit_volume_polynomial(&point, 0.5, 40, 200_000, 7007).unwrap();
    let point_estimate = polynomial_volume_dimension(&point_poly, 0.01).unwrap();
    ok &= point_estimate.rounded == 0;
    verdict(
        "acceptance 08 polynomial volume fit",
        ok,
        format!(
            "theta1={theta1:.3} theta2={theta2:.3} segment verdict {} point verdict {}",
            estimate.rounded, point_estimate.rounded
        ),
    );
}

#[test]
fn a09_correlation_estimate_is_density_invariant() {
    let report = cd_invariance_check(2500, 10, INVARIANCE_SEED).expect("invariance check");
    let ok = report.passes && report.reliable;
    verdict(
        "acceptance 09 density invariance",
        ok,
        format!(
            "uniform rate {:.2}, reweighted rate {:.2}",
            report.uniform_rate, report.triangular_rate
        ),
    );
}

#[test]
fn a10_reruns_are_byte_identical() {
    let spec = ExperimentSpec::new(
        GeneratorSpec::new(GeneratorKind::Hypercube, 3, 3, 0),
        1000,
        5,
        vec![Method::Correlation, Method::Pointwise, Method::BoxCounting],
        RERUN_SEED,
    );
    let a = run_experiment(&spec).expect("first run");
    let b = run_experiment(&spec).expect("second run");
    let bytes_equal = a.raw_csv_bytes() == b.raw_csv_bytes();
    let outcomes_equal = serde_json::to_string(&a.outcomes).unwrap()
        == serde_json::to_string(&b.outcomes).unwrap();
    let ok = bytes_equal && a.deterministic_eq(&b) && outcomes_equal;
    verdict(
        "acceptance 10 rerun determinism",
        ok,
        format!(
            "{} raw rows, csv bytes equal: {bytes_equal}, aggregates equal: {outcomes_equal}",
            a.records.len()
        ),
    );
}
