//! Volume of the radius-`r` neighborhood of the sample: exact on the line,
//! Monte Carlo elsewhere, plus the estimators built on top of it: the
//! direct volume-based dimension estimate, the packing/volume gap check,
//! and the small-radius polynomial fit with its integer verdict.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::estimators::{capacity_dimension, DimensionEstimate, Method};
use crate::parallel;

/// Largest ambient dimension the unit-ball volume table covers.
pub const MAX_BALL_DIM: usize = 25;

/// Smallest accepted Monte Carlo sample budget.
pub const MIN_MC_SAMPLES: u64 = 1000;

/// Draws per deterministic Monte Carlo chunk. Each chunk runs on its own
/// ChaCha stream, so totals do not depend on how chunks are scheduled.
const MC_CHUNK: u64 = 16_384;

/// Volume of the unit ball in `R^d` for `d` in `1..=25`, via the exact
/// recurrence `w_d = (2 pi / d) w_{d-2}` with `w_1 = 2`, `w_2 = pi`.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 || d > MAX_BALL_DIM {
        return Err(Error::invalid(format!(
            "unit ball volume is tabulated for 1 <= d <= {MAX_BALL_DIM}, got {d}"
        )));
    }
    let mut k = if d % 2 == 1 { 1 } else { 2 };
    let mut vol = if d % 2 == 1 { 2.0 } else { std::f64::consts::PI };
    while k < d {
        k += 2;
        vol *= 2.0 * std::f64::consts::PI / k as f64;
    }
    Ok(vol)
}

/// How a neighborhood volume was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolumeMethod {
    MonteCarlo { samples: u64, seed: u64 },
    Exact1d,
}

/// Estimated volume of `B(cloud, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub radius: f64,
    pub value: f64,
    /// One standard error of the hit fraction scaled by the box volume;
    /// zero for the exact method.
    pub std_error: f64,
    pub method: VolumeMethod,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::invalid("at least one radius is required"));
    }
    for &r in radii {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::invalid(format!("radius must be positive, got {r}")));
        }
    }
    Ok(())
}

/// Exact length of the union of intervals `[x_i - r, x_i + r]` for a cloud
/// on the line.
pub fn exact_volume_1d(cloud: &PointCloud, r: f64) -> Result<VolumeEstimate> {
    if cloud.ambient_dim() != 1 {
        return Err(Error::invalid(format!(
            "exact volume works only in ambient dimension 1, cloud has {}",
            cloud.ambient_dim()
        )));
    }
    check_radii(&[r])?;
    let mut xs: Vec<f64> = cloud.points().map(|p| p[0]).collect();
    xs.sort_unstable_by(f64::total_cmp);
    let mut total = 0.0;
    let mut lo = xs[0] - r;
    let mut hi = xs[0] + r;
    for &x in &xs[1..] {
        if x - r > hi {
            total += hi - lo;
            lo = x - r;
        }
        hi = x + r;
    }
    total += hi - lo;
    Ok(VolumeEstimate {
        radius: r,
        value: total,
        std_error: 0.0,
        method: VolumeMethod::Exact1d,
    })
}

/// Monte Carlo estimates of `vol(B(cloud, r))` for several radii from one
/// shared pool of draws.
///
/// Draws are uniform over the bounding box inflated by the largest radius.
/// Sharing draws makes the estimates exactly monotone in `r` and keeps the
/// whole profile reproducible from (samples, seed) alone, independent of
/// thread count.
pub fn empirical_volume_profile(
    cloud: &PointCloud,
    radii: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<VolumeEstimate>> {
    check_radii(radii)?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(format!(
            "monte carlo sample budget must be at least {MIN_MC_SAMPLES}, got {samples}"
        )));
    }
    let mut asc: Vec<usize> = (0..radii.len()).collect();
    asc.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let r2_asc: Vec<f64> = asc.iter().map(|&k| radii[k] * radii[k]).collect();
    let r_max = radii[*asc.last().unwrap()];
    let bounds = cloud.bounding_box(r_max)?;
    let box_volume = bounds.volume();
    let d = cloud.ambient_dim();
    let widths: Vec<f64> = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(lo, hi)| hi - lo)
        .collect();
    let m = radii.len();
    let chunks = samples.div_ceil(MC_CHUNK);
    // diff[k] = draws whose nearest sample point first fits radius rank k;
    // the last slot collects draws outside every radius
    let diff = parallel::fold_counts(chunks as usize, m + 1, |acc, chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let len = MC_CHUNK.min(samples - chunk as u64 * MC_CHUNK);
        let mut probe = vec![0.0f64; d];
        for _ in 0..len {
            for (k, w) in widths.iter().enumerate() {
                probe[k] = bounds.lower[k] + w * rng.random::<f64>();
            }
            let d2 = cloud.min_dist2_pruned(&probe, r_max, r2_asc[0]);
            let rank = r2_asc.partition_point(|&t| t < d2);
            acc[rank] += 1;
        }
    });
    let mut hits_asc = vec![0u64; m];
    let mut acc = 0u64;
    for (k, hits) in hits_asc.iter_mut().enumerate() {
        acc += diff[k];
        *hits = acc;
    }
    let mut out = vec![
        VolumeEstimate {
            radius: 0.0,
            value: 0.0,
            std_error: 0.0,
            method: VolumeMethod::MonteCarlo { samples, seed },
        };
        m
    ];
    for (rank, &orig) in asc.iter().enumerate() {
        let p = hits_asc[rank] as f64 / samples as f64;
        out[orig].radius = radii[orig];
        out[orig].value = p * box_volume;
        out[orig].std_error = (p * (1.0 - p) / samples as f64).sqrt() * box_volume;
    }
    Ok(out)
}

/// Monte Carlo estimate of `vol(B(cloud, r))` at a single radius.
pub fn empirical_volume(
    cloud: &PointCloud,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    Ok(empirical_volume_profile(cloud, &[r], samples, seed)?.pop().unwrap())
}

fn neighborhood_volume(
    cloud: &PointCloud,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    if cloud.ambient_dim() == 1 {
        exact_volume_1d(cloud, r)
    } else {
        empirical_volume(cloud, r, samples, seed)
    }
}

fn check_unit_radius(r: f64, what: &str) -> Result<()> {
    if !r.is_finite() || r <= 0.0 || r >= 1.0 {
        return Err(Error::invalid(format!(
            "{what} needs r in (0,1) so that log r < 0, got r={r}"
        )));
    }
    Ok(())
}

/// Volume-based dimension estimate `d - log V(r) / log r`.
///
/// Uses the exact interval union in ambient dimension 1 and Monte Carlo
/// otherwise; zero Monte Carlo hits is an estimation failure.
pub fn volume_dimension(
    cloud: &PointCloud,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<DimensionEstimate> {
    check_unit_radius(r, "volume estimate")?;
    let vol = neighborhood_volume(cloud, r, samples, seed)?;
    if vol.value <= 0.0 {
        return Err(Error::estimation(format!(
            "no monte carlo hits at radius {r}; increase the sample budget or the radius"
        )));
    }
    let d = cloud.ambient_dim() as f64;
    let value = d - vol.value.ln() / r.ln();
    Ok(DimensionEstimate {
        value,
        method: Method::Volume,
        scales: vec![r],
        slope_diagnostics: None,
        excluded_points: 0,
        rounded: crate::estimators::nearest_integer(value),
    })
}

/// Outcome of checking that the volume and capacity estimates stay within
/// the packing/covering slack of each other at radius `r`:
/// `|vol - cap + log(w_d)/log r| <= -d log 2 / log r`, up to Monte Carlo
/// error on the volume side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub radius: f64,
    pub capacity_value: f64,
    pub volume_value: f64,
    /// `|vol - cap + log(w_d)/log r|`
    pub lhs: f64,
    /// `-d log 2 / log r`
    pub rhs: f64,
    /// Three standard errors of the volume estimate propagated through the
    /// logarithm; zero when the volume is exact.
    pub mc_margin: f64,
    pub holds: bool,
}

/// Checks the deterministic gap bound between the volume-based and
/// capacity estimates at radius `r`.
pub fn capacity_volume_gap(
    cloud: &PointCloud,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<GapReport> {
    check_unit_radius(r, "gap check")?;
    let d = cloud.ambient_dim();
    let ball = unit_ball_volume(d)?;
    let cap = capacity_dimension(cloud, r)?;
    let vol = neighborhood_volume(cloud, r, samples, seed)?;
    if vol.value <= 0.0 {
        return Err(Error::estimation(format!(
            "no monte carlo hits at radius {r}; increase the sample budget or the radius"
        )));
    }
    let ln_r = r.ln();
    let vol_dim = d as f64 - vol.value.ln() / ln_r;
    let lhs = (vol_dim - cap.value + ball.ln() / ln_r).abs();
    let rhs = -(d as f64) * std::f64::consts::LN_2 / ln_r;
    let mc_margin = 3.0 * vol.std_error / (vol.value * -ln_r);
    Ok(GapReport {
        radius: r,
        capacity_value: cap.value,
        volume_value: vol.value,
        lhs,
        rhs,
        mc_margin,
        holds: lhs <= rhs + mc_margin,
    })
}

/// Polynomial fitted to the neighborhood volume on `[0, fit_radius]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumePolynomial {
    /// Coefficients by ascending power, constant term first.
    pub coefficients: Vec<f64>,
    pub fit_radius: f64,
    /// Discretized L2 misfit `sqrt((R/m) * sum (V_i - P(r_i))^2)`.
    pub residual: f64,
}

impl VolumePolynomial {
    pub fn new(coefficients: Vec<f64>, fit_radius: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("polynomial needs at least one coefficient"));
        }
        if !fit_radius.is_finite() || fit_radius <= 0.0 {
            return Err(Error::invalid(format!(
                "fit radius must be positive, got {fit_radius}"
            )));
        }
        Ok(VolumePolynomial {
            coefficients,
            fit_radius,
            residual: 0.0,
        })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coefficients.iter().rev() {
            acc = acc * r + c;
        }
        acc
    }

    /// Index of the first coefficient that is large relative to the biggest
    /// one; the power the volume effectively starts at.
    pub fn leading_index(&self, rel_tol: f64) -> Option<usize> {
        let max = self
            .coefficients
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            return None;
        }
        self.coefficients.iter().position(|c| c.abs() > rel_tol * max)
    }
}

/// Least squares fit of a degree-`d` polynomial (full monomial basis,
/// constant term included) to the neighborhood volume on the uniform grid
/// `r_i = fit_radius * i / grid_size`, `i = 1..=grid_size`.
///
/// `d` is the ambient dimension; the grid needs at least `d + 2` points.
/// Volumes come from one shared-draw Monte Carlo pass, or the exact union
/// on the line. The system is solved by SVD on the scaled basis
/// `(r/fit_radius)^j`, never through normal equations.
pub fn fit_volume_polynomial(
    cloud: &PointCloud,
    fit_radius: f64,
    grid_size: usize,
    samples: u64,
    seed: u64,
) -> Result<VolumePolynomial> {
    if !fit_radius.is_finite() || fit_radius <= 0.0 {
        return Err(Error::invalid(format!(
            "fit radius must be positive, got {fit_radius}"
        )));
    }
    let d = cloud.ambient_dim();
    if grid_size < d + 2 {
        return Err(Error::invalid(format!(
            "volume fit grid needs at least d + 2 = {} points, got {grid_size}",
            d + 2
        )));
    }
    let radii: Vec<f64> = (1..=grid_size)
        .map(|i| fit_radius * i as f64 / grid_size as f64)
        .collect();
    let volumes: Vec<f64> = if d == 1 {
        radii
            .iter()
            .map(|&r| exact_volume_1d(cloud, r).map(|v| v.value))
            .collect::<Result<_>>()?
    } else {
        empirical_volume_profile(cloud, &radii, samples, seed)?
            .into_iter()
            .map(|v| v.value)
            .collect()
    };
    let rows = grid_size;
    let cols = d + 1;
    let design = DMatrix::from_fn(rows, cols, |i, j| {
        let s = (i + 1) as f64 / grid_size as f64;
        s.powi(j as i32)
    });
    let rhs = DVector::from_vec(volumes.clone());
    let svd = design.clone().svd(true, true);
    let scaled_coeffs = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::estimation(format!("volume fit failed: {e}")))?;
    let mut residual_sq = 0.0;
    let fitted = design * &scaled_coeffs;
    for i in 0..rows {
        let diff = volumes[i] - fitted[i];
        residual_sq += diff * diff;
    }
    let residual = (residual_sq * fit_radius / grid_size as f64).sqrt();
    let coefficients: Vec<f64> = scaled_coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c / fit_radius.powi(j as i32))
        .collect();
    Ok(VolumePolynomial {
        coefficients,
        fit_radius,
        residual,
    })
}

/// Dimension verdict from a fitted volume polynomial:
/// `d - log P(r0) / log r0`, rounded to the nearest integer.
pub fn polynomial_volume_dimension(
    poly: &VolumePolynomial,
    r0: f64,
) -> Result<DimensionEstimate> {
    check_unit_radius(r0, "polynomial volume estimate")?;
    if r0 > poly.fit_radius {
        return Err(Error::invalid(format!(
            "evaluation radius {r0} lies outside the fitted interval [0, {}]",
            poly.fit_radius
        )));
    }
    let p = poly.evaluate(r0);
    if p <= 0.0 {
        return Err(Error::estimation(format!(
            "fitted volume is not positive at r0={r0}; decrease r0 or refit"
        )));
    }
    let d = poly.degree() as f64;
    let value = d - p.ln() / r0.ln();
    Ok(DimensionEstimate {
        value,
        method: Method::PolyVolume,
        scales: vec![r0],
        slope_diagnostics: None,
        excluded_points: 0,
        rounded: crate::estimators::nearest_integer(value),
    })
}

/// Verdicts below this bound mean `r0` sits where the fitted leading power
/// dominates, so the rounded estimate can be trusted.
pub const FIT_CONDITION_BOUND: f64 = 0.25;

/// Relative size under which a fitted coefficient is treated as zero.
pub const COEFFICIENT_REL_TOL: f64 = 1e-3;

/// Post-hoc diagnostic for the polynomial verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitCondition {
    /// First effectively nonzero coefficient index.
    pub leading_index: usize,
    /// `|log(sum_j theta_j r0^(j - k)) / log r0|`
    pub value: f64,
    /// Whether `value` is below [`FIT_CONDITION_BOUND`].
    pub satisfied: bool,
}

/// Evaluates the evaluation-radius condition for a fitted polynomial at `r0`.
pub fn fit_condition(poly: &VolumePolynomial, r0: f64) -> Result<FitCondition> {
    check_unit_radius(r0, "fit condition")?;
    let Some(leading_index) = poly.leading_index(COEFFICIENT_REL_TOL) else {
        return Err(Error::estimation(
            "all fitted coefficients are zero; no leading power",
        ));
    };
    let mut tail = 0.0;
    for (j, &c) in poly.coefficients.iter().enumerate().skip(leading_index) {
        tail += c * r0.powi((j - leading_index) as i32);
    }
    if tail <= 0.0 {
        return Ok(FitCondition {
            leading_index,
            value: f64::INFINITY,
            satisfied: false,
        });
    }
    let value = (tail.ln() / r0.ln()).abs();
    Ok(FitCondition {
        leading_index,
        value,
        satisfied: value < FIT_CONDITION_BOUND,
    })
}

/// Writes a volume profile as CSV with columns `r,volume,std_error`.
pub fn write_volume_profile<W: Write>(mut writer: W, profile: &[VolumeEstimate]) -> Result<()> {
    writeln!(writer, "r,volume,std_error")?;
    for v in profile {
        writeln!(writer, "{},{},{}", v.radius, v.value, v.std_error)?;
    }
    Ok(())
}
