//! The dimension estimators: capacity (packing), box-counting, correlation,
//! pointwise mass, and the shared log-log regression they sit on.
//!
//! Each estimator turns counts at one or more radii into a dimension value.
//! Single-radius forms take the log of a count ratio, which needs `r < 1`;
//! multi-radius forms regress log counts on log radii and work at any
//! positive scale.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::parallel;
use crate::schedule::{order_statistic, QuantileWindow, ScaleSchedule};

/// Which estimator produced a value. Serialized with the short tags used in
/// result tables: `cap`, `bc`, `cd`, `pw`, `vol`, `polyvol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cap")]
    Capacity,
    #[serde(rename = "bc")]
    BoxCounting,
    #[serde(rename = "cd")]
    Correlation,
    #[serde(rename = "pw")]
    Pointwise,
    #[serde(rename = "vol")]
    Volume,
    #[serde(rename = "polyvol")]
    PolyVolume,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::BoxCounting,
        Method::Capacity,
        Method::Correlation,
        Method::Pointwise,
        Method::Volume,
        Method::PolyVolume,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Capacity => "cap",
            Method::BoxCounting => "bc",
            Method::Correlation => "cd",
            Method::Pointwise => "pw",
            Method::Volume => "vol",
            Method::PolyVolume => "polyvol",
        }
    }

    /// Default pairwise-distance quantile window for the estimator's
    /// data-driven schedule.
    pub fn default_window(&self) -> QuantileWindow {
        match self {
            Method::Correlation => CORRELATION_WINDOW,
            Method::Pointwise => POINTWISE_WINDOW,
            Method::BoxCounting | Method::Capacity => COUNTING_WINDOW,
            Method::Volume | Method::PolyVolume => CORRELATION_WINDOW,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cap" => Ok(Method::Capacity),
            "bc" => Ok(Method::BoxCounting),
            "cd" => Ok(Method::Correlation),
            "pw" => Ok(Method::Pointwise),
            "vol" => Ok(Method::Volume),
            "polyvol" => Ok(Method::PolyVolume),
            other => Err(Error::invalid(format!(
                "unknown estimator {other:?}; expected one of cap, bc, cd, pw, vol, polyvol"
            ))),
        }
    }
}

/// Default scale windows, tuned on the uniform hypercube suite so that each
/// estimator reads counts in its scaling regime rather than near the sample
/// diameter. Quantiles refer to the pairwise distance distribution.
pub const CORRELATION_WINDOW: QuantileWindow = QuantileWindow::new(5e-4, 2e-2, 20);
pub const POINTWISE_WINDOW: QuantileWindow = QuantileWindow::new(1e-3, 5e-2, 20);
pub const COUNTING_WINDOW: QuantileWindow = QuantileWindow::new(8e-4, 8e-2, 20);

/// Quantile of the per-point values reported by the global pointwise
/// estimator.
pub const POINTWISE_QUANTILE: f64 = 0.9;

/// Ordinary least squares fit of a log-log relationship.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeDiagnostics {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped into `[0, 1]`.
    pub r_squared: f64,
    /// Number of points the regression used.
    pub points: usize,
    /// Set when the ordinates carried no scale information (all counts
    /// equal), in which case the reported value is 0 by convention.
    pub degenerate: bool,
}

/// A dimension estimate together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub method: Method,
    /// Radii that actually entered the estimate, largest first.
    pub scales: Vec<f64>,
    pub slope_diagnostics: Option<SlopeDiagnostics>,
    /// Sample points the global pointwise estimator had to skip.
    pub excluded_points: usize,
    /// `value` pushed to the nearest integer, ties rounding up.
    pub rounded: i64,
}

impl DimensionEstimate {
    fn new(
        value: f64,
        method: Method,
        scales: Vec<f64>,
        slope_diagnostics: Option<SlopeDiagnostics>,
        excluded_points: usize,
    ) -> Self {
        DimensionEstimate {
            value,
            method,
            scales,
            slope_diagnostics,
            excluded_points,
            rounded: nearest_integer(value),
        }
    }
}

/// Nearest integer with half-way cases rounding up: `floor(x + 1/2)`.
pub fn nearest_integer(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Least squares line through `(x, y)` pairs.
///
/// Errors when fewer than two points are given or all abscissae coincide.
/// With zero ordinate variance the fit is the horizontal line and
/// `r_squared` is 1 by convention.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<SlopeDiagnostics> {
    if points.len() < 2 {
        return Err(Error::invalid(format!(
            "regression needs at least two points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::invalid(
            "regression abscissae are all identical; no slope is defined",
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in points {
        let fitted = intercept + slope * x;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(SlopeDiagnostics {
        slope,
        intercept,
        r_squared,
        points: points.len(),
        degenerate: false,
    })
}

/// Turns retained `(radius, fraction)` pairs into a dimension value: a log
/// ratio at a single radius, a log-log regression slope otherwise.
fn dimension_from_fractions(
    pts: &[(f64, f64)],
    what: &str,
) -> Result<(f64, Option<SlopeDiagnostics>)> {
    match pts {
        [] => Err(Error::estimation(format!("{what}: nothing to fit"))),
        [(r, frac)] => {
            if *r >= 1.0 {
                return Err(Error::invalid(format!(
                    "{what}: the single-scale form needs r in (0,1), got r={r}"
                )));
            }
            Ok((frac.ln() / r.ln(), None))
        }
        _ => {
            let logs: Vec<(f64, f64)> = pts.iter().map(|(r, f)| (r.ln(), f.ln())).collect();
            let diag = loglog_slope(&logs)?;
            Ok((diag.slope, Some(diag)))
        }
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

/// Capacity estimate at a single radius: `-log N̂(r) / log r` where `N̂` is
/// the size of the greedy maximal `r`-separated subset.
pub fn capacity_dimension(cloud: &PointCloud, r: f64) -> Result<DimensionEstimate> {
    check_unit_radius(r, "capacity estimate")?;
    let packing = cloud.greedy_separated(r)?.len() as f64;
    let value = -packing.ln() / r.ln();
    Ok(DimensionEstimate::new(
        value,
        Method::Capacity,
        vec![r],
        None,
        0,
    ))
}

/// Two-scale capacity estimate,
/// `(log N̂(r_fine) - log N̂(r_coarse)) / (log r_coarse - log r_fine)`.
///
/// Reads the packing growth between two nearby scales, which cancels the
/// constant that biases the single-radius form.
pub fn capacity_dimension_two_scale(
    cloud: &PointCloud,
    r_coarse: f64,
    r_fine: f64,
) -> Result<DimensionEstimate> {
    check_unit_radius(r_coarse, "two-scale capacity estimate")?;
    check_unit_radius(r_fine, "two-scale capacity estimate")?;
    if r_fine >= r_coarse {
        return Err(Error::invalid(format!(
            "two-scale capacity estimate needs r_fine < r_coarse, got {r_fine} >= {r_coarse}"
        )));
    }
    let n_coarse = cloud.greedy_separated(r_coarse)?.len() as f64;
    let n_fine = cloud.greedy_separated(r_fine)?.len() as f64;
    let value = (n_fine.ln() - n_coarse.ln()) / (r_coarse.ln() - r_fine.ln());
    let diag = loglog_slope(&[
        ((1.0 / r_coarse).ln(), n_coarse.ln()),
        ((1.0 / r_fine).ln(), n_fine.ln()),
    ])?;
    Ok(DimensionEstimate::new(
        value,
        Method::Capacity,
        vec![r_coarse, r_fine],
        Some(diag),
        0,
    ))
}

/// Box-counting estimate: slope of `log N_box(r)` against `log(1/r)` over
/// the schedule. All box counts equal is reported as value 0 with the
/// degenerate flag set rather than as an error.
pub fn box_counting_dimension(
    cloud: &PointCloud,
    schedule: &ScaleSchedule,
) -> Result<DimensionEstimate> {
    if schedule.len() < 2 {
        return Err(Error::invalid(
            "box-counting regression needs at least two scales",
        ));
    }
    let radii = schedule.radii();
    let counts: Vec<usize> = radii
        .iter()
        .map(|&r| cloud.box_count(r))
        .collect::<Result<_>>()?;
    if counts.windows(2).all(|w| w[0] == w[1]) {
        let diag = SlopeDiagnostics {
            slope: 0.0,
            intercept: (counts[0] as f64).ln(),
            r_squared: 1.0,
            points: counts.len(),
            degenerate: true,
        };
        return Ok(DimensionEstimate::new(
            0.0,
            Method::BoxCounting,
            radii.to_vec(),
            Some(diag),
            0,
        ));
    }
    let logs: Vec<(f64, f64)> = radii
        .iter()
        .zip(&counts)
        .map(|(&r, &c)| ((1.0 / r).ln(), (c as f64).ln()))
        .collect();
    let diag = loglog_slope(&logs)?;
    Ok(DimensionEstimate::new(
        diag.slope,
        Method::BoxCounting,
        radii.to_vec(),
        Some(diag),
        0,
    ))
}

/// Fraction of unordered sample pairs at distance strictly below `r`.
pub fn pair_fraction(cloud: &PointCloud, r: f64) -> Result<f64> {
    let count = cloud.count_pairs_within(r)?;
    let n = cloud.len() as f64;
    Ok(count as f64 / (n * (n - 1.0) / 2.0))
}

/// Correlation estimate: log pair fraction against log radius.
///
/// Radii where no pair falls below the threshold are dropped before the
/// fit; if every radius is empty the sample is too sparse and estimation
/// fails.
pub fn correlation_dimension(
    cloud: &PointCloud,
    schedule: &ScaleSchedule,
) -> Result<DimensionEstimate> {
    let radii = schedule.radii();
    let counts = cloud.count_pairs_within_multi(radii)?;
    let n = cloud.len() as f64;
    let total_pairs = n * (n - 1.0) / 2.0;
    let retained: Vec<(f64, f64)> = radii
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&r, &c)| (r, c as f64 / total_pairs))
        .collect();
    if retained.is_empty() {
        return Err(Error::estimation(
            "no pairs at any scale; the sample is too sparse for the correlation estimate",
        ));
    }
    let (value, diag) = dimension_from_fractions(&retained, "correlation estimate")?;
    let scales: Vec<f64> = retained.iter().map(|(r, _)| *r).collect();
    Ok(DimensionEstimate::new(
        value,
        Method::Correlation,
        scales,
        diag,
        0,
    ))
}

/// Shared core of the pointwise estimators: retained scales, value, and
/// regression diagnostics for the ball-mass curve around `x`.
fn pointwise_core(
    cloud: &PointCloud,
    x: &[f64],
    radii: &[f64],
) -> Result<(f64, Option<SlopeDiagnostics>, Vec<f64>)> {
    let counts = cloud.count_within_multi(x, radii)?;
    let n = cloud.len() as f64;
    let retained: Vec<(f64, f64)> = radii
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&r, &c)| (r, c as f64 / n))
        .collect();
    if retained.is_empty() {
        return Err(Error::estimation(
            "empty ball at every scale around the query point",
        ));
    }
    let (value, diag) = dimension_from_fractions(&retained, "pointwise estimate")?;
    let scales = retained.iter().map(|(r, _)| *r).collect();
    Ok((value, diag, scales))
}

/// Pointwise estimate at an explicit location: log ball mass against log
/// radius. Balls are closed, so a sample point always counts itself and its
/// mass is at least `1/n`.
pub fn pointwise_dimension_at(
    cloud: &PointCloud,
    x: &[f64],
    schedule: &ScaleSchedule,
) -> Result<DimensionEstimate> {
    let (value, diag, scales) = pointwise_core(cloud, x, schedule.radii())?;
    Ok(DimensionEstimate::new(
        value,
        Method::Pointwise,
        scales,
        diag,
        0,
    ))
}

/// Global pointwise estimate: the `quantile` order statistic of the
/// per-sample-point values.
///
/// Points whose estimate fails are skipped and reported in
/// `excluded_points`; more than 10% of them failing aborts the estimate.
pub fn pointwise_dimension(
    cloud: &PointCloud,
    schedule: &ScaleSchedule,
    quantile: f64,
) -> Result<DimensionEstimate> {
    if !quantile.is_finite() || quantile <= 0.0 || quantile > 1.0 {
        return Err(Error::invalid(format!(
            "quantile must lie in (0, 1], got {quantile}"
        )));
    }
    let n = cloud.len();
    let radii = schedule.radii();
    let per_point: Vec<Result<f64>> = parallel::map_indices(n, |i| {
        pointwise_core(cloud, cloud.point(i), radii).map(|(value, _, _)| value)
    });
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut failures = 0usize;
    for r in per_point {
        match r {
            Ok(v) => values.push(v),
            Err(_) => failures += 1,
        }
    }
    if failures * 10 > n {
        return Err(Error::estimation(format!(
            "pointwise estimate failed for {failures} of {n} sample points (more than 10%)"
        )));
    }
    values.sort_unstable_by(f64::total_cmp);
    let value = order_statistic(&values, quantile);
    Ok(DimensionEstimate::new(
        value,
        Method::Pointwise,
        radii.to_vec(),
        None,
        failures,
    ))
}
