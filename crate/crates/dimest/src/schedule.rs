//! Radius schedules: closed-form shrinking rates with their consistency
//! constraints, explicit geometric grids, and data-driven grids anchored at
//! quantiles of the pairwise distance distribution.

use serde::{Deserialize, Serialize};

use crate::cloud::{dist2, PointCloud};
use crate::error::{Error, Result};

/// How a schedule was produced. Rate variants record the constants that were
/// validated against their consistency constraints at construction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// `r = (ln n / n)^(1/d')` with `d'` above the ambient dimension; the
    /// rate under which covering and volume estimates converge.
    VolumeRate { d_prime: f64 },
    /// `r = (ln n / n)^(1 / ((1 + beta) q))` for a guessed correlation
    /// dimension `q`; consistent whenever `q` is at least the true value.
    CorrelationRate { beta: f64, target_dim: f64 },
    /// `r = (c ln n / n)^(1/d')` with `c > 28/(3 delta)` for measures whose
    /// ball mass is at least `delta r^d'` at small scales.
    PointwiseLocalRate { scale_const: f64, delta: f64, d_prime: f64 },
    /// `r = (beta ln n / n)^(1/(2 d'))` with `beta > (4d + 12)/delta^2`,
    /// slow enough for all pointwise estimates to converge at once.
    PointwiseUniformRate { beta: f64, delta: f64, d_prime: f64 },
    /// Log-spaced grid between explicit endpoints.
    Geometric { r_min: f64, r_max: f64 },
    /// Log-spaced grid between quantiles `lo` and `hi` of the pairwise
    /// distances of a strided subsample; `r_min`/`r_max` are the realized
    /// endpoints.
    PairQuantileGrid { lo: f64, hi: f64, r_min: f64, r_max: f64 },
    /// Radii supplied directly by the caller.
    Explicit,
}

/// A strictly decreasing list of positive radii plus its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    radii: Vec<f64>,
    provenance: Provenance,
}

/// Pairwise-distance quantile window for data-driven grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileWindow {
    /// Lower quantile of the pairwise distance distribution.
    pub lo: f64,
    /// Upper quantile of the pairwise distance distribution.
    pub hi: f64,
    /// Number of radii in the grid.
    pub scales: usize,
}

impl QuantileWindow {
    pub const fn new(lo: f64, hi: f64, scales: usize) -> Self {
        QuantileWindow { lo, hi, scales }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite())
            || self.lo <= 0.0
            || self.hi > 1.0
            || self.lo > self.hi
        {
            return Err(Error::invalid(format!(
                "quantile window must satisfy 0 < lo <= hi <= 1, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.scales == 0 {
            return Err(Error::invalid("quantile window needs at least one scale"));
        }
        Ok(())
    }
}

/// Cap on how many points feed the pairwise-distance quantile estimate.
pub const QUANTILE_SUBSAMPLE: usize = 500;

fn ln_over_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "rate schedules need n >= 2, got {n}"
        )));
    }
    Ok((n as f64).ln() / n as f64)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl ScaleSchedule {
    /// Wraps caller-chosen radii; they must be positive, finite and strictly
    /// decreasing.
    pub fn explicit(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("schedule must contain at least one radius"));
        }
        for &r in &radii {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::invalid(format!(
                    "schedule radii must be positive, got {r}"
                )));
            }
        }
        if radii.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::invalid("schedule radii must be strictly decreasing"));
        }
        Ok(ScaleSchedule {
            radii,
            provenance: Provenance::Explicit,
        })
    }

    pub fn single(r: f64) -> Result<Self> {
        Self::explicit(vec![r])
    }

    /// `count` radii log-spaced from `r_max` down to `r_min`, endpoints exact.
    pub fn geometric(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        check_positive("r_min", r_min)?;
        check_positive("r_max", r_max)?;
        if r_min >= r_max {
            return Err(Error::invalid(format!(
                "geometric grid needs r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if count < 2 {
            return Err(Error::invalid("geometric grid needs at least two radii"));
        }
        let (ln_min, ln_max) = (r_min.ln(), r_max.ln());
        let mut radii = Vec::with_capacity(count);
        radii.push(r_max);
        for i in 1..count - 1 {
            let t = i as f64 / (count - 1) as f64;
            radii.push((ln_max + t * (ln_min - ln_max)).exp());
        }
        radii.push(r_min);
        Ok(ScaleSchedule {
            radii,
            provenance: Provenance::Geometric { r_min, r_max },
        })
    }

    /// Single radius `(ln n / n)^(1/d_prime)`; requires `d_prime` strictly
    /// above the ambient dimension.
    pub fn volume_rate(n: usize, d_prime: f64, ambient_dim: usize) -> Result<Self> {
        let base = ln_over_n(n)?;
        check_positive("d_prime", d_prime)?;
        if d_prime <= ambient_dim as f64 {
            return Err(Error::invalid(format!(
                "volume rate requires d_prime > ambient dimension, got d_prime={d_prime}, d={ambient_dim}"
            )));
        }
        let r = base.powf(1.0 / d_prime);
        Ok(ScaleSchedule {
            radii: vec![r],
            provenance: Provenance::VolumeRate { d_prime },
        })
    }

    /// Single radius `(ln n / n)^(1 / ((1 + beta) target_dim))`.
    ///
    /// `target_dim` is the caller's guess at the correlation dimension; the
    /// rate is only guaranteed to work when the guess is not below the true
    /// value, so estimating with it is circular unless an upper bound is
    /// known a priori.
    pub fn correlation_rate(n: usize, beta: f64, target_dim: f64) -> Result<Self> {
        let base = ln_over_n(n)?;
        check_positive("beta", beta)?;
        check_positive("target_dim", target_dim)?;
        let r = base.powf(1.0 / ((1.0 + beta) * target_dim));
        Ok(ScaleSchedule {
            radii: vec![r],
            provenance: Provenance::CorrelationRate { beta, target_dim },
        })
    }

    /// Single radius `(scale_const ln n / n)^(1/d_prime)`; requires
    /// `scale_const > 28 / (3 delta)`.
    pub fn pointwise_local_rate(
        n: usize,
        scale_const: f64,
        delta: f64,
        d_prime: f64,
    ) -> Result<Self> {
        let base = ln_over_n(n)?;
        check_positive("delta", delta)?;
        check_positive("d_prime", d_prime)?;
        let floor = 28.0 / (3.0 * delta);
        if !(scale_const > floor) {
            return Err(Error::invalid(format!(
                "pointwise local rate requires scale_const > 28/(3*delta) = {floor}, got {scale_const}"
            )));
        }
        let r = (scale_const * base).powf(1.0 / d_prime);
        Ok(ScaleSchedule {
            radii: vec![r],
            provenance: Provenance::PointwiseLocalRate {
                scale_const,
                delta,
                d_prime,
            },
        })
    }

    /// Single radius `(beta ln n / n)^(1/(2 d_prime))`; requires
    /// `beta > (4 d + 12) / delta^2`.
    pub fn pointwise_uniform_rate(
        n: usize,
        beta: f64,
        delta: f64,
        d_prime: f64,
        ambient_dim: usize,
    ) -> Result<Self> {
        let base = ln_over_n(n)?;
        check_positive("delta", delta)?;
        check_positive("d_prime", d_prime)?;
        let floor = (4.0 * ambient_dim as f64 + 12.0) / (delta * delta);
        if !(beta > floor) {
            return Err(Error::invalid(format!(
                "pointwise uniform rate requires beta > (4d+12)/delta^2 = {floor}, got {beta}"
            )));
        }
        let r = (beta * base).powf(1.0 / (2.0 * d_prime));
        Ok(ScaleSchedule {
            radii: vec![r],
            provenance: Provenance::PointwiseUniformRate {
                beta,
                delta,
                d_prime,
            },
        })
    }

    /// Log grid between two quantiles of the pairwise distance distribution.
    ///
    /// Distances come from a deterministic strided subsample of at most
    /// [`QUANTILE_SUBSAMPLE`] points, quantiles are plain order statistics
    /// (index `ceil(q * len)`, no interpolation). When the two quantiles
    /// coincide the schedule collapses to that single radius.
    pub fn data_driven(cloud: &PointCloud, window: QuantileWindow) -> Result<Self> {
        window.validate()?;
        let n = cloud.len();
        if n < 2 {
            return Err(Error::invalid("data-driven schedule needs at least two points"));
        }
        let stride = n.div_ceil(QUANTILE_SUBSAMPLE).max(1);
        let picks: Vec<usize> = (0..n).step_by(stride).collect();
        let mut dists = Vec::with_capacity(picks.len() * (picks.len() - 1) / 2);
        for (a, &i) in picks.iter().enumerate() {
            for &j in &picks[a + 1..] {
                let d = dist2(cloud.point(i), cloud.point(j)).sqrt();
                if d > 0.0 {
                    dists.push(d);
                }
            }
        }
        if dists.is_empty() {
            return Err(Error::invalid(
                "all subsampled points coincide; no usable distance scale",
            ));
        }
        dists.sort_unstable_by(f64::total_cmp);
        let r_min = order_statistic(&dists, window.lo);
        let r_max = order_statistic(&dists, window.hi);
        let provenance = Provenance::PairQuantileGrid {
            lo: window.lo,
            hi: window.hi,
            r_min,
            r_max,
        };
        if r_max <= r_min * (1.0 + 1e-9) || window.scales == 1 {
            return Ok(ScaleSchedule {
                radii: vec![r_min],
                provenance,
            });
        }
        let mut grid = Self::geometric(r_min, r_max, window.scales)?;
        grid.provenance = provenance;
        Ok(grid)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r_max(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_min(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Same grid with every radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        check_positive("scale factor", factor)?;
        let mut out = self.clone();
        for r in &mut out.radii {
            *r *= factor;
        }
        Ok(out)
    }
}

/// Order statistic at quantile `q`: element `ceil(q * len)` of the sorted
/// slice, 1-based, clamped into range. No interpolation.
pub(crate) fn order_statistic(sorted: &[f64], q: f64) -> f64 {
    let len = sorted.len();
    let idx = ((q * len as f64).ceil() as usize).clamp(1, len);
    sorted[idx - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn geometric_grid_matches_hand_computed_values() {
        let s = ScaleSchedule::geometric(0.01, 0.1, 3).unwrap();
        let r = s.radii();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0], 0.1);
        assert!((r[1] - 0.0316227766).abs() < 1e-9);
        assert_eq!(r[2], 0.01);
    }

    #[test]
    fn geometric_grid_rejects_bad_endpoints() {
        assert!(ScaleSchedule::geometric(0.1, 0.1, 3).is_err());
        assert!(ScaleSchedule::geometric(0.2, 0.1, 3).is_err());
        assert!(ScaleSchedule::geometric(0.0, 0.1, 3).is_err());
        assert!(ScaleSchedule::geometric(0.01, 0.1, 1).is_err());
    }

    #[test]
    fn explicit_requires_strict_decrease() {
        assert!(ScaleSchedule::explicit(vec![0.3, 0.2, 0.1]).is_ok());
        assert!(ScaleSchedule::explicit(vec![0.3, 0.3]).is_err());
        assert!(ScaleSchedule::explicit(vec![0.1, 0.2]).is_err());
        assert!(ScaleSchedule::explicit(vec![]).is_err());
        assert!(ScaleSchedule::explicit(vec![-1.0]).is_err());
    }

    #[test]
    fn volume_rate_value_and_constraint() {
        let s = ScaleSchedule::volume_rate(100, 3.0, 2).unwrap();
        let expect = (100f64.ln() / 100.0).powf(1.0 / 3.0);
        assert!((s.radii()[0] - expect).abs() < 1e-15);
        assert!((s.radii()[0] - 0.3584).abs() < 1e-4);
        // d_prime must exceed the ambient dimension
        assert!(ScaleSchedule::volume_rate(100, 3.0, 3).is_err());
        assert!(ScaleSchedule::volume_rate(1, 3.0, 2).is_err());
    }

    #[test]
    fn correlation_rate_value_and_constraints() {
        let s = ScaleSchedule::correlation_rate(500, 0.5, 2.0).unwrap();
        let expect = (500f64.ln() / 500.0).powf(1.0 / 3.0);
        assert!((s.radii()[0] - expect).abs() < 1e-15);
        assert!(ScaleSchedule::correlation_rate(500, 0.0, 2.0).is_err());
        assert!(ScaleSchedule::correlation_rate(500, 0.5, 0.0).is_err());
    }

    #[test]
    fn pointwise_local_rate_enforces_constant_floor() {
        // floor is 28/(3*delta); delta=2 gives 4.666...
        assert!(ScaleSchedule::pointwise_local_rate(100, 4.0, 2.0, 3.0).is_err());
        let s = ScaleSchedule::pointwise_local_rate(100, 5.0, 2.0, 3.0).unwrap();
        let expect = (5.0 * 100f64.ln() / 100.0).powf(1.0 / 3.0);
        assert!((s.radii()[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn pointwise_uniform_rate_value_and_floor() {
        // with d=1, delta=4.2 the floor is 16/17.64 < 1, so beta=1 is legal
        let s = ScaleSchedule::pointwise_uniform_rate(1000, 1.0, 4.2, 2.0, 1).unwrap();
        let expect = (1000f64.ln() / 1000.0).powf(0.25);
        assert!((s.radii()[0] - expect).abs() < 1e-15);
        assert!((s.radii()[0] - 0.2883).abs() < 1e-4);
        // delta=1, d=1 raises the floor to 16, so beta=1 must be rejected
        assert!(ScaleSchedule::pointwise_uniform_rate(1000, 1.0, 1.0, 2.0, 1).is_err());
    }

    #[test]
    fn data_driven_collapses_on_two_point_clouds() {
        let c = PointCloud::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let s = ScaleSchedule::data_driven(&c, QuantileWindow::new(0.01, 0.25, 20)).unwrap();
        assert_eq!(s.radii(), &[1.0]);
    }

    #[test]
    fn data_driven_rejects_coincident_points() {
        let c = PointCloud::new(vec![vec![0.5], vec![0.5]]).unwrap();
        assert!(ScaleSchedule::data_driven(&c, QuantileWindow::new(0.01, 0.25, 20)).is_err());
    }

    #[test]
    fn order_statistic_is_ceil_based() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(order_statistic(&v, 0.25), 1.0);
        assert_eq!(order_statistic(&v, 0.26), 2.0);
        assert_eq!(order_statistic(&v, 1.0), 4.0);
        assert_eq!(order_statistic(&v, 1e-9), 1.0);
    }

    proptest! {
        #[test]
        fn geometric_grids_are_strictly_decreasing(
            lo in 1e-4f64..0.1, hi in 0.2f64..2.0, count in 2usize..40,
        ) {
            let s = ScaleSchedule::geometric(lo, hi, count).unwrap();
            prop_assert_eq!(s.len(), count);
            prop_assert!(s.radii().windows(2).all(|w| w[0] > w[1]));
            prop_assert_eq!(s.r_max(), hi);
            prop_assert_eq!(s.r_min(), lo);
        }

        #[test]
        fn data_driven_radii_lie_inside_the_distance_range(
            pts in proptest::collection::vec(
                proptest::collection::vec(0.0f64..1.0, 2), 5..60),
            lo in 0.01f64..0.3, span in 0.1f64..0.6,
        ) {
            let c = PointCloud::new(pts).unwrap();
            let window = QuantileWindow::new(lo, (lo + span).min(1.0), 10);
            if let Ok(s) = ScaleSchedule::data_driven(&c, window) {
                prop_assert!(s.r_min() > 0.0);
                prop_assert!(s.r_max() <= c.diameter() + 1e-12);
                prop_assert!(s.radii().windows(2).all(|w| w[0] > w[1]));
            }
        }
    }
}
