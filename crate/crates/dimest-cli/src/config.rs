//! Flat TOML configuration: run sizes at the top level, one optional
//! section per estimator family. Built-in defaults are overridden by the
//! config file, which is overridden by command-line flags.

use std::path::Path;

use serde::Deserialize;

use dimest::{Error, Method, Result, ScheduleSpec};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub sample_size: Option<usize>,
    pub replicates: Option<usize>,
    /// Monte Carlo draws for the volume-backed estimators.
    pub mc_budget: Option<u64>,
    /// Window for the correlation estimator (also used by the single-scale
    /// volume estimator to place its radius).
    pub correlation: Option<WindowSection>,
    pub pointwise: Option<PointwiseSection>,
    /// Window shared by the box-counting and capacity estimators.
    pub counting: Option<WindowSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub scales: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointwiseSection {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub scales: Option<usize>,
    pub quantile: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    fn window_fields(&self, method: Method) -> Option<(Option<f64>, Option<f64>, Option<usize>)> {
        match method {
            Method::Correlation | Method::Volume | Method::PolyVolume => self
                .correlation
                .as_ref()
                .map(|s| (s.lo, s.hi, s.scales)),
            Method::Pointwise => self.pointwise.as_ref().map(|s| (s.lo, s.hi, s.scales)),
            Method::BoxCounting | Method::Capacity => {
                self.counting.as_ref().map(|s| (s.lo, s.hi, s.scales))
            }
        }
    }

    /// Schedule for `method` with config values filled over the built-in
    /// default window; `None` when the config does not touch it.
    pub fn schedule_override(&self, method: Method) -> Option<ScheduleSpec> {
        let (lo, hi, scales) = self.window_fields(method)?;
        let base = method.default_window();
        Some(ScheduleSpec::Window {
            lo: lo.unwrap_or(base.lo),
            hi: hi.unwrap_or(base.hi),
            scales: scales.unwrap_or(base.scales),
        })
    }

    pub fn quantile(&self) -> Option<f64> {
        self.pointwise.as_ref().and_then(|s| s.quantile)
    }
}
