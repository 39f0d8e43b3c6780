//! Intrinsic dimension estimation for finite point samples.
//!
//! A point cloud sampled from some compact set carries several computable
//! proxies for that set's dimension: packing numbers, occupied grid boxes,
//! pairwise contact fractions, per-point mass concentration, and the volume
//! of the cloud's neighborhood. This crate implements estimators built on
//! each of them, radius schedules that shrink at the rates those estimators
//! need, and a replicated experiment runner with fully deterministic seeding.
//!
//! ```
//! use dimest::{GeneratorKind, GeneratorSpec, Method, ScaleSchedule};
//!
//! let cloud = GeneratorSpec::new(GeneratorKind::Hypercube, 3, 2, 7)
//!     .sample(1000)
//!     .unwrap();
//! let schedule = ScaleSchedule::data_driven(&cloud, Method::Correlation.default_window()).unwrap();
//! let estimate = dimest::correlation_dimension(&cloud, &schedule).unwrap();
//! assert_eq!(estimate.rounded, 2);
//! ```

mod cloud;
mod error;
mod estimators;
mod experiment;
mod generators;
mod parallel;
mod schedule;
pub mod seeding;
mod volume;

pub use cloud::{BoundingBox, PointCloud};
pub use error::{Error, Result};
pub use estimators::{
    box_counting_dimension, capacity_dimension, capacity_dimension_two_scale,
    correlation_dimension, loglog_slope, nearest_integer, pair_fraction, pointwise_dimension,
    pointwise_dimension_at, DimensionEstimate, Method, SlopeDiagnostics, COUNTING_WINDOW,
    CORRELATION_WINDOW, POINTWISE_QUANTILE, POINTWISE_WINDOW,
};
pub use experiment::{
    cd_invariance_check, estimate_on_cloud, noise_sweep, run_experiment, summarize,
    EstimatorOutcome, EstimatorSummary, ExperimentResult, ExperimentSpec, InvarianceReport,
    ReplicateFailure, ReplicateRecord, ScheduleSpec, DEFAULT_MC_BUDGET,
};
pub use generators::{add_noise, GeneratorKind, GeneratorSpec, NoiseSpec};
pub use parallel::configure_threads;
pub use schedule::{Provenance, QuantileWindow, ScaleSchedule};
pub use volume::{
    capacity_volume_gap, empirical_volume, empirical_volume_profile, exact_volume_1d,
    fit_condition, fit_volume_polynomial, polynomial_volume_dimension, unit_ball_volume,
    volume_dimension, write_volume_profile, FitCondition, GapReport, VolumeEstimate,
    VolumeMethod, VolumePolynomial, MAX_BALL_DIM,
};
