//! Sequential monitoring for stationarity and unit roots with
//! kernel-weighted variance-ratio statistics.
//!
//! The statistical core (`stats`, `stopping`, `kernels`, `limitlaw`) is
//! generic over the floating-point type through [`Scalar`]. The aliases
//! below fix it to `f64`, which is what the simulation drivers (`dgp`,
//! `experiments`) and the file formats (`io`) use.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dgp;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernels;
pub mod limitlaw;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod stopping;

pub use dgp::{CpVariant, DgpKind, DgpSpec, Innovation, TrendShape};
pub use error::{
    DgpError, ExperimentError, IoError, KernelError, LimitError, MonitorError, StatError,
};
pub use experiments::{
    replicate_table, run_changepoint, run_size_power, ExperimentReport, TableId,
};
pub use io::{load_or_calibrate, read_series, write_series, CalibrationCache};
pub use kernels::LagWeight;
pub use limitlaw::{calibrate, Drift, FunctionalKind};
pub use scalar::Scalar;
pub use stats::{LagRule, ResidualMode, ResidualWindow, VarianceScaling};
pub use stopping::{monitor_stream, run_monitor, Direction};

pub type KernelFamily = kernels::KernelFamily<f64>;
pub type KernelSpec = kernels::KernelSpec<f64>;
pub type CustomKernel = kernels::CustomKernel<f64>;
pub type TimeSeriesWindow = stats::TimeSeriesWindow<f64>;
pub type StreamingStats = stats::StreamingStats<f64>;
pub type MonitorConfig = stopping::MonitorConfig<f64>;
pub type Monitor = stopping::Monitor<f64>;
pub type SignalResult = stopping::SignalResult<f64>;
pub type SamplePath = limitlaw::SamplePath<f64>;
pub type LimitFunctionalSpec = limitlaw::LimitFunctionalSpec<f64>;
pub type CalibrationResult = limitlaw::CalibrationResult<f64>;
