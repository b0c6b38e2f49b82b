//! Limit processes, the limit laws of the detection statistics and
//! calibration of control limits.

mod calibrate;
mod functional;
mod paths;

pub use calibrate::{
    bootstrap_std_error, calibrate, path_extrema, quantile_type7, simulate_path, start_index,
    CalibrationResult, BOOTSTRAP_RESAMPLES,
};
pub use functional::{
    eval_functional, functional_trajectory, Drift, FunctionalKind, LimitFunctionalSpec,
};
pub use paths::{
    cumulative_trapezoid, simulate_bm, simulate_ou, to_bridge_mu, to_detrended_t, trapezoid,
    ProcessTag, SamplePath,
};
