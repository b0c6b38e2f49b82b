//! JSON run configuration and its merge with command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use unitroot_monitor::{
    DgpSpec, Direction, LagRule, ResidualMode, ResidualWindow, VarianceScaling,
};

use crate::CliError;

/// Monte Carlo settings used when a control limit has to be calibrated.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSettings {
    pub reps: usize,
    pub grid: usize,
    pub seed: u64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            reps: 50_000,
            grid: 1000,
            seed: 42,
        }
    }
}

/// Contents of a `--config` file. Every field is optional; flags given on
/// the command line take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub direction: Option<Direction>,
    pub control_limit: Option<f64>,
    pub horizon: Option<usize>,
    pub start: Option<usize>,
    pub kappa: Option<f64>,
    pub kernel: Option<String>,
    pub bandwidth: Option<f64>,
    pub lag: Option<LagRule>,
    pub residual: Option<ResidualMode>,
    pub residual_window: Option<ResidualWindow>,
    pub variance_scaling: Option<VarianceScaling>,
    pub zeta: Option<f64>,
    pub alpha: Option<f64>,
    pub cache: Option<PathBuf>,
    pub calibration: Option<CalibrationSettings>,
    pub dgp: Option<DgpSpec>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}
