//! Truncated stopping times `R_N` (detect I(0)) and `R̃_N` (detect I(1)).

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MonitorError, StatError};
use crate::kernels::KernelSpec;
use crate::scalar::Scalar;
use crate::stats::{
    apply_residual_mode, u_stat, u_tilde_stat_scaled, LagRule, ResidualMode, ResidualWindow,
    StreamingStats, TimeSeriesWindow, VarianceScaling,
};

/// What the monitoring procedure is looking for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Uses `U_N`; stops when `U_N(n/N) < c`.
    #[serde(rename = "i0")]
    DetectI0,
    /// Uses `Ũ_N`; stops when `Ũ_N(n/N) > c`.
    #[serde(rename = "i1")]
    DetectI1,
}

impl Direction {
    /// Whether `value` triggers a signal at limit `c` (strict inequality).
    pub fn crosses<T: Scalar>(self, value: T, c: T) -> bool {
        match self {
            Direction::DetectI0 => value < c,
            Direction::DetectI1 => value > c,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::DetectI0 => "i0",
            Direction::DetectI1 => "i1",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "i0" | "detect_i0" => Ok(Direction::DetectI0),
            "i1" | "detect_i1" => Ok(Direction::DetectI1),
            other => Err(format!("unknown direction `{other}` (i0 or i1)")),
        }
    }
}

/// Rule-of-thumb start of monitoring: `max(2, ⌊1.5 h⌋)`.
pub fn default_start(bandwidth: f64) -> usize {
    ((1.5 * bandwidth).floor() as usize).max(2)
}

/// Parameters of one monitoring run.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig<T> {
    pub direction: Direction,
    pub control_limit: T,
    pub horizon: usize,
    pub start: usize,
    pub kernel: KernelSpec<T>,
    /// Only used by [`Direction::DetectI1`].
    pub lag: LagRule,
    pub residual: ResidualMode,
    pub residual_window: ResidualWindow,
    /// Normalisation of the variance estimate in `Ũ_N`.
    pub variance_scaling: VarianceScaling,
}

impl<T: Scalar> MonitorConfig<T> {
    /// Config with the rule-of-thumb start `k = max(2, ⌊1.5 h⌋)` (capped at
    /// `N`), lag rule `m4` and raw observations.
    pub fn new(
        direction: Direction,
        control_limit: T,
        horizon: usize,
        kernel: KernelSpec<T>,
    ) -> Self {
        let start = default_start(kernel.bandwidth().as_f64()).min(horizon.max(1));
        Self {
            direction,
            control_limit,
            horizon,
            start,
            kernel,
            lag: LagRule::M4,
            residual: ResidualMode::None,
            residual_window: ResidualWindow::Full,
            variance_scaling: VarianceScaling::Horizon,
        }
    }

    pub fn with_start(mut self, start: usize) -> Self {
        self.start = start;
        self
    }

    /// `k = ⌊κ N⌋`.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.start = (kappa * self.horizon as f64 + 1e-9).floor() as usize;
        self
    }

    pub fn with_lag(mut self, lag: LagRule) -> Self {
        self.lag = lag;
        self
    }

    pub fn with_residual(mut self, mode: ResidualMode, window: ResidualWindow) -> Self {
        self.residual = mode;
        self.residual_window = window;
        self
    }

    pub fn with_variance_scaling(mut self, scaling: VarianceScaling) -> Self {
        self.variance_scaling = scaling;
        self
    }

    pub fn with_control_limit(mut self, c: T) -> Self {
        self.control_limit = c;
        self
    }

    /// `κ = k / N`.
    pub fn kappa(&self) -> f64 {
        self.start as f64 / self.horizon as f64
    }

    /// `ζ = N / h`.
    pub fn zeta(&self) -> f64 {
        self.horizon as f64 / self.kernel.bandwidth().as_f64()
    }

    pub fn validate(&self) -> Result<(), MonitorError> {
        if self.horizon == 0 {
            return Err(MonitorError::Config("horizon N must be positive".into()));
        }
        if self.start < 1 || self.start > self.horizon {
            return Err(MonitorError::Config(format!(
                "start k = {} outside 1..={}",
                self.start, self.horizon
            )));
        }
        if !(self.control_limit > T::zero()) || !self.control_limit.is_finite() {
            return Err(MonitorError::Config(format!(
                "control limit must be positive, got {}",
                self.control_limit
            )));
        }
        Ok(())
    }
}

/// Outcome of a monitoring run.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalResult<T> {
    /// `R_N`; equals `N` when no crossing occurred.
    pub stop_index: usize,
    pub signaled: bool,
    /// `(n, statistic)` for every evaluated `n = k..=stop_index`.
    pub trace: Vec<(usize, T)>,
}

/// Online monitoring state. Feed observations with [`Monitor::observe`]
/// until it returns a result.
#[derive(Debug, Clone)]
pub struct Monitor<T> {
    cfg: MonitorConfig<T>,
    stats: StreamingStats<T>,
    trace: Vec<(usize, T)>,
    finished: bool,
}

impl<T: Scalar> Monitor<T> {
    pub fn new(cfg: MonitorConfig<T>) -> Result<Self, MonitorError> {
        cfg.validate()?;
        let capacity = cfg.horizon - cfg.start + 1;
        Ok(Self {
            stats: StreamingStats::new(cfg.horizon),
            trace: Vec::with_capacity(capacity),
            cfg,
            finished: false,
        })
    }

    pub fn config(&self) -> &MonitorConfig<T> {
        &self.cfg
    }

    /// Number of observations consumed.
    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    fn statistic(&mut self) -> Result<T, StatError> {
        let n = self.stats.len();
        let expanding = self.cfg.residual != ResidualMode::None
            && self.cfg.residual_window == ResidualWindow::Expanding;
        if expanding {
            let resid = apply_residual_mode(self.stats.window().observations(), self.cfg.residual)?;
            let w = TimeSeriesWindow::from_observations(&resid, self.cfg.horizon)?;
            return match self.cfg.direction {
                Direction::DetectI0 => u_stat(&w, n, &self.cfg.kernel),
                Direction::DetectI1 => u_tilde_stat_scaled(
                    &w,
                    n,
                    &self.cfg.kernel,
                    self.cfg.lag,
                    self.cfg.variance_scaling,
                ),
            };
        }
        match self.cfg.direction {
            Direction::DetectI0 => self.stats.u_stat(&self.cfg.kernel),
            Direction::DetectI1 => self.stats.u_tilde_stat_scaled(
                &self.cfg.kernel,
                self.cfg.lag,
                self.cfg.variance_scaling,
            ),
        }
    }

    /// Consumes `Y_{n+1}`. Returns the final result once the procedure
    /// signals or reaches the horizon.
    pub fn observe(&mut self, y: T) -> Result<Option<SignalResult<T>>, MonitorError> {
        if self.finished {
            return Err(MonitorError::Config("monitor already stopped".into()));
        }
        self.stats.push(y)?;
        let n = self.stats.len();
        if n < self.cfg.start {
            return Ok(None);
        }
        let value = self.statistic()?;
        self.trace.push((n, value));
        if self.cfg.direction.crosses(value, self.cfg.control_limit) {
            return Ok(Some(self.finish(n, true)));
        }
        if n == self.cfg.horizon {
            return Ok(Some(self.finish(n, false)));
        }
        Ok(None)
    }

    fn finish(&mut self, stop_index: usize, signaled: bool) -> SignalResult<T> {
        self.finished = true;
        SignalResult {
            stop_index,
            signaled,
            trace: std::mem::take(&mut self.trace),
        }
    }
}

/// Runs the configured stopping rule over a complete series of length `N`.
pub fn run_monitor<T: Scalar>(
    series: &[T],
    cfg: &MonitorConfig<T>,
) -> Result<SignalResult<T>, MonitorError> {
    cfg.validate()?;
    if series.len() != cfg.horizon {
        return Err(MonitorError::Config(format!(
            "series has {} observations but the horizon is N = {}",
            series.len(),
            cfg.horizon
        )));
    }
    let prepared;
    let mut effective = cfg.clone();
    let data = if cfg.residual != ResidualMode::None && cfg.residual_window == ResidualWindow::Full
    {
        prepared = apply_residual_mode(series, cfg.residual)?;
        effective.residual = ResidualMode::None;
        &prepared[..]
    } else {
        series
    };
    let mut monitor = Monitor::new(effective)?;
    for &y in data {
        if let Some(result) = monitor.observe(y)? {
            return Ok(result);
        }
    }
    unreachable!("monitor stops at the horizon")
}

/// Online variant of [`run_monitor`]: pulls observations one at a time and
/// stops consuming at the signal. Residual modes require the expanding
/// residual window. A source that ends after `k` but before `N` yields an
/// unsignaled result at the last delivered index.
pub fn monitor_stream<T: Scalar, I>(
    source: I,
    cfg: &MonitorConfig<T>,
) -> Result<SignalResult<T>, MonitorError>
where
    I: IntoIterator<Item = T>,
{
    if cfg.residual != ResidualMode::None && cfg.residual_window == ResidualWindow::Full {
        return Err(MonitorError::Config(
            "streaming needs residual_window = expanding when residuals are used".into(),
        ));
    }
    let mut monitor = Monitor::new(cfg.clone())?;
    for y in source {
        if let Some(result) = monitor.observe(y)? {
            return Ok(result);
        }
    }
    let got = monitor.len();
    if got < cfg.start {
        return Err(MonitorError::SourceExhausted {
            got,
            start: cfg.start,
        });
    }
    Ok(monitor.finish(got, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cfg(direction: Direction, c: f64, n: usize, h: f64) -> MonitorConfig<f64> {
        MonitorConfig::new(direction, c, n, KernelSpec::epanechnikov(h).unwrap())
    }

    fn random_walk(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let mut y = 0.0;
        (0..n)
            .map(|_| {
                y += rng.sample::<f64, _>(StandardNormal);
                y
            })
            .collect()
    }

    #[test]
    fn default_start_rule() {
        assert_eq!(default_start(50.0), 75);
        assert_eq!(default_start(1.0), 2);
        let c = cfg(Direction::DetectI0, 1.0, 250, 125.0);
        assert_eq!(c.start, 187);
        assert_eq!(c.clone().with_kappa(0.3).start, 75);
    }

    #[test]
    fn alternating_series_signals_at_first_crossing() {
        let y: Vec<f64> = (1..=100)
            .map(|i| 0.0001 * if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let c = cfg(Direction::DetectI0, 0.05, 100, 10.0);
        let res = run_monitor(&y, &c).unwrap();
        let w = TimeSeriesWindow::from_observations(&y, 100).unwrap();
        let expected = (c.start..=100)
            .find(|&n| u_stat(&w, n, &c.kernel).unwrap() < 0.05)
            .unwrap();
        assert!(res.signaled);
        assert_eq!(res.stop_index, expected);
        assert_eq!(res.stop_index, c.start);
    }

    #[test]
    fn no_crossing_reports_horizon() {
        let y = random_walk(120, 1);
        let probe = run_monitor(&y, &cfg(Direction::DetectI0, 1e-300, 120, 10.0)).unwrap();
        let min = probe
            .trace
            .iter()
            .map(|t| t.1)
            .fold(f64::INFINITY, f64::min);
        let below = cfg(Direction::DetectI0, min * 0.5, 120, 10.0);
        let res = run_monitor(&y, &below).unwrap();
        assert_eq!(res.stop_index, 120);
        assert!(!res.signaled);
        assert_eq!(res.trace.len(), 120 - below.start + 1);

        let above = cfg(Direction::DetectI0, 1e9, 120, 10.0);
        let res = run_monitor(&y, &above).unwrap();
        assert_eq!(res.stop_index, above.start);
        assert!(res.signaled);
    }

    #[test]
    fn ties_do_not_stop() {
        let y = random_walk(60, 2);
        let base = cfg(Direction::DetectI0, 1e9, 60, 6.0);
        let first = run_monitor(&y, &base).unwrap().trace[0].1;
        let tie = base.clone().with_control_limit(first);
        assert_ne!(run_monitor(&y, &tie).unwrap().stop_index, base.start);
        let tie1 = cfg(Direction::DetectI1, 1.0, 60, 6.0);
        let first1 = run_monitor(&y, &tie1).unwrap().trace[0].1;
        let res = run_monitor(&y, &tie1.clone().with_control_limit(first1)).unwrap();
        assert_ne!(res.stop_index, tie1.start);
    }

    #[test]
    fn stream_matches_batch_and_stops_consuming() {
        let y = random_walk(200, 3);
        let c = cfg(Direction::DetectI1, 2.0, 200, 20.0);
        let batch = run_monitor(&y, &c).unwrap();
        let mut consumed = 0usize;
        let stream = monitor_stream(y.iter().copied().inspect(|_| consumed += 1), &c).unwrap();
        assert_eq!(batch, stream);
        assert!(batch.signaled);
        assert_eq!(consumed, batch.stop_index);
    }

    #[test]
    fn stream_errors() {
        let c = cfg(Direction::DetectI0, 1.0, 50, 5.0);
        assert_eq!(
            monitor_stream(std::iter::empty(), &c),
            Err(MonitorError::SourceExhausted { got: 0, start: 7 })
        );
        let full = c
            .clone()
            .with_residual(ResidualMode::Demeaned, ResidualWindow::Full);
        assert!(matches!(
            monitor_stream(vec![1.0; 50], &full),
            Err(MonitorError::Config(_))
        ));
    }

    #[test]
    fn expanding_residuals_stream_equals_batch() {
        let y = random_walk(80, 4);
        let c = cfg(Direction::DetectI0, 0.2, 80, 8.0)
            .with_residual(ResidualMode::Detrended, ResidualWindow::Expanding);
        assert_eq!(
            run_monitor(&y, &c).unwrap(),
            monitor_stream(y.clone(), &c).unwrap()
        );
    }

    #[test]
    fn invalid_configs() {
        let y = vec![1.0; 10];
        assert!(run_monitor(&y, &cfg(Direction::DetectI0, 1.0, 11, 2.0)).is_err());
        assert!(run_monitor(&y, &cfg(Direction::DetectI0, -1.0, 10, 2.0)).is_err());
        assert!(run_monitor(&y, &cfg(Direction::DetectI0, 1.0, 10, 2.0).with_start(0)).is_err());
        assert!(run_monitor(&y, &cfg(Direction::DetectI0, 1.0, 10, 2.0).with_start(11)).is_err());
    }

    #[test]
    fn degenerate_series_propagates() {
        let y = vec![0.0; 20];
        let res = run_monitor(&y, &cfg(Direction::DetectI0, 1.0, 20, 2.0));
        assert!(matches!(
            res,
            Err(MonitorError::Stat(StatError::DegenerateDenominator { .. }))
        ));
    }

    #[test]
    fn scale_invariant_decisions() {
        let y = random_walk(150, 5);
        let scaled: Vec<f64> = y.iter().map(|v| -3.7 * v).collect();
        for d in [Direction::DetectI0, Direction::DetectI1] {
            let c = cfg(d, 0.3, 150, 15.0);
            let a = run_monitor(&y, &c).unwrap();
            let b = run_monitor(&scaled, &c).unwrap();
            assert_eq!((a.stop_index, a.signaled), (b.stop_index, b.signaled));
        }
    }

    #[test]
    fn monotone_in_control_limit() {
        for seed in 0..10 {
            let y = random_walk(150, 100 + seed);
            let limits = [0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
            let stops: Vec<usize> = limits
                .iter()
                .map(|&c| {
                    run_monitor(&y, &cfg(Direction::DetectI0, c, 150, 15.0))
                        .unwrap()
                        .stop_index
                })
                .collect();
            assert!(stops.windows(2).all(|w| w[0] >= w[1]), "{stops:?}");
            let limits1 = [0.5, 1.0, 2.0, 5.0, 10.0];
            let stops1: Vec<usize> = limits1
                .iter()
                .map(|&c| {
                    run_monitor(&y, &cfg(Direction::DetectI1, c, 150, 15.0))
                        .unwrap()
                        .stop_index
                })
                .collect();
            assert!(stops1.windows(2).all(|w| w[0] <= w[1]), "{stops1:?}");
        }
    }
}
