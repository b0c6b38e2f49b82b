//! Monte Carlo size, power, run-length and delay experiments.

use rayon::prelude::*;
use serde::Serialize;

use crate::dgp::DgpSpec;
use crate::error::ExperimentError;
use crate::rng::stream_rng;
use crate::scalar::CompensatedSum;
use crate::stats::{LagRule, VarianceScaling};
use crate::stopping::{run_monitor, Direction, MonitorConfig};

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub value: f64,
    pub std_error: f64,
}

impl Metric {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().copied().collect::<CompensatedSum<f64>>().value() / n;
        let var = if xs.len() > 1 {
            xs.iter()
                .map(|x| (x - mean).powi(2))
                .collect::<CompensatedSum<f64>>()
                .value()
                / (n - 1.0)
        } else {
            0.0
        };
        Some(Self {
            value: mean,
            std_error: (var / n).sqrt(),
        })
    }
}

/// Settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dgp: DgpSpec,
    pub direction: Direction,
    pub control_limit: f64,
    pub horizon: usize,
    pub start: usize,
    pub kernel: String,
    pub bandwidth: f64,
    pub lag: Option<LagRule>,
    pub variance_scaling: Option<VarianceScaling>,
    pub replications: usize,
    pub seed: u64,
}

/// Aggregated outcome of `R` monitoring runs.
///
/// `arl`/`carl` are means of the stop index `R_N` (non-signals count as `N`).
/// `run_length_arl`/`run_length_carl` measure the same runs from the start of
/// monitoring, i.e. `R_N − k` with non-signals counting as `N − k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub signals: usize,
    pub rejection_rate: Metric,
    pub arl: Metric,
    pub carl: Option<Metric>,
    pub run_length_arl: Metric,
    pub run_length_carl: Option<Metric>,
    pub change_point: Option<usize>,
    /// `E max(R_N − ⌊Nϑ⌋, 0)`.
    pub delay: Option<Metric>,
    /// `E(R_N | signal) − ⌊Nϑ⌋`.
    pub conditional_delay: Option<Metric>,
    /// `E(R_N − ⌊Nϑ⌋ | signal, R_N ≥ ⌊Nϑ⌋)`: delay among signals raised
    /// after the change.
    pub post_change_delay: Option<Metric>,
}

impl ExperimentReport {
    fn from_stops(
        config: ExperimentConfig,
        stops: &[(usize, bool)],
        change_point: Option<usize>,
    ) -> Self {
        let r = stops.len() as f64;
        let n = config.horizon as f64;
        let k = config.start as f64;
        let signals = stops.iter().filter(|s| s.1).count();
        let p = signals as f64 / r;
        let all: Vec<f64> = stops.iter().map(|s| s.0 as f64).collect();
        let hit: Vec<f64> = stops.iter().filter(|s| s.1).map(|s| s.0 as f64).collect();
        let shift = |xs: &[f64], by: f64| xs.iter().map(|x| x - by).collect::<Vec<_>>();
        let arl = Metric::of(&all).expect("at least one replication");
        let carl = Metric::of(&hit);
        let (delay, conditional_delay, post_change_delay) = match change_point {
            Some(c) => {
                let c = c as f64;
                let d: Vec<f64> = all.iter().map(|x| (x - c).max(0.0)).collect();
                let post: Vec<f64> = hit.iter().filter(|&&x| x >= c).map(|x| x - c).collect();
                (
                    Metric::of(&d),
                    carl.map(|m| Metric {
                        value: m.value - c,
                        ..m
                    }),
                    Metric::of(&post),
                )
            }
            None => (None, None, None),
        };
        let report = Self {
            signals,
            rejection_rate: Metric {
                value: p,
                std_error: (p * (1.0 - p) / r).sqrt(),
            },
            arl,
            carl,
            run_length_arl: Metric::of(&shift(&all, k)).expect("at least one replication"),
            run_length_carl: Metric::of(&shift(&hit, k)),
            change_point,
            delay,
            conditional_delay,
            post_change_delay,
            config,
        };
        debug_assert!(report.arl_identity_residual().abs() < 1e-9 * n);
        report
    }

    /// `ARL − [CARL·p + N(1 − p)]`, zero up to rounding. Runs that stop at
    /// `N` by crossing are counted as signals.
    pub fn arl_identity_residual(&self) -> f64 {
        let p = self.rejection_rate.value;
        let n = self.config.horizon as f64;
        let carl = self.carl.map_or(0.0, |m| m.value);
        self.arl.value - (carl * p + n * (1.0 - p))
    }

    /// The same identity for run lengths measured from `k`.
    pub fn run_length_identity_residual(&self) -> f64 {
        let p = self.rejection_rate.value;
        let span = (self.config.horizon - self.config.start) as f64;
        let carl = self.run_length_carl.map_or(0.0, |m| m.value);
        self.run_length_arl.value - (carl * p + span * (1.0 - p))
    }
}

fn simulate_stops(
    dgp: &DgpSpec,
    cfg: &MonitorConfig<f64>,
    reps: usize,
    seed: u64,
) -> Result<Vec<(usize, bool)>, ExperimentError> {
    if dgp.n != cfg.horizon {
        return Err(ExperimentError::Invalid(format!(
            "series length {} differs from the horizon N = {}",
            dgp.n, cfg.horizon
        )));
    }
    dgp.validate()?;
    cfg.validate()?;
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep);
            let y = dgp.generate(&mut rng)?;
            let res = run_monitor(&y, cfg)?;
            Ok((res.stop_index, res.signaled))
        })
        .collect()
}

fn echo(dgp: &DgpSpec, cfg: &MonitorConfig<f64>, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        dgp: *dgp,
        direction: cfg.direction,
        control_limit: cfg.control_limit,
        horizon: cfg.horizon,
        start: cfg.start,
        kernel: cfg.kernel.family().name().to_string(),
        bandwidth: cfg.kernel.bandwidth(),
        lag: (cfg.direction == Direction::DetectI1).then_some(cfg.lag),
        variance_scaling: (cfg.direction == Direction::DetectI1).then_some(cfg.variance_scaling),
        replications: reps,
        seed,
    }
}

/// Rejection rate, ARL and CARL over `reps` runs; run `r` uses stream `r`
/// of `seed`.
pub fn run_size_power(
    dgp: &DgpSpec,
    cfg: &MonitorConfig<f64>,
    reps: usize,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    if reps < 100 {
        return Err(ExperimentError::Invalid(format!(
            "at least 100 replications required, got {reps}"
        )));
    }
    let stops = simulate_stops(dgp, cfg, reps, seed)?;
    Ok(ExperimentReport::from_stops(
        echo(dgp, cfg, reps, seed),
        &stops,
        None,
    ))
}

/// As [`run_size_power`], adding the delay metrics relative to the change
/// point of `dgp`.
pub fn run_changepoint(
    dgp: &DgpSpec,
    cfg: &MonitorConfig<f64>,
    reps: usize,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let change = dgp
        .change_point()
        .ok_or_else(|| ExperimentError::Invalid("the process has no change point".into()))?;
    if reps < 100 {
        return Err(ExperimentError::Invalid(format!(
            "at least 100 replications required, got {reps}"
        )));
    }
    let stops = simulate_stops(dgp, cfg, reps, seed)?;
    Ok(ExperimentReport::from_stops(
        echo(dgp, cfg, reps, seed),
        &stops,
        Some(change),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{CpVariant, DgpKind};
    use crate::kernels::KernelSpec;

    fn cfg(direction: Direction, c: f64) -> MonitorConfig<f64> {
        MonitorConfig::new(direction, c, 100, KernelSpec::epanechnikov(20.0).unwrap())
    }

    #[test]
    fn identities_hold() {
        let dgp = DgpSpec::new(
            DgpKind::Arma11 {
                phi: 0.9,
                beta: 0.0,
            },
            100,
        )
        .unwrap();
        let rep = run_size_power(&dgp, &cfg(Direction::DetectI0, 0.2), 300, 1).unwrap();
        assert!(rep.signals > 0 && rep.signals < 300);
        assert!(rep.arl_identity_residual().abs() < 1e-9);
        assert!(rep.run_length_identity_residual().abs() < 1e-9);
        let k = rep.config.start as f64;
        assert!((rep.arl.value - rep.run_length_arl.value - k).abs() < 1e-9);
        let p = rep.rejection_rate.value;
        assert!((rep.rejection_rate.std_error - (p * (1.0 - p) / 300.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn extreme_limits() {
        let dgp = DgpSpec::new(
            DgpKind::Arma11 {
                phi: 0.5,
                beta: 0.0,
            },
            100,
        )
        .unwrap();
        let never = run_size_power(&dgp, &cfg(Direction::DetectI0, 1e-12), 100, 2).unwrap();
        assert_eq!(never.signals, 0);
        assert_eq!(never.arl.value, 100.0);
        assert!(never.carl.is_none());
        let always = run_size_power(&dgp, &cfg(Direction::DetectI0, 1e12), 100, 2).unwrap();
        assert_eq!(always.rejection_rate.value, 1.0);
        assert_eq!(always.carl.unwrap().value, 30.0);
        assert_eq!(always.run_length_arl.value, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let dgp = DgpSpec::new(
            DgpKind::Arma11 {
                phi: 1.0,
                beta: 0.0,
            },
            100,
        )
        .unwrap();
        let c = cfg(Direction::DetectI1, 1.0);
        let run = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| run_size_power(&dgp, &c, 200, 5).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn delays() {
        let dgp = DgpSpec::new(
            DgpKind::CpI0ToI1 {
                theta: 0.5,
                phi_pre: 0.6,
                variant: CpVariant::ArSwitch,
            },
            100,
        )
        .unwrap();
        let rep = run_changepoint(&dgp, &cfg(Direction::DetectI1, 1.5), 200, 3).unwrap();
        assert_eq!(rep.change_point, Some(50));
        let carl = rep.carl.unwrap().value;
        assert!((rep.conditional_delay.unwrap().value - (carl - 50.0)).abs() < 1e-12);
        assert!(rep.delay.unwrap().value >= 0.0);
        let post = rep.post_change_delay.unwrap().value;
        assert!(post >= 0.0 && post >= rep.conditional_delay.unwrap().value - 1e-12);
        let plain = DgpSpec::new(
            DgpKind::Arma11 {
                phi: 0.5,
                beta: 0.0,
            },
            100,
        )
        .unwrap();
        assert!(run_changepoint(&plain, &cfg(Direction::DetectI1, 1.5), 200, 3).is_err());
        assert!(run_size_power(&plain, &cfg(Direction::DetectI1, 1.5), 99, 3).is_err());
    }
}
