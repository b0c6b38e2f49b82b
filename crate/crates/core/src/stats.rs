//! Detection statistics.
//!
//! `U_N(n/N)` is the kernel-weighted variance ratio
//!
//! ```text
//!   [n^-3 Σ_{i≤n} S_i² K_h(i − n)] / [n^-2 Σ_{j≤n} Y_j²]
//! ```
//!
//! with `S_i` the partial sums of the observations. `Ũ_N(n/N)` replaces the
//! denominator by the Newey-West long-run variance and scales the numerator
//! by `N^-1`. Both are computed from data observed up to time `n` only.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::StatError;
use crate::kernels::LagWeight;
use crate::scalar::{CompensatedSum, Scalar};

/// Weighted sums with more terms than this use compensated summation.
pub const COMPENSATION_THRESHOLD: usize = 10_000;

/// Observations `Y_1..Y_n` of a series with horizon `N`, together with the
/// running partial sums `S_i` and sums of squares `Q_i`.
#[derive(Debug, Clone)]
pub struct TimeSeriesWindow<T> {
    horizon: usize,
    obs: Vec<T>,
    partial: Vec<T>,
    squares: Vec<T>,
    partial_acc: CompensatedSum<T>,
    squares_acc: CompensatedSum<T>,
}

impl<T: Scalar> TimeSeriesWindow<T> {
    pub fn new(horizon: usize) -> Self {
        let mut partial = Vec::with_capacity(horizon + 1);
        let mut squares = Vec::with_capacity(horizon + 1);
        partial.push(T::zero());
        squares.push(T::zero());
        Self {
            horizon,
            obs: Vec::with_capacity(horizon),
            partial,
            squares,
            partial_acc: CompensatedSum::new(),
            squares_acc: CompensatedSum::new(),
        }
    }

    pub fn from_observations(obs: &[T], horizon: usize) -> Result<Self, StatError> {
        let mut w = Self::new(horizon);
        for &y in obs {
            w.push(y)?;
        }
        Ok(w)
    }

    /// Appends `Y_{n+1}`.
    pub fn push(&mut self, y: T) -> Result<(), StatError> {
        if self.obs.len() >= self.horizon {
            return Err(StatError::HorizonExceeded(self.horizon));
        }
        if !y.is_finite() {
            return Err(StatError::NonFinite {
                index: self.obs.len() + 1,
                value: y.as_f64(),
            });
        }
        self.obs.push(y);
        self.partial_acc.add(y);
        self.squares_acc.add(y * y);
        self.partial.push(self.partial_acc.value());
        self.squares.push(self.squares_acc.value());
        Ok(())
    }

    /// Number of observations so far.
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn observations(&self) -> &[T] {
        &self.obs
    }

    /// `Y_i`, 1-based.
    pub fn observation(&self, i: usize) -> T {
        self.obs[i - 1]
    }

    /// `S_i`, with `S_0 = 0`.
    pub fn partial_sum(&self, i: usize) -> T {
        self.partial[i]
    }

    /// `Q_n = Σ_{i≤n} Y_i²`.
    pub fn sum_squares(&self, n: usize) -> T {
        self.squares[n]
    }

    fn check_index(&self, n: usize) -> Result<(), StatError> {
        if n > self.len() {
            return Err(StatError::IndexOutOfRange { n, len: self.len() });
        }
        Ok(())
    }

    /// `Σ_{i≤n} S_i² K_h(i − n)`, restricted to the kernel support.
    pub fn weighted_square_partial_sums<W: LagWeight<T>>(&self, n: usize, weights: &W) -> T {
        let lo = match weights.radius() {
            Some(r) => {
                let reach = r.floor().to_usize().unwrap_or(usize::MAX);
                if reach >= n {
                    1
                } else {
                    n - reach
                }
            }
            None => 1,
        };
        let terms = (lo..=n).map(|i| {
            let s = self.partial[i];
            s * s * weights.weight(T::of_usize(i) - T::of_usize(n))
        });
        if n + 1 - lo > COMPENSATION_THRESHOLD {
            terms.collect::<CompensatedSum<T>>().value()
        } else {
            terms.fold(T::zero(), |acc, x| acc + x)
        }
    }

    /// `Σ_{i=1}^{n−k} Y_i Y_{i+k}`.
    pub fn cross_product(&self, n: usize, k: usize) -> T {
        if k >= n {
            return T::zero();
        }
        self.obs[..n - k]
            .iter()
            .zip(&self.obs[k..n])
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }
}

/// `U_N(n/N)`. Returns 0 for `n = 0`.
pub fn u_stat<T: Scalar, W: LagWeight<T>>(
    w: &TimeSeriesWindow<T>,
    n: usize,
    weights: &W,
) -> Result<T, StatError> {
    w.check_index(n)?;
    if n == 0 {
        return Ok(T::zero());
    }
    let q = w.sum_squares(n);
    if q <= T::zero() {
        return Err(StatError::DegenerateDenominator { n });
    }
    let a = w.weighted_square_partial_sums(n, weights);
    // [n^-3 a] / [n^-2 q]
    Ok(a / (T::of_usize(n) * q))
}

/// Bartlett weight `1 − k/m`.
pub fn bartlett<T: Scalar>(k: usize, m: usize) -> T {
    T::one() - T::of_usize(k) / T::of_usize(m)
}

fn newey_west_from_parts<T: Scalar>(
    squares: T,
    m: usize,
    horizon: usize,
    cross: impl Fn(usize) -> T,
) -> T {
    let scale = T::of_usize(horizon).recip();
    let mut total = squares * scale;
    // the k = m term has weight exactly zero
    for k in 1..m {
        total = total + T::two() * bartlett::<T>(k, m) * cross(k) * scale;
    }
    total
}

/// Newey-West long-run variance `s²_{Nm}(n/N)` with Bartlett weights,
/// cross products truncated to the observed prefix. `N` is the window
/// horizon.
pub fn newey_west<T: Scalar>(w: &TimeSeriesWindow<T>, n: usize, m: usize) -> Result<T, StatError> {
    w.check_index(n)?;
    if m >= n {
        return Err(StatError::InvalidLag { m, n });
    }
    Ok(newey_west_from_parts(
        w.sum_squares(n),
        m,
        w.horizon(),
        |k| w.cross_product(n, k),
    ))
}

/// Normalisation of the sums inside the long-run variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceScaling {
    /// Divide by the horizon `N` (the defining formula of `s²_{Nm}`).
    #[default]
    Horizon,
    /// Divide by the number of observations `n` seen so far, as in the usual
    /// Newey-West estimator. Equals `Horizon` scaled by `N/n`.
    Elapsed,
}

impl VarianceScaling {
    pub fn label(self) -> &'static str {
        match self {
            VarianceScaling::Horizon => "horizon",
            VarianceScaling::Elapsed => "elapsed",
        }
    }

    fn adjust<T: Scalar>(self, s2: T, n: usize, horizon: usize) -> T {
        match self {
            VarianceScaling::Horizon => s2,
            VarianceScaling::Elapsed => s2 * T::of_usize(horizon) / T::of_usize(n),
        }
    }
}

impl FromStr for VarianceScaling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "horizon" => Ok(VarianceScaling::Horizon),
            "elapsed" => Ok(VarianceScaling::Elapsed),
            other => Err(format!(
                "unknown variance scaling `{other}` (expected horizon or elapsed)"
            )),
        }
    }
}

/// `Ũ_N(n/N)`.
pub fn u_tilde_stat<T: Scalar, W: LagWeight<T>>(
    w: &TimeSeriesWindow<T>,
    n: usize,
    weights: &W,
    lag: LagRule,
) -> Result<T, StatError> {
    u_tilde_stat_scaled(w, n, weights, lag, VarianceScaling::Horizon)
}

/// `Ũ_N(n/N)` with a choice of normalisation for the variance estimate.
pub fn u_tilde_stat_scaled<T: Scalar, W: LagWeight<T>>(
    w: &TimeSeriesWindow<T>,
    n: usize,
    weights: &W,
    lag: LagRule,
    scaling: VarianceScaling,
) -> Result<T, StatError> {
    w.check_index(n)?;
    if n == 0 {
        return Ok(T::zero());
    }
    let m = lag.resolve(n);
    let denom = scaling.adjust(newey_west(w, n, m)?, n, w.horizon());
    if denom <= T::zero() {
        return Err(StatError::DegenerateDenominator { n });
    }
    let num = w.weighted_square_partial_sums(n, weights) / T::of_usize(w.horizon());
    Ok(num / denom)
}

/// Lag truncation rule for the Newey-West estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagRule {
    /// `⌊0.75 n^{1/3} + 0.5⌋`
    M3,
    /// `⌊4 (n/100)^{1/4} + 0.5⌋`
    M4,
    /// `⌊12 (n/100)^{1/4} + 0.5⌋`
    M12,
    Fixed(usize),
}

impl LagRule {
    /// Lag count at sample size `n`, clamped to `n − 1`.
    pub fn resolve(self, n: usize) -> usize {
        let x = n as f64;
        let m = match self {
            LagRule::M3 => (0.75 * x.cbrt() + 0.5).floor() as usize,
            LagRule::M4 => (4.0 * (x / 100.0).powf(0.25) + 0.5).floor() as usize,
            LagRule::M12 => (12.0 * (x / 100.0).powf(0.25) + 0.5).floor() as usize,
            LagRule::Fixed(m) => m,
        };
        m.min(n.saturating_sub(1))
    }

    pub fn label(self) -> String {
        match self {
            LagRule::M3 => "m3".into(),
            LagRule::M4 => "m4".into(),
            LagRule::M12 => "m12".into(),
            LagRule::Fixed(m) => format!("fixed:{m}"),
        }
    }
}

/// `resolve_lag(lag, n)`.
pub fn resolve_lag(lag: LagRule, n: usize) -> usize {
    lag.resolve(n)
}

impl FromStr for LagRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "m3" => Ok(LagRule::M3),
            "m4" => Ok(LagRule::M4),
            "m12" => Ok(LagRule::M12),
            other => {
                let digits = other.strip_prefix("fixed:").unwrap_or(other);
                digits
                    .parse::<usize>()
                    .map(LagRule::Fixed)
                    .map_err(|_| format!("unknown lag rule `{s}` (m3, m4, m12 or fixed:<m>)"))
            }
        }
    }
}

/// Residual transform applied before monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    #[default]
    None,
    Demeaned,
    Detrended,
}

impl FromStr for ResidualMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ResidualMode::None),
            "demeaned" => Ok(ResidualMode::Demeaned),
            "detrended" => Ok(ResidualMode::Detrended),
            other => Err(format!("unknown residual mode `{other}`")),
        }
    }
}

/// Which observations the residual fit uses during monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualWindow {
    /// Fit once on the complete series `1..N`.
    #[default]
    Full,
    /// Refit on `1..n` at every monitoring step.
    Expanding,
}

impl FromStr for ResidualWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(ResidualWindow::Full),
            "expanding" => Ok(ResidualWindow::Expanding),
            other => Err(format!("unknown residual window `{other}`")),
        }
    }
}

/// Demeaned or detrended (OLS on `(1, i)`) residuals of `series`.
pub fn apply_residual_mode<T: Scalar>(
    series: &[T],
    mode: ResidualMode,
) -> Result<Vec<T>, StatError> {
    let n = series.len();
    match mode {
        ResidualMode::None => Ok(series.to_vec()),
        ResidualMode::Demeaned => {
            if n < 2 {
                return Err(StatError::InsufficientData {
                    mode: "demeaned",
                    needed: 2,
                    got: n,
                });
            }
            let mean = series
                .iter()
                .copied()
                .collect::<CompensatedSum<T>>()
                .value()
                / T::of_usize(n);
            Ok(series.iter().map(|&y| y - mean).collect())
        }
        ResidualMode::Detrended => {
            if n < 3 {
                return Err(StatError::InsufficientData {
                    mode: "detrended",
                    needed: 3,
                    got: n,
                });
            }
            let nf = T::of_usize(n);
            let mean = series
                .iter()
                .copied()
                .collect::<CompensatedSum<T>>()
                .value()
                / nf;
            let centre = T::of_usize(n + 1) / T::two();
            let mut sxy = CompensatedSum::new();
            let mut sxx = CompensatedSum::new();
            for (idx, &y) in series.iter().enumerate() {
                let x = T::of_usize(idx + 1) - centre;
                sxy.add(x * (y - mean));
                sxx.add(x * x);
            }
            let slope = sxy.value() / sxx.value();
            Ok(series
                .iter()
                .enumerate()
                .map(|(idx, &y)| y - mean - slope * (T::of_usize(idx + 1) - centre))
                .collect())
        }
    }
}

/// Incremental evaluation of `U_N` and `Ũ_N` at the latest time point.
///
/// Autocovariance sums are maintained for every lag requested so far, so a
/// monitoring run costs `O(h + m)` per step for compactly supported kernels.
#[derive(Debug, Clone)]
pub struct StreamingStats<T> {
    window: TimeSeriesWindow<T>,
    cross: Vec<T>,
}

impl<T: Scalar> StreamingStats<T> {
    pub fn new(horizon: usize) -> Self {
        Self {
            window: TimeSeriesWindow::new(horizon),
            cross: Vec::new(),
        }
    }

    pub fn push(&mut self, y: T) -> Result<(), StatError> {
        self.window.push(y)?;
        let n = self.window.len();
        for (k0, c) in self.cross.iter_mut().enumerate() {
            let k = k0 + 1;
            if n > k {
                *c = *c + self.window.observation(n - k) * y;
            }
        }
        Ok(())
    }

    pub fn window(&self) -> &TimeSeriesWindow<T> {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    fn ensure_lags(&mut self, m: usize) {
        let n = self.window.len();
        while self.cross.len() < m {
            let k = self.cross.len() + 1;
            self.cross.push(self.window.cross_product(n, k));
        }
    }

    /// `U_N(n/N)` at the current length `n`.
    pub fn u_stat<W: LagWeight<T>>(&self, weights: &W) -> Result<T, StatError> {
        u_stat(&self.window, self.window.len(), weights)
    }

    /// `Ũ_N(n/N)` at the current length `n`.
    pub fn u_tilde_stat<W: LagWeight<T>>(
        &mut self,
        weights: &W,
        lag: LagRule,
    ) -> Result<T, StatError> {
        self.u_tilde_stat_scaled(weights, lag, VarianceScaling::Horizon)
    }

    /// As [`StreamingStats::u_tilde_stat`] with a choice of variance normalisation.
    pub fn u_tilde_stat_scaled<W: LagWeight<T>>(
        &mut self,
        weights: &W,
        lag: LagRule,
        scaling: VarianceScaling,
    ) -> Result<T, StatError> {
        let n = self.window.len();
        if n == 0 {
            return Ok(T::zero());
        }
        let m = lag.resolve(n);
        self.ensure_lags(m);
        let cross = &self.cross;
        let horizon = self.window.horizon();
        let s2 = newey_west_from_parts(self.window.sum_squares(n), m, horizon, |k| cross[k - 1]);
        let denom = scaling.adjust(s2, n, horizon);
        if denom <= T::zero() {
            return Err(StatError::DegenerateDenominator { n });
        }
        let num = self.window.weighted_square_partial_sums(n, weights)
            / T::of_usize(self.window.horizon());
        Ok(num / denom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Double loop straight from the defining formula.
    fn brute_u(y: &[f64], n: usize, k: &KernelSpec<f64>) -> f64 {
        let mut num = 0.0;
        for i in 1..=n {
            let s: f64 = y[..i].iter().sum();
            num += s * s * k.scaled_weight(i as f64 - n as f64);
        }
        let den: f64 = y[..n].iter().map(|v| v * v).sum();
        (num / (n as f64).powi(3)) / (den / (n as f64).powi(2))
    }

    #[test]
    fn u_stat_hand_example() {
        let w = TimeSeriesWindow::from_observations(&[1.0, 1.0, 1.0], 3).unwrap();
        let k = KernelSpec::epanechnikov(2.0).unwrap();
        assert_relative_eq!(u_stat(&w, 3, &k).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(brute_u(&[1.0, 1.0, 1.0], 3, &k), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn u_stat_gaussian_matches_double_loop() {
        let y = [0.1, -0.2, 0.3, 0.05, -0.15];
        let w = TimeSeriesWindow::from_observations(&y, 5).unwrap();
        let k = KernelSpec::gaussian(2.0).unwrap();
        let got = u_stat(&w, 5, &k).unwrap();
        assert_relative_eq!(got, brute_u(&y, 5, &k), max_relative = 1e-12);
    }

    #[test]
    fn u_stat_zero_index_and_degenerate() {
        let w = TimeSeriesWindow::from_observations(&[0.0, 0.0, 2.0], 3).unwrap();
        let k = KernelSpec::epanechnikov(2.0).unwrap();
        assert_eq!(u_stat(&w, 0, &k).unwrap(), 0.0);
        assert_eq!(
            u_stat(&w, 2, &k),
            Err(StatError::DegenerateDenominator { n: 2 })
        );
        assert!(u_stat(&w, 3, &k).is_ok());
        assert!(matches!(
            u_stat(&w, 4, &k),
            Err(StatError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn u_stat_is_independent_of_horizon() {
        let y = [0.4, -1.2, 0.7, 2.0, 0.1, -0.3];
        let k = KernelSpec::gaussian(3.0).unwrap();
        let a = TimeSeriesWindow::from_observations(&y, 6).unwrap();
        let b = TimeSeriesWindow::from_observations(&y, 600).unwrap();
        for n in 1..=6 {
            assert_eq!(u_stat(&a, n, &k).unwrap(), u_stat(&b, n, &k).unwrap());
        }
    }

    #[test]
    fn newey_west_examples() {
        let w = TimeSeriesWindow::from_observations(&[1.0, 1.0, 1.0, 1.0], 4).unwrap();
        assert_eq!(newey_west(&w, 4, 0).unwrap(), 1.0);
        assert_relative_eq!(newey_west(&w, 4, 2).unwrap(), 1.75, epsilon = 1e-15);
        // independent evaluation of the m = 2 case
        let oracle = 4.0 / 4.0 + 2.0 * ((1.0 - 0.5) * 3.0 / 4.0 + 0.0 * 2.0 / 4.0);
        assert_eq!(oracle, 1.75);
        assert_eq!(
            newey_west(&w, 4, 4),
            Err(StatError::InvalidLag { m: 4, n: 4 })
        );
    }

    #[test]
    fn newey_west_m1_is_variance_only() {
        let y = [0.3, -1.0, 2.5, 0.2];
        let w = TimeSeriesWindow::from_observations(&y, 10).unwrap();
        assert_eq!(newey_west(&w, 4, 1).unwrap(), newey_west(&w, 4, 0).unwrap());
    }

    #[test]
    fn u_tilde_hand_example() {
        let w = TimeSeriesWindow::from_observations(&[1.0, 1.0, 1.0], 3).unwrap();
        let k = KernelSpec::epanechnikov(2.0).unwrap();
        let got = u_tilde_stat(&w, 3, &k, LagRule::Fixed(0)).unwrap();
        assert_relative_eq!(got, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn u_tilde_degenerate_prefix() {
        let w = TimeSeriesWindow::from_observations(&[0.0, 0.0], 2).unwrap();
        let k = KernelSpec::epanechnikov(2.0).unwrap();
        assert!(matches!(
            u_tilde_stat(&w, 2, &k, LagRule::M4),
            Err(StatError::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn lag_rules() {
        assert_eq!(LagRule::M4.resolve(100), 4);
        assert_eq!(LagRule::M12.resolve(100), 12);
        let direct = (0.75f64 * 250f64.powf(1.0 / 3.0) + 0.5).floor() as usize;
        assert_eq!(direct, 5);
        assert_eq!(LagRule::M3.resolve(250), direct);
        assert_eq!(LagRule::Fixed(9).resolve(5), 4);
        assert_eq!(LagRule::M12.resolve(1), 0);
        assert_eq!("m12".parse::<LagRule>().unwrap(), LagRule::M12);
        assert_eq!("fixed:3".parse::<LagRule>().unwrap(), LagRule::Fixed(3));
        assert_eq!("7".parse::<LagRule>().unwrap(), LagRule::Fixed(7));
        assert!("m5".parse::<LagRule>().is_err());
    }

    #[test]
    fn residual_examples() {
        let y = [1.0f64, 2.0, 3.0];
        assert_eq!(
            apply_residual_mode(&y, ResidualMode::Demeaned).unwrap(),
            vec![-1.0, 0.0, 1.0]
        );
        for r in apply_residual_mode(&y, ResidualMode::Detrended).unwrap() {
            assert!(r.abs() < 1e-15);
        }
        assert_eq!(
            apply_residual_mode(&y, ResidualMode::None).unwrap(),
            y.to_vec()
        );
        assert!(apply_residual_mode(&[1.0f64], ResidualMode::Demeaned).is_err());
        assert!(apply_residual_mode(&[1.0f64, 2.0], ResidualMode::Detrended).is_err());
    }

    #[test]
    fn window_rejects_overflow_and_nan() {
        let mut w = TimeSeriesWindow::<f64>::new(1);
        assert!(w.push(f64::NAN).is_err());
        w.push(1.0).unwrap();
        assert_eq!(w.push(1.0), Err(StatError::HorizonExceeded(1)));
    }

    #[test]
    fn f32_statistics() {
        let w = TimeSeriesWindow::<f32>::from_observations(&[1.0, 1.0, 1.0], 3).unwrap();
        let k = KernelSpec::<f32>::epanechnikov(2.0).unwrap();
        assert!((u_stat(&w, 3, &k).unwrap() - 0.5).abs() < 1e-6);
    }

    fn series() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 4..60)
            .prop_filter("non-degenerate", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    #[test]
    fn elapsed_scaling_rescales_by_n_over_horizon() {
        let y = [0.3, -1.2, 0.8, 0.1, -0.4, 1.5, 0.2, -0.9];
        let w = TimeSeriesWindow::from_observations(&y, 20).unwrap();
        let k = KernelSpec::epanechnikov(3.0).unwrap();
        let mut st = StreamingStats::new(20);
        for (i, &v) in y.iter().enumerate() {
            st.push(v).unwrap();
            let n = i + 1;
            let plain = u_tilde_stat(&w, n, &k, LagRule::M4).unwrap();
            let el = u_tilde_stat_scaled(&w, n, &k, LagRule::M4, VarianceScaling::Elapsed).unwrap();
            assert_relative_eq!(el, plain * n as f64 / 20.0, max_relative = 1e-12);
            let streamed = st
                .u_tilde_stat_scaled(&k, LagRule::M4, VarianceScaling::Elapsed)
                .unwrap();
            assert_relative_eq!(streamed, el, max_relative = 1e-12);
        }
        assert_eq!(
            "Elapsed".parse::<VarianceScaling>().unwrap(),
            VarianceScaling::Elapsed
        );
        assert!("n".parse::<VarianceScaling>().is_err());
    }

    proptest! {
        #[test]
        fn scale_invariance(y in series(), c in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0], h in 1.0f64..20.0) {
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            let a = TimeSeriesWindow::from_observations(&y, y.len()).unwrap();
            let b = TimeSeriesWindow::from_observations(&scaled, y.len()).unwrap();
            let n = y.len();
            for k in [KernelSpec::gaussian(h).unwrap(), KernelSpec::epanechnikov(h).unwrap()] {
                let (ua, ub) = (u_stat(&a, n, &k).unwrap(), u_stat(&b, n, &k).unwrap());
                prop_assert!((ua - ub).abs() <= 1e-12 * ua.abs().max(1e-300));
                for lag in [LagRule::M3, LagRule::M4, LagRule::M12, LagRule::Fixed(2)] {
                    let (ta, tb) = (u_tilde_stat(&a, n, &k, lag).unwrap(), u_tilde_stat(&b, n, &k, lag).unwrap());
                    prop_assert!((ta - tb).abs() <= 1e-12 * ta.abs().max(1e-300));
                }
            }
        }

        #[test]
        fn bartlett_nonnegative(y in prop::collection::vec(-10.0f64..10.0, 2..80), m in 0usize..40) {
            let w = TimeSeriesWindow::from_observations(&y, y.len()).unwrap();
            let m = m.min(y.len() - 1);
            prop_assert!(newey_west(&w, y.len(), m).unwrap() >= -1e-12);
        }

        #[test]
        fn streaming_matches_batch(y in series(), h in 1.0f64..30.0) {
            let k = KernelSpec::epanechnikov(h).unwrap();
            let batch = TimeSeriesWindow::from_observations(&y, y.len()).unwrap();
            let mut stream = StreamingStats::new(y.len());
            for (i, &v) in y.iter().enumerate() {
                stream.push(v).unwrap();
                let n = i + 1;
                if batch.sum_squares(n) == 0.0 { continue; }
                let a = u_stat(&batch, n, &k).unwrap();
                let b = stream.u_stat(&k).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * a.abs());
                let ta = u_tilde_stat(&batch, n, &k, LagRule::M12).unwrap();
                let tb = stream.u_tilde_stat(&k, LagRule::M12).unwrap();
                prop_assert!((ta - tb).abs() <= 1e-10 * ta.abs());
            }
        }

        #[test]
        fn residuals_are_orthogonal(y in prop::collection::vec(-100.0f64..100.0, 3..100)) {
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            let d = apply_residual_mode(&y, ResidualMode::Demeaned).unwrap();
            prop_assert!(d.iter().sum::<f64>().abs() <= 1e-9 * norm);
            let t = apply_residual_mode(&y, ResidualMode::Detrended).unwrap();
            let n = y.len() as f64;
            prop_assert!(t.iter().sum::<f64>().abs() <= 1e-9 * norm * n);
            let dot: f64 = t.iter().enumerate().map(|(i, r)| (i + 1) as f64 * r).sum();
            prop_assert!(dot.abs() <= 1e-9 * norm * n * n);
        }
    }
}
