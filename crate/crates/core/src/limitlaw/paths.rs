//! Discretised sample paths of the limit processes on the grid `s = j/G`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::LimitError;
use crate::scalar::Scalar;

/// Which process a [`SamplePath`] represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessTag {
    /// Standard Brownian motion `B`.
    Bm,
    /// `B^μ(s) = B(s) − s B(1)`.
    BridgeMu,
    /// Detrended Brownian motion `B^t`.
    DetrendedT,
    /// Ornstein-Uhlenbeck process `Z(s; a)`.
    Ou(f64),
    Composite,
}

impl ProcessTag {
    pub fn label(&self) -> String {
        match self {
            ProcessTag::Bm => "bm".into(),
            ProcessTag::BridgeMu => "bridge_mu".into(),
            ProcessTag::DetrendedT => "detrended_t".into(),
            ProcessTag::Ou(a) => format!("ou(a={a})"),
            ProcessTag::Composite => "composite".into(),
        }
    }
}

/// Values at `s = j/G` for `j = 0..=G`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T> {
    values: Vec<T>,
    tag: ProcessTag,
}

impl<T: Scalar> SamplePath<T> {
    /// Wraps raw grid values; `values.len() = G + 1`.
    pub fn from_values(values: Vec<T>, tag: ProcessTag) -> Result<Self, LimitError> {
        if values.len() < 3 {
            return Err(LimitError::InvalidParameter(format!(
                "a path needs G >= 2, got {} values",
                values.len()
            )));
        }
        Ok(Self { values, tag })
    }

    /// Grid size `G`.
    pub fn grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn tag(&self) -> ProcessTag {
        self.tag
    }

    /// Value at `s = j/G`.
    pub fn at(&self, j: usize) -> T {
        self.values[j]
    }

    fn require_bm(&self) -> Result<(), LimitError> {
        if self.tag != ProcessTag::Bm {
            return Err(LimitError::WrongTag {
                expected: ProcessTag::Bm.label(),
                got: self.tag.label(),
            });
        }
        Ok(())
    }
}

/// Cumulative trapezoid integral `∫_0^{j/G} f`, one entry per grid node.
pub fn cumulative_trapezoid<T: Scalar>(f: &[T]) -> Vec<T> {
    let dx = T::of_usize(f.len() - 1).recip();
    let mut out = Vec::with_capacity(f.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in f.windows(2) {
        acc = acc + (w[0] + w[1]) * T::half() * dx;
        out.push(acc);
    }
    out
}

/// Trapezoid integral of `f` over `[0, 1]`.
pub fn trapezoid<T: Scalar>(f: &[T]) -> T {
    let g = f.len() - 1;
    let inner = f[1..g].iter().fold(T::zero(), |a, &x| a + x);
    (inner + (f[0] + f[g]) * T::half()) / T::of_usize(g)
}

/// Brownian motion via `B(j/G) = Σ_{l≤j} ξ_l / √G`.
pub fn simulate_bm<T, R>(grid: usize, rng: &mut R) -> Result<SamplePath<T>, LimitError>
where
    T: Scalar,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    if grid < 2 {
        return Err(LimitError::InvalidParameter(format!("grid G = {grid} < 2")));
    }
    let scale = T::of_usize(grid).sqrt().recip();
    let mut values = Vec::with_capacity(grid + 1);
    let mut b = T::zero();
    values.push(b);
    for _ in 0..grid {
        let xi: T = StandardNormal.sample(rng);
        b = b + xi * scale;
        values.push(b);
    }
    Ok(SamplePath {
        values,
        tag: ProcessTag::Bm,
    })
}

/// `B^μ(s) = B(s) − s B(1)`.
pub fn to_bridge_mu<T: Scalar>(path: &SamplePath<T>) -> Result<SamplePath<T>, LimitError> {
    path.require_bm()?;
    let g = path.grid();
    let end = path.values[g];
    let values = path
        .values
        .iter()
        .enumerate()
        .map(|(j, &b)| b - T::of_usize(j) / T::of_usize(g) * end)
        .collect();
    Ok(SamplePath {
        values,
        tag: ProcessTag::BridgeMu,
    })
}

/// `B^t(s) = B(s) − (4 − 6s) ∫B − (12s − 6) ∫ r B(r) dr`. Both integrals are
/// exact for the piecewise-linear interpolant of the grid values (for `∫B`
/// this is the trapezoid rule), so linear trends are removed exactly.
pub fn to_detrended_t<T: Scalar>(path: &SamplePath<T>) -> Result<SamplePath<T>, LimitError> {
    path.require_bm()?;
    Ok(SamplePath {
        values: detrend_values(&path.values),
        tag: ProcessTag::DetrendedT,
    })
}

pub(crate) fn detrend_values<T: Scalar>(values: &[T]) -> Vec<T> {
    let g = T::of_usize(values.len() - 1);
    let int_b = trapezoid(values);
    // On [t0, t1]: ∫ r B dr = (t1 − t0)/6 · [(2t0 + t1) B0 + (t0 + 2t1) B1].
    let int_rb = values
        .windows(2)
        .enumerate()
        .fold(T::zero(), |acc, (j, w)| {
            let t0 = T::of_usize(j) / g;
            let t1 = T::of_usize(j + 1) / g;
            acc + ((t0 + t0 + t1) * w[0] + (t0 + t1 + t1) * w[1]) / (T::of(6.0) * g)
        });
    let (four, six, twelve) = (T::of(4.0), T::of(6.0), T::of(12.0));
    values
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let s = T::of_usize(j) / g;
            b - (four - six * s) * int_b - (twelve * s - six) * int_rb
        })
        .collect()
}

/// Ornstein-Uhlenbeck process `Z(s; a) = ∫_0^s e^{a(s−r)} dB(r)` by its
/// exact Gaussian AR(1) recursion on the grid.
pub fn simulate_ou<T, R>(a: f64, grid: usize, rng: &mut R) -> Result<SamplePath<T>, LimitError>
where
    T: Scalar,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    if grid < 2 {
        return Err(LimitError::InvalidParameter(format!("grid G = {grid} < 2")));
    }
    if !a.is_finite() {
        return Err(LimitError::InvalidParameter(format!(
            "OU coefficient a = {a}"
        )));
    }
    let dt = 1.0 / grid as f64;
    let variance = if a == 0.0 {
        dt
    } else {
        (2.0 * a * dt).exp_m1() / (2.0 * a)
    };
    let decay = T::of((a * dt).exp());
    let sd = T::of(variance.sqrt());
    let mut values = Vec::with_capacity(grid + 1);
    let mut z = T::zero();
    values.push(z);
    for _ in 0..grid {
        let xi: T = StandardNormal.sample(rng);
        z = decay * z + sd * xi;
        values.push(z);
    }
    Ok(SamplePath {
        values,
        tag: ProcessTag::Ou(a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn bm_starts_at_zero_and_has_unit_variance() {
        let paths: Vec<SamplePath<f64>> = (0..100_000)
            .map(|r| simulate_bm(20, &mut stream_rng(11, r)).unwrap())
            .collect();
        assert!(paths.iter().all(|p| p.at(0) == 0.0 && p.grid() == 20));
        let ends: Vec<f64> = paths.iter().map(|p| p.at(20)).collect();
        let mids: Vec<f64> = paths.iter().map(|p| p.at(10)).collect();
        let (_, v) = moments(&ends);
        assert!((v - 1.0).abs() < 0.02, "var B(1) = {v}");
        let n = ends.len() as f64;
        let (me, mm) = (moments(&ends).0, moments(&mids).0);
        let cov = ends
            .iter()
            .zip(&mids)
            .map(|(a, b)| (a - me) * (b - mm))
            .sum::<f64>()
            / (n - 1.0);
        assert!((cov - 0.5).abs() < 0.02, "cov = {cov}");
    }

    #[test]
    fn bridge_is_pinned_with_variance_s_one_minus_s() {
        let mut mids = Vec::new();
        for r in 0..100_000 {
            let b = simulate_bm::<f64, _>(20, &mut stream_rng(12, r)).unwrap();
            let br = to_bridge_mu(&b).unwrap();
            assert_eq!(br.at(0), 0.0);
            assert!(br.at(20).abs() < 1e-12);
            mids.push(br.at(10));
        }
        let (_, v) = moments(&mids);
        assert!((v - 0.25).abs() < 0.01, "var = {v}");
    }

    #[test]
    fn transforms_need_bm() {
        let ou = simulate_ou::<f64, _>(-1.0, 10, &mut stream_rng(1, 0)).unwrap();
        assert!(matches!(
            to_bridge_mu(&ou),
            Err(LimitError::WrongTag { .. })
        ));
        assert!(matches!(
            to_detrended_t(&ou),
            Err(LimitError::WrongTag { .. })
        ));
    }

    #[test]
    fn detrending_annihilates_lines() {
        let zero = SamplePath::from_values(vec![0.0f64; 101], ProcessTag::Bm).unwrap();
        assert!(to_detrended_t(&zero)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));

        let b = simulate_bm::<f64, _>(200, &mut stream_rng(5, 0)).unwrap();
        let shifted: Vec<f64> = b
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| v + 0.7 - 2.3 * j as f64 / 200.0)
            .collect();
        let a = to_detrended_t(&b).unwrap();
        let c = to_detrended_t(&SamplePath::from_values(shifted, ProcessTag::Bm).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(c.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn detrended_has_zero_mean() {
        let g = 20;
        let mut sums = vec![0.0; g + 1];
        let reps = 100_000;
        for r in 0..reps {
            let b = simulate_bm::<f64, _>(g, &mut stream_rng(13, r)).unwrap();
            for (s, v) in sums.iter_mut().zip(to_detrended_t(&b).unwrap().values()) {
                *s += v;
            }
        }
        for s in sums {
            assert!((s / reps as f64).abs() < 0.02);
        }
    }

    #[test]
    fn ou_marginal_variance() {
        let a = -15.0;
        let ends: Vec<f64> = (0..100_000)
            .map(|r| {
                let p = simulate_ou::<f64, _>(a, 50, &mut stream_rng(14, r)).unwrap();
                assert_eq!(p.at(0), 0.0);
                p.at(50)
            })
            .collect();
        let (_, v) = moments(&ends);
        let expected = (1.0 - (-30.0f64).exp()) / 30.0;
        assert!((v - expected).abs() < 0.002, "var = {v}");
    }

    #[test]
    fn ou_with_zero_coefficient_is_bm() {
        let z = simulate_ou::<f64, _>(0.0, 30, &mut stream_rng(3, 9)).unwrap();
        let b = simulate_bm::<f64, _>(30, &mut stream_rng(3, 9)).unwrap();
        for (x, y) in z.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_precondition() {
        assert!(simulate_bm::<f64, _>(1, &mut stream_rng(0, 0)).is_err());
        assert!(simulate_ou::<f32, _>(1.0, 1, &mut stream_rng(0, 0)).is_err());
    }
}
