//! Control limits as Monte Carlo quantiles of path-wise extrema.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::LimitError;
use crate::limitlaw::functional::{evaluate_range, FunctionalKind, LimitFunctionalSpec};
use crate::limitlaw::paths::{simulate_bm, simulate_ou, to_bridge_mu, to_detrended_t, SamplePath};
use crate::rng::{derive_seed, stream_rng, BOOTSTRAP_FAMILY};
use crate::scalar::Scalar;
use crate::stats::ResidualMode;
use crate::stopping::Direction;

/// Number of bootstrap resamples behind the standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<T> {
    pub control_limit: T,
    pub direction: Direction,
    pub alpha: f64,
    pub kappa: f64,
    pub replications: usize,
    pub grid: usize,
    /// Bootstrap standard error of the quantile.
    pub std_error: T,
    pub seed: u64,
}

/// Simulates the driving path of `spec` (BM, its residual transform, or OU).
pub fn simulate_path<T, R>(
    spec: &LimitFunctionalSpec<T>,
    grid: usize,
    rng: &mut R,
) -> Result<SamplePath<T>, LimitError>
where
    T: Scalar,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    if let FunctionalKind::UZ { a } = spec.kind {
        return simulate_ou(a, grid, rng);
    }
    let b = simulate_bm(grid, rng)?;
    match spec.residual {
        ResidualMode::None => Ok(b),
        ResidualMode::Demeaned => to_bridge_mu(&b),
        ResidualMode::Detrended => to_detrended_t(&b),
    }
}

/// First grid index with `j/G ≥ κ`.
pub fn start_index(kappa: f64, grid: usize) -> usize {
    ((kappa * grid as f64 - 1e-9).ceil() as usize).clamp(1, grid)
}

/// Path-wise extrema over `{j/G ≥ κ}` for replications `0..reps`; replication
/// `r` draws from stream `r` of `seed`, so the output does not depend on the
/// thread count.
pub fn path_extrema<T>(
    spec: &LimitFunctionalSpec<T>,
    direction: Direction,
    kappa: f64,
    reps: usize,
    grid: usize,
    seed: u64,
) -> Result<Vec<T>, LimitError>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    spec.validate()?;
    let first = start_index(kappa, grid);
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep);
            let path = simulate_path(spec, grid, &mut rng)?;
            let traj = evaluate_range(spec, &path, first, grid)?;
            let init = traj[0];
            Ok(match direction {
                Direction::DetectI0 => traj.into_iter().fold(init, T::min),
                Direction::DetectI1 => traj.into_iter().fold(init, T::max),
            })
        })
        .collect()
}

/// Type-7 quantile of sorted data: `x_(⌊h⌋) + (h − ⌊h⌋)(x_(⌊h⌋+1) − x_(⌊h⌋))`
/// with `h = (n − 1)p` (0-based order statistics).
pub fn quantile_type7<T: Scalar>(sorted: &[T], p: f64) -> T {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + T::of(h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Type-7 quantile by selection, reordering `data`.
fn quantile_select<T: Scalar>(data: &mut [T], p: f64) -> T {
    let n = data.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite extrema");
    let (_, &mut x_lo, upper) = data.select_nth_unstable_by(lo, cmp);
    match upper.iter().copied().min_by(cmp) {
        Some(x_hi) => x_lo + T::of(h - lo as f64) * (x_hi - x_lo),
        None => x_lo,
    }
}

fn quantile_level(direction: Direction, alpha: f64) -> f64 {
    match direction {
        Direction::DetectI0 => alpha,
        Direction::DetectI1 => 1.0 - alpha,
    }
}

/// Bootstrap standard error of the type-7 quantile at level `p`.
pub fn bootstrap_std_error<T: Scalar>(extrema: &[T], p: f64, seed: u64) -> T {
    let boot_seed = derive_seed(seed, BOOTSTRAP_FAMILY);
    let n = extrema.len();
    let qs: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(boot_seed, b);
            let mut sample: Vec<T> = (0..n).map(|_| extrema[rng.random_range(0..n)]).collect();
            quantile_select(&mut sample, p).as_f64()
        })
        .collect();
    let m = qs.iter().sum::<f64>() / qs.len() as f64;
    let var = qs.iter().map(|q| (q - m).powi(2)).sum::<f64>() / (qs.len() - 1) as f64;
    T::of(var.sqrt())
}

/// Control limit `c`: the `α`-quantile of path minima (detect I(0)) or the
/// `(1 − α)`-quantile of path maxima (detect I(1)).
pub fn calibrate<T>(
    spec: &LimitFunctionalSpec<T>,
    direction: Direction,
    alpha: f64,
    kappa: f64,
    reps: usize,
    grid: usize,
    seed: u64,
) -> Result<CalibrationResult<T>, LimitError>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    let bad = |m: String| Err(LimitError::InvalidParameter(m));
    if !(alpha > 0.0 && alpha < 1.0) {
        return bad(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return bad(format!("kappa must lie in (0, 1), got {kappa}"));
    }
    if reps < 1000 {
        return bad(format!("at least 1000 replications required, got {reps}"));
    }
    if grid < 100 {
        return bad(format!("grid must be at least 100, got {grid}"));
    }
    let mut extrema = path_extrema(spec, direction, kappa, reps, grid, seed)?;
    let p = quantile_level(direction, alpha);
    let std_error = bootstrap_std_error(&extrema, p, seed);
    extrema.sort_by(|a, b| a.partial_cmp(b).expect("finite extrema"));
    Ok(CalibrationResult {
        control_limit: quantile_type7(&extrema, p),
        direction,
        alpha,
        kappa,
        replications: reps,
        grid,
        std_error,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;

    fn u1() -> LimitFunctionalSpec<f64> {
        LimitFunctionalSpec::new(FunctionalKind::U1, 5.0, KernelFamily::Epanechnikov).unwrap()
    }

    #[test]
    fn type7_examples() {
        let x = [1.0f64, 2.0, 3.0, 4.0];
        assert_eq!(quantile_type7(&x, 0.0), 1.0);
        assert_eq!(quantile_type7(&x, 1.0), 4.0);
        assert_eq!(quantile_type7(&x, 0.5), 2.5);
        assert!((quantile_type7(&x, 0.1) - 1.3).abs() < 1e-12);
        let mut y = [4.0f64, 1.0, 3.0, 2.0];
        assert!((quantile_select(&mut y, 0.1) - 1.3).abs() < 1e-12);
        assert_eq!(quantile_select(&mut [5.0], 0.9), 5.0);
    }

    #[test]
    fn start_index_rounds_up() {
        assert_eq!(start_index(0.3, 1000), 300);
        assert_eq!(start_index(0.3001, 1000), 301);
        assert_eq!(start_index(1e-6, 100), 1);
    }

    #[test]
    fn median_of_extrema() {
        let sp = u1();
        let r = calibrate(&sp, Direction::DetectI0, 0.5, 0.3, 1001, 100, 3).unwrap();
        let mut e = path_extrema(&sp, Direction::DetectI0, 0.3, 1001, 100, 3).unwrap();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r.control_limit, e[500]);
        assert!(r.std_error > 0.0);
    }

    #[test]
    fn quantile_monotone_in_alpha() {
        let sp = u1();
        let lo = calibrate(&sp, Direction::DetectI0, 0.01, 0.3, 1000, 100, 8).unwrap();
        let hi = calibrate(&sp, Direction::DetectI0, 0.10, 0.3, 1000, 100, 8).unwrap();
        assert!(lo.control_limit <= hi.control_limit);
        let sp2 =
            LimitFunctionalSpec::new(FunctionalKind::U2Tilde, 5.0, KernelFamily::Epanechnikov)
                .unwrap();
        let lo = calibrate(&sp2, Direction::DetectI1, 0.01, 0.3, 1000, 100, 8).unwrap();
        let hi = calibrate(&sp2, Direction::DetectI1, 0.10, 0.3, 1000, 100, 8).unwrap();
        assert!(lo.control_limit >= hi.control_limit);
    }

    #[test]
    fn independent_of_thread_count() {
        let sp = u1();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| calibrate(&sp, Direction::DetectI0, 0.05, 0.3, 1000, 100, 21).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn rejects_bad_parameters() {
        let sp = u1();
        assert!(calibrate(&sp, Direction::DetectI0, 0.0, 0.3, 1000, 100, 1).is_err());
        assert!(calibrate(&sp, Direction::DetectI0, 0.05, 1.0, 1000, 100, 1).is_err());
        assert!(calibrate(&sp, Direction::DetectI0, 0.05, 0.3, 999, 100, 1).is_err());
        assert!(calibrate(&sp, Direction::DetectI0, 0.05, 0.3, 1000, 99, 1).is_err());
    }

    #[test]
    fn residual_paths_are_transformed() {
        let sp = LimitFunctionalSpec::new(FunctionalKind::U2Tilde, 5.0, KernelFamily::Epanechnikov)
            .unwrap()
            .with_residual(ResidualMode::Demeaned)
            .unwrap();
        let p: SamplePath<f64> = simulate_path(&sp, 100, &mut stream_rng(1, 0)).unwrap();
        assert!(p.at(100).abs() < 1e-12);
    }
}
