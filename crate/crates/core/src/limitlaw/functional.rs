//! Limit functionals of the detection statistics, evaluated by trapezoid
//! quadrature on the path grid.

use std::fmt;
use std::str::FromStr;

use crate::error::LimitError;
use crate::kernels::KernelFamily;
use crate::limitlaw::paths::{cumulative_trapezoid, ProcessTag, SamplePath};
use crate::scalar::Scalar;
use crate::stats::{ResidualMode, VarianceScaling};
use crate::stopping::Direction;

/// Integrated drift `μ(s) = ∫_0^s m0(r − ϑ) dr` of the local-trend model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drift {
    Zero,
    /// `m0(x) = slope · x` for `x ≥ 0` and 0 before the change at `theta`.
    TruncatedLinear {
        slope: f64,
        theta: f64,
    },
}

impl Drift {
    /// `μ(s)`.
    pub fn integral(&self, s: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::TruncatedLinear { slope, theta } => {
                if s <= theta {
                    0.0
                } else {
                    0.5 * slope * (s - theta).powi(2)
                }
            }
        }
    }
}

/// Which limit law to evaluate, together with its extra parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    /// Limit of `U_N` under I(1).
    U1,
    /// Limit of `U_N` scaled by `N` under I(0); `nuisance_ratio = σ²/E Y₁²`.
    U2 { nuisance_ratio: f64 },
    /// Limit of `Ũ_N` under I(0).
    U2Tilde,
    /// Limit under a local nonparametric trend.
    U2Mu {
        drift: Drift,
        sigma: f64,
        second_moment: f64,
    },
    /// Limit of `U_N` under local-to-unity with coefficient `a`.
    UZ { a: f64 },
    /// I(0) to I(1) change at `theta`.
    U01 { theta: f64 },
    /// I(1) to I(0) change at `theta`.
    U10 { theta: f64 },
}

impl FunctionalKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalKind::U1 => "u1",
            FunctionalKind::U2 { .. } => "u2",
            FunctionalKind::U2Tilde => "u2_tilde",
            FunctionalKind::U2Mu { .. } => "u2_mu",
            FunctionalKind::UZ { .. } => "uz",
            FunctionalKind::U01 { .. } => "u01",
            FunctionalKind::U10 { .. } => "u10",
        }
    }

    /// Direction in which the functional is usually monitored.
    pub fn natural_direction(&self) -> Direction {
        match self {
            FunctionalKind::U1 | FunctionalKind::UZ { .. } | FunctionalKind::U10 { .. } => {
                Direction::DetectI0
            }
            _ => Direction::DetectI1,
        }
    }
}

impl fmt::Display for FunctionalKind {
    /// Canonical label including parameters, e.g. `uz(a=-15)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FunctionalKind::U1 | FunctionalKind::U2Tilde => write!(f, "{}", self.name()),
            FunctionalKind::U2 { nuisance_ratio } => write!(f, "u2(ratio={nuisance_ratio})"),
            FunctionalKind::U2Mu {
                drift,
                sigma,
                second_moment,
            } => {
                write!(f, "u2_mu(")?;
                match drift {
                    Drift::Zero => write!(f, "drift=zero")?,
                    Drift::TruncatedLinear { slope, theta } => {
                        write!(f, "drift=linear,slope={slope},theta={theta}")?
                    }
                }
                write!(f, ",sigma={sigma},ey2={second_moment})")
            }
            FunctionalKind::UZ { a } => write!(f, "uz(a={a})"),
            FunctionalKind::U01 { theta } => write!(f, "u01(theta={theta})"),
            FunctionalKind::U10 { theta } => write!(f, "u10(theta={theta})"),
        }
    }
}

impl FromStr for FunctionalKind {
    type Err = LimitError;

    /// Parses a bare name; parameters take their defaults
    /// (ratio 1, zero drift with σ = EY² = 1, a = 0, ϑ = 0.5).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "u1" => FunctionalKind::U1,
            "u2" => FunctionalKind::U2 {
                nuisance_ratio: 1.0,
            },
            "u2_tilde" | "u2tilde" => FunctionalKind::U2Tilde,
            "u2_mu" | "u2mu" => FunctionalKind::U2Mu {
                drift: Drift::Zero,
                sigma: 1.0,
                second_moment: 1.0,
            },
            "uz" => FunctionalKind::UZ { a: 0.0 },
            "u01" => FunctionalKind::U01 { theta: 0.5 },
            "u10" => FunctionalKind::U10 { theta: 0.5 },
            other => {
                return Err(LimitError::InvalidParameter(format!(
                    "unknown functional kind `{other}`"
                )))
            }
        })
    }
}

/// A limit functional: kind, `ζ`, the unscaled kernel and the residual
/// transform applied to the driving Brownian motion.
///
/// `scaling` matters for `U2Tilde` only: with `Elapsed` the functional is
/// `s · Ũ(s)`, the limit of the statistic whose variance estimate divides
/// by the elapsed sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitFunctionalSpec<T> {
    pub kind: FunctionalKind,
    pub zeta: T,
    pub kernel: KernelFamily<T>,
    pub residual: ResidualMode,
    pub scaling: VarianceScaling,
}

impl<T: Scalar> LimitFunctionalSpec<T> {
    pub fn new(kind: FunctionalKind, zeta: T, kernel: KernelFamily<T>) -> Result<Self, LimitError> {
        let spec = Self {
            kind,
            zeta,
            kernel,
            residual: ResidualMode::None,
            scaling: VarianceScaling::Horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_scaling(mut self, scaling: VarianceScaling) -> Result<Self, LimitError> {
        self.scaling = scaling;
        self.validate()?;
        Ok(self)
    }

    pub fn with_residual(mut self, residual: ResidualMode) -> Result<Self, LimitError> {
        self.residual = residual;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), LimitError> {
        let bad = |m: String| Err(LimitError::InvalidParameter(m));
        if !(self.zeta >= T::one()) || !self.zeta.is_finite() {
            return bad(format!("zeta must be >= 1, got {}", self.zeta));
        }
        match self.kind {
            FunctionalKind::U01 { theta } if !(theta > 0.0 && theta < 1.0) => {
                return bad(format!("theta must lie in (0, 1), got {theta}"))
            }
            FunctionalKind::U10 { theta } if !(theta > 0.0 && theta <= 1.0) => {
                return bad(format!("theta must lie in (0, 1], got {theta}"))
            }
            FunctionalKind::UZ { a } if !a.is_finite() => return bad(format!("a = {a}")),
            FunctionalKind::U2 { nuisance_ratio } if !(nuisance_ratio > 0.0) => {
                return bad(format!(
                    "nuisance ratio must be positive, got {nuisance_ratio}"
                ))
            }
            FunctionalKind::U2Mu {
                sigma,
                second_moment,
                ..
            } if !(sigma.is_finite() && second_moment > 0.0) => {
                return bad(format!("sigma = {sigma}, E Y^2 = {second_moment}"))
            }
            FunctionalKind::UZ { .. } if self.residual != ResidualMode::None => {
                return bad("residual transforms apply to Brownian paths only".into())
            }
            _ => {}
        }
        if self.scaling == VarianceScaling::Elapsed && self.kind != FunctionalKind::U2Tilde {
            return bad(format!(
                "elapsed scaling applies to u2tilde only, not {}",
                self.kind
            ));
        }
        Ok(())
    }

    /// Label used as the `kind` column of the calibration cache.
    pub fn cache_kind(&self) -> String {
        let mut label = self.kind.to_string();
        match self.residual {
            ResidualMode::None => {}
            ResidualMode::Demeaned => label.push_str("+demeaned"),
            ResidualMode::Detrended => label.push_str("+detrended"),
        }
        if self.scaling == VarianceScaling::Elapsed {
            label.push_str("+elapsed");
        }
        label
    }
}

/// `∫_0^{s_J} K(ζ(r − s_J)) f(r) dr` for `J = first..=last`, by the
/// trapezoid rule on the grid of `f`.
fn kernel_window_integrals<T: Scalar>(
    kernel: &KernelFamily<T>,
    zeta: T,
    f: &[T],
    first: usize,
    last: usize,
) -> Vec<T> {
    match kernel {
        KernelFamily::Epanechnikov => epanechnikov_moments(zeta.as_f64(), f, first, last),
        _ => direct_window(kernel, zeta, f, first, last),
    }
}

fn direct_window<T: Scalar>(
    kernel: &KernelFamily<T>,
    zeta: T,
    f: &[T],
    first: usize,
    last: usize,
) -> Vec<T> {
    let g = f.len() - 1;
    let gt = T::of_usize(g);
    let reach = kernel
        .support()
        .map(|s| (s * gt / zeta).floor().to_usize().unwrap_or(usize::MAX));
    (first..=last)
        .map(|jj| {
            let lo = reach.map_or(0, |w| jj.saturating_sub(w));
            let mut acc = T::zero();
            for (j, &fj) in f.iter().enumerate().take(jj + 1).skip(lo) {
                let z = zeta * (T::of_usize(j) - T::of_usize(jj)) / gt;
                let w = if j == jj || j == 0 {
                    T::half()
                } else {
                    T::one()
                };
                acc = acc + w * kernel.evaluate(z) * fj;
            }
            acc / gt
        })
        .collect()
}

/// The Epanechnikov kernel is a quadratic in the lag, so each window sum is a
/// combination of three moment prefix sums. Computed in f64 with the index
/// centred at `G/2` to limit cancellation.
fn epanechnikov_moments<T: Scalar>(zeta: f64, f: &[T], first: usize, last: usize) -> Vec<T> {
    let g = f.len() - 1;
    let centre = g as f64 / 2.0;
    let mut p0 = Vec::with_capacity(g + 2);
    let mut p1 = Vec::with_capacity(g + 2);
    let mut p2 = Vec::with_capacity(g + 2);
    let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
    p0.push(0.0);
    p1.push(0.0);
    p2.push(0.0);
    for (j, v) in f.iter().enumerate() {
        let v = v.as_f64();
        let x = j as f64 - centre;
        a0 += v;
        a1 += x * v;
        a2 += x * x * v;
        p0.push(a0);
        p1.push(a1);
        p2.push(a2);
    }
    let c = zeta / g as f64;
    let reach = (g as f64 / zeta).floor() as usize;
    (first..=last)
        .map(|jj| {
            let lo = jj.saturating_sub(reach);
            let s0 = p0[jj + 1] - p0[lo];
            let s1 = p1[jj + 1] - p1[lo];
            let s2 = p2[jj + 1] - p2[lo];
            let xj = jj as f64 - centre;
            let centred = s2 - 2.0 * xj * s1 + xj * xj * s0;
            let mut acc = 0.75 * (s0 - c * c * centred);
            acc -= 0.375 * f[jj].as_f64();
            if lo == 0 && jj > 0 {
                let z = c * jj as f64;
                acc -= 0.5 * 0.75 * (1.0 - z * z) * f[0].as_f64();
            }
            T::of(acc / g as f64)
        })
        .collect()
}

fn check_tag<T: Scalar>(
    spec: &LimitFunctionalSpec<T>,
    path: &SamplePath<T>,
) -> Result<(), LimitError> {
    let is_ou = matches!(path.tag(), ProcessTag::Ou(_));
    match spec.kind {
        FunctionalKind::UZ { a } => {
            if path.tag() != ProcessTag::Ou(a) {
                return Err(LimitError::WrongTag {
                    expected: ProcessTag::Ou(a).label(),
                    got: path.tag().label(),
                });
            }
        }
        _ if is_ou => {
            return Err(LimitError::WrongTag {
                expected: "brownian".into(),
                got: path.tag().label(),
            })
        }
        _ => {}
    }
    Ok(())
}

/// Grid index of the change fraction `theta`.
pub(crate) fn theta_index(theta: f64, g: usize) -> usize {
    ((theta * g as f64).round() as usize).min(g)
}

fn ratio<T: Scalar>(num: T, den: T, jj: usize, g: usize) -> Result<T, LimitError> {
    if !(den > T::zero()) || !den.is_finite() {
        return Err(LimitError::DegenerateDenominator {
            s: jj as f64 / g as f64,
        });
    }
    Ok(num / den)
}

/// Functional values at `s = J/G` for `J = first..=last`.
pub(crate) fn evaluate_range<T: Scalar>(
    spec: &LimitFunctionalSpec<T>,
    path: &SamplePath<T>,
    first: usize,
    last: usize,
) -> Result<Vec<T>, LimitError> {
    spec.validate()?;
    check_tag(spec, path)?;
    let g = path.grid();
    if first == 0 || first > last || last > g {
        return Err(LimitError::InvalidParameter(format!(
            "grid range {first}..={last} outside 1..={g}"
        )));
    }
    let b = path.values();
    let gt = T::of_usize(g);
    let zeta = spec.zeta;
    // ζ / s at s = J/G.
    let pre = |jj: usize| zeta * gt / T::of_usize(jj);
    let window = |f: &[T]| kernel_window_integrals(&spec.kernel, zeta, f, first, last);
    let squares: Vec<T> = b.iter().map(|&x| x * x).collect();

    let out = match spec.kind {
        FunctionalKind::U1 | FunctionalKind::UZ { .. } => {
            let int_b = cumulative_trapezoid(b);
            let q = cumulative_trapezoid(&squares);
            let f: Vec<T> = int_b.iter().map(|&x| x * x).collect();
            let w = window(&f);
            (first..=last)
                .zip(w)
                .map(|(jj, wj)| ratio(pre(jj) * wj, q[jj], jj, g))
                .collect::<Result<_, _>>()?
        }
        FunctionalKind::U10 { theta } => {
            let jt = theta_index(theta, g);
            let int_b = cumulative_trapezoid(b);
            let q = cumulative_trapezoid(&squares);
            let f: Vec<T> = (0..=g)
                .map(|j| int_b[j.min(jt)] * int_b[j.min(jt)])
                .collect();
            let w = window(&f);
            (first..=last)
                .zip(w)
                .map(|(jj, wj)| ratio(pre(jj) * wj, q[jj.min(jt)], jj, g))
                .collect::<Result<_, _>>()?
        }
        FunctionalKind::U01 { theta } => {
            let jt = theta_index(theta, g);
            let int_b = cumulative_trapezoid(b);
            let f: Vec<T> = (0..=g)
                .map(|j| {
                    if j < jt {
                        T::zero()
                    } else {
                        let d = int_b[j] - int_b[jt];
                        d * d
                    }
                })
                .collect();
            let shifted: Vec<T> = b.iter().map(|&x| (x + b[jt]) * (x + b[jt])).collect();
            let mut den = vec![T::zero(); g + 1];
            for j in jt + 1..=g {
                den[j] = den[j - 1] + (shifted[j - 1] + shifted[j]) * T::half() / gt;
            }
            let w = window(&f);
            (first..=last)
                .zip(w)
                .map(|(jj, wj)| {
                    if jj <= jt {
                        Ok(T::zero())
                    } else {
                        ratio(pre(jj) * wj, den[jj], jj, g)
                    }
                })
                .collect::<Result<_, _>>()?
        }
        FunctionalKind::U2 { nuisance_ratio } => {
            let r = T::of(nuisance_ratio);
            let w = window(&squares);
            (first..=last)
                .zip(w)
                .map(|(jj, wj)| r * pre(jj) * wj)
                .collect()
        }
        FunctionalKind::U2Tilde => {
            let w = window(&squares);
            let s_of = |jj: usize| match spec.scaling {
                VarianceScaling::Horizon => T::one(),
                VarianceScaling::Elapsed => T::of_usize(jj) / gt,
            };
            (first..=last)
                .zip(w)
                .map(|(jj, wj)| s_of(jj) * pre(jj) * wj)
                .collect()
        }
        FunctionalKind::U2Mu {
            drift,
            sigma,
            second_moment,
        } => {
            let sigma = T::of(sigma);
            let f: Vec<T> = b
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let v = T::of(drift.integral(j as f64 / g as f64)) + sigma * x;
                    v * v
                })
                .collect();
            let m2 = T::of(second_moment);
            let w = window(&f);
            (first..=last)
                .zip(w)
                .map(|(jj, wj)| pre(jj) / m2 * wj)
                .collect()
        }
    };
    Ok(out)
}

/// Functional value at `s`, snapped to the nearest grid node `J/G`.
pub fn eval_functional<T: Scalar>(
    spec: &LimitFunctionalSpec<T>,
    path: &SamplePath<T>,
    s: f64,
) -> Result<T, LimitError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(LimitError::InvalidParameter(format!(
            "s = {s} outside (0, 1]"
        )));
    }
    let g = path.grid();
    let jj = ((s * g as f64).round() as usize).clamp(1, g);
    Ok(evaluate_range(spec, path, jj, jj)?[0])
}

/// Functional values at every grid node `s = J/G` with `J ≥ first`.
pub fn functional_trajectory<T: Scalar>(
    spec: &LimitFunctionalSpec<T>,
    path: &SamplePath<T>,
    first: usize,
) -> Result<Vec<T>, LimitError> {
    evaluate_range(spec, path, first, path.grid())
}
