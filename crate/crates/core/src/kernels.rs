//! Weighting kernels `K` and their scaled versions `K_h(x) = K(x / h) / h`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::KernelError;
use crate::scalar::Scalar;

/// Anything that assigns a weight to the offset `i - n` between a past
/// partial sum and the current time point.
pub trait LagWeight<T> {
    /// Weight attached to `offset`.
    fn weight(&self, offset: T) -> T;

    /// Offsets with `|offset|` above this radius carry zero weight.
    /// `None` means unbounded support.
    fn radius(&self) -> Option<T>;
}

type KernelFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A user-registered symmetric density.
#[derive(Clone)]
pub struct CustomKernel<T> {
    name: String,
    func: KernelFn<T>,
    support: Option<T>,
}

impl<T: Scalar> CustomKernel<T> {
    /// Registers `func` as a kernel after checking that it is a symmetric,
    /// non-negative density. `support` is the half-width outside of which
    /// the function vanishes (`None` for unbounded support; the check then
    /// integrates over `[-40, 40]`).
    pub fn register<F>(name: &str, support: Option<T>, func: F) -> Result<Self, KernelError>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        let half_width = support.map(|s| s.as_f64()).unwrap_or(40.0);
        if !(half_width > 0.0) {
            return Err(KernelError::InvalidSupport(half_width));
        }
        let steps = 200_000usize;
        let dz = 2.0 * half_width / steps as f64;
        let mut integral = 0.0;
        for j in 0..=steps {
            let z = -half_width + j as f64 * dz;
            let v = func(T::of(z)).as_f64();
            let mirrored = func(T::of(-z)).as_f64();
            if !v.is_finite() || v < 0.0 {
                return Err(KernelError::NotADensity {
                    name: name.to_string(),
                    reason: format!("value {v} at z = {z}"),
                });
            }
            if (v - mirrored).abs() > 1e-9 * v.abs().max(1.0) {
                return Err(KernelError::NotADensity {
                    name: name.to_string(),
                    reason: format!("asymmetric at z = {z}"),
                });
            }
            let w = if j == 0 || j == steps { 0.5 } else { 1.0 };
            integral += w * v * dz;
        }
        if (integral - 1.0).abs() > 1e-6 {
            return Err(KernelError::NotADensity {
                name: name.to_string(),
                reason: format!("integrates to {integral}"),
            });
        }
        Ok(Self {
            name: name.to_string(),
            func: Arc::new(func),
            support,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<T> fmt::Debug for CustomKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .finish()
    }
}

/// Kernel family.
#[derive(Debug, Clone)]
pub enum KernelFamily<T> {
    Gaussian,
    Epanechnikov,
    Custom(CustomKernel<T>),
}

impl<T: Scalar> KernelFamily<T> {
    /// `K(z)`.
    pub fn evaluate(&self, z: T) -> T {
        match self {
            KernelFamily::Gaussian => {
                let norm = (T::two() * T::PI()).sqrt().recip();
                norm * (-(z * z) * T::half()).exp()
            }
            KernelFamily::Epanechnikov => {
                if z.abs() <= T::one() {
                    T::of(0.75) * (T::one() - z * z)
                } else {
                    T::zero()
                }
            }
            KernelFamily::Custom(k) => (k.func)(z),
        }
    }

    /// Half-width of the support of `K`, if bounded.
    pub fn support(&self) -> Option<T> {
        match self {
            KernelFamily::Gaussian => None,
            KernelFamily::Epanechnikov => Some(T::one()),
            KernelFamily::Custom(k) => k.support,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Custom(k) => k.name(),
        }
    }
}

impl<T> PartialEq for KernelFamily<T> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (KernelFamily::Gaussian, KernelFamily::Gaussian) => true,
            (KernelFamily::Epanechnikov, KernelFamily::Epanechnikov) => true,
            (KernelFamily::Custom(a), KernelFamily::Custom(b)) => Arc::ptr_eq(&a.func, &b.func),
            _ => false,
        }
    }
}

impl<T: Scalar> FromStr for KernelFamily<T> {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            other => Err(KernelError::UnknownKernel(other.to_string())),
        }
    }
}

/// A kernel together with its bandwidth `h` (in observation-index units).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    family: KernelFamily<T>,
    bandwidth: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(family: KernelFamily<T>, bandwidth: T) -> Result<Self, KernelError> {
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(KernelError::InvalidBandwidth(bandwidth.as_f64()));
        }
        Ok(Self { family, bandwidth })
    }

    pub fn gaussian(bandwidth: T) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn epanechnikov(bandwidth: T) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Epanechnikov, bandwidth)
    }

    pub fn family(&self) -> &KernelFamily<T> {
        &self.family
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    /// `K(z)`, ignoring the bandwidth.
    pub fn evaluate(&self, z: T) -> T {
        self.family.evaluate(z)
    }

    /// `K_h(x) = K(x / h) / h`.
    pub fn scaled_weight(&self, x: T) -> T {
        self.family.evaluate(x / self.bandwidth) / self.bandwidth
    }
}

impl<T: Scalar> LagWeight<T> for KernelSpec<T> {
    fn weight(&self, offset: T) -> T {
        self.scaled_weight(offset)
    }

    fn radius(&self) -> Option<T> {
        self.family.support().map(|s| s * self.bandwidth)
    }
}

/// `K(z)` for a kernel family.
pub fn evaluate<T: Scalar>(kernel: &KernelSpec<T>, z: T) -> T {
    kernel.evaluate(z)
}

/// `K_h(x)`.
pub fn scaled_weight<T: Scalar>(kernel: &KernelSpec<T>, x: T) -> T {
    kernel.scaled_weight(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let dz = (hi - lo) / steps as f64;
        (0..=steps)
            .map(|j| {
                let w = if j == 0 || j == steps { 0.5 } else { 1.0 };
                w * f(lo + j as f64 * dz)
            })
            .sum::<f64>()
            * dz
    }

    #[test]
    fn evaluate_examples() {
        let e = KernelSpec::<f64>::epanechnikov(1.0).unwrap();
        let g = KernelSpec::<f64>::gaussian(1.0).unwrap();
        assert_eq!(e.evaluate(0.0), 0.75);
        assert_eq!(e.evaluate(1.5), 0.0);
        assert_relative_eq!(g.evaluate(0.0), 0.398_942_280_401_432_7, epsilon = 1e-15);
    }

    #[test]
    fn scaled_weight_examples() {
        let e = KernelSpec::<f64>::epanechnikov(2.0).unwrap();
        assert_eq!(e.scaled_weight(0.0), 0.375);
        assert_eq!(e.scaled_weight(-2.0), 0.0);
        let g = KernelSpec::<f64>::gaussian(4.0).unwrap();
        let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(g.scaled_weight(-4.0), phi1 / 4.0, epsilon = 1e-15);
        assert_relative_eq!(g.scaled_weight(-4.0), 0.060_49, epsilon = 1e-5);
    }

    #[test]
    fn kernels_integrate_to_one() {
        let e = KernelFamily::<f64>::Epanechnikov;
        let g = KernelFamily::<f64>::Gaussian;
        assert!((trapezoid(|z| e.evaluate(z), -1.0, 1.0, 100_000) - 1.0).abs() < 1e-6);
        assert!((trapezoid(|z| g.evaluate(z), -8.0, 8.0, 100_000) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_positive_bandwidth() {
        assert!(KernelSpec::<f64>::gaussian(0.0).is_err());
        assert!(KernelSpec::<f64>::epanechnikov(-1.0).is_err());
        assert!(KernelSpec::<f64>::epanechnikov(f64::NAN).is_err());
    }

    #[test]
    fn parses_names() {
        assert_eq!(
            "Gaussian".parse::<KernelFamily<f64>>().unwrap(),
            KernelFamily::Gaussian
        );
        assert_eq!(
            "epanechnikov".parse::<KernelFamily<f32>>().unwrap(),
            KernelFamily::Epanechnikov
        );
        assert!("triangle".parse::<KernelFamily<f64>>().is_err());
    }

    #[test]
    fn custom_kernel_registration() {
        let tri = CustomKernel::<f64>::register("triangular", Some(1.0), |z: f64| {
            (1.0 - z.abs()).max(0.0)
        })
        .unwrap();
        let k = KernelSpec::new(KernelFamily::Custom(tri), 2.0).unwrap();
        assert_eq!(k.scaled_weight(0.0), 0.5);
        assert_eq!(k.radius(), Some(2.0));

        let bad = CustomKernel::<f64>::register("flat2", Some(1.0), |z: f64| {
            if z.abs() <= 1.0 {
                1.0
            } else {
                0.0
            }
        });
        assert!(bad.is_err());
        let skew =
            CustomKernel::<f64>::register(
                "skew",
                None,
                |z: f64| if z < 0.0 { 0.0 } else { (-z).exp() },
            );
        assert!(skew.is_err());
    }

    proptest! {
        #[test]
        fn symmetric(z in -20.0f64..20.0) {
            for fam in [KernelFamily::<f64>::Gaussian, KernelFamily::Epanechnikov] {
                prop_assert_eq!(fam.evaluate(z), fam.evaluate(-z));
                prop_assert!(fam.evaluate(z) >= 0.0);
            }
        }

        #[test]
        fn scaling_identity(x in -50.0f64..50.0, h in 0.1f64..100.0) {
            for fam in [KernelFamily::<f64>::Gaussian, KernelFamily::Epanechnikov] {
                let k = KernelSpec::new(fam.clone(), h).unwrap();
                prop_assert_eq!(k.scaled_weight(x), fam.evaluate(x / h) / h);
            }
        }
    }
}
