//! Synthetic data-generating processes: ARMA(1,1), I(0)/I(1) change-point
//! models, local-to-unity arrays and a local nonparametric trend.
//!
//! Observations are returned as `Y_1..Y_N` (index 0 of the vector is `Y_1`).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::DgpError;
use crate::limitlaw::Drift;

/// Innovation law. Student-t draws are rescaled to unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Innovation {
    #[default]
    Normal,
    StudentT {
        df: f64,
    },
}

impl Innovation {
    fn sampler(&self) -> Result<Sampler, DgpError> {
        match *self {
            Innovation::Normal => Ok(Sampler::Normal),
            Innovation::StudentT { df } => {
                if !(df > 2.0) {
                    return Err(DgpError::ParameterOutOfRange(format!(
                        "Student-t innovations need df > 2 for unit variance, got {df}"
                    )));
                }
                let t =
                    StudentT::new(df).map_err(|e| DgpError::ParameterOutOfRange(e.to_string()))?;
                Ok(Sampler::T(t, ((df - 2.0) / df).sqrt()))
            }
        }
    }
}

enum Sampler {
    Normal,
    T(StudentT<f64>, f64),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal => StandardNormal.sample(rng),
            Sampler::T(t, scale) => scale * t.sample(rng),
        }
    }
}

/// Which form of a change-point model to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpVariant {
    /// AR recursion whose coefficient switches at the change.
    #[default]
    ArSwitch,
    /// Partial-sum (or cumulation) form of the change-point model.
    Model,
}

/// Shape `m0` of the local trend.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum TrendShape {
    #[default]
    Zero,
    /// `m0(x) = slope · x` on `[0, 1]`, 0 elsewhere.
    TruncatedLinear { slope: f64 },
}

impl TrendShape {
    pub fn m0(&self, x: f64) -> f64 {
        match *self {
            TrendShape::Zero => 0.0,
            TrendShape::TruncatedLinear { slope } => {
                if (0.0..=1.0).contains(&x) {
                    slope * x
                } else {
                    0.0
                }
            }
        }
    }

    /// The matching drift `μ(s) = ∫_0^s m0(r − ϑ) dr` of the limit law.
    pub fn drift(&self, theta: f64) -> Drift {
        match *self {
            TrendShape::Zero => Drift::Zero,
            TrendShape::TruncatedLinear { slope } => Drift::TruncatedLinear { slope, theta },
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpKind {
    Arma11 {
        phi: f64,
        beta: f64,
    },
    CpI1ToI0 {
        theta: f64,
        phi_post: f64,
        #[serde(default = "one")]
        eta: f64,
        #[serde(default)]
        variant: CpVariant,
    },
    CpI0ToI1 {
        theta: f64,
        phi_pre: f64,
        #[serde(default)]
        variant: CpVariant,
    },
    LocalToUnity {
        a: f64,
    },
    LocalTrend {
        #[serde(default)]
        trend: TrendShape,
        theta: f64,
    },
}

/// A fully specified data-generating process of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    #[serde(flatten)]
    pub kind: DgpKind,
    pub n: usize,
    #[serde(default)]
    pub innovation: Innovation,
}

impl DgpSpec {
    /// Compact description such as `arma11(phi=0.9,beta=0)`.
    pub fn label(&self) -> String {
        let variant = |v: CpVariant| match v {
            CpVariant::ArSwitch => "",
            CpVariant::Model => ",model",
        };
        let mut out = match self.kind {
            DgpKind::Arma11 { phi, beta } => format!("arma11(phi={phi},beta={beta})"),
            DgpKind::CpI1ToI0 {
                theta,
                phi_post,
                eta,
                variant: v,
            } => {
                format!(
                    "cp_i1_to_i0(theta={theta},phi_post={phi_post},eta={eta}{})",
                    variant(v)
                )
            }
            DgpKind::CpI0ToI1 {
                theta,
                phi_pre,
                variant: v,
            } => {
                format!("cp_i0_to_i1(theta={theta},phi_pre={phi_pre}{})", variant(v))
            }
            DgpKind::LocalToUnity { a } => format!("local_to_unity(a={a})"),
            DgpKind::LocalTrend { trend, theta } => match trend {
                TrendShape::Zero => format!("local_trend(zero,theta={theta})"),
                TrendShape::TruncatedLinear { slope } => {
                    format!("local_trend(linear,slope={slope},theta={theta})")
                }
            },
        };
        if let Innovation::StudentT { df } = self.innovation {
            out.push_str(&format!("+t({df})"));
        }
        out
    }
}

/// The change point `⌊Nϑ⌋`.
pub fn change_index(theta: f64, n: usize) -> usize {
    (n as f64 * theta + 1e-9).floor() as usize
}

fn out_of_range(msg: String) -> Result<(), DgpError> {
    Err(DgpError::ParameterOutOfRange(msg))
}

fn check_theta(theta: f64) -> Result<(), DgpError> {
    if !(theta > 0.0 && theta < 1.0) {
        return out_of_range(format!("theta must lie in (0, 1), got {theta}"));
    }
    Ok(())
}

fn check_stationary(name: &str, phi: f64) -> Result<(), DgpError> {
    if !(phi.abs() < 1.0) {
        return out_of_range(format!("|{name}| must be below 1, got {phi}"));
    }
    Ok(())
}

impl DgpSpec {
    pub fn new(kind: DgpKind, n: usize) -> Result<Self, DgpError> {
        let spec = Self {
            kind,
            n,
            innovation: Innovation::Normal,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_innovation(mut self, innovation: Innovation) -> Result<Self, DgpError> {
        self.innovation = innovation;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), DgpError> {
        if self.n < 10 {
            return out_of_range(format!("series length must be at least 10, got {}", self.n));
        }
        self.innovation.sampler()?;
        match self.kind {
            DgpKind::Arma11 { phi, beta } => {
                if !(phi.is_finite() && beta.is_finite()) {
                    return out_of_range(format!("phi = {phi}, beta = {beta}"));
                }
            }
            DgpKind::CpI1ToI0 {
                theta,
                phi_post,
                eta,
                ..
            } => {
                check_theta(theta)?;
                check_stationary("phi_post", phi_post)?;
                if !(eta > 0.0 && eta.is_finite()) {
                    return out_of_range(format!("eta must be positive, got {eta}"));
                }
            }
            DgpKind::CpI0ToI1 { theta, phi_pre, .. } => {
                check_theta(theta)?;
                check_stationary("phi_pre", phi_pre)?;
            }
            DgpKind::LocalToUnity { a } => {
                let half = self.n as f64 / 2.0;
                if !(a >= -half && a <= half) {
                    return out_of_range(format!(
                        "a must lie in [-N/2, N/2] = [{}, {half}], got {a}",
                        -half
                    ));
                }
            }
            DgpKind::LocalTrend { trend, theta } => {
                check_theta(theta)?;
                if let TrendShape::TruncatedLinear { slope } = trend {
                    if !(slope >= 0.0 && slope.is_finite()) {
                        return out_of_range(format!(
                            "trend slope must be non-negative, got {slope}"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Change point `⌊Nϑ⌋` for change-point and trend models.
    pub fn change_point(&self) -> Option<usize> {
        match self.kind {
            DgpKind::CpI1ToI0 { theta, .. }
            | DgpKind::CpI0ToI1 { theta, .. }
            | DgpKind::LocalTrend { theta, .. } => Some(change_index(theta, self.n)),
            _ => None,
        }
    }

    /// Draws one series `Y_1..Y_N`.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, DgpError> {
        self.validate()?;
        let s = self.innovation.sampler()?;
        let mut e = || s.draw(rng);
        let n = self.n;
        Ok(match self.kind {
            DgpKind::Arma11 { phi, beta } => arma11(phi, beta, n, &mut e),
            DgpKind::CpI1ToI0 {
                theta,
                phi_post,
                eta,
                variant,
            } => {
                let c = change_index(theta, n);
                match variant {
                    CpVariant::ArSwitch => {
                        ar_switch(n, |i| if i < c { 1.0 } else { phi_post }, &mut e)
                    }
                    CpVariant::Model => i1_to_i0_model(c, eta, n, &mut e),
                }
            }
            DgpKind::CpI0ToI1 {
                theta,
                phi_pre,
                variant,
            } => {
                let c = change_index(theta, n);
                match variant {
                    CpVariant::ArSwitch => {
                        ar_switch(n, |i| if i < c { phi_pre } else { 1.0 }, &mut e)
                    }
                    CpVariant::Model => i0_to_i1_model(c, phi_pre, n, &mut e),
                }
            }
            DgpKind::LocalToUnity { a } => local_to_unity(a, n, &mut e),
            DgpKind::LocalTrend { trend, theta } => {
                local_trend(&trend, change_index(theta, n), n, &mut e)
            }
        })
    }
}

fn arma11(phi: f64, beta: f64, n: usize, e: &mut impl FnMut() -> f64) -> Vec<f64> {
    let mut prev_e = e();
    let mut y = 0.0;
    (0..n)
        .map(|_| {
            let en = e();
            y = phi * y + en - beta * prev_e;
            prev_e = en;
            y
        })
        .collect()
}

// Y_0 = 0, Y_i = φ_i Y_{i−1} + ε_i.
fn ar_switch(n: usize, phi: impl Fn(usize) -> f64, e: &mut impl FnMut() -> f64) -> Vec<f64> {
    let mut y = 0.0;
    (1..=n)
        .map(|i| {
            y = phi(i) * y + e();
            y
        })
        .collect()
}

// Y_i = Σ_{j=0}^{i} u_j before the change, η u_i from the change on.
fn i1_to_i0_model(change: usize, eta: f64, n: usize, e: &mut impl FnMut() -> f64) -> Vec<f64> {
    let mut sum = e();
    (1..=n)
        .map(|i| {
            let u = e();
            if i < change {
                sum += u;
                sum
            } else {
                eta * u
            }
        })
        .collect()
}

// Stationary AR(1) u_i before the change, Y_{i−1} + u_i from the change on.
fn i0_to_i1_model(change: usize, phi: f64, n: usize, e: &mut impl FnMut() -> f64) -> Vec<f64> {
    let mut u = e() / (1.0 - phi * phi).sqrt();
    let mut y = 0.0;
    (1..=n)
        .map(|i| {
            u = phi * u + e();
            y = if i < change { u } else { y + u };
            y
        })
        .collect()
}

// Y_1 = 0, Y_{n+1} = (1 + a/N) Y_n + u_n.
fn local_to_unity(a: f64, n: usize, e: &mut impl FnMut() -> f64) -> Vec<f64> {
    let rho = 1.0 + a / n as f64;
    let mut y = 0.0;
    let mut out = Vec::with_capacity(n);
    out.push(y);
    for _ in 1..n {
        y = rho * y + e();
        out.push(y);
    }
    out
}

fn local_trend(
    trend: &TrendShape,
    change: usize,
    n: usize,
    e: &mut impl FnMut() -> f64,
) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|i| trend.m0((i as f64 - change as f64) / nf) / nf.sqrt() + e())
        .collect()
}

/// ARMA(1,1) `Y_n = φ Y_{n−1} + e_n − β e_{n−1}`, `Y_0 = 0`, fresh `e_0`.
pub fn gen_arma11<R: Rng + ?Sized>(phi: f64, beta: f64, n: usize, rng: &mut R) -> Vec<f64> {
    arma11(phi, beta, n, &mut || StandardNormal.sample(rng))
}

/// I(1) to I(0) change at `⌊Nϑ⌋`.
pub fn gen_cp_i1_to_i0<R: Rng + ?Sized>(
    theta: f64,
    phi_post: f64,
    eta: f64,
    variant: CpVariant,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, DgpError> {
    let kind = DgpKind::CpI1ToI0 {
        theta,
        phi_post,
        eta,
        variant,
    };
    DgpSpec::new(kind, n)?.generate(rng)
}

/// I(0) to I(1) change at `⌊Nϑ⌋`.
pub fn gen_cp_i0_to_i1<R: Rng + ?Sized>(
    theta: f64,
    phi_pre: f64,
    variant: CpVariant,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, DgpError> {
    DgpSpec::new(
        DgpKind::CpI0ToI1 {
            theta,
            phi_pre,
            variant,
        },
        n,
    )?
    .generate(rng)
}

/// Local-to-unity array `Y_{n+1} = (1 + a/N) Y_n + u_n`, `Y_1 = 0`.
pub fn gen_local_to_unity<R: Rng + ?Sized>(
    a: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, DgpError> {
    DgpSpec::new(DgpKind::LocalToUnity { a }, n)?.generate(rng)
}

/// `Y_n = m0((n − ⌊Nϑ⌋)/N) N^{−1/2} + u_n`.
pub fn gen_local_trend<R: Rng + ?Sized>(
    trend: TrendShape,
    theta: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, DgpError> {
    DgpSpec::new(DgpKind::LocalTrend { trend, theta }, n)?.generate(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    fn normals(seed: u64, count: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..count)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }

    #[test]
    fn white_noise_when_phi_and_beta_vanish() {
        let y = gen_arma11(0.0, 0.0, 50, &mut stream_rng(4, 0));
        let z = normals(4, 51);
        assert_eq!(y, z[1..]);
    }

    #[test]
    fn arma_matches_reference_recursion() {
        let y = gen_arma11(0.95, 0.5, 100, &mut stream_rng(9, 0));
        let e = normals(9, 101);
        let mut prev = 0.0;
        for n in 1..=100 {
            let expect = 0.95 * prev + e[n] - 0.5 * e[n - 1];
            assert_eq!(y[n - 1], expect);
            prev = expect;
        }
    }

    #[test]
    fn random_walk_variance() {
        let ends: Vec<f64> = (0..10_000)
            .map(|r| gen_arma11(1.0, 0.0, 100, &mut stream_rng(3, r))[99] / 10.0)
            .collect();
        assert!((var(&ends) - 1.0).abs() < 0.05);
    }

    #[test]
    fn local_to_unity_zero_is_random_walk_shifted() {
        let a = gen_local_to_unity(0.0, 30, &mut stream_rng(2, 0)).unwrap();
        let e = normals(2, 29);
        assert_eq!(a[0], 0.0);
        let mut s = 0.0;
        for i in 1..30 {
            s += e[i - 1];
            assert!((a[i] - s).abs() < 1e-12);
        }
        assert!(gen_local_to_unity(-200.0, 250, &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn local_to_unity_matches_ou_variance() {
        let ends: Vec<f64> = (0..10_000)
            .map(|r| {
                gen_local_to_unity(-15.0, 250, &mut stream_rng(5, r)).unwrap()[249] / 250f64.sqrt()
            })
            .collect();
        assert!((var(&ends) - 1.0 / 30.0).abs() < 0.004, "{}", var(&ends));
    }

    #[test]
    fn i1_to_i0_model_variance_profile() {
        let reps = 10_000;
        let draws: Vec<Vec<f64>> = (0..reps)
            .map(|r| {
                gen_cp_i1_to_i0(0.5, 0.5, 1.0, CpVariant::Model, 250, &mut stream_rng(6, r))
                    .unwrap()
            })
            .collect();
        for i in [10usize, 60, 120] {
            let col: Vec<f64> = draws.iter().map(|y| y[i - 1]).collect();
            let v = var(&col);
            // u_0 is included, so Var Y_i = i + 1.
            assert!((v / (i as f64 + 1.0) - 1.0).abs() < 0.05, "i={i}: {v}");
        }
        for i in [125usize, 200, 250] {
            let col: Vec<f64> = draws.iter().map(|y| y[i - 1]).collect();
            assert!((var(&col) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn ar_switch_changes_persistence() {
        let y = gen_cp_i1_to_i0(
            0.5,
            0.5,
            1.0,
            CpVariant::ArSwitch,
            100,
            &mut stream_rng(1, 0),
        )
        .unwrap();
        let e = normals(1, 100);
        let mut prev = 0.0;
        for i in 1..=100 {
            let phi = if i < 50 { 1.0 } else { 0.5 };
            prev = phi * prev + e[i - 1];
            assert_eq!(y[i - 1], prev);
        }
        let z = gen_cp_i0_to_i1(0.5, 0.6, CpVariant::ArSwitch, 100, &mut stream_rng(1, 0)).unwrap();
        let mut prev = 0.0;
        for i in 1..=100 {
            let phi = if i < 50 { 0.6 } else { 1.0 };
            prev = phi * prev + e[i - 1];
            assert_eq!(z[i - 1], prev);
        }
    }

    #[test]
    fn i0_to_i1_model_increments() {
        let y = gen_cp_i0_to_i1(0.5, 0.0, CpVariant::Model, 40, &mut stream_rng(8, 0)).unwrap();
        let e = normals(8, 41);
        for i in 21..=40 {
            assert!((y[i - 1] - y[i - 2] - e[i]).abs() < 1e-12);
        }
        for i in 1..20 {
            assert_eq!(y[i - 1], e[i]);
        }
        let rw =
            gen_cp_i0_to_i1(0.001, 0.3, CpVariant::Model, 1000, &mut stream_rng(8, 1)).unwrap();
        assert!(rw.windows(2).all(|w| w[1] != w[0]));
    }

    #[test]
    fn local_trend_mean() {
        let trend = TrendShape::TruncatedLinear { slope: 2.0 };
        let reps = 10_000;
        let mean = (0..reps)
            .map(|r| {
                let y = gen_local_trend(trend, 0.5, 400, &mut stream_rng(7, r)).unwrap();
                y.iter().sum::<f64>() / 20.0
            })
            .sum::<f64>()
            / reps as f64;
        assert!((mean - 0.25).abs() < 0.03, "{mean}");
        let flat = gen_local_trend(TrendShape::Zero, 0.5, 20, &mut stream_rng(7, 0)).unwrap();
        assert_eq!(flat, normals(7, 20));
        assert_eq!(trend.m0(-0.1), 0.0);
        assert_eq!(trend.drift(0.5).integral(1.0), 0.25);
    }

    #[test]
    fn validation() {
        let bad = [
            DgpKind::CpI1ToI0 {
                theta: 0.5,
                phi_post: 1.0,
                eta: 1.0,
                variant: CpVariant::ArSwitch,
            },
            DgpKind::CpI0ToI1 {
                theta: 1.0,
                phi_pre: 0.5,
                variant: CpVariant::Model,
            },
            DgpKind::CpI1ToI0 {
                theta: 0.5,
                phi_post: 0.5,
                eta: 0.0,
                variant: CpVariant::Model,
            },
            DgpKind::LocalTrend {
                trend: TrendShape::TruncatedLinear { slope: -1.0 },
                theta: 0.5,
            },
        ];
        for k in bad {
            assert!(DgpSpec::new(k, 100).is_err());
        }
        assert!(DgpSpec::new(
            DgpKind::Arma11 {
                phi: 0.5,
                beta: 0.0
            },
            9
        )
        .is_err());
        let spec = DgpSpec::new(
            DgpKind::Arma11 {
                phi: 0.5,
                beta: 0.0,
            },
            10,
        )
        .unwrap();
        assert!(spec
            .with_innovation(Innovation::StudentT { df: 2.0 })
            .is_err());
    }

    #[test]
    fn student_t_has_unit_variance() {
        let spec = DgpSpec::new(
            DgpKind::Arma11 {
                phi: 0.0,
                beta: 0.0,
            },
            100_000,
        )
        .unwrap()
        .with_innovation(Innovation::StudentT { df: 6.0 })
        .unwrap();
        let y = spec.generate(&mut stream_rng(1, 2)).unwrap();
        assert!((var(&y) - 1.0).abs() < 0.03);
    }

    #[test]
    fn reproducible_and_serde_round_trip() {
        let spec = DgpSpec::new(
            DgpKind::CpI1ToI0 {
                theta: 0.1,
                phi_post: 0.5,
                eta: 1.0,
                variant: CpVariant::ArSwitch,
            },
            250,
        )
        .unwrap();
        assert_eq!(
            spec.generate(&mut stream_rng(1, 1)).unwrap(),
            spec.generate(&mut stream_rng(1, 1)).unwrap()
        );
        assert_eq!(spec.change_point(), Some(25));
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<DgpSpec>(&json).unwrap(), spec);
        let parsed: DgpSpec =
            serde_json::from_str(r#"{"kind":"arma11","phi":1.0,"beta":0.5,"n":250}"#).unwrap();
        assert_eq!(
            parsed.kind,
            DgpKind::Arma11 {
                phi: 1.0,
                beta: 0.5
            }
        );
        assert_eq!(parsed.innovation, Innovation::Normal);
    }

    #[test]
    fn change_index_floors() {
        assert_eq!(change_index(0.75, 250), 187);
        assert_eq!(change_index(0.1, 250), 25);
        assert_eq!(change_index(0.5, 250), 125);
    }
}
