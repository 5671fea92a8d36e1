//! Integral estimators built on leave-one-out densities.
//!
//! Given draws `X_1..X_n` from an unknown density `f`, the integral of
//! `phi` is estimated by `n^{-1} sum phi(X_i) / f_i`, where `f_i` is the
//! leave-one-out density at `X_i`. The corrected form multiplies each term
//! by `1 - v_i / f_i^2`, which removes the leading bias coming from the
//! randomness of the denominator.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::{loo_density, loo_variance, FloorPolicy, LooDensityTable};
use crate::error::{Error, Result};
use crate::kernels::{unit_ball_volume, Bandwidth, KernelSpec};
use crate::sample::Sample;

/// Axis-aligned box `[lower, upper]` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid("box corners must have the same positive dimension"));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
        {
            return Err(Error::invalid("box needs finite corners with lower <= upper"));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit_cube(d: usize) -> Self {
        Self {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Box grown by `margin` on every face.
    pub fn inflate(&self, margin: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|a| a - margin).collect(),
            upper: self.upper.iter().map(|b| b + margin).collect(),
        }
    }

    /// Affine image of the unit cube: `u -> lower + u (upper - lower)`.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (a, b))| a + t * (b - a))
            .collect()
    }

    /// `n` uniform draws from the box, row-major.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Sample {
        let d = self.dim();
        let mut pts = Vec::with_capacity(n * d);
        for _ in 0..n {
            for k in 0..d {
                let u: f64 = rng.random();
                pts.push(self.lower[k] + u * (self.upper[k] - self.lower[k]));
            }
        }
        Sample::new(pts, d, None).expect("uniform draws are finite")
    }
}

/// Sampling box for boundary-corrected experiments: `q` inflated by `h` on
/// every face. The integrand keeps its support `q`.
pub fn boundary_corrected_design(q: &BoxRegion, h: f64) -> Result<BoxRegion> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::invalid(format!("inflation must be nonnegative, got {h}")));
    }
    Ok(q.inflate(h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Box(BoxRegion),
    Unbounded,
}

type Func = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A function to integrate together with its declared support. Evaluation
/// returns zero outside a compact support.
#[derive(Clone)]
pub struct Integrand {
    func: Arc<Func>,
    support: Support,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand").field("support", &self.support).finish_non_exhaustive()
    }
}

impl Integrand {
    pub fn new(support: Support, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            func: Arc::new(func),
            support,
        }
    }

    pub fn on_box(support: BoxRegion, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Support::Box(support), func)
    }

    pub fn unbounded(func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Support::Unbounded, func)
    }

    pub fn zero() -> Self {
        Self::unbounded(|_| 0.0)
    }

    /// Indicator of `support`.
    pub fn indicator(support: BoxRegion) -> Self {
        Self::on_box(support, |_| 1.0)
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.support {
            Support::Box(b) if !b.contains(x) => 0.0,
            _ => (self.func)(x),
        }
    }

    /// `a * self + b * other`, supported on the union's bounding box when
    /// both are compact.
    pub fn linear_combination(a: f64, first: &Integrand, b: f64, second: &Integrand) -> Integrand {
        let f1 = first.clone();
        let f2 = second.clone();
        Integrand::unbounded(move |x| a * f1.eval(x) + b * f2.eval(x))
    }
}

/// Built-in integrands on `[0,1]^d` with closed-form integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedIntegrand {
    /// `prod_k sin(pi x_k)`
    SinPi,
    /// Indicator of the ball of radius 1/2 centred in the cube.
    IndicatorBall,
    /// `prod_k 6 x_k (1 - x_k)`
    Polynomial,
}

impl NamedIntegrand {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sin_pi" => Ok(Self::SinPi),
            "indicator_ball" => Ok(Self::IndicatorBall),
            "polynomial" => Ok(Self::Polynomial),
            other => Err(Error::invalid(format!(
                "unknown integrand '{other}', expected sin_pi, indicator_ball or polynomial"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SinPi => "sin_pi",
            Self::IndicatorBall => "indicator_ball",
            Self::Polynomial => "polynomial",
        }
    }

    pub fn integrand(self, d: usize) -> Integrand {
        let cube = BoxRegion::unit_cube(d);
        match self {
            Self::SinPi => Integrand::on_box(cube, |x| {
                x.iter().map(|v| (std::f64::consts::PI * v).sin()).product()
            }),
            Self::IndicatorBall => Integrand::on_box(cube, |x| {
                let r2: f64 = x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
                if r2 < 0.25 {
                    1.0
                } else {
                    0.0
                }
            }),
            Self::Polynomial => {
                Integrand::on_box(cube, |x| x.iter().map(|v| 6.0 * v * (1.0 - v)).product())
            }
        }
    }

    pub fn exact_integral(self, d: usize) -> f64 {
        match self {
            Self::SinPi => (2.0 / std::f64::consts::PI).powi(d as i32),
            Self::IndicatorBall => unit_ball_volume(d) * 0.5f64.powi(d as i32),
            Self::Polynomial => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    PlainMC,
    KernelSmoothed,
    KernelSmoothedCorrected,
    GeneralFunctional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Points that entered the average (not floored).
    pub n_used: usize,
    pub kind: EstimatorKind,
}

/// Classical Monte Carlo with a known sampling density.
pub fn plain_mc(
    sample: &Sample,
    integrand: &Integrand,
    density: impl Fn(&[f64]) -> f64,
) -> Result<IntegralEstimate> {
    let mut acc = 0.0;
    for (i, x) in sample.rows().enumerate() {
        let f = density(x);
        if !(f > 0.0) {
            return Err(Error::invalid(format!("sampling density is {f} at point {i}")));
        }
        acc += integrand.eval(x) / f;
    }
    Ok(IntegralEstimate {
        value: acc / sample.n() as f64,
        n_used: sample.n(),
        kind: EstimatorKind::PlainMC,
    })
}

fn check_nondegenerate(sample: &Sample) -> Result<()> {
    let first = sample.row(0);
    if sample.rows().all(|r| r == first) {
        return Err(Error::invalid("all sample points coincide; the design has no density"));
    }
    Ok(())
}

fn check_table(sample: &Sample, table: &LooDensityTable) -> Result<()> {
    if table.len() != sample.n() {
        return Err(Error::invalid(format!(
            "density table has {} entries, sample has {} points",
            table.len(),
            sample.n()
        )));
    }
    Ok(())
}

fn weighted_mean(
    table: &LooDensityTable,
    policy: FloorPolicy,
    kind: EstimatorKind,
    term: impl Fn(usize, f64) -> f64,
) -> Result<IntegralEstimate> {
    let kept = table.usable_points(policy)?;
    let dens = table.density();
    let sum: f64 = kept.iter().map(|&i| term(i, dens[i])).sum();
    let value = sum / kept.len() as f64;
    if !value.is_finite() {
        return Err(Error::failed("estimate is not finite"));
    }
    Ok(IntegralEstimate {
        value,
        n_used: kept.len(),
        kind,
    })
}

/// `n^{-1} sum phi(X_i) / f_i`.
pub fn integrate_kde(
    sample: &Sample,
    integrand: &Integrand,
    kernel: &KernelSpec,
    h: Bandwidth,
) -> Result<IntegralEstimate> {
    check_nondegenerate(sample)?;
    let table = loo_density(sample, kernel, h)?;
    integrate_kde_with_table(sample, integrand, &table, FloorPolicy::default())
}

pub fn integrate_kde_with_table(
    sample: &Sample,
    integrand: &Integrand,
    table: &LooDensityTable,
    policy: FloorPolicy,
) -> Result<IntegralEstimate> {
    check_table(sample, table)?;
    weighted_mean(table, policy, EstimatorKind::KernelSmoothed, |i, f| {
        integrand.eval(sample.row(i)) / f
    })
}

/// `n^{-1} sum (phi(X_i) / f_i) (1 - v_i / f_i^2)`.
pub fn integrate_kde_corrected(
    sample: &Sample,
    integrand: &Integrand,
    kernel: &KernelSpec,
    h: Bandwidth,
) -> Result<IntegralEstimate> {
    if sample.n() < 3 {
        return Err(Error::invalid("the corrected estimator needs at least 3 points"));
    }
    check_nondegenerate(sample)?;
    let table = loo_variance(sample, kernel, h)?;
    integrate_kde_corrected_with_table(sample, integrand, &table, FloorPolicy::default())
}

pub fn integrate_kde_corrected_with_table(
    sample: &Sample,
    integrand: &Integrand,
    table: &LooDensityTable,
    policy: FloorPolicy,
) -> Result<IntegralEstimate> {
    check_table(sample, table)?;
    let var = table
        .variance()
        .ok_or_else(|| Error::invalid("density table carries no variance estimates"))?;
    weighted_mean(table, policy, EstimatorKind::KernelSmoothedCorrected, |i, f| {
        integrand.eval(sample.row(i)) / f * (1.0 - var[i] / (f * f))
    })
}

/// `n^{-1} sum T(X_i, f_i) / f_i` for a general `T(x, y)`.
pub fn integrate_general(
    sample: &Sample,
    functional: impl Fn(&[f64], f64) -> f64,
    kernel: &KernelSpec,
    h: Bandwidth,
) -> Result<IntegralEstimate> {
    check_nondegenerate(sample)?;
    let table = loo_density(sample, kernel, h)?;
    integrate_general_with_table(sample, functional, &table, FloorPolicy::default())
}

pub fn integrate_general_with_table(
    sample: &Sample,
    functional: impl Fn(&[f64], f64) -> f64,
    table: &LooDensityTable,
    policy: FloorPolicy,
) -> Result<IntegralEstimate> {
    check_table(sample, table)?;
    weighted_mean(table, policy, EstimatorKind::GeneralFunctional, |i, f| {
        functional(sample.row(i), f) / f
    })
}
