//! Smoothing kernels and bandwidth rules.
//!
//! Two families are provided: the radial Epanechnikov kernel
//! `c_d (1 - |u|^2)` on the unit ball, and Gaussian product kernels of any
//! even order `r`. The order-`r` Gaussian kernel is `prod_k phi(u_k) P(u_k^2)`
//! where `P` has degree `r/2 - 1` and is chosen so that the moments
//! `int u^{2j} phi(u) P(u^2) du` equal `1` for `j = 0` and vanish for
//! `1 <= j < r/2`. Order 2 is the plain Gaussian.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported order for the Gaussian family. The moment system
/// becomes badly conditioned beyond this.
pub const MAX_GAUSSIAN_ORDER: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    EpanechnikovRadial,
    Gaussian,
    GaussianHighOrder(u32),
}

/// A kernel family bound to a dimension, with its normalization
/// precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
    order: u32,
    norm: f64,
    // coefficients of P in powers of u^2 (Gaussian family only)
    poly: Vec<f64>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("kernel dimension must be at least 1"));
        }
        match family {
            KernelFamily::EpanechnikovRadial => Ok(Self {
                family,
                dim,
                order: 2,
                norm: epanechnikov_constant(dim),
                poly: Vec::new(),
            }),
            KernelFamily::Gaussian => Ok(Self {
                family,
                dim,
                order: 2,
                norm: (2.0 * PI).powf(-(dim as f64) / 2.0),
                poly: vec![1.0],
            }),
            KernelFamily::GaussianHighOrder(r) => {
                if r < 2 || r % 2 != 0 || r > MAX_GAUSSIAN_ORDER {
                    return Err(Error::invalid(format!(
                        "gaussian kernel order must be even in [2, {MAX_GAUSSIAN_ORDER}], got {r}"
                    )));
                }
                Ok(Self {
                    family,
                    dim,
                    order: r,
                    norm: (2.0 * PI).powf(-(dim as f64) / 2.0),
                    poly: high_order_coefficients(r),
                })
            }
        }
    }

    pub fn epanechnikov(dim: usize) -> Self {
        Self::new(KernelFamily::EpanechnikovRadial, dim).expect("dimension must be positive")
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(KernelFamily::Gaussian, dim).expect("dimension must be positive")
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Same family in another dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.family, dim)
    }

    /// `true` when `K(u)` depends on `u` only through `|u|`.
    pub fn is_radial(&self) -> bool {
        match self.family {
            KernelFamily::EpanechnikovRadial | KernelFamily::Gaussian => true,
            KernelFamily::GaussianHighOrder(r) => r == 2,
        }
    }

    /// `true` when the kernel never takes negative values.
    pub fn is_nonnegative(&self) -> bool {
        self.order == 2
    }

    /// Radius of the support, `None` for unbounded support.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            KernelFamily::EpanechnikovRadial => Some(1.0),
            _ => None,
        }
    }

    /// `K(0)`.
    pub fn at_origin(&self) -> f64 {
        match self.family {
            KernelFamily::EpanechnikovRadial => self.norm,
            _ => self.norm * self.poly[0].powi(self.dim as i32),
        }
    }

    /// `K(u)`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        self.eval_scaled(u, 1.0)
    }

    /// `K(diff * inv_h)` without materializing the scaled vector.
    #[inline]
    pub fn eval_scaled(&self, diff: &[f64], inv_h: f64) -> f64 {
        match self.family {
            KernelFamily::EpanechnikovRadial => {
                let mut r2 = 0.0;
                for &v in diff {
                    let s = v * inv_h;
                    r2 += s * s;
                }
                if r2 < 1.0 {
                    self.norm * (1.0 - r2)
                } else {
                    0.0
                }
            }
            _ => {
                let mut r2 = 0.0;
                let mut prod = 1.0;
                for &v in diff {
                    let s = v * inv_h;
                    let s2 = s * s;
                    r2 += s2;
                    prod *= poly_eval(&self.poly, s2);
                }
                self.norm * (-0.5 * r2).exp() * prod
            }
        }
    }

    /// Gradient of `K` at `diff * inv_h`, written into `out`.
    #[inline]
    pub fn gradient_scaled(&self, diff: &[f64], inv_h: f64, out: &mut [f64]) {
        debug_assert_eq!(diff.len(), out.len());
        match self.family {
            KernelFamily::EpanechnikovRadial => {
                let r2: f64 = diff.iter().map(|v| (v * inv_h) * (v * inv_h)).sum();
                if r2 < 1.0 {
                    for (o, &v) in out.iter_mut().zip(diff) {
                        *o = -2.0 * self.norm * v * inv_h;
                    }
                } else {
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
            _ => {
                // d/du [phi(u) P(u^2)] = phi(u) u (2 P'(u^2) - P(u^2))
                let mut r2 = 0.0;
                let mut values = Vec::with_capacity(diff.len());
                let mut derivs = Vec::with_capacity(diff.len());
                for &v in diff {
                    let s = v * inv_h;
                    let s2 = s * s;
                    r2 += s2;
                    let p = poly_eval(&self.poly, s2);
                    let dp = poly_derivative_eval(&self.poly, s2);
                    values.push(p);
                    derivs.push(s * (2.0 * dp - p));
                }
                let gauss = self.norm * (-0.5 * r2).exp();
                for k in 0..diff.len() {
                    let mut prod = derivs[k];
                    for (j, &p) in values.iter().enumerate() {
                        if j != k {
                            prod *= p;
                        }
                    }
                    out[k] = gauss * prod;
                }
            }
        }
    }

    /// `grad K(u)`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.gradient_scaled(u, 1.0, &mut out);
        out
    }
}

/// Free-function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, u: &[f64]) -> f64 {
    spec.eval(u)
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = V_{d-2} 2 pi / d
    let (mut v, start) = if dim % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= dim {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Normalizing constant `c_d` of the radial Epanechnikov kernel:
/// `c_d int_{|u|<1} (1 - |u|^2) du = 1`.
pub fn epanechnikov_constant(dim: usize) -> f64 {
    (dim as f64 + 2.0) / (2.0 * unit_ball_volume(dim))
}

fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn poly_derivative_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (m, &c)| acc * t + m as f64 * c)
}

/// `E[Z^{2k}] = (2k-1)!!` for a standard normal `Z`.
fn gaussian_even_moment(k: usize) -> f64 {
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}

fn high_order_coefficients(order: u32) -> Vec<f64> {
    let m = (order / 2) as usize;
    let a = DMatrix::from_fn(m, m, |j, l| gaussian_even_moment(j + l));
    let mut b = DVector::zeros(m);
    b[0] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .expect("Gaussian moment matrix is a Hankel matrix of a positive measure");
    sol.iter().copied().collect()
}

/// Kernel bandwidth. Always positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::invalid(format!("bandwidth must be positive and finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        Self::new(self.0 * factor)
    }
}

/// Bandwidth rule used by the test-function estimators: `2 s n^{-1/(d+2)}`,
/// with `s` the spread of the design.
pub fn default_bandwidth_adetf(n: usize, d: usize, s: f64) -> Result<Bandwidth> {
    if n < 2 {
        return Err(Error::invalid(format!("bandwidth rule needs n >= 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid(format!("scale must be positive, got {s}")));
    }
    Bandwidth::new(2.0 * s * (n as f64).powf(-1.0 / (d as f64 + 2.0)))
}

/// Which exponent the integration bandwidth rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IntegrationRule {
    /// `h = C n^{-1/(r+d)}`, for the plain smoothed estimator.
    #[default]
    Plain,
    /// `h = C n^{-1/(r+d/2)}`, for the variance-corrected estimator.
    Corrected,
}

/// Bandwidth rule for the integral estimators, `n^{-1/(r+d)}` with unit constant.
pub fn default_bandwidth_integration(n: usize, d: usize, r: u32) -> Result<Bandwidth> {
    integration_bandwidth(n, d, r, 1.0, IntegrationRule::Plain)
}

pub fn integration_bandwidth(
    n: usize,
    d: usize,
    r: u32,
    constant: f64,
    rule: IntegrationRule,
) -> Result<Bandwidth> {
    if n < 2 {
        return Err(Error::invalid(format!("bandwidth rule needs n >= 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if r < 2 || r % 2 != 0 {
        return Err(Error::invalid(format!("kernel order must be even and >= 2, got {r}")));
    }
    if !(constant.is_finite() && constant > 0.0) {
        return Err(Error::invalid(format!("bandwidth constant must be positive, got {constant}")));
    }
    let denom = match rule {
        IntegrationRule::Plain => r as f64 + d as f64,
        IntegrationRule::Corrected => r as f64 + d as f64 / 2.0,
    };
    Bandwidth::new(constant * (n as f64).powf(-1.0 / denom))
}
