use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::projector_onto;
use crate::rng::{rng_from_seed, SimRng};
use crate::sample::Sample;

/// Simulation models.
///
/// - `M1`: `Y = (b^T X) sin(b^T X) + e`, `b = (e1 + e2)/sqrt 2` (`e1` when `d = 1`)
/// - `M2`: `Y = cos(pi/2 (X1 - mu)) + 0.5 e`
/// - `M3`: `Y = tau sin(X1 / tau) + 0.5 e`
/// - `M4`: `Y = sin(2 X1) / (0.5 + |1 + X2|) + sigma e`
/// - `IntegrationSin`: uniform design on `[0,1]^d`, no response; the target
///   is `int prod sin(pi x_k) dx`.
///
/// Designs are standard normal except for `IntegrationSin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    M1,
    M2,
    M3,
    M4,
    IntegrationSin,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::M1 => "m1",
            ModelKind::M2 => "m2",
            ModelKind::M3 => "m3",
            ModelKind::M4 => "m4",
            ModelKind::IntegrationSin => "integration_sin",
        }
    }

    /// Index dimension `p`.
    pub fn index_dim(self) -> usize {
        match self {
            ModelKind::M4 => 2,
            _ => 1,
        }
    }

    /// Parameter used when a grid leaves it out: `mu = 0`, `tau = 1`, `sigma = 0.5`.
    pub fn default_param(self) -> f64 {
        match self {
            ModelKind::M3 => 1.0,
            ModelKind::M4 => 0.5,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub d: usize,
    pub n: usize,
    /// `mu` for M2, `tau` for M3, `sigma` for M4; unused otherwise.
    pub param: f64,
    pub noise_sd: f64,
    /// True index, `d x p`.
    pub beta: DMatrix<f64>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, d: usize, n: usize, param: f64) -> Result<Self> {
        let p = kind.index_dim();
        if d < p || d == 0 {
            return Err(Error::invalid(format!("model {} needs d >= {p}, got {d}", kind.tag())));
        }
        if n < 1 {
            return Err(Error::invalid("sample size must be positive"));
        }
        if kind == ModelKind::M3 && !(param.is_finite() && param != 0.0) {
            return Err(Error::invalid("tau must be nonzero"));
        }
        let noise_sd = match kind {
            ModelKind::M1 => 1.0,
            ModelKind::M2 | ModelKind::M3 => 0.5,
            ModelKind::M4 => param,
            ModelKind::IntegrationSin => 0.0,
        };
        let mut beta = DMatrix::zeros(d, p);
        match kind {
            ModelKind::M1 if d >= 2 => {
                beta[(0, 0)] = std::f64::consts::FRAC_1_SQRT_2;
                beta[(1, 0)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            ModelKind::M4 => {
                beta[(0, 0)] = 1.0;
                beta[(1, 1)] = 1.0;
            }
            _ => beta[(0, 0)] = 1.0,
        }
        Ok(Self {
            kind,
            d,
            n,
            param,
            noise_sd,
            beta,
        })
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    /// Orthogonal projector on the true index space.
    pub fn true_projector(&self) -> DMatrix<f64> {
        projector_onto(&self.beta).expect("model index has full column rank")
    }

    /// Regression function `g(x)`.
    pub fn link(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::M1 => {
                let t: f64 = x.iter().zip(self.beta.column(0).iter()).map(|(a, b)| a * b).sum();
                t * t.sin()
            }
            ModelKind::M2 => (std::f64::consts::FRAC_PI_2 * (x[0] - self.param)).cos(),
            ModelKind::M3 => self.param * (x[0] / self.param).sin(),
            ModelKind::M4 => (2.0 * x[0]).sin() / (0.5 + (1.0 + x[1]).abs()),
            ModelKind::IntegrationSin => {
                x.iter().map(|v| (std::f64::consts::PI * v).sin()).product()
            }
        }
    }
}

/// A generated dataset with the noise draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub sample: Sample,
    pub noise: Vec<f64>,
}

pub fn generate_with_rng(spec: &ModelSpec, rng: &mut SimRng) -> GeneratedData {
    let (n, d) = (spec.n, spec.d);
    if spec.kind == ModelKind::IntegrationSin {
        let pts: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        return GeneratedData {
            sample: Sample::new(pts, d, None).expect("uniform draws are finite"),
            noise: Vec::new(),
        };
    }
    let pts: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = pts
        .chunks_exact(d)
        .zip(&noise)
        .map(|(x, e)| spec.link(x) + spec.noise_sd * e)
        .collect();
    GeneratedData {
        sample: Sample::new(pts, d, Some(y)).expect("normal draws are finite"),
        noise,
    }
}

/// Dataset for `spec` from the stream seeded by `seed`.
pub fn generate(spec: &ModelSpec, seed: u64) -> Sample {
    generate_with_rng(spec, &mut rng_from_seed(seed)).sample
}
