//! Linear functionals `c = int g(x) psi(x) dx` of a regression function.
//!
//! With `Y = g(X) + sigma(X) e`, the estimator is
//! `c_hat = n^{-1} sum Y_i psi(X_i) / f_i`, root-`n` consistent with
//! asymptotic variance `v = Var((Y - g(X)) psi(X) / f(X))`. The variance is
//! estimated by plugging in residuals from a leave-one-out Nadaraya-Watson
//! pilot fit that shares the kernel and bandwidth.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{loo_density, FloorPolicy, LooDensityTable};
use crate::error::{Error, Result};
use crate::integrator::{BoxRegion, Integrand};
use crate::kernels::{Bandwidth, KernelSpec};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sample::Sample;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalEstimate {
    pub c_hat: f64,
    /// Plug-in estimate of the asymptotic variance of `sqrt(n) (c_hat - c)`.
    pub v_hat: f64,
    pub n_used: usize,
}

/// Leave-one-out Nadaraya-Watson fit at every sample point. Points with no
/// kernel mass from the others get `None`.
pub fn loo_nadaraya_watson(sample: &Sample, kernel: &KernelSpec, h: Bandwidth) -> Result<Vec<Option<f64>>> {
    let y = sample.require_response()?;
    let n = sample.n();
    let d = sample.d();
    let inv_h = 1.0 / h.value();
    Ok((0..n)
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            let xi = sample.row(i);
            let mut diff = vec![0.0; d];
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                for ((dd, a), b) in diff.iter_mut().zip(xi).zip(sample.row(j)) {
                    *dd = a - b;
                }
                let w = kernel.eval_scaled(&diff, inv_h);
                num += w * y[j];
                den += w;
            }
            (den > 0.0).then(|| num / den)
        })
        .collect())
}

/// `c_hat = n^{-1} sum Y_i psi(X_i) / f_i` with its plug-in variance.
pub fn estimate_functional(
    sample: &Sample,
    psi: &Integrand,
    kernel: &KernelSpec,
    h: Bandwidth,
) -> Result<FunctionalEstimate> {
    sample.require_response()?;
    if sample.n() < 3 {
        return Err(Error::invalid("functional estimation needs at least 3 points"));
    }
    let table = loo_density(sample, kernel, h)?;
    let pilot = loo_nadaraya_watson(sample, kernel, h)?;
    estimate_functional_with_table(sample, psi, &table, &pilot, FloorPolicy::default())
}

pub fn estimate_functional_with_table(
    sample: &Sample,
    psi: &Integrand,
    table: &LooDensityTable,
    pilot: &[Option<f64>],
    policy: FloorPolicy,
) -> Result<FunctionalEstimate> {
    let y = sample.require_response()?;
    if table.len() != sample.n() || pilot.len() != sample.n() {
        return Err(Error::invalid("table or pilot fit does not match the sample"));
    }
    let kept = table.usable_points(policy)?;
    let f = table.density();
    let mut sum = 0.0;
    let mut scores = Vec::with_capacity(kept.len());
    for &i in &kept {
        let w = psi.eval(sample.row(i)) / f[i];
        sum += y[i] * w;
        // points without a pilot value carry no residual information
        let resid = pilot[i].map_or(0.0, |g| y[i] - g);
        scores.push(resid * w);
    }
    let c_hat = sum / kept.len() as f64;
    let v_hat = if scores.len() > 1 {
        let m = stats::mean(&scores);
        scores.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / scores.len() as f64
    } else {
        0.0
    };
    if !(c_hat.is_finite() && v_hat.is_finite()) {
        return Err(Error::failed("functional estimate is not finite"));
    }
    Ok(FunctionalEstimate {
        c_hat,
        v_hat,
        n_used: kept.len(),
    })
}

/// Warnings about the bandwidth conditions `n^{1/2} h^r -> 0` and
/// `n^{1/2} h^d -> infinity`. At finite `n` these are checked as
/// `n^{1/2} h^r < 1` and `n^{1/2} h^d > 1`.
pub fn bandwidth_condition_warnings(n: usize, d: usize, order: u32, h: f64) -> Vec<String> {
    let root_n = (n as f64).sqrt();
    let mut out = Vec::new();
    let bias = root_n * h.powi(order as i32);
    if bias >= 1.0 {
        out.push(format!(
            "sqrt(n) h^r = {bias:.3} is not small: the smoothing bias is not negligible"
        ));
    }
    let spread = root_n * h.powi(d as i32);
    if spread <= 1.0 {
        out.push(format!(
            "sqrt(n) h^d = {spread:.3} is not large: the bandwidth is too small for this n"
        ));
    }
    out
}

/// Which density the weights `psi / f` use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Weighting {
    /// Leave-one-out kernel estimate of `f`.
    PlugIn,
    /// The true sampling density.
    KnownDensity,
}

type Fn1 = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A simulation model `Y = g(X) + sigma(X) e`, `X` uniform on a box, with
/// everything needed to compute `c` and `v` by quadrature.
#[derive(Clone)]
pub struct RegressionModel {
    pub design: BoxRegion,
    pub link: Fn1,
    pub noise_sd: Fn1,
}

impl std::fmt::Debug for RegressionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegressionModel").field("design", &self.design).finish_non_exhaustive()
    }
}

impl RegressionModel {
    pub fn new(
        design: BoxRegion,
        link: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        noise_sd: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            design,
            link: Arc::new(link),
            noise_sd: Arc::new(noise_sd),
        }
    }

    /// Homoscedastic model with constant noise level.
    pub fn homoscedastic(
        design: BoxRegion,
        link: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        sigma: f64,
    ) -> Self {
        Self::new(design, link, move |_| sigma)
    }

    pub fn density_value(&self) -> f64 {
        1.0 / self.design.volume()
    }

    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Sample {
        let x = self.design.sample_uniform(n, rng);
        let y: Vec<f64> = x
            .rows()
            .map(|r| {
                let e: f64 = rng.sample(StandardNormal);
                (self.link)(r) + (self.noise_sd)(r) * e
            })
            .collect();
        x.with_response(y).expect("generated data are finite")
    }

    /// `c = int g psi` and `v = int sigma^2 psi^2 / f`, by a midpoint rule
    /// with `nodes` points per axis over the design box.
    pub fn analytic_targets(&self, psi: &Integrand, nodes: usize) -> (f64, f64) {
        let d = self.design.dim();
        let f = self.density_value();
        let cell = self.design.volume() / (nodes as f64).powi(d as i32);
        let mut idx = vec![0usize; d];
        let mut c = 0.0;
        let mut v = 0.0;
        let mut u = vec![0.0; d];
        loop {
            for k in 0..d {
                u[k] = (idx[k] as f64 + 0.5) / nodes as f64;
            }
            let x = self.design.from_unit(&u);
            let p = psi.eval(&x);
            let s = (self.noise_sd)(&x);
            c += (self.link)(&x) * p;
            v += s * s * p * p / f;
            let mut k = 0;
            loop {
                if k == d {
                    return (c * cell, v * cell);
                }
                idx[k] += 1;
                if idx[k] < nodes {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Bandwidth used by a CLT check: a fixed value or `C n^{-a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BandwidthChoice {
    Fixed(f64),
    Power { constant: f64, exponent: f64 },
}

impl BandwidthChoice {
    pub fn resolve(self, n: usize) -> Result<Bandwidth> {
        match self {
            BandwidthChoice::Fixed(h) => Bandwidth::new(h),
            BandwidthChoice::Power { constant, exponent } => {
                Bandwidth::new(constant * (n as f64).powf(-exponent))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub replications: usize,
    pub bandwidth: f64,
    pub c: f64,
    pub v: f64,
    /// Mean of `sqrt(n) (c_hat - c)`.
    pub mean: f64,
    /// Variance of `sqrt(n) (c_hat - c)` across replications.
    pub variance: f64,
    pub anderson_darling: f64,
    pub normality_p_value: f64,
    pub failures: usize,
    pub warnings: Vec<String>,
    /// The draws of `sqrt(n) (c_hat - c)`, in replicate order.
    pub draws: Vec<f64>,
}

impl CltReport {
    /// One row per replicate: `replicate,draw`.
    pub fn write_draws_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replicate", "scaled_error"])?;
        for (i, v) in self.draws.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Replicates `sqrt(n) (c_hat - c)` under a known model and compares its
/// spread with the asymptotic variance `v`.
pub fn clt_check(
    model: &RegressionModel,
    psi: &Integrand,
    kernel: &KernelSpec,
    bandwidth: BandwidthChoice,
    weighting: Weighting,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<CltReport> {
    let h = bandwidth.resolve(n)?;
    let (c, v) = model.analytic_targets(psi, 4096_usize.min(
        (2_000_000f64).powf(1.0 / model.design.dim() as f64) as usize,
    ));
    let warnings = bandwidth_condition_warnings(n, model.design.dim(), kernel.order(), h.value());
    for w in &warnings {
        log::warn!("{w}");
    }
    let root_n = (n as f64).sqrt();
    let results: Vec<Option<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
            let data = model.generate(n, &mut rng);
            let est = match weighting {
                Weighting::PlugIn => loo_density(&data, kernel, h)
                    .and_then(|t| {
                        let pilot = vec![None; data.n()];
                        estimate_functional_with_table(&data, psi, &t, &pilot, FloorPolicy::Skip)
                    })
                    .map(|e| e.c_hat),
                Weighting::KnownDensity => {
                    let y = data.require_response().expect("generated with response");
                    let f = model.density_value();
                    Ok(data
                        .rows()
                        .zip(y)
                        .map(|(x, yi)| yi * psi.eval(x) / f)
                        .sum::<f64>()
                        / n as f64)
                }
            };
            est.ok().map(|c_hat| root_n * (c_hat - c))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    let draws: Vec<f64> = results.into_iter().flatten().collect();
    if draws.is_empty() {
        return Err(Error::failed("every replication failed"));
    }
    let (ad, p) = stats::anderson_darling_normal(&draws);
    Ok(CltReport {
        n,
        replications,
        bandwidth: h.value(),
        c,
        v,
        mean: stats::mean(&draws),
        variance: stats::variance(&draws),
        anderson_darling: ad,
        normality_p_value: p,
        failures,
        warnings,
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> Bandwidth {
        Bandwidth::new(v).unwrap()
    }

    fn toy() -> Sample {
        Sample::new(vec![0.1, 0.3, 0.35, 0.6, 0.8, 0.9], 1, Some(vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5])).unwrap()
    }

    #[test]
    fn zero_response_and_zero_psi() {
        let k = KernelSpec::epanechnikov(1);
        let s = toy().without_response().with_response(vec![0.0; 6]).unwrap();
        let one = Integrand::indicator(BoxRegion::unit_cube(1));
        assert_eq!(estimate_functional(&s, &one, &k, h(0.5)).unwrap().c_hat, 0.0);
        let est = estimate_functional(&toy(), &Integrand::zero(), &k, h(0.5)).unwrap();
        assert_eq!(est.c_hat, 0.0);
        assert_eq!(est.v_hat, 0.0);
    }

    #[test]
    fn missing_response_rejected() {
        let k = KernelSpec::epanechnikov(1);
        let s = toy().without_response();
        let one = Integrand::indicator(BoxRegion::unit_cube(1));
        assert!(matches!(
            estimate_functional(&s, &one, &k, h(0.5)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn scale_equivariance() {
        let k = KernelSpec::epanechnikov(1);
        let psi = Integrand::unbounded(|x| 1.0 + x[0]);
        let a = estimate_functional(&toy(), &psi, &k, h(0.5)).unwrap();
        let y: Vec<f64> = toy().response().unwrap().iter().map(|v| -3.0 * v).collect();
        let scaled = toy().with_response(y).unwrap();
        let b = estimate_functional(&scaled, &psi, &k, h(0.5)).unwrap();
        assert!((b.c_hat + 3.0 * a.c_hat).abs() < 1e-12 * a.c_hat.abs().max(1.0));
        assert!((b.v_hat - 9.0 * a.v_hat).abs() < 1e-12 * a.v_hat.max(1.0));
    }

    #[test]
    fn quadrature_targets() {
        let m = RegressionModel::homoscedastic(BoxRegion::unit_cube(1), |x| (std::f64::consts::PI * x[0]).sin(), 1.0);
        let (c, v) = m.analytic_targets(&Integrand::indicator(BoxRegion::unit_cube(1)), 4096);
        assert!((c - 2.0 / std::f64::consts::PI).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_warnings() {
        assert!(bandwidth_condition_warnings(1000, 1, 2, 0.1).is_empty());
        assert_eq!(bandwidth_condition_warnings(1000, 1, 2, 0.9).len(), 1);
        assert_eq!(bandwidth_condition_warnings(1000, 1, 2, 0.001).len(), 1);
    }
}
