//! Leave-one-out kernel density estimation.
//!
//! For a sample `X_1..X_n` and bandwidth `h`, the leave-one-out density at
//! the `i`-th point is
//!
//! ```text
//! f_i = 1/((n-1) h^d) sum_{j != i} K((X_i - X_j)/h)
//! ```
//!
//! and the paired variance estimate is
//!
//! ```text
//! v_i = 1/((n-1)(n-2)) sum_{j != i} (h^{-d} K((X_i - X_j)/h) - f_i)^2
//! ```
//!
//! Every row is computed by a single worker, summing over `j` in index
//! order, so results are bit-identical for any rayon pool size.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{Bandwidth, KernelSpec};
use crate::sample::Sample;

/// Densities below this are treated as zero by the estimators that divide by them.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

/// What an estimator does with points whose leave-one-out density falls
/// below the floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FloorPolicy {
    /// Drop the point from the average and rescale by the number of points kept.
    #[default]
    Skip,
    /// Refuse to estimate.
    Error,
}

/// Per-point leave-one-out densities, and optionally their variance estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LooDensityTable {
    density: Vec<f64>,
    variance: Option<Vec<f64>>,
    bandwidth: Bandwidth,
    kernel: KernelSpec,
    floor: f64,
}

impl LooDensityTable {
    /// Build a table from precomputed values, e.g. to inject a known density.
    pub fn from_parts(
        density: Vec<f64>,
        variance: Option<Vec<f64>>,
        bandwidth: Bandwidth,
        kernel: KernelSpec,
    ) -> Result<Self> {
        if let Some(v) = &variance {
            if v.len() != density.len() {
                return Err(Error::invalid("density and variance lengths differ"));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::invalid("variances must be finite and nonnegative"));
            }
        }
        if density.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("densities must be finite"));
        }
        Ok(Self {
            density,
            variance,
            bandwidth,
            kernel,
            floor: DEFAULT_DENSITY_FLOOR,
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn variance(&self) -> Option<&[f64]> {
        self.variance.as_deref()
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `true` when point `i` sits below the density floor.
    pub fn is_floored(&self, i: usize) -> bool {
        self.density[i] < self.floor
    }

    pub fn floored_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_floored(i)).count()
    }

    /// Indices kept under `policy`, or an error when the policy refuses.
    pub fn usable_points(&self, policy: FloorPolicy) -> Result<Vec<usize>> {
        let kept: Vec<usize> = (0..self.len()).filter(|&i| !self.is_floored(i)).collect();
        let dropped = self.len() - kept.len();
        if kept.is_empty() {
            return Err(Error::failed(format!(
                "all {} points fall below the density floor {:e}",
                self.len(),
                self.floor
            )));
        }
        if dropped > 0 {
            match policy {
                FloorPolicy::Error => {
                    return Err(Error::failed(format!(
                        "{dropped} points fall below the density floor {:e}",
                        self.floor
                    )))
                }
                FloorPolicy::Skip => log::warn!(
                    "skipping {dropped} of {} points below the density floor {:e}",
                    self.len(),
                    self.floor
                ),
            }
        }
        Ok(kept)
    }
}

fn check_inputs(sample: &Sample, kernel: &KernelSpec, min_n: usize) -> Result<()> {
    if sample.n() < min_n {
        return Err(Error::invalid(format!(
            "need at least {min_n} points, got {}",
            sample.n()
        )));
    }
    if kernel.dim() != sample.d() {
        return Err(Error::invalid(format!(
            "kernel dimension {} does not match sample dimension {}",
            kernel.dim(),
            sample.d()
        )));
    }
    Ok(())
}

/// Scaled kernel values `h^{-d} K((X_i - X_j)/h)` for all `j != i`, in index order.
fn row_kernel_values(
    sample: &Sample,
    kernel: &KernelSpec,
    inv_h: f64,
    scale: f64,
    i: usize,
    buf: &mut Vec<f64>,
    diff: &mut [f64],
) {
    buf.clear();
    let xi = sample.row(i);
    for j in 0..sample.n() {
        if j == i {
            continue;
        }
        for ((d, a), b) in diff.iter_mut().zip(xi).zip(sample.row(j)) {
            *d = a - b;
        }
        buf.push(scale * kernel.eval_scaled(diff, inv_h));
    }
}

/// Leave-one-out densities `f_i` at every sample point.
pub fn loo_density(sample: &Sample, kernel: &KernelSpec, h: Bandwidth) -> Result<LooDensityTable> {
    check_inputs(sample, kernel, 2)?;
    let table = compute(sample, kernel, h, false);
    Ok(table)
}

/// Leave-one-out densities together with the variance estimates `v_i`.
pub fn loo_variance(sample: &Sample, kernel: &KernelSpec, h: Bandwidth) -> Result<LooDensityTable> {
    check_inputs(sample, kernel, 3)?;
    Ok(compute(sample, kernel, h, true))
}

fn compute(sample: &Sample, kernel: &KernelSpec, h: Bandwidth, with_variance: bool) -> LooDensityTable {
    let n = sample.n();
    let d = sample.d();
    let inv_h = 1.0 / h.value();
    let scale = inv_h.powi(d as i32);
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .with_min_len(16)
        .map_init(
            || (Vec::with_capacity(n), vec![0.0; d]),
            |(buf, diff), i| {
                row_kernel_values(sample, kernel, inv_h, scale, i, buf, diff);
                let f = buf.iter().sum::<f64>() / (n - 1) as f64;
                let v = if with_variance {
                    let ss: f64 = buf.iter().map(|k| (k - f) * (k - f)).sum();
                    ss / ((n - 1) * (n - 2)) as f64
                } else {
                    0.0
                };
                (f, v)
            },
        )
        .collect();
    let (density, variance): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    LooDensityTable {
        density,
        variance: with_variance.then_some(variance),
        bandwidth: h,
        kernel: kernel.clone(),
        floor: DEFAULT_DENSITY_FLOOR,
    }
}

/// Full-sample kernel density estimate at `x`.
pub fn full_kde(sample: &Sample, kernel: &KernelSpec, h: Bandwidth, x: &[f64]) -> f64 {
    let d = sample.d();
    let inv_h = 1.0 / h.value();
    let mut diff = vec![0.0; d];
    let mut acc = 0.0;
    for row in sample.rows() {
        for ((dd, a), b) in diff.iter_mut().zip(x).zip(row) {
            *dd = a - b;
        }
        acc += kernel.eval_scaled(&diff, inv_h);
    }
    acc * inv_h.powi(d as i32) / sample.n() as f64
}

/// Gradient of [`full_kde`] at `x`.
pub fn full_kde_gradient(sample: &Sample, kernel: &KernelSpec, h: Bandwidth, x: &[f64]) -> Vec<f64> {
    let d = sample.d();
    let inv_h = 1.0 / h.value();
    let mut diff = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut acc = vec![0.0; d];
    for row in sample.rows() {
        for ((dd, a), b) in diff.iter_mut().zip(x).zip(row) {
            *dd = a - b;
        }
        kernel.gradient_scaled(&diff, inv_h, &mut g);
        for (a, b) in acc.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let scale = inv_h.powi(d as i32 + 1) / sample.n() as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    acc
}

/// Leave-one-out density gradients `grad f_i(X_i)`, one row per point.
pub fn loo_density_gradient(sample: &Sample, kernel: &KernelSpec, h: Bandwidth) -> Result<Vec<Vec<f64>>> {
    check_inputs(sample, kernel, 2)?;
    let n = sample.n();
    let d = sample.d();
    let inv_h = 1.0 / h.value();
    let scale = inv_h.powi(d as i32 + 1) / (n - 1) as f64;
    Ok((0..n)
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            let xi = sample.row(i);
            let mut diff = vec![0.0; d];
            let mut g = vec![0.0; d];
            let mut acc = vec![0.0; d];
            for j in 0..n {
                if j == i {
                    continue;
                }
                for ((dd, a), b) in diff.iter_mut().zip(xi).zip(sample.row(j)) {
                    *dd = a - b;
                }
                kernel.gradient_scaled(&diff, inv_h, &mut g);
                for (a, b) in acc.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            acc.iter_mut().for_each(|v| *v *= scale);
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> Bandwidth {
        Bandwidth::new(v).unwrap()
    }

    #[test]
    fn two_point_example() {
        let s = Sample::new(vec![0.0, 0.5], 1, None).unwrap();
        let t = loo_density(&s, &KernelSpec::epanechnikov(1), h(1.0)).unwrap();
        assert!((t.density()[0] - 0.5625).abs() < 1e-15);
        assert!((t.density()[1] - 0.5625).abs() < 1e-15);
        assert!(t.variance().is_none());
    }

    #[test]
    fn identical_points_give_kernel_peak() {
        let s = Sample::new(vec![0.3; 5], 1, None).unwrap();
        let t = loo_density(&s, &KernelSpec::epanechnikov(1), h(0.5)).unwrap();
        for &f in t.density() {
            assert!((f - 0.75 / 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn isolated_point_has_zero_density() {
        let s = Sample::new(vec![0.0, 0.1, 5.0], 1, None).unwrap();
        let t = loo_density(&s, &KernelSpec::epanechnikov(1), h(1.0)).unwrap();
        assert_eq!(t.density()[2], 0.0);
        assert!(t.is_floored(2));
        assert_eq!(t.floored_count(), 1);
        assert!(t.usable_points(FloorPolicy::Error).is_err());
        assert_eq!(t.usable_points(FloorPolicy::Skip).unwrap(), vec![0, 1]);
    }

    #[test]
    fn variance_of_three_points() {
        // from X_0 = 0: neighbours at distance 0.5 and 0.5 -> equal kernel values
        let s = Sample::new(vec![0.0, 0.5, -0.5], 1, None).unwrap();
        let k = KernelSpec::epanechnikov(1);
        let t = loo_variance(&s, &k, h(1.0)).unwrap();
        assert!(t.variance().unwrap()[0].abs() < 1e-15);
        // from X_1 = 0.5: kernel values a = K(0.5), b = K(1.0) = 0
        let a = 0.75 * (1.0 - 0.25);
        let b = 0.0;
        let expected = ((a - b) / 2.0f64).powi(2);
        assert!((t.variance().unwrap()[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn size_checks() {
        let k = KernelSpec::epanechnikov(1);
        let one = Sample::new(vec![0.0], 1, None).unwrap();
        assert!(loo_density(&one, &k, h(1.0)).is_err());
        let two = Sample::new(vec![0.0, 1.0], 1, None).unwrap();
        assert!(loo_variance(&two, &k, h(1.0)).is_err());
        let k2 = KernelSpec::epanechnikov(2);
        assert!(loo_density(&two, &k2, h(1.0)).is_err());
    }

    #[test]
    fn full_kde_edge_cases() {
        let k = KernelSpec::epanechnikov(1);
        let s = Sample::new(vec![0.2], 1, None).unwrap();
        assert!((full_kde(&s, &k, h(0.5), &[0.2]) - 1.5).abs() < 1e-15);
        assert_eq!(full_kde(&s, &k, h(0.5), &[10.0]), 0.0);
    }

    #[test]
    fn full_kde_gradient_example() {
        let k = KernelSpec::epanechnikov(1);
        let s = Sample::new(vec![1.0], 1, None).unwrap();
        let g = full_kde_gradient(&s, &k, h(1.0), &[1.5]);
        assert!((g[0] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_symmetric_center() {
        let k = KernelSpec::epanechnikov(2);
        let s = Sample::new(vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.5, 0.0, -0.5], 2, None).unwrap();
        let g = full_kde_gradient(&s, &k, h(1.5), &[0.0, 0.0]);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }
}
