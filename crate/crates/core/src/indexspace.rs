//! Index-space estimation for multiple-index models `Y = g0(B^T X) + e`.
//!
//! By integration by parts, `int g grad(psi) = -int grad(g) psi` lies in the
//! index space for any smooth compactly supported `psi`. Each test function
//! centred at a data point gives an estimate
//! `beta_k = n^{-1} sum Y_i grad(psi_k)(X_i) / f_i`; the most informative
//! `ceil(sqrt n)` of them (by a chi-square dependence score between `Y` and
//! `beta_k^T X`) are combined by PCA.
//!
//! The classical average derivative estimator (ADE), which uses `psi = f`
//! and hence the density gradient, is provided as a baseline.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{loo_density, loo_density_gradient, FloorPolicy, LooDensityTable};
use crate::error::{Error, Result};
use crate::kernels::{default_bandwidth_adetf, Bandwidth, KernelFamily, KernelSpec};
use crate::linalg::SubspaceEstimate;
use crate::sample::Sample;

/// Radial bump `psi(x) = psi0(|x - t| / h0)` with
/// `psi0(z) = (1 - z)^2 (1 + z)^2` on `|z| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    center: Vec<f64>,
    scale: f64,
}

impl TestFunction {
    pub fn new(center: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("test function scale must be positive, got {scale}")));
        }
        Ok(Self { center, scale })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let z2 = self.scaled_sq_dist(x);
        if z2 < 1.0 {
            (1.0 - z2) * (1.0 - z2)
        } else {
            0.0
        }
    }

    /// `-(4/h0^2) (1 - |x-t|^2/h0^2) (x - t)` inside the support, zero outside.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        bump_gradient(&self.center, self.scale, x, &mut out);
        out
    }

    fn scaled_sq_dist(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        r2 / (self.scale * self.scale)
    }
}

/// Free-function form of [`TestFunction::gradient`].
pub fn test_function_gradient(tf: &TestFunction, x: &[f64]) -> Vec<f64> {
    tf.gradient(x)
}

/// Writes the bump gradient into `out`; returns `false` outside the support.
#[inline]
fn bump_gradient(center: &[f64], scale: f64, x: &[f64], out: &mut [f64]) -> bool {
    let inv2 = 1.0 / (scale * scale);
    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    let z2 = r2 * inv2;
    if z2 < 1.0 {
        let c = -4.0 * inv2 * (1.0 - z2);
        for ((o, a), b) in out.iter_mut().zip(x).zip(center) {
            *o = c * (a - b);
        }
        true
    } else {
        out.iter_mut().for_each(|o| *o = 0.0);
        false
    }
}

/// `beta_psi = n^{-1} sum Y_i grad(psi)(X_i) / f_i`, floored points dropped.
pub fn beta_psi(sample: &Sample, tf: &TestFunction, kernel: &KernelSpec, h: Bandwidth) -> Result<Vec<f64>> {
    let table = loo_density(sample, kernel, h)?;
    beta_psi_with_table(sample, tf, &table, FloorPolicy::default())
}

pub fn beta_psi_with_table(
    sample: &Sample,
    tf: &TestFunction,
    table: &LooDensityTable,
    policy: FloorPolicy,
) -> Result<Vec<f64>> {
    let weights = response_weights(sample, table, policy)?;
    let mut out = vec![0.0; sample.d()];
    accumulate_beta(sample, &weights.0, tf.center(), tf.scale(), None, &mut out);
    out.iter_mut().for_each(|v| *v /= weights.1 as f64);
    Ok(out)
}

/// `Y_i / f_i` for kept points (zero for floored ones) and the kept count.
fn response_weights(sample: &Sample, table: &LooDensityTable, policy: FloorPolicy) -> Result<(Vec<f64>, usize)> {
    let y = sample.require_response()?;
    if table.len() != sample.n() {
        return Err(Error::invalid("density table does not match the sample"));
    }
    let kept = table.usable_points(policy)?;
    let mut w = vec![0.0; sample.n()];
    for &i in &kept {
        w[i] = y[i] / table.density()[i];
    }
    Ok((w, kept.len()))
}

/// Adds `sum_i w_i M grad(psi)(Z_i)` to `out`, where the bump lives in the
/// space of `points` and `M` is an optional back-mapping.
fn accumulate_beta(
    points: &Sample,
    weights: &[f64],
    center: &[f64],
    scale: f64,
    back: Option<&DMatrix<f64>>,
    out: &mut [f64],
) {
    let d = points.d();
    let mut g = vec![0.0; d];
    let mut acc = vec![0.0; d];
    for (i, z) in points.rows().enumerate() {
        if weights[i] == 0.0 {
            continue;
        }
        if bump_gradient(center, scale, z, &mut g) {
            for (a, b) in acc.iter_mut().zip(&g) {
                *a += weights[i] * b;
            }
        }
    }
    match back {
        None => out.copy_from_slice(&acc),
        Some(m) => {
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..d).map(|c| m[(r, c)] * acc[c]).sum();
            }
        }
    }
}

/// Equal-count bin labels from ranks: ties broken by index, bins of size
/// `floor(n / H)` with the last absorbing the remainder.
pub fn equal_count_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let size = (n / bins).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = (rank / size).min(bins - 1);
    }
    labels
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Pearson statistic of the `H x H` table of joint bin frequencies against
/// the product of its margins.
fn pearson_from_labels(a: &[usize], b: &[usize], bins: usize) -> f64 {
    let n = a.len() as f64;
    let mut counts = vec![0u32; bins * bins];
    for (&i, &j) in a.iter().zip(b) {
        counts[i * bins + j] += 1;
    }
    let mut rows = vec![0u32; bins];
    let mut cols = vec![0u32; bins];
    for i in 0..bins {
        for j in 0..bins {
            rows[i] += counts[i * bins + j];
            cols[j] += counts[i * bins + j];
        }
    }
    let mut score = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let expected = (rows[i] as f64 / n) * (cols[j] as f64 / n);
            if expected > 0.0 {
                let diff = counts[i * bins + j] as f64 / n - expected;
                score += diff * diff / expected;
            }
        }
    }
    score
}

/// Chi-square dependence score between `y` and `z` over `bins x bins`
/// equal-count bins. A constant input scores zero.
pub fn dependence_score(y: &[f64], z: &[f64], bins: usize) -> Result<f64> {
    if y.len() != z.len() {
        return Err(Error::invalid("score inputs have different lengths"));
    }
    if bins < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
    }
    if y.len() < bins {
        return Err(Error::invalid(format!(
            "{} observations cannot fill {bins} bins",
            y.len()
        )));
    }
    if is_constant(y) || is_constant(z) {
        log::warn!("dependence score of a constant variable is zero");
        return Ok(0.0);
    }
    Ok(pearson_from_labels(&equal_count_bins(y, bins), &equal_count_bins(z, bins), bins))
}

/// Default number of bins and selected candidates, `ceil(sqrt n)`.
pub fn default_bins(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdetfConfig {
    pub kernel: KernelFamily,
    /// Density bandwidth; `None` uses `2 s n^{-1/(d+2)}`.
    pub bandwidth: Option<f64>,
    /// Test-function radius; `None` uses the design spread `s`.
    pub h0: Option<f64>,
    /// Bins per axis for the dependence score; `None` uses `ceil(sqrt n)`.
    pub bins: Option<usize>,
    /// Number of selected candidates; `None` uses `ceil(sqrt n)`.
    pub n_select: Option<usize>,
    /// Cap on the number of test functions (evenly spaced data points).
    pub max_test_functions: Option<usize>,
    pub floor_policy: FloorPolicy,
}

impl Default for AdetfConfig {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::EpanechnikovRadial,
            bandwidth: None,
            h0: None,
            bins: None,
            n_select: None,
            max_test_functions: None,
            floor_policy: FloorPolicy::Skip,
        }
    }
}

/// Candidate directions with their scores and the selected subset.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    /// `K x d`, one candidate per row.
    pub betas: DMatrix<f64>,
    pub scores: Vec<f64>,
    /// Selected row indices, best first.
    pub selected: Vec<usize>,
}

impl CandidateSet {
    /// Scores every row of `betas` by its dependence with `y` through
    /// `beta^T X`, then keeps the `n_select` best (ties by row index).
    pub fn score_and_select(
        betas: DMatrix<f64>,
        design: &Sample,
        y: &[f64],
        bins: usize,
        n_select: usize,
    ) -> Result<Self> {
        if bins < 2 || y.len() < bins {
            return Err(Error::invalid(format!("cannot form {bins} bins from {} points", y.len())));
        }
        let y_labels = equal_count_bins(y, bins);
        let y_const = is_constant(y);
        if y_const {
            log::warn!("constant response: every dependence score is zero");
        }
        let scores: Vec<f64> = (0..betas.nrows())
            .into_par_iter()
            .map(|k| {
                if y_const {
                    return 0.0;
                }
                let z: Vec<f64> = design
                    .rows()
                    .map(|x| x.iter().enumerate().map(|(c, v)| betas[(k, c)] * v).sum())
                    .collect();
                if is_constant(&z) {
                    0.0
                } else {
                    pearson_from_labels(&y_labels, &equal_count_bins(&z, bins), bins)
                }
            })
            .collect();
        let selected = select_top(&scores, n_select.min(betas.nrows()));
        Ok(Self {
            betas,
            scores,
            selected,
        })
    }

    /// `sum_{k in S} beta_k beta_k^T`.
    pub fn outer_product_sum(&self) -> DMatrix<f64> {
        let d = self.betas.ncols();
        let mut m = DMatrix::zeros(d, d);
        for &k in &self.selected {
            let b = self.betas.row(k).transpose();
            m += &b * b.transpose();
        }
        m
    }
}

fn select_top(scores: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// PCA of the selected candidates: top-`p` eigenvectors of
/// `sum beta_k beta_k^T`.
pub fn extract_subspace(candidates: &CandidateSet, p: usize) -> Result<SubspaceEstimate> {
    let m = candidates.outer_product_sum();
    if m.amax() == 0.0 {
        return Err(Error::failed("every selected candidate direction is zero"));
    }
    SubspaceEstimate::from_symmetric(&m, p)
}

fn check_target_dim(sample: &Sample, p: usize) -> Result<()> {
    if p == 0 || p > sample.d() {
        return Err(Error::invalid(format!(
            "target dimension {p} outside 1..={}",
            sample.d()
        )));
    }
    Ok(())
}

fn test_function_centers(n: usize, cap: Option<usize>) -> Vec<usize> {
    match cap {
        Some(k) if k > 0 && k < n => (0..k).map(|j| j * n / k).collect(),
        _ => (0..n).collect(),
    }
}

/// Candidate directions for the design mapped by `transform` (identity when
/// `None`); bandwidth scaled by `h_factor`.
fn candidates_in_space(
    sample: &Sample,
    transform: Option<&DMatrix<f64>>,
    config: &AdetfConfig,
    h_factor: f64,
) -> Result<CandidateSet> {
    let y = sample.require_response()?;
    let n = sample.n();
    if n < 9 {
        return Err(Error::invalid(format!("test-function estimation needs n >= 9, got {n}")));
    }
    let mapped;
    let space = match transform {
        Some(a) => {
            mapped = sample.map_linear(a)?;
            &mapped
        }
        None => sample,
    };
    let d = space.d();
    let kernel = KernelSpec::new(config.kernel, d)?;
    let s = space.spread();
    let h = match config.bandwidth {
        Some(v) => Bandwidth::new(v)?,
        None => default_bandwidth_adetf(n, d, s)?,
    }
    .scaled(h_factor)?;
    let h0 = config.h0.unwrap_or(s);
    if !(h0.is_finite() && h0 > 0.0) {
        return Err(Error::invalid(format!("test function radius must be positive, got {h0}")));
    }
    let table = loo_density(space, &kernel, h)?;
    let (weights, used) = response_weights(space, &table, config.floor_policy)?;
    let centers = test_function_centers(n, config.max_test_functions);
    let rows: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&k| {
            let mut b = vec![0.0; d];
            accumulate_beta(space, &weights, space.row(k), h0, transform, &mut b);
            b.iter_mut().for_each(|v| *v /= used as f64);
            b
        })
        .collect();
    let betas = DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]);
    if betas.amax() == 0.0 {
        return Err(Error::failed("every test-function direction is zero"));
    }
    let bins = config.bins.unwrap_or_else(|| default_bins(n));
    let n_select = config.n_select.unwrap_or_else(|| default_bins(n));
    CandidateSet::score_and_select(betas, sample, y, bins, n_select)
}

/// All test-function candidates for `sample` with scores and selection.
pub fn adetf_candidates(sample: &Sample, config: &AdetfConfig) -> Result<CandidateSet> {
    candidates_in_space(sample, None, config, 1.0)
}

/// Test-function average derivative estimate of a `p`-dimensional index space.
pub fn adetf(sample: &Sample, p: usize, config: &AdetfConfig) -> Result<SubspaceEstimate> {
    check_target_dim(sample, p)?;
    extract_subspace(&adetf_candidates(sample, config)?, p)
}

/// One pass of the estimator on the points `A X_i`, gradients mapped back
/// through `A`; `h_factor` scales the density bandwidth.
pub fn adetf_transformed(
    sample: &Sample,
    a: &DMatrix<f64>,
    p: usize,
    config: &AdetfConfig,
    h_factor: f64,
) -> Result<SubspaceEstimate> {
    check_target_dim(sample, p)?;
    if a.shape() != (sample.d(), sample.d()) {
        return Err(Error::invalid("transform must be a d x d matrix"));
    }
    extract_subspace(&candidates_in_space(sample, Some(a), config, h_factor)?, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub base: AdetfConfig,
    /// Initial `epsilon` in `A = B B^T + epsilon I`.
    pub eps: f64,
    /// Refinement passes after the initial estimate.
    pub iterations: usize,
    /// Per-pass multiplier applied to both `h` and `epsilon`.
    pub shrink: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            base: AdetfConfig::default(),
            eps: 0.1,
            iterations: 1,
            shrink: 0.7,
        }
    }
}

/// Stretching matrix `B B^T + eps I` for an orthonormal basis `B`.
pub fn stretch_matrix(basis: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
    }
    let d = basis.nrows();
    Ok(basis * basis.transpose() + DMatrix::identity(d, d) * eps)
}

/// Initial estimate, then `iterations` passes on `A X` with
/// `A = B B^T + eps I`, shrinking `h` and `eps` each pass.
pub fn adaptive_adetf(sample: &Sample, p: usize, config: &AdaptiveConfig) -> Result<SubspaceEstimate> {
    if !(config.eps.is_finite() && config.eps > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {}", config.eps)));
    }
    if !(config.shrink > 0.0 && config.shrink <= 1.0) {
        return Err(Error::invalid(format!("shrink factor must lie in (0, 1], got {}", config.shrink)));
    }
    let mut est = adetf(sample, p, &config.base)?;
    let mut eps = config.eps;
    let mut h_factor = 1.0;
    for _ in 0..config.iterations {
        h_factor *= config.shrink;
        let a = stretch_matrix(est.basis(), eps)?;
        est = adetf_transformed(sample, &a, p, &config.base, h_factor)?;
        eps *= config.shrink;
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdeConfig {
    pub kernel: KernelFamily,
    /// `None` uses the same `2 s n^{-1/(d+2)}` rule as the test-function estimator.
    pub bandwidth: Option<f64>,
    /// Points with `f_i <= trim` are dropped.
    pub trim: f64,
}

impl Default for AdeConfig {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::EpanechnikovRadial,
            bandwidth: None,
            trim: 0.0,
        }
    }
}

/// `-n^{-1} sum Y_i grad(f_i)(X_i) / f_i 1{f_i > b}`.
pub fn ade(sample: &Sample, kernel: &KernelSpec, h: Bandwidth, trim: f64) -> Result<Vec<f64>> {
    let y = sample.require_response()?;
    let table = loo_density(sample, kernel, h)?;
    let grads = loo_density_gradient(sample, kernel, h)?;
    let f = table.density();
    let threshold = trim.max(table.floor());
    let mut out = vec![0.0; sample.d()];
    let mut used = 0;
    for i in 0..sample.n() {
        if f[i] > threshold {
            used += 1;
            for (o, g) in out.iter_mut().zip(&grads[i]) {
                *o -= y[i] * g / f[i];
            }
        }
    }
    if used == 0 {
        return Err(Error::failed("every point was trimmed"));
    }
    out.iter_mut().for_each(|v| *v /= sample.n() as f64);
    Ok(out)
}

/// ADE as a one-dimensional subspace estimate.
pub fn ade_subspace(sample: &Sample, config: &AdeConfig) -> Result<SubspaceEstimate> {
    let kernel = KernelSpec::new(config.kernel, sample.d())?;
    let h = match config.bandwidth {
        Some(v) => Bandwidth::new(v)?,
        None => default_bandwidth_adetf(sample.n(), sample.d(), sample.spread())?,
    };
    let beta = ade(sample, &kernel, h, config.trim)?;
    let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::failed("average derivative is exactly zero"));
    }
    let b = DMatrix::from_column_slice(sample.d(), 1, &beta);
    SubspaceEstimate::from_basis(&b, vec![norm])
}
