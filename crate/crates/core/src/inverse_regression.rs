//! Sliced inverse regression (SIR) and sliced average variance estimation
//! (SAVE).
//!
//! Both standardize the design with the symmetric inverse square root of its
//! covariance, slice the response into equal-count groups, and read the
//! index space off the leading eigenvectors of a slice-weighted kernel
//! matrix: `sum w_h m_h m_h^T` for SIR (slice means), `sum w_h (I - V_h)^2`
//! for SAVE (slice covariances). Eigenvectors are mapped back with the same
//! inverse square root.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexspace::equal_count_bins;
use crate::linalg::{inverse_sqrt_spd, sorted_symmetric_eigen, SubspaceEstimate};
use crate::sample::Sample;

/// Ridge added to covariance eigenvalues before inverting.
pub const STANDARDIZATION_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceConfig {
    pub n_slices: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self { n_slices: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdrMethod {
    Sir,
    Save,
}

struct Standardized {
    z: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    slices: Vec<usize>,
}

fn standardize(sample: &Sample, p: usize, slices: SliceConfig) -> Result<Standardized> {
    let y = sample.require_response()?;
    let (n, d) = (sample.n(), sample.d());
    if p == 0 || p > d {
        return Err(Error::invalid(format!("target dimension {p} outside 1..={d}")));
    }
    if slices.n_slices < 2 {
        return Err(Error::invalid("need at least 2 slices"));
    }
    if n < 2 * slices.n_slices {
        return Err(Error::invalid(format!(
            "{n} points are too few for {} slices",
            slices.n_slices
        )));
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::failed("constant response: slices carry no information"));
    }
    let x = sample.design_matrix();
    let mean = DVector::from_vec(sample.mean());
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let inv_sqrt = inverse_sqrt_spd(&cov, STANDARDIZATION_RIDGE)?;
    let z = centered * &inv_sqrt;
    Ok(Standardized {
        z,
        inv_sqrt,
        slices: equal_count_bins(y, slices.n_slices),
    })
}

fn back_transform(st: &Standardized, kernel: &DMatrix<f64>, p: usize) -> Result<SubspaceEstimate> {
    let (values, vectors) = sorted_symmetric_eigen(kernel);
    let directions = &st.inv_sqrt * vectors.columns(0, p);
    SubspaceEstimate::from_basis(&directions, values)
}

fn slice_members(st: &Standardized, h: usize) -> Vec<usize> {
    (0..st.slices.len()).filter(|&i| st.slices[i] == h).collect()
}

pub fn sir(sample: &Sample, p: usize, slices: SliceConfig) -> Result<SubspaceEstimate> {
    let st = standardize(sample, p, slices)?;
    let (n, d) = st.z.shape();
    let mut m = DMatrix::zeros(d, d);
    for h in 0..slices.n_slices {
        let members = slice_members(&st, h);
        let mut mean = DVector::zeros(d);
        for &i in &members {
            mean += st.z.row(i).transpose();
        }
        mean /= members.len() as f64;
        m += &mean * mean.transpose() * (members.len() as f64 / n as f64);
    }
    back_transform(&st, &m, p)
}

pub fn save(sample: &Sample, p: usize, slices: SliceConfig) -> Result<SubspaceEstimate> {
    let st = standardize(sample, p, slices)?;
    let (n, d) = st.z.shape();
    let id = DMatrix::<f64>::identity(d, d);
    let mut m = DMatrix::zeros(d, d);
    for h in 0..slices.n_slices {
        let members = slice_members(&st, h);
        let nh = members.len() as f64;
        let mut mean = DVector::zeros(d);
        for &i in &members {
            mean += st.z.row(i).transpose();
        }
        mean /= nh;
        let mut cov = DMatrix::zeros(d, d);
        for &i in &members {
            let c = st.z.row(i).transpose() - &mean;
            cov += &c * c.transpose();
        }
        cov /= nh;
        let gap = &id - cov;
        m += &gap * &gap * (nh / n as f64);
    }
    back_transform(&st, &m, p)
}

pub fn sdr(sample: &Sample, method: SdrMethod, p: usize, slices: SliceConfig) -> Result<SubspaceEstimate> {
    match method {
        SdrMethod::Sir => sir(sample, p, slices),
        SdrMethod::Save => save(sample, p, slices),
    }
}
