//! Dense symmetric eigen-decomposition helpers and the subspace estimate type.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Tolerance used when checking that a matrix is an orthogonal projector.
pub const PROJECTOR_TOLERANCE: f64 = 1e-8;

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue. Each
/// eigenvector is signed so that its largest-magnitude coordinate is
/// positive.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        fix_sign(v.as_mut_slice());
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `B (B^T B)^{-1} B^T` computed through an orthonormal basis of the columns.
pub fn projector_onto(basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = orthonormalize(basis)?;
    Ok(&q * q.transpose())
}

/// Orthonormal basis of the column span, via thin QR. Columns must be
/// linearly independent.
pub fn orthonormalize(basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = basis.ncols();
    let qr = basis.clone().qr();
    let r = qr.r();
    let scale = basis.norm().max(f64::MIN_POSITIVE);
    for k in 0..p {
        if r[(k, k)].abs() <= 1e-12 * scale {
            return Err(Error::failed("basis columns are linearly dependent"));
        }
    }
    let mut q = qr.q();
    for k in 0..p {
        let mut col = q.column(k).into_owned();
        fix_sign(col.as_mut_slice());
        q.set_column(k, &col);
    }
    Ok(q)
}

/// Symmetric inverse square root `V diag(1/sqrt(l + ridge)) V^T`. Fails
/// when an eigenvalue is not positive.
pub fn inverse_sqrt_spd(m: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_symmetric_eigen(m);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    if values.iter().any(|&l| l <= 1e-12 * top.max(1e-300)) {
        return Err(Error::invalid("covariance matrix is singular"));
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|l| 1.0 / (l + ridge).sqrt()),
    ));
    Ok(&vectors * d * vectors.transpose())
}

pub fn is_projector(p: &DMatrix<f64>, tol: f64) -> bool {
    if !p.is_square() {
        return false;
    }
    let sym = (p - p.transpose()).amax();
    let idem = (p * p - p).amax();
    sym <= tol && idem <= tol
}

/// `|P_hat - P|_F` between two orthogonal projectors.
pub fn subspace_error(p_hat: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    if p_hat.shape() != p.shape() {
        return Err(Error::invalid("projectors have different shapes"));
    }
    if !is_projector(p_hat, PROJECTOR_TOLERANCE) || !is_projector(p, PROJECTOR_TOLERANCE) {
        return Err(Error::invalid("argument is not an orthogonal projector"));
    }
    Ok((p_hat - p).norm())
}

/// Estimated `p`-dimensional subspace of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEstimate {
    basis: DMatrix<f64>,
    projector: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl SubspaceEstimate {
    /// Top-`p` eigenvectors of a symmetric matrix.
    pub fn from_symmetric(m: &DMatrix<f64>, p: usize) -> Result<Self> {
        if p == 0 || p > m.nrows() {
            return Err(Error::invalid(format!(
                "target dimension {p} outside 1..={}",
                m.nrows()
            )));
        }
        let (values, vectors) = sorted_symmetric_eigen(m);
        let basis = vectors.columns(0, p).into_owned();
        let projector = &basis * basis.transpose();
        Ok(Self {
            basis,
            projector,
            eigenvalues: values,
        })
    }

    /// Subspace spanned by the columns of `basis` (orthonormalized); the
    /// eigenvalues are carried along as given.
    pub fn from_basis(basis: &DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let q = orthonormalize(basis)?;
        let projector = &q * q.transpose();
        Ok(Self {
            basis: q,
            projector,
            eigenvalues,
        })
    }

    /// `d x p` orthonormal basis.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// Eigenvalues of the matrix the basis was extracted from, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn error_against(&self, truth: &DMatrix<f64>) -> Result<f64> {
        subspace_error(&self.projector, truth)
    }
}
