use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `n x d` design with an optional response vector.
///
/// Points are stored row-major so that the pairwise loops walk contiguous
/// memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    n: usize,
    d: usize,
    points: Vec<f64>,
    response: Option<Vec<f64>>,
}

impl Sample {
    pub fn new(points: Vec<f64>, d: usize, response: Option<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("sample dimension must be at least 1"));
        }
        if points.is_empty() || points.len() % d != 0 {
            return Err(Error::invalid(format!(
                "{} coordinates cannot be split into rows of length {d}",
                points.len()
            )));
        }
        let n = points.len() / d;
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate in row {}",
                pos / d
            )));
        }
        if let Some(y) = &response {
            if y.len() != n {
                return Err(Error::invalid(format!(
                    "response has length {}, design has {n} rows",
                    y.len()
                )));
            }
            if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite response in row {i}")));
            }
        }
        Ok(Self {
            n,
            d,
            points,
            response,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], response: Option<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("rows have different lengths"));
        }
        Self::new(rows.concat(), d, response)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn response(&self) -> Option<&[f64]> {
        self.response.as_deref()
    }

    pub fn require_response(&self) -> Result<&[f64]> {
        self.response
            .as_deref()
            .ok_or_else(|| Error::invalid("this estimator needs a response column"))
    }

    pub fn with_response(self, response: Vec<f64>) -> Result<Self> {
        Self::new(self.points, self.d, Some(response))
    }

    pub fn without_response(&self) -> Self {
        Self {
            response: None,
            ..self.clone()
        }
    }

    /// Column means.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.rows() {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }

    /// `(n^{-1} sum |X_i - mean|^2)^{1/2}`.
    pub fn spread(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self
            .rows()
            .map(|r| r.iter().zip(&m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum();
        (ss / self.n as f64).sqrt()
    }

    /// Design as an `n x d` matrix.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.points)
    }

    /// Sample with every point mapped through `x -> A x`; the response is kept.
    pub fn map_linear(&self, a: &DMatrix<f64>) -> Result<Self> {
        if a.ncols() != self.d {
            return Err(Error::invalid(format!(
                "matrix has {} columns, sample has dimension {}",
                a.ncols(),
                self.d
            )));
        }
        let out_d = a.nrows();
        let mut pts = Vec::with_capacity(self.n * out_d);
        for row in self.rows() {
            for r in 0..out_d {
                let mut acc = 0.0;
                for (c, &x) in row.iter().enumerate() {
                    acc += a[(r, c)] * x;
                }
                pts.push(acc);
            }
        }
        Self::new(pts, out_d, self.response.clone())
    }

    /// Order-sensitive FNV-1a digest over the exact bit patterns of the data.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        self.points.iter().for_each(|&v| feed(v));
        if let Some(y) = &self.response {
            y.iter().for_each(|&v| feed(v));
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(Sample::new(vec![1.0, 2.0, 3.0], 2, None).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN], 1, None).is_err());
        assert!(Sample::new(vec![1.0, 2.0], 1, Some(vec![1.0])).is_err());
        assert!(Sample::new(vec![], 1, None).is_err());
        let s = Sample::new(vec![1.0, 2.0, 3.0, 4.0], 2, Some(vec![0.0, 1.0])).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn spread_of_symmetric_points() {
        let s = Sample::new(vec![-1.0, 1.0], 1, None).unwrap();
        assert!((s.spread() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn checksum_sees_response() {
        let a = Sample::new(vec![0.0, 1.0], 1, Some(vec![1.0, 2.0])).unwrap();
        let b = Sample::new(vec![0.0, 1.0], 1, Some(vec![1.0, 2.5])).unwrap();
        assert_ne!(a.checksum(), b.checksum());
        assert_eq!(a.checksum(), a.clone().checksum());
    }
}
