//! Dense data matrices and the n x n companion Gram matrix.
//!
//! Every statistic in this crate is a function of the nonzero spectrum of the
//! sample covariance matrix `(1/n) X X'`. When `p >> n` that spectrum is
//! obtained from the much smaller companion `(1/p) X'X`, whose eigenvalues
//! `λ̃ᵢ` relate to the nonzero sample covariance eigenvalues by
//! `lᵢ = (p/n) λ̃ᵢ`. The p x p matrix is never formed.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative pivot tolerance for the Cholesky factorization of the companion.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-12;

/// A p x n data matrix: rows index variables, columns index observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps a matrix, checking that it is non-empty and finite.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (p, n) = values.shape();
        if p == 0 || n == 0 {
            return Err(Error::EmptyMatrix { p, n });
        }
        for col in 0..n {
            for row in 0..p {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFiniteInput { row, col });
                }
            }
        }
        Ok(Self { values })
    }

    /// Builds a matrix from column-major data (one observation after another).
    pub fn from_column_slice(p: usize, n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != p * n {
            return Err(Error::ShapeMismatch {
                p,
                n,
                expected: p * n,
                got: data.len(),
            });
        }
        Self::new(DMatrix::from_column_slice(p, n, data))
    }

    /// Builds a matrix from rows, one per variable.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(p * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::ShapeMismatch {
                    p,
                    n,
                    expected: p * n,
                    got: rows.iter().map(Vec::len).sum(),
                });
            }
            flat.extend_from_slice(row);
        }
        if p == 0 || n == 0 {
            return Err(Error::EmptyMatrix { p, n });
        }
        Self::new(DMatrix::from_row_slice(p, n, &flat))
    }

    /// Dimension (number of variables).
    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    /// Sample size (number of observations).
    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    /// The n x p matrix with the roles of variables and observations swapped.
    pub fn transposed(&self) -> Self {
        Self {
            values: self.values.transpose(),
        }
    }

    /// `c · X`. Panics if `c` is not finite.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c.is_finite(), "scale factor must be finite");
        Self {
            values: &self.values * c,
        }
    }

    /// Observation `j` as a slice of length p.
    pub fn column(&self, j: usize) -> &[f64] {
        let p = self.p();
        &self.values.as_slice()[j * p..(j + 1) * p]
    }
}

/// Which optional quantities [`summarize`] should compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SummaryRequest {
    pub eigenvalues: bool,
    pub logdet: bool,
}

impl SummaryRequest {
    /// Traces only; enough for John, Srivastava and Chen.
    pub const TRACES: Self = Self {
        eigenvalues: false,
        logdet: false,
    };
    /// Traces and log-determinant; enough for every statistic.
    pub const WITH_LOGDET: Self = Self {
        eigenvalues: false,
        logdet: true,
    };
    pub const FULL: Self = Self {
        eigenvalues: true,
        logdet: true,
    };
}

/// Trace moments, log-determinant and (optionally) eigenvalues of `(1/p) X'X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub n: usize,
    pub p: usize,
    /// `Σ λ̃ᵢ = tr(X'X) / p`.
    pub trace1: f64,
    /// `Σ λ̃ᵢ² = ‖X'X‖_F² / p²`.
    pub trace2: f64,
    /// `log det((1/p) X'X)`.
    pub logdet: Option<f64>,
    /// Ascending eigenvalues `λ̃₁ ≤ … ≤ λ̃ₙ`.
    pub eigenvalues: Option<Vec<f64>>,
}

impl SpectralSummary {
    /// A summary assembled from known eigenvalues of `(1/p) X'X`.
    ///
    /// Useful for checking statistics against hand-computed spectra. The
    /// log-determinant is present only when every eigenvalue is positive.
    pub fn from_eigenvalues(p: usize, eigenvalues: &[f64]) -> Result<Self> {
        let n = eigenvalues.len();
        if p == 0 || n == 0 {
            return Err(Error::EmptyMatrix { p, n });
        }
        if let Some(bad) = eigenvalues.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue {bad} is negative or not finite"
            )));
        }
        let mut sorted = eigenvalues.to_vec();
        sorted.sort_by(f64::total_cmp);
        let trace1 = sorted.iter().sum();
        let trace2 = sorted.iter().map(|v| v * v).sum();
        let logdet = sorted
            .iter()
            .all(|v| *v > 0.0)
            .then(|| sorted.iter().map(|v| v.ln()).sum());
        Ok(Self {
            n,
            p,
            trace1,
            trace2,
            logdet,
            eigenvalues: Some(sorted),
        })
    }
}

/// The companion matrix `(1/p) X'X` of a data matrix.
#[derive(Debug, Clone)]
pub struct CompanionGram {
    p: usize,
    matrix: DMatrix<f64>,
}

impl CompanionGram {
    /// Forms `(1/p) X'X` in O(n²p).
    pub fn new(x: &DataMatrix) -> Self {
        let p = x.p();
        // the explicit transpose routes through the blocked gemm kernel, which
        // is several times faster than tr_mul for tall X
        let mut matrix = x.values().transpose() * x.values();
        matrix /= p as f64;
        // gemm output is symmetric only up to rounding
        let n = matrix.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        Self { p, matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// The n x n matrix `(1/p) X'X`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn trace1(&self) -> f64 {
        self.matrix.diagonal().sum()
    }

    pub fn trace2(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum()
    }

    /// `log det` via Cholesky, failing when a pivot drops below
    /// `SINGULAR_PIVOT_TOL · trace1 / n`.
    pub fn logdet(&self) -> Result<f64> {
        let n = self.n();
        let threshold = SINGULAR_PIVOT_TOL * self.trace1() / n as f64;
        let mut l = self.matrix.clone();
        let mut logdet = 0.0;
        for j in 0..n {
            let mut d = l[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > threshold) {
                return Err(Error::SingularGram {
                    pivot: d,
                    threshold,
                });
            }
            logdet += d.ln();
            let root = d.sqrt();
            l[(j, j)] = root;
            for i in (j + 1)..n {
                let mut s = l[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / root;
            }
        }
        Ok(logdet)
    }

    /// Ascending eigenvalues; roundoff negatives are clamped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0))
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn summarize(&self, request: SummaryRequest) -> Result<SpectralSummary> {
        let trace1 = self.trace1();
        let logdet = if request.logdet {
            Some(self.logdet()?)
        } else {
            None
        };
        Ok(SpectralSummary {
            n: self.n(),
            p: self.p,
            trace1,
            trace2: self.trace2(),
            logdet,
            eigenvalues: request.eigenvalues.then(|| self.eigenvalues()),
        })
    }
}

/// Computes the spectral summary of `X` through its companion matrix.
pub fn summarize(x: &DataMatrix, request: SummaryRequest) -> Result<SpectralSummary> {
    CompanionGram::new(x).summarize(request)
}

/// The nonzero eigenvalues `lᵢ = (p/n) λ̃ᵢ` of `(1/n) X X'`, ascending.
pub fn scaled_nonzero_eigenvalues(s: &SpectralSummary) -> Result<Vec<f64>> {
    let eigenvalues = s.eigenvalues.as_ref().ok_or(Error::MissingEigenvalues)?;
    let ratio = s.p as f64 / s.n as f64;
    Ok(eigenvalues.iter().map(|v| ratio * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonal_fixture() -> DataMatrix {
        // columns (2,0,0,0)' and (0,2,0,0)'
        DataMatrix::from_column_slice(4, 2, &[2.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn orthogonal_columns_give_identity_companion() {
        let s = summarize(&orthogonal_fixture(), SummaryRequest::FULL).unwrap();
        assert_eq!(s.trace1, 2.0);
        assert_eq!(s.trace2, 2.0);
        assert_eq!(s.logdet, Some(0.0));
        let eig = s.eigenvalues.clone().unwrap();
        assert!((eig[0] - 1.0).abs() < 1e-14 && (eig[1] - 1.0).abs() < 1e-14);
        let l = scaled_nonzero_eigenvalues(&s).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-14 && (l[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_single_column() {
        let x = DataMatrix::from_column_slice(4, 1, &[2.0, 0.0, 0.0, 0.0]).unwrap();
        let s = summarize(&x, SummaryRequest::FULL).unwrap();
        assert_eq!(s.trace1, 1.0);
        assert_eq!(s.trace2, 1.0);
        assert_eq!(s.eigenvalues, Some(vec![1.0]));
    }

    #[test]
    fn scaled_eigenvalues_from_hand_spectrum() {
        let s = SpectralSummary::from_eigenvalues(6, &[1.5, 0.5, 1.0]).unwrap();
        assert_eq!(scaled_nonzero_eigenvalues(&s).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn missing_eigenvalues_is_an_error() {
        let s = summarize(&orthogonal_fixture(), SummaryRequest::TRACES).unwrap();
        assert_eq!(scaled_nonzero_eigenvalues(&s), Err(Error::MissingEigenvalues));
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let err = DataMatrix::from_column_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::NonFiniteInput { row: 1, col: 0 });
        let err = DataMatrix::from_column_slice(2, 2, &[1.0, 0.0, f64::INFINITY, 1.0]).unwrap_err();
        assert_eq!(err, Error::NonFiniteInput { row: 0, col: 1 });
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn singular_gram_when_logdet_requested() {
        // two identical columns
        let x = DataMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(summarize(&x, SummaryRequest::TRACES).is_ok());
        assert!(matches!(
            summarize(&x, SummaryRequest::WITH_LOGDET),
            Err(Error::SingularGram { .. })
        ));
    }

    #[test]
    fn cholesky_logdet_matches_eigenvalues() {
        let x = DataMatrix::from_column_slice(
            5,
            3,
            &[
                0.3, -1.2, 0.7, 2.0, -0.4, 1.1, 0.5, -0.3, 0.2, 0.9, -0.8, 0.1, 1.4, -0.6, 0.35,
            ],
        )
        .unwrap();
        let s = summarize(&x, SummaryRequest::FULL).unwrap();
        let from_eig: f64 = s.eigenvalues.as_ref().unwrap().iter().map(|v| v.ln()).sum();
        assert!((s.logdet.unwrap() - from_eig).abs() < 1e-12);
    }
}
