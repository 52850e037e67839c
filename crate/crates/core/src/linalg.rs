//! Lower-triangular Cholesky factorization for covariance matrices.

use crate::error::{Error, Result};

/// Pivots with `|d| ≤ ZERO_PIVOT·max_diag` are treated as exact zeros
/// (degenerate directions such as the level at `t = 0`).
const ZERO_PIVOT: f64 = 1e-14;
/// Largest diagonal jitter ever added, relative to the largest diagonal.
pub const MAX_REGULARIZATION: f64 = 1e-10;

/// Dense lower factor `L` with `L Lᵀ = A` (row-major, full storage).
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
    regularization: f64,
}

impl Cholesky {
    /// Factors a symmetric positive semidefinite matrix given in row-major
    /// order. On a negative pivot the factorization is retried once with
    /// `λ = 1e-10·max_diag` added to every nonzero diagonal entry; rows with
    /// exactly zero variance stay zero.
    pub fn factor(matrix: &[f64], dim: usize) -> Result<Self> {
        assert_eq!(matrix.len(), dim * dim, "matrix storage does not match dimension");
        match Self::try_factor(matrix, dim, 0.0) {
            Ok(c) => Ok(c),
            Err(Error::NotPositiveDefinite { .. }) => {
                let max_diag = (0..dim).map(|i| matrix[i * dim + i]).fold(0.0, f64::max);
                let lambda = MAX_REGULARIZATION * max_diag;
                log::debug!("cholesky: regularizing with lambda = {lambda:e}");
                Self::try_factor(matrix, dim, lambda).map_err(|e| match e {
                    Error::NotPositiveDefinite { index, pivot, .. } => Error::NotPositiveDefinite {
                        index,
                        pivot,
                        regularized: true,
                    },
                    other => other,
                })
            }
            Err(e) => Err(e),
        }
    }

    fn try_factor(a: &[f64], n: usize, lambda: f64) -> Result<Self> {
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
        let tol = ZERO_PIVOT * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let ajj = a[j * n + j];
            let jitter = if ajj != 0.0 { lambda } else { 0.0 };
            let row_j = &l[j * n..j * n + j];
            let d = ajj + jitter - row_j.iter().map(|x| x * x).sum::<f64>();
            if d < -tol || d.is_nan() {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot: d,
                    regularized: lambda > 0.0,
                });
            }
            if d <= tol {
                // degenerate direction: column stays zero
                continue;
            }
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let (head, tail) = l.split_at_mut(i * n);
                let row_j = &head[j * n..j * n + j];
                let row_i = &tail[..j];
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                tail[j] = (a[i * n + j] - dot) / ljj;
            }
        }
        Ok(Self {
            dim: n,
            lower: l,
            regularization: lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal jitter that was needed (0 when none).
    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.lower[i * n..i * n + i + 1];
                row.iter().zip(z).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }
}
