//! Vector and operator substrate shared by every solver.

pub mod eig;
pub mod kernels;
pub mod mtx;
pub mod operator;
pub mod ortho;
pub mod synthetic;

use crate::error::{Error, Result};
use kernels::{dispatch, seq, use_parallel};
#[cfg(feature = "parallel")]
use kernels::par;

pub use eig::{small_symmetric_eig, symmetric_eig, SmallEigResult};
pub use operator::{DenseBackend, MatVec, SparseSymmetric, SymmetricLinearOperator};
pub use ortho::{
    build_subspace_matrix, canonical_orthogonalize, gram_schmidt_coeffs, OrthoTransform, CANONICAL_CUTOFF,
};

/// CI amplitudes, and images of them under the operator.
pub type Vector = Vec<f64>;

/// Inner product with a length check.
pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(dot_unchecked(x, y))
}

/// Inner product; lengths must already agree.
#[inline]
pub fn dot_unchecked(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    dispatch!(x.len(), dot(x, y))
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot_unchecked(x, x).sqrt()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    dispatch!(x.len(), axpy(a, x, y))
}

#[inline]
pub fn scale(a: f64, x: &mut [f64]) {
    dispatch!(x.len(), scale(a, x))
}

/// `Σ_k coeffs[k] * vectors[k]`.
pub fn lincomb(coeffs: &[f64], vectors: &[&[f64]]) -> Vector {
    assert_eq!(coeffs.len(), vectors.len());
    let n = vectors.first().map_or(0, |v| v.len());
    let mut out = vec![0.0; n];
    for (&c, v) in coeffs.iter().zip(vectors) {
        if c != 0.0 {
            axpy(c, v, &mut out);
        }
    }
    out
}

/// Rayleigh quotient `E = xᵀHx / xᵀx` and the residual `z′ = (Hx − E x) / xᵀx`
/// (half the gradient of `E` at `x`), from a precomputed image `hx`.
pub fn rayleigh_residual(x: &[f64], hx: &[f64]) -> (f64, Vector) {
    let xx = dot_unchecked(x, x);
    let e = dot_unchecked(x, hx) / xx;
    let mut z = hx.to_vec();
    axpy(-e, x, &mut z);
    scale(1.0 / xx, &mut z);
    (e, z)
}

/// Row-major dense matrix for subspace work and small test operators.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vector {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| seq::dot(self.row(i), x)).collect()
    }

    /// Largest absolute entry of `self - selfᵀ`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows.min(self.cols) {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}
