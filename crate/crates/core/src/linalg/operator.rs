//! Matrix-free symmetric operators with an application counter.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{DenseMatrix, Vector};
use crate::error::{Error, Result};

/// A symmetric operator backend.
pub trait MatVec: Send + Sync {
    fn dim(&self) -> usize;

    /// `H_ii` for every `i`.
    fn diagonal(&self) -> Vector;

    /// `out = H x`; slices already have length `dim`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// A norm-sized scale used to make tolerances relative.
    fn scale_hint(&self) -> f64 {
        self.diagonal().iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// The operator handed to the solvers; counts every application.
pub struct SymmetricLinearOperator {
    backend: Arc<dyn MatVec>,
    diagonal: Vector,
    scale: f64,
    applies: AtomicU64,
}

impl std::fmt::Debug for SymmetricLinearOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricLinearOperator")
            .field("dim", &self.dim())
            .field("apply_count", &self.apply_count())
            .finish()
    }
}

impl SymmetricLinearOperator {
    pub fn new(backend: Arc<dyn MatVec>) -> Self {
        let diagonal = backend.diagonal();
        let scale = backend.scale_hint().max(f64::MIN_POSITIVE);
        Self {
            backend,
            diagonal,
            scale,
            applies: AtomicU64::new(0),
        }
    }

    pub fn from_backend(backend: impl MatVec + 'static) -> Self {
        Self::new(Arc::new(backend))
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Estimate of `‖H‖` (row-sum bound where available).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply_count(&self) -> u64 {
        self.applies.load(Ordering::Relaxed)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vector> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        for len in [x.len(), out.len()] {
            if len != n {
                return Err(Error::Dimension { expected: n, got: len });
            }
        }
        self.applies.fetch_add(1, Ordering::Relaxed);
        self.backend.apply_into(x, out);
        Ok(())
    }
}

/// Dense row-major backend, for tests and small problems.
#[derive(Clone, Debug)]
pub struct DenseBackend {
    matrix: DenseMatrix,
}

impl DenseBackend {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Contract("dense backend needs a square matrix".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl MatVec for DenseBackend {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn diagonal(&self) -> Vector {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).collect()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let row = |i: usize| super::kernels::seq::dot(self.matrix.row(i), x);
        #[cfg(feature = "parallel")]
        if super::kernels::use_parallel(n * n) {
            use rayon::prelude::*;
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = row(i);
        }
    }

    fn scale_hint(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Sparse symmetric matrix stored as its lower triangle plus a full CSR
/// copy for application.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    /// `(row, col, value)` with `row >= col`, sorted, no duplicates.
    triangle: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Entries may come from either triangle; duplicates are summed.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) not finite")));
            }
            *map.entry((i.max(j), i.min(j))).or_insert(0.0) += v;
        }
        let triangle: Vec<_> = map.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        Ok(Self::from_sorted_triangle(n, triangle))
    }

    fn from_sorted_triangle(n: usize, triangle: Vec<(usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in &triangle {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|&(c, _)| c);
            for (c, v) in r {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            triangle,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn triangle(&self) -> &[(usize, usize, f64)] {
        &self.triangle
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = (i.max(j), i.min(j));
        self.triangle
            .binary_search_by(|&(a, b, _)| (a, b).cmp(&(r, c)))
            .map_or(0.0, |k| self.triangle[k].2)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.triangle {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| v * x[c])
            .sum()
    }
}

impl MatVec for SparseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn diagonal(&self) -> Vector {
        let mut d = vec![0.0; self.n];
        for &(i, j, v) in &self.triangle {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        #[cfg(feature = "parallel")]
        if super::kernels::use_parallel(self.values.len()) {
            use rayon::prelude::*;
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, o)| *o = self.row_dot(i, x));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(i, x);
        }
    }

    fn scale_hint(&self) -> f64 {
        (0..self.n)
            .map(|i| self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl SymmetricLinearOperator {
    pub fn from_dense(matrix: DenseMatrix) -> Result<Self> {
        Ok(Self::from_backend(DenseBackend::new(matrix)?))
    }

    pub fn from_sparse(matrix: SparseSymmetric) -> Self {
        Self::from_backend(matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot_unchecked;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, nnz: usize, seed: u64) -> SparseSymmetric {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<_> = (0..nnz)
            .map(|_| {
                (
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        SparseSymmetric::from_entries(n, entries).unwrap()
    }

    fn probe(op: &SymmetricLinearOperator, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = op.dim();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = dot_unchecked(&u, &op.apply(&v).unwrap());
        let b = dot_unchecked(&op.apply(&u).unwrap(), &v);
        (a - b).abs() / (crate::linalg::norm(&u) * crate::linalg::norm(&v) * op.scale())
    }

    #[test]
    fn sparse_symmetry_and_diagonal() {
        let s = random_sparse(60, 300, 4);
        let dense = s.to_dense();
        let op = SymmetricLinearOperator::from_sparse(s);
        assert!(probe(&op, 1) < 1e-10);
        for i in 0..op.dim() {
            let mut e = vec![0.0; op.dim()];
            e[i] = 1.0;
            assert_eq!(op.apply(&e).unwrap()[i], op.diagonal()[i]);
            assert_eq!(dense[(i, i)], op.diagonal()[i]);
        }
    }

    #[test]
    fn dense_and_sparse_agree() {
        let s = random_sparse(40, 200, 8);
        let d = SymmetricLinearOperator::from_dense(s.to_dense()).unwrap();
        let sp = SymmetricLinearOperator::from_sparse(s);
        assert!(probe(&d, 3) < 1e-10);
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let (a, b) = (d.apply(&x).unwrap(), sp.apply(&x).unwrap());
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn apply_count_is_exact() {
        let op = SymmetricLinearOperator::from_sparse(random_sparse(10, 20, 1));
        let x = vec![1.0; 10];
        for k in 1..=7 {
            op.apply(&x).unwrap();
            assert_eq!(op.apply_count(), k);
        }
        assert!(op.apply(&[1.0]).is_err());
        assert_eq!(op.apply_count(), 7);
    }

    #[test]
    fn apply_count_exact_under_concurrency() {
        let op = SymmetricLinearOperator::from_sparse(random_sparse(30, 60, 2));
        let x = vec![0.5; 30];
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for _ in 0..25 {
                        op.apply(&x).unwrap();
                    }
                });
            }
        });
        assert_eq!(op.apply_count(), 200);
    }

    #[test]
    fn duplicates_summed_and_upper_entries_mirrored() {
        let s = SparseSymmetric::from_entries(3, [(0, 2, 1.0), (2, 0, 0.5), (1, 1, 2.0)]).unwrap();
        assert_eq!(s.triangle(), &[(1, 1, 2.0), (2, 0, 1.5)]);
        assert_eq!(s.get(0, 2), 1.5);
        assert!(SparseSymmetric::from_entries(2, [(2, 0, 1.0)]).is_err());
    }
}
