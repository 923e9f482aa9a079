#![allow(dead_code)]

pub mod sq;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use sbci_core::linalg::synthetic::{gen_synthetic_ci_matrix, SyntheticParams};
use sbci_core::linalg::{SparseSymmetric, SymmetricLinearOperator};
use sbci_core::config::SolverConfig;
use sbci_core::diagnostics::{Method, TraceRecord};
use sbci_core::fci::{enumerate_basis, read_fcidump, sigma_apply, DeterminantBasis, FciProblem};
use sbci_core::precond::ConvergedEigenpair;
use sbci_core::run::SolverRun;

/// Dense oracle: ascending eigenvalues and matching eigenvector columns.
pub struct Oracle {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
}

impl Oracle {
    pub fn new(m: &SparseSymmetric) -> Self {
        let n = m.n();
        let mut matrix = DMatrix::<f64>::zeros(n, n);
        for &(i, j, v) in m.triangle() {
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
        Self::from_dense(matrix)
    }

    pub fn from_dense(matrix: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..matrix.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |i, c| eig.eigenvectors[(i, order[c])]);
        Self { values, vectors, matrix }
    }

    pub fn norm_scale(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn residual(&self, e: f64, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        (&self.matrix * &xv - e * &xv).norm()
    }

    /// Largest principal angle between span(xs) and the oracle eigenspace
    /// `lo..hi`, via the sine so that tiny angles keep their precision.
    pub fn principal_angle(&self, xs: &[&[f64]], lo: usize, hi: usize) -> f64 {
        let n = self.matrix.nrows();
        let a = orthonormal_columns(&DMatrix::from_fn(n, xs.len(), |i, c| xs[c][i]));
        let q = self.vectors.columns(lo, hi - lo).into_owned();
        let outside = &a - &q * (q.transpose() * &a);
        let smax = outside.singular_values().iter().cloned().fold(0.0, f64::max);
        smax.min(1.0).asin()
    }
}

fn orthonormal_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

pub fn synthetic(n: usize, seed: u64, density: f64) -> SparseSymmetric {
    gen_synthetic_ci_matrix(&SyntheticParams::new(n, seed, density)).expect("synthetic matrix")
}

pub fn operator(m: &SparseSymmetric) -> SymmetricLinearOperator {
    SymmetricLinearOperator::from_sparse(m.clone())
}

pub fn max_pairwise_overlap(pairs: &[ConvergedEigenpair]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..pairs.len() {
        for j in 0..i {
            let o: f64 = pairs[i].vector.iter().zip(&pairs[j].vector).map(|(a, b)| a * b).sum();
            worst = worst.max(o.abs());
        }
    }
    worst
}

/// Rows whose own matvec count (delta minus booked overhead) differs from
/// the per-iteration budget of their method.  A converged row without
/// coefficients made no update (the residual direction vanished) and is exempt.
pub fn budget_violations(run: &SolverRun) -> Vec<String> {
    let mut prev = run.init_matvecs;
    let mut out = Vec::new();
    for r in &run.trace {
        let own = r.matvecs_cumulative - prev - r.matvecs_overhead;
        let no_update = r.converged && r.b.is_none();
        let want = match r.method {
            _ if no_update => 0,
            Method::Sbci1 => 1,
            Method::Sbci2 => 2,
            Method::Davidson => own,
        };
        if own != want {
            out.push(format!("state {} segment {} t {}: {own} matvecs", r.state, r.segment, r.t));
        }
        prev = r.matvecs_cumulative;
    }
    out
}

/// Largest rise of the tracked energy between consecutive rows of one state.
pub fn worst_rise(trace: &[TraceRecord]) -> f64 {
    trace
        .windows(2)
        .filter(|w| w[0].state == w[1].state && w[0].method == w[1].method)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub struct FciFixture {
    pub problem: FciProblem,
    pub basis: DeterminantBasis,
    pub oracle: Oracle,
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Fixture plus the dense oracle built by the second-quantization rules.
pub fn fci_fixture(name: &str) -> FciFixture {
    let problem = read_fcidump(fixture_path(name)).expect("fixture");
    let (na, nb) = problem.electrons().unwrap();
    let basis = enumerate_basis(problem.norb, na, nb).unwrap();
    let oracle = Oracle::from_dense(sq::dense_hamiltonian(&problem, &basis));
    FciFixture { problem, basis, oracle }
}

/// Largest entry of `sigma(e_j) − H_oracle e_j` over all columns.
pub fn sigma_column_error(f: &FciFixture) -> f64 {
    let n = f.basis.n_det();
    let mut e = vec![0.0; n];
    let mut worst = 0.0_f64;
    for j in 0..n {
        e[j] = 1.0;
        let col = sigma_apply(&f.problem, &f.basis, &e).unwrap();
        e[j] = 0.0;
        for (i, v) in col.iter().enumerate() {
            worst = worst.max((v - f.oracle.matrix[(i, j)]).abs());
        }
    }
    worst
}

/// Solver settings for the FCI fixtures, tighter than the defaults.
pub fn fci_config(base: SolverConfig) -> SolverConfig {
    SolverConfig {
        eps0: 1e-12,
        r0: 1e-8,
        ..base
    }
}
