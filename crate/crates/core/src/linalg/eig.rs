//! Dense symmetric eigensolver for subspace matrices (cyclic Jacobi).

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Asymmetry tolerated on input, relative to `max(1, max|V_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Full spectrum of a small symmetric matrix.
#[derive(Clone, Debug)]
pub struct SmallEigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DenseMatrix,
}

impl SmallEigResult {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }
}

/// Eigendecomposition of the at-most-6×6 Rayleigh–Ritz matrices.
pub fn small_symmetric_eig(v: &DenseMatrix) -> Result<SmallEigResult> {
    let m = v.rows();
    if m == 0 || m > 6 {
        return Err(Error::Contract(format!(
            "small_symmetric_eig expects 1..=6 rows, got {m}"
        )));
    }
    symmetric_eig(v)
}

/// Eigendecomposition of any square symmetric matrix; intended for
/// dimensions up to a few hundred (Davidson subspaces, initial guesses).
pub fn symmetric_eig(v: &DenseMatrix) -> Result<SmallEigResult> {
    let n = v.rows();
    if n != v.cols() {
        return Err(Error::Contract(format!("matrix is {}x{}, not square", n, v.cols())));
    }
    let scale = v.max_abs().max(1.0);
    if v.asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::Contract(format!(
            "matrix asymmetric by {:.3e}",
            v.asymmetry()
        )));
    }
    if v.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("matrix has non-finite entries".into()));
    }

    let mut a = v.symmetrized();
    let mut vecs = DenseMatrix::identity(n);
    let thresh = f64::EPSILON * 1e-2 * a.frobenius();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= thresh {
                    continue;
                }
                rotated = true;
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (vecs[(k, p)], vecs[(k, q)]);
                    vecs[(k, p)] = c * vkp - s * vkq;
                    vecs[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |row, col| vecs[(row, order[col])]);
    Ok(SmallEigResult {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let mut m = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        m = m.symmetrized();
        m
    }

    fn check_decomposition(v: &DenseMatrix, r: &SmallEigResult) {
        let n = v.rows();
        let scale = v.frobenius().max(1.0);
        for k in 0..n {
            let x = r.vector(k);
            let vx = v.matvec(&x);
            let res: f64 = vx
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - r.eigenvalues[k] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-12 * scale, "residual {res:e} for k={k}");
        }
        for i in 0..n {
            for j in 0..n {
                let d: f64 = (0..n)
                    .map(|k| r.eigenvectors[(k, i)] * r.eigenvectors[(k, j)])
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12);
            }
        }
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_input_sorted() {
        let r = small_symmetric_eig(&DenseMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let v = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let r = small_symmetric_eig(&v).unwrap();
        assert!((r.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-15);
        check_decomposition(&v, &r);
    }

    #[test]
    fn random_six_by_six_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let v = random_symmetric(6, &mut rng);
            let r = small_symmetric_eig(&v).unwrap();
            check_decomposition(&v, &r);
            // trace is preserved
            let tr: f64 = (0..6).map(|i| v[(i, i)]).sum();
            let sum: f64 = r.eigenvalues.iter().sum();
            assert!((tr - sum).abs() < 1e-12);
        }
    }

    #[test]
    fn larger_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1, 12, 40] {
            let v = random_symmetric(n, &mut rng);
            check_decomposition(&v, &symmetric_eig(&v).unwrap());
        }
    }

    #[test]
    fn rejects_asymmetric_and_oversized() {
        let v = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.1, 0.0]]);
        assert!(matches!(small_symmetric_eig(&v), Err(Error::Contract(_))));
        let big = DenseMatrix::identity(7);
        assert!(small_symmetric_eig(&big).is_err());
        assert!(symmetric_eig(&big).is_ok());
    }

    #[test]
    fn degenerate_spectrum_keeps_orthonormal_basis() {
        let v = DenseMatrix::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let r = small_symmetric_eig(&v).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0, 2.0, 2.0]);
        check_decomposition(&v, &r);
    }
}
