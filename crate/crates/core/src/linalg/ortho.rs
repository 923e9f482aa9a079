//! Orthonormal bases for the small Rayleigh–Ritz subspaces.
//!
//! Both schemes work from inner products alone and return a matrix `P`
//! whose column `j` holds the coefficients of basis vector `j` over the
//! inputs.  A Ritz vector `v` in the orthonormal basis therefore maps back
//! to coefficients on the raw inputs as `P·v`.

use super::{dot_unchecked, symmetric_eig, DenseMatrix};
use crate::error::{Error, Result};

/// Default eigenvalue cutoff for canonical orthogonalization.
pub const CANONICAL_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct OrthoTransform {
    /// `n_input × rank`.
    pub p: DenseMatrix,
    /// Eigenmodes (canonical) or inputs (Gram–Schmidt) that were excluded.
    pub dropped: Vec<usize>,
}

impl OrthoTransform {
    pub fn rank(&self) -> usize {
        self.p.cols()
    }

    pub fn n_inputs(&self) -> usize {
        self.p.rows()
    }

    /// Coefficients over the inputs of a vector given in the orthonormal basis.
    pub fn to_inputs(&self, v: &[f64]) -> Vec<f64> {
        self.p.matvec(v)
    }
}

/// Overlap matrix `S_ij = v_i · v_j`.
pub fn overlap(vectors: &[&[f64]]) -> Result<DenseMatrix> {
    check_lengths(vectors)?;
    let k = vectors.len();
    let mut s = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let d = dot_unchecked(vectors[i], vectors[j]);
            s[(i, j)] = d;
            s[(j, i)] = d;
        }
    }
    Ok(s)
}

fn check_lengths(vectors: &[&[f64]]) -> Result<()> {
    let n = vectors.first().map_or(0, |v| v.len());
    match vectors.iter().find(|v| v.len() != n) {
        Some(v) => Err(Error::Dimension {
            expected: n,
            got: v.len(),
        }),
        None => Ok(()),
    }
}

/// Gram–Schmidt triangle over `x`, optional `y`, and `z`.
///
/// A new direction whose squared norm after projection falls below
/// `lindep` times its original squared norm is reported as
/// [`Error::RankDeficient`] with the index of the offending input.
pub fn gram_schmidt_coeffs(
    x: &[f64],
    y: Option<&[f64]>,
    z: &[f64],
    lindep: f64,
) -> Result<OrthoTransform> {
    let mut inputs: Vec<&[f64]> = vec![x];
    inputs.extend(y);
    inputs.push(z);
    let s = overlap(&inputs)?;
    gram_schmidt_from_overlap(&s, lindep)
}

/// Same triangle as [`gram_schmidt_coeffs`] from a precomputed overlap.
pub fn gram_schmidt_from_overlap(s: &DenseMatrix, lindep: f64) -> Result<OrthoTransform> {
    let k = s.rows();
    // Column j of `p` gives basis vector j over the inputs.
    let mut p = DenseMatrix::zeros(k, k);
    for j in 0..k {
        let njj = s[(j, j)];
        if !(njj > 0.0) {
            return Err(Error::RankDeficient { index: j, norm: 0.0 });
        }
        // Projections of input j onto the previous basis vectors.
        let proj: Vec<f64> = (0..j)
            .map(|b| (0..k).map(|i| p[(i, b)] * s[(i, j)]).sum())
            .collect();
        let rem = njj - proj.iter().map(|q| q * q).sum::<f64>();
        if !(rem > lindep * njj) {
            return Err(Error::RankDeficient {
                index: j,
                norm: rem.max(0.0).sqrt(),
            });
        }
        let inv = 1.0 / rem.sqrt();
        for (b, q) in proj.iter().enumerate() {
            for i in 0..k {
                p[(i, j)] -= q * p[(i, b)] * inv;
            }
        }
        p[(j, j)] = inv;
    }
    Ok(OrthoTransform { p, dropped: vec![] })
}

/// Canonical orthogonalization of up to six vectors.
///
/// The overlap is first scaled to unit diagonal so the cutoff acts on
/// directions rather than on raw vector lengths; zero inputs are skipped.
pub fn canonical_orthogonalize(vectors: &[&[f64]], cutoff: f64) -> Result<OrthoTransform> {
    if vectors.is_empty() {
        return Err(Error::InvalidArgument("no vectors given".into()));
    }
    let s = overlap(vectors)?;
    canonical_from_overlap(&s, cutoff)
}

pub fn canonical_from_overlap(s: &DenseMatrix, cutoff: f64) -> Result<OrthoTransform> {
    let k = s.rows();
    let inv_len: Vec<f64> = (0..k)
        .map(|i| if s[(i, i)] > 0.0 { 1.0 / s[(i, i)].sqrt() } else { 0.0 })
        .collect();
    let live: Vec<usize> = (0..k).filter(|&i| inv_len[i] > 0.0).collect();
    if live.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let scaled = DenseMatrix::from_fn(live.len(), live.len(), |a, b| {
        let (i, j) = (live[a], live[b]);
        s[(i, j)] * inv_len[i] * inv_len[j]
    });
    let eig = symmetric_eig(&scaled.symmetrized())?;
    let (kept, dropped): (Vec<usize>, Vec<usize>) =
        (0..live.len()).partition(|&m| eig.eigenvalues[m] >= cutoff);
    if kept.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let mut p = DenseMatrix::zeros(k, kept.len());
    for (col, &m) in kept.iter().enumerate() {
        let w = 1.0 / eig.eigenvalues[m].sqrt();
        for (a, &i) in live.iter().enumerate() {
            p[(i, col)] = inv_len[i] * eig.eigenvectors[(a, m)] * w;
        }
    }
    Ok(OrthoTransform { p, dropped })
}

/// `Pᵀ G P` with `G_ij = vectors[i] · images[j]`, symmetrized first.
pub fn build_subspace_matrix(
    vectors: &[&[f64]],
    images: &[&[f64]],
    transform: &OrthoTransform,
) -> Result<DenseMatrix> {
    if vectors.len() != images.len() {
        return Err(Error::Dimension {
            expected: vectors.len(),
            got: images.len(),
        });
    }
    let all: Vec<&[f64]> = vectors.iter().chain(images).copied().collect();
    check_lengths(&all)?;
    let k = vectors.len();
    let g = DenseMatrix::from_fn(k, k, |i, j| dot_unchecked(vectors[i], images[j]));
    project(&g, transform)
}

/// `Pᵀ ((G + Gᵀ)/2) P`.
pub fn project(g: &DenseMatrix, transform: &OrthoTransform) -> Result<DenseMatrix> {
    if g.rows() != transform.n_inputs() {
        return Err(Error::Dimension {
            expected: transform.n_inputs(),
            got: g.rows(),
        });
    }
    let p = &transform.p;
    Ok(p.transpose().matmul(&g.symmetrized()).matmul(p).symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lincomb;
    use proptest::prelude::*;

    fn basis_vectors(vectors: &[&[f64]], t: &OrthoTransform) -> Vec<Vec<f64>> {
        (0..t.rank()).map(|j| lincomb(&t.p.column(j), vectors)).collect()
    }

    fn max_orthonormality_error(basis: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot_unchecked(u, v) - target).abs());
            }
        }
        worst
    }

    #[test]
    fn gram_schmidt_two_vector_example() {
        let x = [1.0, 0.0, 0.0];
        let z = [1.0, 1.0, 0.0];
        let t = gram_schmidt_coeffs(&x, None, &z, 1e-14).unwrap();
        assert_eq!(t.p[(1, 1)], 1.0);
        assert_eq!(t.p[(0, 1)], -1.0);
        let zbar = &basis_vectors(&[&x, &z], &t)[1];
        assert_eq!(zbar, &vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn gram_schmidt_zero_y_is_rank_deficient() {
        let r = gram_schmidt_coeffs(&[1.0, 0.0], Some(&[0.0, 0.0]), &[0.0, 1.0], 1e-14);
        assert!(matches!(r, Err(Error::RankDeficient { index: 1, .. })));
    }

    #[test]
    fn gram_schmidt_matches_closed_form_coefficients() {
        let x = [1.0, 2.0, 0.5, -1.0];
        let y = [0.3, -1.0, 2.0, 0.1];
        let z = [-0.7, 0.4, 0.2, 1.5];
        let t = gram_schmidt_coeffs(&x, Some(&y), &z, 1e-14).unwrap();
        let d = |a: &[f64], b: &[f64]| dot_unchecked(a, b);
        let (nxx, nyy, nzz) = (d(&x, &x), d(&y, &y), d(&z, &z));
        let (nxy, nxz, nzy) = (d(&x, &y), d(&x, &z), d(&z, &y));
        let ax = 1.0 / nxx.sqrt();
        let by = 1.0 / (nyy - nxy * nxy / nxx).sqrt();
        let bx = -nxy / nxx * by;
        let pp = bx * nxz + by * nzy;
        let cz = 1.0 / (nzz - nxz * nxz / nxx - pp * pp).sqrt();
        let cy = -pp * by * cz;
        let cx = -(nxz / nxx + pp * bx) * cz;
        let expect = [(0, 0, ax), (0, 1, bx), (1, 1, by), (0, 2, cx), (1, 2, cy), (2, 2, cz)];
        for (i, j, v) in expect {
            assert!((t.p[(i, j)] - v).abs() < 1e-13 * v.abs().max(1.0), "({i},{j})");
        }
        assert_eq!(t.p[(1, 0)], 0.0);
        assert_eq!(t.p[(2, 0)], 0.0);
        assert_eq!(t.p[(2, 1)], 0.0);
    }

    #[test]
    fn canonical_identical_vectors_rank_one() {
        let u = [0.6, 0.8];
        let t = canonical_orthogonalize(&[&u, &u], CANONICAL_CUTOFF).unwrap();
        assert_eq!(t.rank(), 1);
        assert_eq!(t.dropped.len(), 1);
    }

    #[test]
    fn canonical_orthonormal_inputs_give_signed_permutation() {
        let e: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let refs: Vec<&[f64]> = e.iter().map(|v| v.as_slice()).collect();
        let t = canonical_orthogonalize(&refs, CANONICAL_CUTOFF).unwrap();
        assert_eq!(t.rank(), 3);
        for j in 0..3 {
            let col = t.p.column(j);
            let big: Vec<f64> = col.iter().copied().filter(|v| v.abs() > 1e-12).collect();
            assert_eq!(big.len(), 1);
            assert!((big[0].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_all_zero_is_empty_basis() {
        let z = [0.0, 0.0];
        assert!(matches!(
            canonical_orthogonalize(&[&z], CANONICAL_CUTOFF),
            Err(Error::EmptyBasis)
        ));
    }

    #[test]
    fn canonical_keeps_tiny_independent_vectors() {
        let x = [1.0, 0.0, 0.0];
        let z = [0.0, 1e-9, 0.0];
        let t = canonical_orthogonalize(&[&x, &z], CANONICAL_CUTOFF).unwrap();
        assert_eq!(t.rank(), 2);
    }

    #[test]
    fn subspace_matrix_rayleigh_quotient() {
        let x = [0.6, 0.8];
        let hx = [2.0 * 0.6, 5.0 * 0.8];
        let t = canonical_orthogonalize(&[&x], CANONICAL_CUTOFF).unwrap();
        let g = build_subspace_matrix(&[&x], &[&hx], &t).unwrap();
        assert!((g[(0, 0)] - (2.0 * 0.36 + 5.0 * 0.64)).abs() < 1e-14);
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn gram_schmidt_orthonormal(x in vec_strategy(10), y in vec_strategy(10), z in vec_strategy(10)) {
            if let Ok(t) = gram_schmidt_coeffs(&x, Some(&y), &z, 1e-10) {
                let s = overlap(&[&x, &y, &z]).unwrap();
                let pt_s_p = t.p.transpose().matmul(&s).matmul(&t.p);
                let err = (0..3).flat_map(|i| (0..3).map(move |j| (i, j)))
                    .map(|(i, j)| (pt_s_p[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max);
                prop_assert!(err < 1e-10, "PtSP error {err}");
                let basis = basis_vectors(&[&x, &y, &z], &t);
                prop_assert!(max_orthonormality_error(&basis) < 1e-10);
            }
        }

        #[test]
        fn canonical_orthonormal(vs in prop::collection::vec(vec_strategy(20), 1..=6)) {
            let refs: Vec<&[f64]> = vs.iter().map(|v| v.as_slice()).collect();
            let t = canonical_orthogonalize(&refs, CANONICAL_CUTOFF).unwrap();
            let s = overlap(&refs).unwrap();
            let m = t.p.transpose().matmul(&s).matmul(&t.p);
            for i in 0..t.rank() {
                for j in 0..t.rank() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((m[(i, j)] - target).abs() < 1e-10);
                }
            }
        }
    }
}
