//! Seeded CI-like test matrices: a growing diagonal with sparse couplings
//! whose magnitude decays away from the diagonal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SparseSymmetric;
use crate::error::{Error, Result};

/// Givens angle used to hide the split pair structure.
const SPLIT_ANGLE: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticParams {
    pub n: usize,
    pub seed: u64,
    /// Fraction of off-diagonal pairs that are coupled.
    pub density: f64,
    /// Mean spacing of the diagonal.
    pub gap: f64,
    /// Forces `λ₂ − λ₁` to this value when set.
    pub degeneracy_split: Option<f64>,
    /// Maximum coupling magnitude.
    pub coupling: f64,
    /// Length scale of the coupling decay in `|i − j|`.
    pub decay: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n: 200,
            seed: 1,
            density: 0.02,
            gap: 1.0,
            degeneracy_split: None,
            coupling: 0.5,
            decay: 20.0,
        }
    }
}

impl SyntheticParams {
    pub fn new(n: usize, seed: u64, density: f64) -> Self {
        Self {
            n,
            seed,
            density,
            ..Self::default()
        }
    }

    pub fn with_split(mut self, split: f64) -> Self {
        self.degeneracy_split = Some(split);
        self
    }
}

pub fn gen_synthetic_ci_matrix(p: &SyntheticParams) -> Result<SparseSymmetric> {
    if p.n < 4 {
        return Err(Error::InvalidArgument(format!("n must be at least 4, got {}", p.n)));
    }
    if !(p.density >= 0.0 && p.density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {} outside [0, 1]", p.density)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    match p.degeneracy_split {
        None => Ok(SparseSymmetric::from_entries(p.n, base_entries(p.n, p, &mut rng))?),
        Some(s) => split_matrix(p, s, &mut rng),
    }
}

fn base_entries(n: usize, p: &SyntheticParams, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let mut entries: Vec<_> = (0..n)
        .map(|i| (i, i, p.gap * (i as f64 + 0.5 * rng.random::<f64>())))
        .collect();
    for i in 1..n {
        for j in 0..i {
            if rng.random::<f64>() < p.density {
                let mag = p.coupling * (-((i - j) as f64) / p.decay).exp();
                entries.push((i, j, mag * rng.random_range(-1.0..1.0)));
            }
        }
    }
    entries
}

/// `Qᵀ (A ⊕ (A + sI)) Q` with the two copies interleaved and `Q` a fixed
/// rotation on each index pair `(2k, 2k+1)`.  Off-pair blocks are `a·I` and
/// survive the rotation unchanged, so sparsity is kept and the spectrum is
/// exactly `λ(A) ∪ (λ(A) + s)`.
fn split_matrix(p: &SyntheticParams, s: f64, rng: &mut ChaCha8Rng) -> Result<SparseSymmetric> {
    let half = p.n / 2;
    let a = base_entries(half, p, rng);
    let (sin, cos) = SPLIT_ANGLE.sin_cos();
    let mut entries = Vec::with_capacity(2 * a.len() + 2 * half + 1);
    let mut max_diag: f64 = 0.0;
    for (i, j, v) in a {
        if i == j {
            max_diag = max_diag.max(v);
            entries.push((2 * i, 2 * i, v + s * sin * sin));
            entries.push((2 * i + 1, 2 * i + 1, v + s * cos * cos));
            entries.push((2 * i + 1, 2 * i, s * sin * cos));
        } else {
            entries.push((2 * i, 2 * j, v));
            entries.push((2 * i + 1, 2 * j + 1, v));
        }
    }
    if p.n % 2 == 1 {
        entries.push((p.n - 1, p.n - 1, max_diag + p.gap));
    }
    SparseSymmetric::from_entries(p.n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::MatVec;

    #[test]
    fn deterministic_for_seed() {
        let p = SyntheticParams::new(50, 1, 0.1);
        assert_eq!(gen_synthetic_ci_matrix(&p).unwrap(), gen_synthetic_ci_matrix(&p).unwrap());
        let q = SyntheticParams::new(50, 2, 0.1);
        assert_ne!(gen_synthetic_ci_matrix(&p).unwrap(), gen_synthetic_ci_matrix(&q).unwrap());
    }

    #[test]
    fn zero_density_is_diagonal() {
        let m = gen_synthetic_ci_matrix(&SyntheticParams::new(20, 3, 0.0)).unwrap();
        assert!(m.triangle().iter().all(|&(i, j, _)| i == j));
        let d = m.diagonal();
        assert!(d.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn stored_as_exactly_symmetric_triangle() {
        let m = gen_synthetic_ci_matrix(&SyntheticParams::new(200, 7, 0.02)).unwrap();
        assert!(m.triangle().iter().all(|&(i, j, _)| i >= j));
        let dense = m.to_dense();
        assert_eq!(dense, dense.transpose());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gen_synthetic_ci_matrix(&SyntheticParams::new(3, 1, 0.1)).is_err());
        assert!(gen_synthetic_ci_matrix(&SyntheticParams::new(10, 1, 1.5)).is_err());
    }

    #[test]
    fn split_pair_keeps_sparsity() {
        let base = gen_synthetic_ci_matrix(&SyntheticParams::new(100, 5, 0.02)).unwrap();
        let split = gen_synthetic_ci_matrix(&SyntheticParams::new(200, 5, 0.02).with_split(1e-8)).unwrap();
        assert!(split.triangle().len() <= 2 * base.triangle().len() + 100);
    }
}
