//! Seeded model integrals for fixtures and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FciProblem;

/// Integrals with a positive semidefinite `(ij|kl)` built from symmetric
/// factors `L^P_ij`, so `(ij|kl) = Σ_P L^P_ij L^P_kl`.  Panics when
/// `norb > 64` or `nelec > 2 norb`.
pub fn synthetic_fci_problem(norb: usize, nelec: usize, seed: u64) -> FciProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = FciProblem::zeros(norb, nelec, 0).expect("valid sizes");
    p.e_core = 0.5 + rng.random_range(0.0..0.5);
    for i in 0..norb {
        p.set_h1(i, i, -2.0 + 0.55 * i as f64 + rng.random_range(-0.05..0.05));
        for j in 0..i {
            p.set_h1(i, j, rng.random_range(-0.15..0.15));
        }
    }
    let naux = norb * (norb + 1) / 2;
    let mut factors = vec![vec![0.0; norb * norb]; naux];
    for l in factors.iter_mut() {
        for i in 0..norb {
            for j in 0..=i {
                let scale = if i == j { 0.35 } else { 0.12 };
                let v = scale * rng.random_range(-1.0..1.0);
                l[i * norb + j] = v;
                l[j * norb + i] = v;
            }
        }
    }
    for i in 0..norb {
        for j in 0..=i {
            for k in 0..norb {
                for m in 0..=k {
                    let v: f64 = factors.iter().map(|l| l[i * norb + j] * l[k * norb + m]).sum();
                    p.set_eri(i, j, k, m, v);
                }
            }
        }
    }
    p
}
