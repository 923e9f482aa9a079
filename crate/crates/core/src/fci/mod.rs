//! Determinant FCI in a fixed `S_z` sector.

mod basis;
mod fcidump;
mod sigma;
mod spin;
mod synthetic;

pub use basis::{binomial, count_determinants, enumerate_basis, DeterminantBasis};
pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump, write_fcidump_file};
pub use sigma::{as_operator, hamiltonian_diagonal, sigma_apply, FciOperator, DEFAULT_MAX_DETERMINANTS};
pub use spin::spin_squared;
pub use synthetic::synthetic_fci_problem;

use crate::error::{Error, Result};

/// Integrals over `norb` spatial orbitals.  `eri` is stored in full, in
/// chemist notation `(ij|kl)`, and every setter writes all eight
/// permutations.
#[derive(Clone, Debug, PartialEq)]
pub struct FciProblem {
    pub norb: usize,
    pub nelec: usize,
    pub ms2: i64,
    pub e_core: f64,
    h1: Vec<f64>,
    eri: Vec<f64>,
}

impl FciProblem {
    pub fn zeros(norb: usize, nelec: usize, ms2: i64) -> Result<Self> {
        if norb == 0 || norb > 64 {
            return Err(Error::InvalidArgument(format!("norb must be in 1..=64, got {norb}")));
        }
        let p = Self {
            norb,
            nelec,
            ms2,
            e_core: 0.0,
            h1: vec![0.0; norb * norb],
            eri: vec![0.0; norb.pow(4)],
        };
        p.electrons()?;
        Ok(p)
    }

    /// `(n_alpha, n_beta)` implied by `nelec` and `ms2`.
    pub fn electrons(&self) -> Result<(usize, usize)> {
        let n = self.nelec as i64;
        if (n + self.ms2) % 2 != 0 || self.ms2.abs() > n {
            return Err(Error::InvalidArgument(format!(
                "NELEC = {} and MS2 = {} are inconsistent",
                self.nelec, self.ms2
            )));
        }
        let (na, nb) = (((n + self.ms2) / 2) as usize, ((n - self.ms2) / 2) as usize);
        if na > self.norb || nb > self.norb {
            return Err(Error::InvalidArgument(format!(
                "{na} alpha / {nb} beta electrons do not fit in {} orbitals",
                self.norb
            )));
        }
        Ok((na, nb))
    }

    /// Same integrals, another spin sector.
    pub fn with_ms2(&self, ms2: i64) -> Result<Self> {
        let p = Self { ms2, ..self.clone() };
        p.electrons()?;
        Ok(p)
    }

    #[inline]
    pub fn h1(&self, i: usize, j: usize) -> f64 {
        self.h1[i * self.norb + j]
    }

    #[inline]
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.norb;
        self.eri[((i * n + j) * n + k) * n + l]
    }

    pub fn set_h1(&mut self, i: usize, j: usize, v: f64) {
        let n = self.norb;
        self.h1[i * n + j] = v;
        self.h1[j * n + i] = v;
    }

    pub fn set_eri(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let n = self.norb;
        for (a, b, c, d) in [
            (i, j, k, l),
            (j, i, k, l),
            (i, j, l, k),
            (j, i, l, k),
            (k, l, i, j),
            (l, k, i, j),
            (k, l, j, i),
            (l, k, j, i),
        ] {
            self.eri[((a * n + b) * n + c) * n + d] = v;
        }
    }

    pub fn h1_slice(&self) -> &[f64] {
        &self.h1
    }

    pub fn eri_slice(&self) -> &[f64] {
        &self.eri
    }
}
