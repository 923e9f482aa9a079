//! Slater–Condon sigma build, gathered per target determinant.

use std::sync::Arc;

use super::basis::DeterminantBasis;
use super::FciProblem;
use crate::error::{Error, Result};
use crate::linalg::{MatVec, SymmetricLinearOperator, Vector};

/// Refuse operators larger than this unless a limit is given explicitly.
pub const DEFAULT_MAX_DETERMINANTS: u64 = 5_000_000;

#[inline]
fn parity(bits: u64) -> f64 {
    if bits.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn below(i: usize) -> u64 {
    (1u64 << i) - 1
}

/// `a†_a a_i |s⟩ = sign |t⟩` for `i ∈ s`, `a ∉ s \ {i}`.
#[inline]
pub(crate) fn excite(s: u64, i: usize, a: usize) -> (u64, f64) {
    let t = s & !(1u64 << i);
    (t | (1u64 << a), parity(s & below(i)) * parity(t & below(a)))
}

pub(crate) fn occupied(s: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| s >> i & 1 == 1)
}

#[derive(Clone, Copy, Debug)]
struct Single {
    target: usize,
    create: usize,
    annihilate: usize,
    sign: f64,
    /// Signed same-channel part of the element.
    value: f64,
}

#[derive(Clone, Copy, Debug)]
struct Double {
    target: usize,
    value: f64,
}

#[derive(Clone, Debug)]
struct Channel {
    occ: Vec<Vec<usize>>,
    singles: Vec<Vec<Single>>,
    doubles: Vec<Vec<Double>>,
}

impl Channel {
    fn new(p: &FciProblem, strings: &[u64]) -> Self {
        let n = p.norb;
        let index = |s: u64| strings.binary_search(&s).expect("excitation stays in sector");
        let occ: Vec<Vec<usize>> = strings.iter().map(|&s| occupied(s).collect()).collect();
        let singles = strings
            .iter()
            .zip(&occ)
            .map(|(&s, o)| {
                let mut list = Vec::new();
                for &i in o {
                    for a in (0..n).filter(|&a| s >> a & 1 == 0) {
                        let (t, sign) = excite(s, i, a);
                        let mut v = p.h1(a, i);
                        for &r in o.iter().filter(|&&r| r != i) {
                            v += p.eri(a, i, r, r) - p.eri(a, r, r, i);
                        }
                        list.push(Single {
                            target: index(t),
                            create: a,
                            annihilate: i,
                            sign,
                            value: sign * v,
                        });
                    }
                }
                list
            })
            .collect();
        let doubles = strings
            .iter()
            .zip(&occ)
            .map(|(&s, o)| {
                let virt: Vec<usize> = (0..n).filter(|&a| s >> a & 1 == 0).collect();
                let mut list = Vec::new();
                for (x, &i) in o.iter().enumerate() {
                    for &j in &o[x + 1..] {
                        for (y, &a) in virt.iter().enumerate() {
                            for &b in &virt[y + 1..] {
                                let (t1, s1) = excite(s, i, a);
                                let (t, s2) = excite(t1, j, b);
                                let v = p.eri(a, i, b, j) - p.eri(a, j, b, i);
                                if v != 0.0 {
                                    list.push(Double {
                                        target: index(t),
                                        value: s1 * s2 * v,
                                    });
                                }
                            }
                        }
                    }
                }
                list
            })
            .collect();
        Self { occ, singles, doubles }
    }
}

/// Matrix-free FCI Hamiltonian over a determinant basis.
#[derive(Clone, Debug)]
pub struct FciOperator {
    problem: Arc<FciProblem>,
    basis: Arc<DeterminantBasis>,
    alpha: Channel,
    beta: Channel,
    diagonal: Vector,
}

impl FciOperator {
    pub fn new(problem: &FciProblem, basis: &DeterminantBasis) -> Result<Self> {
        Self::with_limit(problem, basis, DEFAULT_MAX_DETERMINANTS)
    }

    pub fn with_limit(problem: &FciProblem, basis: &DeterminantBasis, limit: u64) -> Result<Self> {
        let n_det = basis.n_det() as u64;
        if n_det > limit {
            return Err(Error::TooLarge { n_det, limit });
        }
        if basis.norb != problem.norb {
            return Err(Error::Dimension {
                expected: problem.norb,
                got: basis.norb,
            });
        }
        Ok(Self {
            alpha: Channel::new(problem, &basis.alpha),
            beta: Channel::new(problem, &basis.beta),
            diagonal: hamiltonian_diagonal(problem, basis),
            problem: Arc::new(problem.clone()),
            basis: Arc::new(basis.clone()),
        })
    }

    pub fn basis(&self) -> &DeterminantBasis {
        &self.basis
    }

    pub fn problem(&self) -> &FciProblem {
        &self.problem
    }

    /// Sigma entries for all determinants sharing alpha string `ia`.
    fn row_block(&self, ia: usize, x: &[f64], out: &mut [f64]) {
        let p = &*self.problem;
        let nb = self.basis.beta.len();
        let base = ia * nb;
        for (ib, o) in out.iter_mut().enumerate() {
            let mut acc = self.diagonal[base + ib] * x[base + ib];
            let occ_a = &self.alpha.occ[ia];
            let occ_b = &self.beta.occ[ib];
            for e in &self.alpha.singles[ia] {
                let cross: f64 = occ_b.iter().map(|&r| p.eri(e.create, e.annihilate, r, r)).sum();
                acc += (e.value + e.sign * cross) * x[e.target * nb + ib];
            }
            for e in &self.beta.singles[ib] {
                let cross: f64 = occ_a.iter().map(|&r| p.eri(e.create, e.annihilate, r, r)).sum();
                acc += (e.value + e.sign * cross) * x[base + e.target];
            }
            for d in &self.alpha.doubles[ia] {
                acc += d.value * x[d.target * nb + ib];
            }
            for d in &self.beta.doubles[ib] {
                acc += d.value * x[base + d.target];
            }
            for ea in &self.alpha.singles[ia] {
                let row = ea.target * nb;
                for eb in &self.beta.singles[ib] {
                    let v = p.eri(ea.create, ea.annihilate, eb.create, eb.annihilate);
                    acc += ea.sign * eb.sign * v * x[row + eb.target];
                }
            }
            *o = acc;
        }
    }
}

impl MatVec for FciOperator {
    fn dim(&self) -> usize {
        self.basis.n_det()
    }

    fn diagonal(&self) -> Vector {
        self.diagonal.clone()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let nb = self.basis.beta.len();
        #[cfg(feature = "parallel")]
        if crate::linalg::kernels::use_parallel(out.len()) {
            use rayon::prelude::*;
            out.par_chunks_mut(nb)
                .enumerate()
                .for_each(|(ia, block)| self.row_block(ia, x, block));
            return;
        }
        for (ia, block) in out.chunks_mut(nb).enumerate() {
            self.row_block(ia, x, block);
        }
    }
}

/// `H x`, core energy included.
pub fn sigma_apply(problem: &FciProblem, basis: &DeterminantBasis, x: &[f64]) -> Result<Vector> {
    let op = FciOperator::with_limit(problem, basis, u64::MAX)?;
    if x.len() != op.dim() {
        return Err(Error::Dimension {
            expected: op.dim(),
            got: x.len(),
        });
    }
    let mut out = vec![0.0; x.len()];
    op.apply_into(x, &mut out);
    Ok(out)
}

/// `H_ii` from occupied-orbital sums.
pub fn hamiltonian_diagonal(p: &FciProblem, basis: &DeterminantBasis) -> Vector {
    let one = |o: &[usize]| -> f64 {
        let h: f64 = o.iter().map(|&i| p.h1(i, i)).sum();
        let jk: f64 = o
            .iter()
            .flat_map(|&i| o.iter().map(move |&j| (i, j)))
            .map(|(i, j)| p.eri(i, i, j, j) - p.eri(i, j, j, i))
            .sum();
        h + 0.5 * jk
    };
    let occ_a: Vec<Vec<usize>> = basis.alpha.iter().map(|&s| occupied(s).collect()).collect();
    let occ_b: Vec<Vec<usize>> = basis.beta.iter().map(|&s| occupied(s).collect()).collect();
    let ea: Vec<f64> = occ_a.iter().map(|o| one(o)).collect();
    let eb: Vec<f64> = occ_b.iter().map(|o| one(o)).collect();
    let mut d = Vec::with_capacity(basis.n_det());
    for (oa, &a) in occ_a.iter().zip(&ea) {
        for (ob, &b) in occ_b.iter().zip(&eb) {
            let j: f64 = oa.iter().flat_map(|&i| ob.iter().map(move |&k| p.eri(i, i, k, k))).sum();
            d.push(p.e_core + a + b + j);
        }
    }
    d
}

/// Counted operator with the default size guard.
pub fn as_operator(problem: &FciProblem, basis: &DeterminantBasis) -> Result<SymmetricLinearOperator> {
    Ok(SymmetricLinearOperator::from_backend(FciOperator::new(problem, basis)?))
}
