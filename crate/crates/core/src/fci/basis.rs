use crate::error::{Error, Result};

/// `C(n, k)`, exact.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `C(norb, n_alpha) · C(norb, n_beta)`, without materializing anything.
pub fn count_determinants(norb: usize, n_alpha: usize, n_beta: usize) -> u128 {
    binomial(norb as u64, n_alpha as u64) * binomial(norb as u64, n_beta as u64)
}

/// Occupation strings of both spin channels.  Determinant `(ia, ib)` has
/// index `ia · |beta| + ib`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminantBasis {
    pub norb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    /// Strictly increasing bitmasks.
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
}

/// All `k`-bit masks below `1 << n`, ascending.
fn strings(n: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let limit = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut out = Vec::with_capacity(binomial(n as u64, k as u64) as usize);
    let mut s: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    loop {
        out.push(s);
        // Next mask with the same popcount.
        let c = s & s.wrapping_neg();
        let Some(r) = s.checked_add(c) else { break };
        let next = (((r ^ s) >> 2) / c) | r;
        if next > limit || next < s {
            break;
        }
        s = next;
    }
    out
}

pub fn enumerate_basis(norb: usize, n_alpha: usize, n_beta: usize) -> Result<DeterminantBasis> {
    if norb == 0 || norb > 64 || n_alpha > norb || n_beta > norb {
        return Err(Error::InvalidArgument(format!(
            "cannot place {n_alpha} alpha / {n_beta} beta electrons in {norb} orbitals"
        )));
    }
    Ok(DeterminantBasis {
        norb,
        n_alpha,
        n_beta,
        alpha: strings(norb, n_alpha),
        beta: strings(norb, n_beta),
    })
}

impl DeterminantBasis {
    pub fn n_det(&self) -> usize {
        self.alpha.len() * self.beta.len()
    }

    #[inline]
    pub fn index(&self, ia: usize, ib: usize) -> usize {
        ia * self.beta.len() + ib
    }

    pub fn alpha_index(&self, s: u64) -> Option<usize> {
        self.alpha.binary_search(&s).ok()
    }

    pub fn beta_index(&self, s: u64) -> Option<usize> {
        self.beta.binary_search(&s).ok()
    }

    /// `(alpha, beta)` masks of determinant `i`.
    pub fn determinant(&self, i: usize) -> (u64, u64) {
        let nb = self.beta.len();
        (self.alpha[i / nb], self.beta[i % nb])
    }
}
