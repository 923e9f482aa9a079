use std::collections::HashMap;

use super::basis::DeterminantBasis;
use crate::linalg::dot_unchecked;

/// `⟨S²⟩ = |S₊x|² / |x|² + S_z (S_z + 1)` with `S₊ = Σ_p a†_{pα} a_{pβ}`.
pub fn spin_squared(basis: &DeterminantBasis, x: &[f64]) -> f64 {
    let nb = basis.beta.len();
    let mut raised: HashMap<(u64, u64), f64> = HashMap::new();
    for (i, &c) in x.iter().enumerate().filter(|(_, c)| **c != 0.0) {
        let (a, b) = (basis.alpha[i / nb], basis.beta[i % nb]);
        for p in (0..basis.norb).filter(|&p| b >> p & 1 == 1 && a >> p & 1 == 0) {
            let mask = (1u64 << p) - 1;
            // a_{pβ} passes every alpha electron (a constant sign, dropped)
            // and the beta electrons below p; a†_{pα} the alpha electrons below p.
            let swaps = (b & mask).count_ones() + (a & mask).count_ones();
            let sign = if swaps.is_multiple_of(2) { 1.0 } else { -1.0 };
            *raised.entry((a | 1u64 << p, b & !(1u64 << p))).or_default() += sign * c;
        }
    }
    let sz = 0.5 * (basis.n_alpha as f64 - basis.n_beta as f64);
    let plus: f64 = raised.values().map(|v| v * v).sum();
    plus / dot_unchecked(x, x) + sz * (sz + 1.0)
}
