//! Second-quantization Hamiltonian over spin orbitals, built without the
//! library's excitation tables.  Spin orbital `p < n` is `α p`, `p ≥ n` is `β (p − n)`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use sbci_core::fci::{DeterminantBasis, FciProblem};

fn annihilate(det: u128, p: usize) -> Option<(u128, f64)> {
    if det >> p & 1 == 0 {
        return None;
    }
    let below = (det & ((1u128 << p) - 1)).count_ones();
    Some((det & !(1u128 << p), if below.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

fn create(det: u128, p: usize) -> Option<(u128, f64)> {
    if det >> p & 1 == 1 {
        return None;
    }
    let below = (det & ((1u128 << p) - 1)).count_ones();
    Some((det | (1u128 << p), if below.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

/// Applies `ops` right to left; `(true, p)` is a creator.
fn apply_string(det: u128, ops: &[(bool, usize)]) -> Option<(u128, f64)> {
    ops.iter().rev().try_fold((det, 1.0), |(d, s), &(cre, p)| {
        let (d2, s2) = if cre { create(d, p)? } else { annihilate(d, p)? };
        Some((d2, s * s2))
    })
}

pub fn dense_hamiltonian(p: &FciProblem, basis: &DeterminantBasis) -> DMatrix<f64> {
    let n = p.norb;
    let nso = 2 * n;
    let spin = |q: usize| q / n;
    let spatial = |q: usize| q % n;
    let dets: Vec<u128> = (0..basis.n_det())
        .map(|i| {
            let (a, b) = basis.determinant(i);
            a as u128 | (b as u128) << n
        })
        .collect();
    let index: HashMap<u128, usize> = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let mut h = DMatrix::<f64>::zeros(dets.len(), dets.len());

    for (col, &ket) in dets.iter().enumerate() {
        h[(col, col)] += p.e_core;
        for a in 0..nso {
            for b in (0..nso).filter(|&b| spin(b) == spin(a)) {
                let v = p.h1(spatial(a), spatial(b));
                if v == 0.0 {
                    continue;
                }
                if let Some((bra, s)) = apply_string(ket, &[(true, a), (false, b)]) {
                    h[(index[&bra], col)] += s * v;
                }
            }
        }
        // ½ Σ (pq|rs) a†p a†r a_s a_q
        for pp in 0..nso {
            for q in (0..nso).filter(|&q| spin(q) == spin(pp)) {
                for r in 0..nso {
                    for s_ in (0..nso).filter(|&s_| spin(s_) == spin(r)) {
                        let v = p.eri(spatial(pp), spatial(q), spatial(r), spatial(s_));
                        if v == 0.0 {
                            continue;
                        }
                        if let Some((bra, s)) = apply_string(ket, &[(true, pp), (true, r), (false, s_), (false, q)]) {
                            h[(index[&bra], col)] += 0.5 * s * v;
                        }
                    }
                }
            }
        }
    }
    h
}
