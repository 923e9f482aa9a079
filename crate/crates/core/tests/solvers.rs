mod common;

use common::*;
use sbci_core::config::SolverConfig;
use sbci_core::davidson::{davidson_solve, DavidsonConfig};
use sbci_core::linalg::synthetic::{gen_synthetic_ci_matrix, SyntheticParams};
use sbci_core::run::SolverRun;
use sbci_core::sbci1::solve_n_states_sbci1;
use sbci_core::sbci2::solve_n_states_sbci2;

const SEEDS: [u64; 5] = [1, 4, 8, 11, 19];

fn all_methods(m: &sbci_core::linalg::SparseSymmetric, n: usize) -> [SolverRun; 3] {
    [
        solve_n_states_sbci1(&operator(m), n, &SolverConfig::sbci1()).unwrap(),
        solve_n_states_sbci2(&operator(m), n, &SolverConfig::sbci2()).unwrap(),
        davidson_solve(&operator(m), None, &DavidsonConfig::new(n)).unwrap(),
    ]
}

#[test]
fn lowest_four_match_dense_oracle() {
    for seed in SEEDS {
        let m = synthetic(200, seed, 0.02);
        let o = Oracle::new(&m);
        for run in all_methods(&m, 4) {
            for (k, (e, pair)) in run.energies().iter().zip(&run.eigenpairs).enumerate() {
                assert!((e - o.values[k]).abs() <= 1e-8, "seed {seed} {} state {k}", run.method);
                assert!(o.residual(*e, &pair.vector) <= 1e-5 * o.norm_scale());
            }
        }
    }
}

#[test]
fn methods_agree_with_davidson() {
    for seed in SEEDS {
        let [s1, s2, dav] = all_methods(&synthetic(200, seed, 0.02), 4);
        for k in 0..4 {
            assert!((s1.energies()[k] - dav.energies()[k]).abs() <= 1e-8);
            assert!((s2.energies()[k] - dav.energies()[k]).abs() <= 1e-8);
        }
    }
}

#[test]
fn converged_states_stay_orthogonal() {
    for seed in SEEDS {
        for run in all_methods(&synthetic(200, seed, 0.02), 4) {
            let o = max_pairwise_overlap(&run.eigenpairs);
            assert!(o <= 1e-9, "seed {seed} {}: {o:e}", run.method);
        }
    }
}

#[test]
fn one_and_two_matvecs_per_iteration() {
    for seed in SEEDS {
        let m = synthetic(200, seed, 0.02);
        for run in all_methods(&m, 4).into_iter().take(2) {
            let bad = budget_violations(&run);
            assert!(bad.is_empty(), "seed {seed} {}: {bad:?}", run.method);
        }
    }
}

#[test]
fn summary_count_equals_operator_count() {
    let m = synthetic(200, 3, 0.02);
    let op = operator(&m);
    let run = solve_n_states_sbci2(&op, 3, &SolverConfig::sbci2()).unwrap();
    assert_eq!(run.matvecs, op.apply_count());
    let op = operator(&m);
    let run = davidson_solve(&op, None, &DavidsonConfig::new(3)).unwrap();
    assert_eq!(run.matvecs, op.apply_count());
}

#[test]
fn ritz_energy_never_rises() {
    for seed in SEEDS {
        for run in all_methods(&synthetic(200, seed, 0.02), 4).into_iter().take(2) {
            let rise = worst_rise(&run.trace);
            assert!(rise <= 1e-12, "seed {seed} {}: {rise:e}", run.method);
        }
    }
}

#[test]
fn one_row_per_iteration_and_tagged_restarts() {
    let run = solve_n_states_sbci1(&operator(&synthetic(200, 2, 0.02)), 3, &SolverConfig::sbci1()).unwrap();
    assert_eq!(run.trace.len(), run.iterations);
    for w in run.trace.windows(2) {
        if w[0].state == w[1].state && w[1].segment == w[0].segment + 1 {
            assert!(w[0].restart_reason.is_some());
            assert_eq!(w[1].t, 0);
        }
    }
    assert_eq!(run.trace.iter().filter(|r| r.restart_reason.is_some()).count(), run.restarts);
}

#[test]
fn near_degenerate_pair_is_resolved() {
    let m = gen_synthetic_ci_matrix(&SyntheticParams::new(200, 5, 0.02).with_split(1e-8)).unwrap();
    let o = Oracle::new(&m);
    assert!((o.values[1] - o.values[0] - 1e-8).abs() < 1e-10);
    let run = solve_n_states_sbci2(&operator(&m), 2, &SolverConfig::sbci2()).unwrap();
    let xs: Vec<&[f64]> = run.eigenpairs.iter().map(|p| p.vector.as_slice()).collect();
    assert!(max_pairwise_overlap(&run.eigenpairs) <= 1e-10);
    assert!(o.principal_angle(&xs, 0, 2) <= 1e-5);
    let run1 = solve_n_states_sbci1(&operator(&m), 2, &SolverConfig::sbci1()).unwrap();
    let xs: Vec<&[f64]> = run1.eigenpairs.iter().map(|p| p.vector.as_slice()).collect();
    assert!(o.principal_angle(&xs, 0, 2) <= 1e-5);
}
