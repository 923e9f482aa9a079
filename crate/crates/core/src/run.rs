//! Output shared by every driver.

use crate::diagnostics::trace::{Method, TraceRecord};
use crate::precond::ConvergedEigenpair;

#[derive(Clone, Debug)]
pub struct SolverRun {
    pub method: Method,
    /// Ascending by energy.
    pub eigenpairs: Vec<ConvergedEigenpair>,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub restarts: usize,
    /// Operator applications made by this run, initialization included.
    pub matvecs: u64,
    pub init_matvecs: u64,
    /// Length-N working vectors held at once, excluding converged states.
    pub peak_vectors: usize,
}

impl SolverRun {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        method: Method,
        eigenpairs: Vec<ConvergedEigenpair>,
        trace: Vec<TraceRecord>,
        iterations: usize,
        restarts: usize,
        matvecs: u64,
        init_matvecs: u64,
        peak_vectors: usize,
    ) -> Self {
        let mut eigenpairs = eigenpairs;
        eigenpairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        Self {
            method,
            eigenpairs,
            trace,
            iterations,
            restarts,
            matvecs,
            init_matvecs,
            peak_vectors,
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        self.eigenpairs.iter().map(|p| p.energy).collect()
    }
}
