//! Per-run summary.  Keys are fixed; unknown keys are rejected on read.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::trace::Method;
use crate::run::SolverRun;

/// Serialized keys, in order.
pub const SUMMARY_KEYS: [&str; 10] = [
    "method",
    "energies",
    "iterations",
    "restarts",
    "matvecs",
    "init_matvecs",
    "wall_time_s",
    "peak_vectors",
    "spin_squared",
    "converged",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub method: Method,
    /// Ascending.
    pub energies: Vec<f64>,
    pub iterations: usize,
    pub restarts: usize,
    pub matvecs: u64,
    pub init_matvecs: u64,
    pub wall_time_s: f64,
    pub peak_vectors: usize,
    /// `⟨S²⟩` per state, FCI runs only.
    pub spin_squared: Option<Vec<f64>>,
    pub converged: bool,
}

impl RunSummary {
    pub fn from_run(run: &SolverRun, wall: Duration) -> Self {
        Self {
            method: run.method,
            energies: run.energies(),
            iterations: run.iterations,
            restarts: run.restarts,
            matvecs: run.matvecs,
            init_matvecs: run.init_matvecs,
            wall_time_s: wall.as_secs_f64(),
            peak_vectors: run.peak_vectors,
            spin_squared: None,
            converged: true,
        }
    }

    pub fn with_spin_squared(mut self, s2: Vec<f64>) -> Self {
        self.spin_squared = Some(s2);
        self
    }
}
