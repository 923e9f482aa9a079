//! Solver thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convergence-tolerance pairs `(eps0, r0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `eps0 = 1e-10`, `r0 = 1e-5`.
    Tight,
    /// `eps0 = 1e-8`, `r0 = 1e-4`.
    Loose,
}

impl Preset {
    pub fn tolerances(self) -> (f64, f64) {
        match self {
            Preset::Tight => (1e-10, 1e-5),
            Preset::Loose => (1e-8, 1e-4),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight" => Ok(Preset::Tight),
            "loose" => Ok(Preset::Loose),
            other => Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Energy-change tolerance.
    pub eps0: f64,
    /// Residual-norm tolerance.
    pub r0: f64,
    pub b_th: f64,
    pub eps1: f64,
    pub x_th1: f64,
    pub x_th2: f64,
    pub r1: f64,
    /// Iterations per restart segment.
    pub max_cycle: usize,
    /// Iterations per state over all segments.
    pub t_max: usize,
    pub lindep: f64,
    pub clamp_delta: f64,
    /// Recompute the cached `Hx` from scratch every this many restarts (0 disables).
    pub refresh_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::sbci1()
    }
}

impl SolverConfig {
    pub fn sbci1() -> Self {
        Self {
            eps0: 1e-10,
            r0: 1e-5,
            b_th: 1e-2,
            eps1: 1e-7,
            x_th1: 0.1,
            x_th2: 1.2,
            r1: 1.0,
            max_cycle: 20,
            t_max: 10_000,
            lindep: 1e-14,
            clamp_delta: 1e-10,
            refresh_every: 5,
        }
    }

    pub fn sbci2() -> Self {
        Self {
            max_cycle: 10,
            ..Self::sbci1()
        }
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        (self.eps0, self.r0) = preset.tolerances();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps0", self.eps0),
            ("r0", self.r0),
            ("b_th", self.b_th),
            ("eps1", self.eps1),
            ("x_th1", self.x_th1),
            ("x_th2", self.x_th2),
            ("r1", self.r1),
            ("lindep", self.lindep),
            ("clamp_delta", self.clamp_delta),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
        if !(self.x_th1 < 1.0 && 1.0 < self.x_th2) {
            return Err(Error::InvalidArgument(format!(
                "need x_th1 < 1 < x_th2, got {} and {}",
                self.x_th1, self.x_th2
            )));
        }
        if self.max_cycle < 2 {
            return Err(Error::InvalidArgument("max_cycle must be at least 2".into()));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidArgument("t_max must be positive".into()));
        }
        Ok(())
    }
}
