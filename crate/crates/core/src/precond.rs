//! `(D − E⁰I)⁻¹` preconditioning and deflation against converged states.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, dot_unchecked, norm, scale, Vector};

pub const DEFAULT_CLAMP_DELTA: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GroundShiftPreconditioner {
    diagonal: Arc<[f64]>,
    e0: f64,
    clamp_delta: f64,
}

impl GroundShiftPreconditioner {
    pub fn new(diagonal: &[f64], e0: f64, clamp_delta: f64) -> Result<Self> {
        if !(clamp_delta > 0.0) {
            return Err(Error::InvalidArgument(format!("clamp_delta must be positive, got {clamp_delta}")));
        }
        Ok(Self {
            diagonal: diagonal.into(),
            e0,
            clamp_delta,
        })
    }

    pub fn shift(&self) -> f64 {
        self.e0
    }

    pub fn clamp_delta(&self) -> f64 {
        self.clamp_delta
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Same diagonal, new shift.
    pub fn update_shift(&self, e_new: f64) -> Self {
        debug_assert!(e_new.is_finite());
        Self {
            diagonal: Arc::clone(&self.diagonal),
            e0: e_new,
            clamp_delta: self.clamp_delta,
        }
    }

    /// `D_i − E⁰` with magnitude at least `clamp_delta`; zero maps to `+clamp_delta`.
    #[inline]
    pub fn denominator(&self, i: usize) -> f64 {
        guard(self.diagonal[i] - self.e0, self.clamp_delta)
    }

    /// `diag(1/(D − E⁰))·v`.
    pub fn apply(&self, v: &[f64]) -> Vector {
        assert_eq!(v.len(), self.dim());
        v.iter()
            .enumerate()
            .map(|(i, x)| x / self.denominator(i))
            .collect()
    }

    /// `yᵀ (D − E⁰I) y`.
    pub fn kinetic(&self, y: &[f64]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, v)| self.denominator(i) * v * v)
            .sum()
    }
}

#[inline]
fn guard(d: f64, clamp: f64) -> f64 {
    if d.abs() >= clamp {
        d
    } else if d < 0.0 {
        -clamp
    } else {
        clamp
    }
}

/// A converged eigenpair.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergedEigenpair {
    pub energy: f64,
    /// Unit norm.
    pub vector: Vector,
}

/// Converged states everything later is kept orthogonal to.
#[derive(Clone, Debug, Default)]
pub struct DeflationSet {
    states: Vec<ConvergedEigenpair>,
}

impl DeflationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[ConvergedEigenpair] {
        &self.states
    }

    pub fn into_states(self) -> Vec<ConvergedEigenpair> {
        self.states
    }

    /// Projects `x` out of the current set, normalizes, and stores it.
    pub fn push(&mut self, mut x: Vector, energy: f64) -> Result<()> {
        self.project(&mut x);
        let n = norm(&x);
        if !(n > 0.0) {
            return Err(Error::RankDeficient { index: self.len(), norm: n });
        }
        scale(1.0 / n, &mut x);
        self.states.push(ConvergedEigenpair { energy, vector: x });
        Ok(())
    }

    /// `x ← (1 − Σ x_c x_cᵀ) x`, applied twice for stability.
    pub fn project(&self, x: &mut [f64]) {
        for _ in 0..2 {
            for s in &self.states {
                let o = dot_unchecked(&s.vector, x);
                axpy(-o, &s.vector, x);
            }
        }
    }

    /// One projection pass returning the overlaps `x_c · x`.
    pub fn project_once(&self, x: &mut [f64]) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| {
                let o = dot_unchecked(&s.vector, x);
                axpy(-o, &s.vector, x);
                o
            })
            .collect()
    }

    /// Projects `x` out of the set and corrects its cached image `hx`
    /// assuming `H x_c = E_c x_c`.
    pub fn project_with_image(&self, x: &mut [f64], hx: &mut [f64]) {
        for _ in 0..2 {
            for s in &self.states {
                let o = dot_unchecked(&s.vector, x);
                axpy(-o, &s.vector, x);
                axpy(-o * s.energy, &s.vector, hx);
            }
        }
    }

    pub fn max_overlap(&self, x: &[f64]) -> f64 {
        let nx = norm(x);
        self.states
            .iter()
            .map(|s| dot(&s.vector, x).map_or(f64::INFINITY, f64::abs) / nx)
            .fold(0.0, f64::max)
    }
}

/// `(1 − Σ x_c x_cᵀ) · diag(1/(D − E⁰)) · zres`.
pub fn precondition_and_deflate(
    zres: &[f64],
    pre: &GroundShiftPreconditioner,
    defl: &DeflationSet,
) -> Vector {
    let mut z = pre.apply(zres);
    defl.project(&mut z);
    z
}
