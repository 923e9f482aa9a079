//! Block Davidson baseline sharing the SBCI preconditioner and tolerances.

use crate::config::SolverConfig;
use crate::diagnostics::trace::{Method, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot_unchecked, lincomb, norm, scale, symmetric_eig, DenseMatrix, SymmetricLinearOperator, Vector};
use crate::precond::{ConvergedEigenpair, GroundShiftPreconditioner};
use crate::run::SolverRun;
use crate::sbci1::init_guess_from_diagonal;

/// Expansion vectors shorter than this (relative to their pre-projection
/// length) are discarded.
const EXPANSION_DROP: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DavidsonConfig {
    pub nroots: usize,
    /// Search-space size that triggers a collapse to the current Ritz vectors.
    pub max_space: usize,
    pub eps0: f64,
    pub r0: f64,
    pub max_iter: usize,
    pub lindep: f64,
    pub clamp_delta: f64,
}

impl DavidsonConfig {
    pub fn new(nroots: usize) -> Self {
        Self::from_solver(nroots, &SolverConfig::sbci1())
    }

    pub fn from_solver(nroots: usize, cfg: &SolverConfig) -> Self {
        Self {
            nroots,
            max_space: 12 * nroots,
            eps0: cfg.eps0,
            r0: cfg.r0,
            max_iter: cfg.t_max,
            lindep: cfg.lindep,
            clamp_delta: cfg.clamp_delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nroots == 0 {
            return Err(Error::InvalidArgument("nroots must be at least 1".into()));
        }
        if self.max_space < 2 * self.nroots {
            return Err(Error::InvalidArgument(format!(
                "max_space {} is below 2 * nroots = {}",
                self.max_space,
                2 * self.nroots
            )));
        }
        Ok(())
    }
}

/// Two passes of classical Gram–Schmidt of `v` against the orthonormal `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vector]) {
    for _ in 0..2 {
        for b in basis {
            let o = dot_unchecked(b, v);
            axpy(-o, b, v);
        }
    }
}

/// Lowest `cfg.nroots` eigenpairs.  When `pre` is `None` the shift starts at
/// the lowest diagonal-guess energy; in either case it tracks the lowest Ritz value.
pub fn davidson_solve(
    op: &SymmetricLinearOperator,
    pre: Option<&GroundShiftPreconditioner>,
    cfg: &DavidsonConfig,
) -> Result<SolverRun> {
    cfg.validate()?;
    let nroots = cfg.nroots;
    let count0 = op.apply_count();
    let guess = init_guess_from_diagonal(op, nroots, cfg.lindep)?;
    let init_matvecs = op.apply_count() - count0;
    let base = match pre {
        Some(p) => p.clone(),
        None => GroundShiftPreconditioner::new(op.diagonal(), guess.energies[0], cfg.clamp_delta)?,
    };
    let mut basis = guess.vectors;
    let mut images = guess.images;
    let mut prev = vec![f64::INFINITY; nroots];
    let mut trace = Vec::new();
    let mut collapses = 0;
    let mut residuals = vec![f64::INFINITY; nroots];
    let mut stuck = false;

    for iter in 0..cfg.max_iter {
        let m = basis.len();
        let g = DenseMatrix::from_fn(m, m, |i, j| dot_unchecked(&basis[i], &images[j])).symmetrized();
        let eig = symmetric_eig(&g)?;
        let brefs: Vec<&[f64]> = basis.iter().map(Vec::as_slice).collect();
        let irefs: Vec<&[f64]> = images.iter().map(Vec::as_slice).collect();
        let ritz: Vec<(Vector, Vector)> = (0..nroots)
            .map(|k| {
                let u = eig.vector(k);
                (lincomb(&u, &brefs), lincomb(&u, &irefs))
            })
            .collect();
        let res: Vec<Vector> = ritz
            .iter()
            .zip(&eig.eigenvalues)
            .map(|((x, hx), &e)| {
                let mut r = hx.clone();
                axpy(-e, x, &mut r);
                r
            })
            .collect();

        let mut done = vec![false; nroots];
        for k in 0..nroots {
            let e = eig.eigenvalues[k];
            residuals[k] = norm(&res[k]);
            done[k] = (e - prev[k]).abs() < cfg.eps0 && residuals[k] < cfg.r0;
            let mut rec = TraceRecord::new(Method::Davidson, k, collapses, iter);
            rec.energy = e;
            rec.d_e = if prev[k].is_finite() { e - prev[k] } else { 0.0 };
            rec.res_norm = residuals[k];
            rec.matvecs_cumulative = op.apply_count();
            rec.converged = done[k];
            trace.push(rec);
            prev[k] = e;
        }
        if done.iter().all(|&d| d) {
            let eigenpairs = ritz
                .into_iter()
                .zip(&eig.eigenvalues)
                .map(|((mut v, _), &energy)| {
                    scale(1.0 / norm(&v), &mut v);
                    ConvergedEigenpair { energy, vector: v }
                })
                .collect();
            return Ok(SolverRun::new(
                Method::Davidson,
                eigenpairs,
                trace,
                iter + 1,
                collapses,
                op.apply_count() - count0,
                init_matvecs,
                2 * cfg.max_space,
            ));
        }

        let pending = done.iter().filter(|&&d| !d).count();
        if m + pending > cfg.max_space {
            let (b, h): (Vec<Vector>, Vec<Vector>) = ritz.into_iter().unzip();
            basis = b;
            images = h;
            collapses += 1;
        }

        let shifted = base.update_shift(eig.eigenvalues[0]);
        let mut added = 0;
        for k in (0..nroots).filter(|&k| !done[k]) {
            let mut t = shifted.apply(&res[k]);
            let n0 = norm(&t);
            orthogonalize(&mut t, &basis);
            let nt = norm(&t);
            if !(nt > EXPANSION_DROP * n0) {
                continue;
            }
            scale(1.0 / nt, &mut t);
            orthogonalize(&mut t, &basis);
            scale(1.0 / norm(&t), &mut t);
            images.push(op.apply(&t)?);
            basis.push(t);
            added += 1;
        }
        // Nothing new to add: one more pass over the same space settles |ΔE|.
        if added == 0 {
            if stuck {
                break;
            }
            stuck = true;
        } else {
            stuck = false;
        }
    }
    Err(Error::DavidsonNotConverged {
        iterations: cfg.max_iter,
        residuals,
    })
}
