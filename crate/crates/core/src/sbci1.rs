//! Single-state solver and the sequential multi-state driver.

use crate::config::SolverConfig;
use crate::diagnostics::trace::{Method, RestartReason, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{
    axpy, build_subspace_matrix, dot_unchecked, gram_schmidt_coeffs, lincomb, norm, scale,
    small_symmetric_eig, symmetric_eig, DenseMatrix, SymmetricLinearOperator, Vector,
};
use crate::precond::{precondition_and_deflate, ConvergedEigenpair, DeflationSet, GroundShiftPreconditioner};
use crate::run::SolverRun;

/// Smallest usable magnitude of a coefficient denominator.
pub(crate) const DENOM_TOL: f64 = 1e-14;

/// Everything a step reads but does not own.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub op: &'a SymmetricLinearOperator,
    pub cfg: &'a SolverConfig,
    pub pre: &'a GroundShiftPreconditioner,
    pub defl: &'a DeflationSet,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Continue,
    Converged(ConvergedEigenpair),
    Restart(RestartReason),
}

/// A candidate starting vector with its cached image.
#[derive(Clone, Debug)]
pub struct Seed {
    pub vector: Vector,
    pub image: Vector,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct Sbci1State {
    pub alpha: usize,
    pub t: usize,
    pub segment: usize,
    pub x: Vector,
    pub hx: Vector,
    pub y: Vector,
    pub hy: Vector,
    pub zres: Vector,
    pub energy: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
    pub res_norm: f64,
    /// Second-lowest Ritz pair of the latest subspace.
    pub next_seed: Option<Seed>,
    pending_overhead: u64,
}

impl Sbci1State {
    /// Projects the seed against `defl`, normalizes it, and sets up `t = 0`.
    pub fn start(alpha: usize, mut x: Vector, mut hx: Vector, defl: &DeflationSet) -> Result<Self> {
        if x.len() != hx.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: hx.len(),
            });
        }
        defl.project_with_image(&mut x, &mut hx);
        let nx = norm(&x);
        if !(nx > 0.0) {
            return Err(Error::RankDeficient { index: alpha, norm: nx });
        }
        scale(1.0 / nx, &mut x);
        scale(1.0 / nx, &mut hx);
        let n = x.len();
        let mut s = Self {
            alpha,
            t: 0,
            segment: 0,
            x,
            hx,
            y: vec![0.0; n],
            hy: vec![0.0; n],
            zres: Vec::new(),
            energy: 0.0,
            b: 1.0,
            c: 0.0,
            k: 1.0,
            res_norm: 0.0,
            next_seed: None,
            pending_overhead: 0,
        };
        s.reset_residual();
        Ok(s)
    }

    /// `E = x·Hx` and `z′ = Hx − E x` for a unit `x`.
    fn reset_residual(&mut self) {
        self.energy = dot_unchecked(&self.x, &self.hx);
        self.zres = self.hx.clone();
        axpy(-self.energy, &self.x, &mut self.zres);
        self.res_norm = norm(&self.zres);
    }

    /// Re-projects `x` against `defl` and recomputes `Hx` from scratch.
    /// The matvec is booked as overhead on the next row.
    pub fn refresh_image(&mut self, op: &SymmetricLinearOperator, defl: &DeflationSet) -> Result<()> {
        defl.project(&mut self.x);
        let nx = norm(&self.x);
        if !(nx > 0.0) {
            return Err(Error::RankDeficient { index: self.alpha, norm: nx });
        }
        scale(1.0 / nx, &mut self.x);
        self.hx = op.apply(&self.x)?;
        self.pending_overhead += 1;
        self.reset_residual();
        Ok(())
    }

    pub fn x_norm(&self) -> f64 {
        norm(&self.x)
    }

    /// Normalizes `x`, drops the momentum and returns to the first-step form.
    pub fn restart(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        let nx = norm(&self.x);
        scale(1.0 / nx, &mut self.x);
        scale(1.0 / nx, &mut self.hx);
        self.segment += 1;
        if ctx.cfg.refresh_every > 0 && self.segment.is_multiple_of(ctx.cfg.refresh_every) {
            ctx.defl.project(&mut self.x);
            let nx = norm(&self.x);
            scale(1.0 / nx, &mut self.x);
            self.hx = ctx.op.apply(&self.x)?;
            self.pending_overhead += 1;
        }
        self.y.iter_mut().for_each(|v| *v = 0.0);
        self.hy.iter_mut().for_each(|v| *v = 0.0);
        self.t = 0;
        self.b = 1.0;
        self.reset_residual();
        Ok(())
    }

    fn record(&self, ctx: &StepContext<'_>) -> TraceRecord {
        let mut r = TraceRecord::new(Method::Sbci1, self.alpha, self.segment, self.t);
        r.matvecs_cumulative = ctx.op.apply_count();
        r
    }

    /// Row for a step that made no progress because the residual direction vanished.
    fn degenerate(&mut self, ctx: &StepContext<'_>, mut rec: TraceRecord) -> (StepOutcome, TraceRecord) {
        rec.energy = self.energy;
        rec.res_norm = self.res_norm;
        rec.x_norm = Some(self.x_norm());
        rec.matvecs_overhead = std::mem::take(&mut self.pending_overhead);
        let outcome = if self.res_norm < ctx.cfg.r0 {
            rec.converged = true;
            StepOutcome::Converged(self.converged_pair())
        } else {
            rec.restart_reason = Some(RestartReason::StallSmallB);
            StepOutcome::Restart(RestartReason::StallSmallB)
        };
        (outcome, rec)
    }

    fn converged_pair(&self) -> ConvergedEigenpair {
        let mut v = self.x.clone();
        scale(1.0 / norm(&v), &mut v);
        ConvergedEigenpair {
            energy: self.energy,
            vector: v,
        }
    }

    /// One update.  The first-step form (`{x, z}` subspace, `b = 1`) is used
    /// at `t = 0` and whenever the momentum direction is numerically absent.
    fn advance(&mut self, ctx: &StepContext<'_>, want_y: bool) -> Result<(StepOutcome, TraceRecord)> {
        let cfg = ctx.cfg;
        let mut rec = self.record(ctx);
        let z = precondition_and_deflate(&self.zres, ctx.pre, ctx.defl);
        if !(norm(&z) > cfg.lindep * self.x_norm()) {
            return Ok(self.degenerate(ctx, rec));
        }
        let hz = ctx.op.apply(&z)?;

        let mut use_y = want_y && norm(&self.y) > 0.0;
        let gs = match use_y {
            true => match gram_schmidt_coeffs(&self.x, Some(&self.y), &z, cfg.lindep) {
                Err(Error::RankDeficient { index: 1, .. }) => {
                    use_y = false;
                    gram_schmidt_coeffs(&self.x, None, &z, cfg.lindep)
                }
                other => other,
            },
            false => gram_schmidt_coeffs(&self.x, None, &z, cfg.lindep),
        };
        let gs = match gs {
            Ok(t) => t,
            Err(Error::RankDeficient { .. }) => {
                rec.matvecs_cumulative = ctx.op.apply_count();
                return Ok(self.degenerate(ctx, rec));
            }
            Err(e) => return Err(e),
        };

        let (vectors, images): (Vec<&[f64]>, Vec<&[f64]>) = if use_y {
            (vec![&self.x, &self.y, &z], vec![&self.hx, &self.hy, &hz])
        } else {
            (vec![&self.x, &z], vec![&self.hx, &hz])
        };
        let v = build_subspace_matrix(&vectors, &images, &gs)?;
        let eig = small_symmetric_eig(&v)?;
        let w = gs.to_inputs(&eig.vector(0));
        let e_new = eig.eigenvalues[0];

        let (wx, wy, wz) = if use_y { (w[0], w[1], w[2]) } else { (w[0], 0.0, w[1]) };
        let stalled = wx.abs() < DENOM_TOL || (use_y && wy.abs() < DENOM_TOL);
        rec.matvecs_cumulative = ctx.op.apply_count();
        rec.matvecs_overhead = std::mem::take(&mut self.pending_overhead);
        if stalled {
            rec.energy = self.energy;
            rec.res_norm = self.res_norm;
            rec.x_norm = Some(self.x_norm());
            rec.restart_reason = Some(RestartReason::StallSmallB);
            return Ok((StepOutcome::Restart(RestartReason::StallSmallB), rec));
        }
        let k = 1.0 / wx;
        let (b, c) = if use_y { (k * wy, -wz / wy) } else { (1.0, -k * wz) };

        let seed = {
            let w2 = gs.to_inputs(&eig.vector(1));
            Seed {
                vector: lincomb(&w2, &vectors),
                image: lincomb(&w2, &images),
                energy: eig.eigenvalues[1],
            }
        };

        // y' = y − c z,  x' = x + b y'  (images alike).
        let mut y_new = if use_y { self.y.clone() } else { vec![0.0; z.len()] };
        let mut hy_new = if use_y { self.hy.clone() } else { vec![0.0; z.len()] };
        axpy(-c, &z, &mut y_new);
        axpy(-c, &hz, &mut hy_new);
        let mut x_new = self.x.clone();
        let mut hx_new = self.hx.clone();
        axpy(b, &y_new, &mut x_new);
        axpy(b, &hy_new, &mut hx_new);

        let mut zres = hx_new.clone();
        axpy(-e_new, &x_new, &mut zres);
        scale(1.0 / k, &mut zres);

        let e_old = self.energy;
        self.x = x_new;
        self.hx = hx_new;
        self.y = y_new;
        self.hy = hy_new;
        self.zres = zres;
        self.energy = e_new;
        self.b = b;
        self.c = c;
        self.k = k;
        self.res_norm = norm(&self.zres);
        self.next_seed = Some(seed);

        let d_e = e_new - e_old;
        let x_norm = self.x_norm();
        rec.energy = e_new;
        rec.d_e = d_e;
        rec.res_norm = self.res_norm;
        rec.b = Some(b);
        rec.c = Some(c);
        rec.x_norm = Some(x_norm);
        rec.kinetic = Some(ctx.pre.kinetic(&self.y));

        let outcome = if d_e.abs() < cfg.eps0 && self.res_norm < cfg.r0 {
            rec.converged = true;
            StepOutcome::Converged(self.converged_pair())
        } else if let Some(reason) = check_restart_sbci1(self, cfg, d_e.abs(), self.res_norm) {
            rec.restart_reason = Some(reason);
            StepOutcome::Restart(reason)
        } else {
            StepOutcome::Continue
        };
        Ok((outcome, rec))
    }
}

/// The `t = 0` update over `{x, z}`.
pub fn sbci1_first_step(state: &mut Sbci1State, ctx: &StepContext<'_>) -> Result<(StepOutcome, TraceRecord)> {
    if state.t != 0 {
        return Err(Error::Contract(format!("first step called at t = {}", state.t)));
    }
    state.advance(ctx, false)
}

/// The general update over `{x, y, z}`.
pub fn sbci1_step(state: &mut Sbci1State, ctx: &StepContext<'_>) -> Result<(StepOutcome, TraceRecord)> {
    state.advance(ctx, true)
}

/// Restart test for a step that did not converge.  `state` holds the
/// post-step `x`, `b` and the pre-increment `t`.
pub fn check_restart_sbci1(state: &Sbci1State, cfg: &SolverConfig, d_e: f64, dz: f64) -> Option<RestartReason> {
    let x_norm = state.x_norm();
    if state.alpha > 0 && state.b.abs() < cfg.b_th && d_e < cfg.eps1 {
        Some(RestartReason::StallSmallB)
    } else if x_norm < cfg.x_th1 || x_norm > cfg.x_th2 {
        Some(RestartReason::NormOutOfRange)
    } else if dz > cfg.r1 && state.t > 0 {
        Some(RestartReason::ResidualBlowup)
    } else if state.t + 1 >= cfg.max_cycle {
        Some(RestartReason::MaxCycle)
    } else {
        None
    }
}

/// Result of solving one state.
#[derive(Clone, Debug)]
pub struct StateSolution {
    pub pair: ConvergedEigenpair,
    pub next_seed: Option<Seed>,
    pub iterations: usize,
    pub restarts: usize,
}

/// Shift handling: the ground state tracks its own Rayleigh quotient, any
/// later state keeps the shift it was given.
fn shift_for(alpha: usize, state: &Sbci1State, pre: &GroundShiftPreconditioner) -> GroundShiftPreconditioner {
    if alpha == 0 {
        pre.update_shift(state.energy)
    } else {
        pre.clone()
    }
}

/// Iterates one state to convergence, restarting as needed.
pub fn solve_state_sbci1(
    op: &SymmetricLinearOperator,
    pre: &GroundShiftPreconditioner,
    defl: &DeflationSet,
    x0: Vector,
    hx0: Option<Vector>,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceRecord>,
) -> Result<StateSolution> {
    cfg.validate()?;
    let alpha = defl.len();
    let stale = hx0.is_none() || !defl.is_empty();
    let hx0 = hx0.unwrap_or_else(|| vec![0.0; x0.len()]);
    let mut state = Sbci1State::start(alpha, x0, hx0, defl)?;
    if stale {
        state.refresh_image(op, defl)?;
    }
    run_state(op, pre, defl, &mut state, cfg, trace)
}

pub(crate) fn run_state(
    op: &SymmetricLinearOperator,
    pre: &GroundShiftPreconditioner,
    defl: &DeflationSet,
    state: &mut Sbci1State,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceRecord>,
) -> Result<StateSolution> {
    let alpha = state.alpha;
    for iteration in 0..cfg.t_max {
        let shifted = shift_for(alpha, state, pre);
        let ctx = StepContext {
            op,
            cfg,
            pre: &shifted,
            defl,
        };
        let (outcome, rec) = if state.t == 0 {
            sbci1_first_step(state, &ctx)?
        } else {
            sbci1_step(state, &ctx)?
        };
        trace.push(rec);
        match outcome {
            StepOutcome::Continue => state.t += 1,
            StepOutcome::Restart(_) => state.restart(&ctx)?,
            StepOutcome::Converged(pair) => {
                return Ok(StateSolution {
                    pair,
                    next_seed: state.next_seed.take(),
                    iterations: iteration + 1,
                    restarts: state.segment,
                })
            }
        }
    }
    Err(Error::NotConverged {
        state: alpha,
        iterations: cfg.t_max,
        energy: state.energy,
        residual: state.res_norm,
    })
}

/// Rotated unit-determinant guesses.
#[derive(Clone, Debug)]
pub struct InitialGuess {
    /// Determinant indices, ascending diagonal then ascending index.
    pub indices: Vec<usize>,
    pub vectors: Vec<Vector>,
    pub images: Vec<Vector>,
    pub energies: Vec<f64>,
}

impl InitialGuess {
    pub fn seed(&self, i: usize) -> Seed {
        Seed {
            vector: self.vectors[i].clone(),
            image: self.images[i].clone(),
            energy: self.energies[i],
        }
    }
}

/// Unit vectors at the `n` smallest diagonal entries, diagonalized in their span.
/// Costs exactly `n` operator applications.
pub fn init_guess_from_diagonal(op: &SymmetricLinearOperator, n: usize, lindep: f64) -> Result<InitialGuess> {
    let dim = op.dim();
    if n == 0 || n > dim {
        return Err(Error::InvalidArgument(format!("need 1 <= n <= {dim}, got {n}")));
    }
    let d = op.diagonal();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));

    // Distinct unit vectors are orthonormal; the filter only matters for
    // repeated indices and is kept for the stated contract.
    let mut basis: Vec<Vector> = Vec::with_capacity(n);
    let mut indices = Vec::with_capacity(n);
    for &i in &order {
        if basis.len() == n {
            break;
        }
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        for b in &basis {
            let o = dot_unchecked(b, &e);
            axpy(-o, b, &mut e);
        }
        if norm(&e) < lindep {
            continue;
        }
        basis.push(e);
        indices.push(i);
    }
    let m = basis.len();
    let images: Vec<Vector> = basis.iter().map(|e| op.apply(e)).collect::<Result<_>>()?;
    let g = DenseMatrix::from_fn(m, m, |i, j| dot_unchecked(&basis[i], &images[j])).symmetrized();
    let eig = symmetric_eig(&g)?;
    let brefs: Vec<&[f64]> = basis.iter().map(|v| v.as_slice()).collect();
    let irefs: Vec<&[f64]> = images.iter().map(|v| v.as_slice()).collect();
    let (vectors, images): (Vec<Vector>, Vec<Vector>) = (0..m)
        .map(|a| {
            let u = eig.vector(a);
            (lincomb(&u, &brefs), lincomb(&u, &irefs))
        })
        .unzip();
    Ok(InitialGuess {
        indices,
        vectors,
        images,
        energies: eig.eigenvalues,
    })
}

/// Relative norm below which a projected seed is considered degenerate.
pub(crate) const SEED_COLLAPSE: f64 = 1e-8;

/// Picks the first usable seed: the preferred one, then the initial guesses
/// from `start` onward, each projected against `defl`.
pub(crate) fn choose_seed(
    preferred: Option<Seed>,
    guess: &InitialGuess,
    start: usize,
    defl: &DeflationSet,
    extra: Option<(&[f64], &[f64])>,
) -> Option<Seed> {
    let m = guess.vectors.len();
    let candidates = preferred
        .into_iter()
        .chain((start..m).chain(0..start.min(m)).map(|i| guess.seed(i)));
    for mut s in candidates {
        let n0 = norm(&s.vector);
        defl.project_with_image(&mut s.vector, &mut s.image);
        if let Some((e, he)) = extra {
            let o = dot_unchecked(e, &s.vector) / dot_unchecked(e, e);
            axpy(-o, e, &mut s.vector);
            axpy(-o, he, &mut s.image);
        }
        if norm(&s.vector) > SEED_COLLAPSE * n0 {
            return Some(s);
        }
    }
    None
}

/// Between the carried Ritz seed and the rotated guess at `alpha`, keeps the
/// one with the lower Rayleigh quotient after deflation.  The second Ritz
/// vector of a nearly converged subspace is mostly noise and can sit far up
/// the spectrum.
fn lower_seed(carried: Option<Seed>, guess: &InitialGuess, alpha: usize, defl: &DeflationSet) -> Option<Seed> {
    let fallback = choose_seed(None, guess, alpha, defl, None);
    let carried = carried.and_then(|c| choose_seed(Some(c), guess, alpha, defl, None));
    let rq = |s: &Seed| dot_unchecked(&s.vector, &s.image) / dot_unchecked(&s.vector, &s.vector);
    match (carried, fallback) {
        (Some(c), Some(f)) => Some(if rq(&c) <= rq(&f) { c } else { f }),
        (c, f) => c.or(f),
    }
}

/// States `0..n` in order, each deflated against the ones before it.
pub fn solve_n_states_sbci1(op: &SymmetricLinearOperator, n: usize, cfg: &SolverConfig) -> Result<SolverRun> {
    cfg.validate()?;
    let count0 = op.apply_count();
    let guess = init_guess_from_diagonal(op, n, cfg.lindep)?;
    let init_matvecs = op.apply_count() - count0;
    let base = GroundShiftPreconditioner::new(op.diagonal(), guess.energies[0], cfg.clamp_delta)?;
    let mut defl = DeflationSet::new();
    let mut trace = Vec::new();
    let (mut iterations, mut restarts) = (0, 0);
    let mut carried: Option<Seed> = Some(guess.seed(0));
    let mut pre = base.clone();

    for alpha in 0..n {
        let seed = lower_seed(carried.take(), &guess, alpha, &defl)
            .ok_or(Error::RankDeficient { index: alpha, norm: 0.0 })?;
        let mut state = Sbci1State::start(alpha, seed.vector, seed.image, &defl)?;
        if !defl.is_empty() {
            state.refresh_image(op, &defl)?;
        }
        let sol = run_state(op, &pre, &defl, &mut state, cfg, &mut trace)?;
        iterations += sol.iterations;
        restarts += sol.restarts;
        if alpha == 0 {
            pre = base.update_shift(sol.pair.energy);
        }
        defl.push(sol.pair.vector, sol.pair.energy)?;
        carried = sol.next_seed;
    }
    Ok(SolverRun::new(
        Method::Sbci1,
        defl.into_states(),
        trace,
        iterations,
        restarts,
        op.apply_count() - count0,
        init_matvecs,
        7,
    ))
}
