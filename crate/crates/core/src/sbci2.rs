//! Pair-state solver.  Vectors are always ordered `(xA, xB, yA, yB, zA, zB)`
//! (`y`s absent in the first-step form) and `V′ = P·V` gives the two lowest
//! Ritz vectors as coefficients on that list.

use crate::config::SolverConfig;
use crate::diagnostics::trace::{Method, RestartReason, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{
    axpy, build_subspace_matrix, canonical_orthogonalize, dot_unchecked, norm, scale, small_symmetric_eig,
    SymmetricLinearOperator, Vector, CANONICAL_CUTOFF,
};
use crate::precond::{precondition_and_deflate, ConvergedEigenpair, DeflationSet, GroundShiftPreconditioner};
use crate::run::SolverRun;
use crate::sbci1::{
    choose_seed, init_guess_from_diagonal, run_state, solve_n_states_sbci1, Sbci1State, Seed, StepContext,
    StepOutcome, DENOM_TOL,
};

type Mat2 = [[f64; 2]; 2];

/// `A` has zero diagonal.  The `d` term of the coupled equations never
/// appears once eliminated and is not stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCoefficients {
    pub a: Mat2,
    pub b: Mat2,
    pub c: Mat2,
}

impl Default for PairCoefficients {
    fn default() -> Self {
        Self {
            a: [[0.0; 2]; 2],
            b: [[1.0, 0.0], [0.0, 1.0]],
            c: [[0.0; 2]; 2],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sbci2State {
    pub alpha: usize,
    pub t: usize,
    pub segment: usize,
    pub xa: Vector,
    pub xb: Vector,
    pub hxa: Vector,
    pub hxb: Vector,
    pub ya: Vector,
    pub yb: Vector,
    pub hya: Vector,
    pub hyb: Vector,
    pub zres_a: Vector,
    pub zres_b: Vector,
    pub ea: f64,
    pub eb: f64,
    pub coeffs: PairCoefficients,
    pub k0: f64,
    pub k1: f64,
    pub res_a: f64,
    pub res_b: f64,
    pending_overhead: u64,
}

fn normalize_with_image(x: &mut [f64], hx: &mut [f64]) -> f64 {
    let n = norm(x);
    scale(1.0 / n, x);
    scale(1.0 / n, hx);
    n
}

fn residual(x: &[f64], hx: &[f64]) -> (f64, Vector) {
    let e = dot_unchecked(x, hx) / dot_unchecked(x, x);
    let mut z = hx.to_vec();
    axpy(-e, x, &mut z);
    (e, z)
}

/// Projects both seeds against `defl`, orthogonalizes `b` against `a`, and
/// normalizes.  A collapsed `b` is reported as rank deficiency at `alpha + 1`.
pub fn init_pair(alpha: usize, a: Seed, b: Seed, defl: &DeflationSet, lindep: f64) -> Result<Sbci2State> {
    let (mut xa, mut hxa) = (a.vector, a.image);
    let (mut xb, mut hxb) = (b.vector, b.image);
    let n = xa.len();
    if [hxa.len(), xb.len(), hxb.len()].iter().any(|&l| l != n) {
        return Err(Error::Dimension { expected: n, got: xb.len() });
    }
    defl.project_with_image(&mut xa, &mut hxa);
    let na = norm(&xa);
    if !(na > 0.0) {
        return Err(Error::RankDeficient { index: alpha, norm: na });
    }
    normalize_with_image(&mut xa, &mut hxa);

    defl.project_with_image(&mut xb, &mut hxb);
    let nb0 = norm(&xb);
    let o = dot_unchecked(&xa, &xb);
    axpy(-o, &xa, &mut xb);
    axpy(-o, &hxa, &mut hxb);
    let nb = norm(&xb);
    if !(nb > lindep.max(1e-8) * nb0) {
        return Err(Error::RankDeficient { index: alpha + 1, norm: nb });
    }
    normalize_with_image(&mut xb, &mut hxb);

    let mut s = Sbci2State {
        alpha,
        t: 0,
        segment: 0,
        ya: vec![0.0; n],
        yb: vec![0.0; n],
        hya: vec![0.0; n],
        hyb: vec![0.0; n],
        xa,
        xb,
        hxa,
        hxb,
        zres_a: Vec::new(),
        zres_b: Vec::new(),
        ea: 0.0,
        eb: 0.0,
        coeffs: PairCoefficients::default(),
        k0: 1.0,
        k1: 1.0,
        res_a: 0.0,
        res_b: 0.0,
        pending_overhead: 0,
    };
    s.reset_residuals();
    Ok(s)
}

/// Coefficients of one accepted update plus the scale factors.
struct Extracted {
    coeffs: PairCoefficients,
    k0: f64,
    k1: f64,
}

fn relative_det_ok(m: &Mat2) -> bool {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let size = m.iter().flatten().map(|v| v * v).sum::<f64>();
    det.abs() >= DENOM_TOL * size.max(f64::MIN_POSITIVE)
}

/// First-step form: inputs `(xA, xB, zA, zB)`, `B = I`.
fn extract_first(v0: &[f64], v1: &[f64]) -> Option<Extracted> {
    if v0[0].abs() < DENOM_TOL || v1[1].abs() < DENOM_TOL {
        return None;
    }
    let (k0, k1) = (1.0 / v0[0], 1.0 / v1[1]);
    Some(Extracted {
        coeffs: PairCoefficients {
            a: [[0.0, k0 * v0[1]], [k1 * v1[0], 0.0]],
            b: [[1.0, 0.0], [0.0, 1.0]],
            c: [[-k0 * v0[2], -k0 * v0[3]], [-k1 * v1[2], -k1 * v1[3]]],
        },
        k0,
        k1,
    })
}

/// General form: inputs `(xA, xB, yA, yB, zA, zB)`.
fn extract_general(v0: &[f64], v1: &[f64]) -> Option<Extracted> {
    if v0[2].abs() < DENOM_TOL || v1[3].abs() < DENOM_TOL {
        return None;
    }
    let a01 = v0[1] / v0[2];
    let a10 = v1[0] / v1[3];
    let d0 = v0[0] - v0[3] * a10;
    let d1 = v1[1] - v1[2] * a01;
    if d0.abs() < DENOM_TOL || d1.abs() < DENOM_TOL {
        return None;
    }
    let (k0, k1) = (1.0 / d0, 1.0 / d1);
    let w: Mat2 = [[v0[2], v0[3]], [v1[2], v1[3]]];
    if !relative_det_ok(&w) {
        return None;
    }
    let det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
    let winv: Mat2 = [[w[1][1] / det, -w[0][1] / det], [-w[1][0] / det, w[0][0] / det]];
    let r: Mat2 = [[v0[4], v0[5]], [v1[4], v1[5]]];
    let mut c = [[0.0; 2]; 2];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, cij) in row.iter_mut().enumerate() {
            *cij = -(winv[i][0] * r[0][j] + winv[i][1] * r[1][j]);
        }
    }
    Some(Extracted {
        coeffs: PairCoefficients {
            a: [[0.0, a01], [a10, 0.0]],
            b: [[k0 * w[0][0], k0 * w[0][1]], [k1 * w[1][0], k1 * w[1][1]]],
            c,
        },
        k0,
        k1,
    })
}

impl Sbci2State {
    fn reset_residuals(&mut self) {
        let (ea, za) = residual(&self.xa, &self.hxa);
        let (eb, zb) = residual(&self.xb, &self.hxb);
        self.ea = ea;
        self.eb = eb;
        self.res_a = norm(&za);
        self.res_b = norm(&zb);
        self.zres_a = za;
        self.zres_b = zb;
    }

    pub fn x_norms(&self) -> (f64, f64) {
        (norm(&self.xa), norm(&self.xb))
    }

    /// Normalizes both states, drops the momenta and returns to the
    /// first-step form.  Images are recomputed every `refresh_every` restarts.
    /// Re-projects both states, re-orthogonalizes `xB` against `xA`, and
    /// recomputes both images (two overhead matvecs).
    pub fn refresh_images(&mut self, op: &SymmetricLinearOperator, defl: &DeflationSet) -> Result<()> {
        defl.project(&mut self.xa);
        scale(1.0 / norm(&self.xa), &mut self.xa);
        defl.project(&mut self.xb);
        let o = dot_unchecked(&self.xa, &self.xb);
        axpy(-o, &self.xa.clone(), &mut self.xb);
        scale(1.0 / norm(&self.xb), &mut self.xb);
        self.hxa = op.apply(&self.xa)?;
        self.hxb = op.apply(&self.xb)?;
        self.pending_overhead += 2;
        self.reset_residuals();
        Ok(())
    }

    pub fn restart(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        normalize_with_image(&mut self.xa, &mut self.hxa);
        normalize_with_image(&mut self.xb, &mut self.hxb);
        self.segment += 1;
        if ctx.cfg.refresh_every > 0 && self.segment.is_multiple_of(ctx.cfg.refresh_every) {
            self.refresh_images(ctx.op, ctx.defl)?;
        }
        for v in [&mut self.ya, &mut self.yb, &mut self.hya, &mut self.hyb] {
            v.iter_mut().for_each(|e| *e = 0.0);
        }
        self.t = 0;
        self.coeffs = PairCoefficients::default();
        self.reset_residuals();
        Ok(())
    }

    fn converged_pair(&self) -> ConvergedEigenpair {
        let mut v = self.xa.clone();
        scale(1.0 / norm(&v), &mut v);
        ConvergedEigenpair {
            energy: self.ea,
            vector: v,
        }
    }

    /// Normalized upper state, used to seed the next pair.
    pub fn carry(&self) -> Seed {
        let (mut v, mut h) = (self.xb.clone(), self.hxb.clone());
        normalize_with_image(&mut v, &mut h);
        Seed {
            vector: v,
            image: h,
            energy: self.eb,
        }
    }

    fn fill_record(&self, rec: &mut TraceRecord, pre: &GroundShiftPreconditioner) {
        let (na, nb) = self.x_norms();
        let p = &self.coeffs;
        rec.pair_partner = Some(self.alpha + 1);
        rec.energy = self.ea;
        rec.res_norm = self.res_a;
        rec.x_norm = Some(na);
        rec.energy_partner = Some(self.eb);
        rec.res_norm_partner = Some(self.res_b);
        rec.x_norm_partner = Some(nb);
        rec.b = Some(p.b[0][0]);
        rec.b01 = Some(p.b[0][1]);
        rec.b10 = Some(p.b[1][0]);
        rec.b11 = Some(p.b[1][1]);
        rec.c = Some(p.c[0][0]);
        rec.c01 = Some(p.c[0][1]);
        rec.c10 = Some(p.c[1][0]);
        rec.c11 = Some(p.c[1][1]);
        rec.a01 = Some(p.a[0][1]);
        rec.a10 = Some(p.a[1][0]);
        rec.kinetic = Some(pre.kinetic(&self.ya));
    }

    fn stalled(&mut self, mut rec: TraceRecord, restart: bool, cfg: &SolverConfig) -> (StepOutcome, TraceRecord) {
        rec.pair_partner = Some(self.alpha + 1);
        rec.energy = self.ea;
        rec.res_norm = self.res_a;
        rec.energy_partner = Some(self.eb);
        rec.res_norm_partner = Some(self.res_b);
        let (na, nb) = self.x_norms();
        rec.x_norm = Some(na);
        rec.x_norm_partner = Some(nb);
        if !restart && self.res_a < cfg.r0 {
            rec.converged = true;
            return (StepOutcome::Converged(self.converged_pair()), rec);
        }
        rec.restart_reason = Some(RestartReason::StallSmallB);
        (StepOutcome::Restart(RestartReason::StallSmallB), rec)
    }

    fn advance(&mut self, ctx: &StepContext<'_>, general: bool) -> Result<(StepOutcome, TraceRecord)> {
        let cfg = ctx.cfg;
        let mut rec = TraceRecord::new(Method::Sbci2, self.alpha, self.segment, self.t);
        rec.matvecs_overhead = std::mem::take(&mut self.pending_overhead);
        let za = precondition_and_deflate(&self.zres_a, ctx.pre, ctx.defl);
        if !(norm(&za) > cfg.lindep * norm(&self.xa)) {
            rec.matvecs_cumulative = ctx.op.apply_count();
            return Ok(self.stalled(rec, false, cfg));
        }
        let zb = precondition_and_deflate(&self.zres_b, ctx.pre, ctx.defl);
        let hza = ctx.op.apply(&za)?;
        let hzb = ctx.op.apply(&zb)?;
        rec.matvecs_cumulative = ctx.op.apply_count();

        let general = general && norm(&self.ya) > 0.0 && norm(&self.yb) > 0.0;
        let (vectors, images): (Vec<&[f64]>, Vec<&[f64]>) = if general {
            (
                vec![&self.xa, &self.xb, &self.ya, &self.yb, &za, &zb],
                vec![&self.hxa, &self.hxb, &self.hya, &self.hyb, &hza, &hzb],
            )
        } else {
            (vec![&self.xa, &self.xb, &za, &zb], vec![&self.hxa, &self.hxb, &hza, &hzb])
        };
        let transform = match canonical_orthogonalize(&vectors, CANONICAL_CUTOFF) {
            Ok(t) if t.rank() >= 2 => t,
            Ok(_) | Err(Error::EmptyBasis) => return Ok(self.stalled(rec, true, cfg)),
            Err(e) => return Err(e),
        };
        let v = build_subspace_matrix(&vectors, &images, &transform)?;
        let eig = small_symmetric_eig(&v)?;
        let w0 = transform.to_inputs(&eig.vector(0));
        let w1 = transform.to_inputs(&eig.vector(1));
        let ex = if general {
            extract_general(&w0, &w1)
        } else {
            extract_first(&w0, &w1)
        };
        let Some(Extracted { coeffs, k0, k1 }) = ex.filter(|e| {
            e.coeffs.a.iter().chain(&e.coeffs.b).chain(&e.coeffs.c).flatten().all(|v| v.is_finite())
        }) else {
            return Ok(self.stalled(rec, true, cfg));
        };
        let (a, b, c) = (coeffs.a, coeffs.b, coeffs.c);

        // yA' = yA − C00 zA − C01 zB + a01 xB,  yB' = yB − C10 zA − C11 zB + a10 xA
        let recombine_y = |y: &[f64], zs: (&[f64], &[f64]), x_other: &[f64], row: usize, a_coef: f64| {
            let mut out = if general { y.to_vec() } else { vec![0.0; y.len()] };
            axpy(-c[row][0], zs.0, &mut out);
            axpy(-c[row][1], zs.1, &mut out);
            axpy(a_coef, x_other, &mut out);
            out
        };
        let ya = recombine_y(&self.ya, (&za, &zb), &self.xb, 0, a[0][1]);
        let yb = recombine_y(&self.yb, (&za, &zb), &self.xa, 1, a[1][0]);
        let hya = recombine_y(&self.hya, (&hza, &hzb), &self.hxb, 0, a[0][1]);
        let hyb = recombine_y(&self.hyb, (&hza, &hzb), &self.hxa, 1, a[1][0]);

        // xA' = xA + B00 yA' + B01 yB',  xB' = xB + B10 yA' + B11 yB'
        let recombine_x = |x: &[f64], y0: &[f64], y1: &[f64], row: usize| {
            let mut out = x.to_vec();
            axpy(b[row][0], y0, &mut out);
            axpy(b[row][1], y1, &mut out);
            out
        };
        let xa = recombine_x(&self.xa, &ya, &yb, 0);
        let xb = recombine_x(&self.xb, &ya, &yb, 1);
        let hxa = recombine_x(&self.hxa, &hya, &hyb, 0);
        let hxb = recombine_x(&self.hxb, &hya, &hyb, 1);

        let (ea, eb) = (eig.eigenvalues[0], eig.eigenvalues[1]);
        let mut zres_a = hxa.clone();
        axpy(-ea, &xa, &mut zres_a);
        scale(1.0 / k0, &mut zres_a);
        let mut zres_b = hxb.clone();
        axpy(-eb, &xb, &mut zres_b);
        scale(1.0 / k1, &mut zres_b);

        let d_e = ea - self.ea;
        self.xa = xa;
        self.xb = xb;
        self.hxa = hxa;
        self.hxb = hxb;
        self.ya = ya;
        self.yb = yb;
        self.hya = hya;
        self.hyb = hyb;
        self.res_a = norm(&zres_a);
        self.res_b = norm(&zres_b);
        self.zres_a = zres_a;
        self.zres_b = zres_b;
        self.ea = ea;
        self.eb = eb;
        self.coeffs = coeffs;
        self.k0 = k0;
        self.k1 = k1;

        self.fill_record(&mut rec, ctx.pre);
        rec.d_e = d_e;
        let outcome = if d_e.abs() < cfg.eps0 && self.res_a < cfg.r0 {
            rec.converged = true;
            StepOutcome::Converged(self.converged_pair())
        } else if let Some(reason) = check_restart_sbci2(self, cfg, d_e.abs(), self.res_a) {
            rec.restart_reason = Some(reason);
            StepOutcome::Restart(reason)
        } else {
            StepOutcome::Continue
        };
        Ok((outcome, rec))
    }
}

/// The `t = 0` update over `{xA, xB, zA, zB}`.
pub fn sbci2_first_step(state: &mut Sbci2State, ctx: &StepContext<'_>) -> Result<(StepOutcome, TraceRecord)> {
    if state.t != 0 {
        return Err(Error::Contract(format!("first step called at t = {}", state.t)));
    }
    state.advance(ctx, false)
}

/// The general update over all six vectors.
pub fn sbci2_step(state: &mut Sbci2State, ctx: &StepContext<'_>) -> Result<(StepOutcome, TraceRecord)> {
    if state.t == 0 {
        return Err(Error::Contract("general step called at t = 0".into()));
    }
    state.advance(ctx, true)
}

/// Unlike the single-state rule, the stall test applies to the ground pair too.
pub fn check_restart_sbci2(state: &Sbci2State, cfg: &SolverConfig, d_e: f64, dz: f64) -> Option<RestartReason> {
    let b = &state.coeffs.b;
    let (na, nb) = state.x_norms();
    let out = |n: f64| n < cfg.x_th1 || n > cfg.x_th2;
    if (b[0][0].abs() < cfg.b_th || b[1][1].abs() < cfg.b_th) && d_e < cfg.eps1 {
        Some(RestartReason::StallSmallB)
    } else if out(na) || out(nb) {
        Some(RestartReason::NormOutOfRange)
    } else if dz > cfg.r1 && state.t > 0 {
        Some(RestartReason::ResidualBlowup)
    } else if state.t + 1 >= cfg.max_cycle {
        Some(RestartReason::MaxCycle)
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct PairSolution {
    pub pair: ConvergedEigenpair,
    pub carry: Seed,
    pub iterations: usize,
    pub restarts: usize,
}

/// Iterates a pair until the lower state converges.
pub fn solve_pair(
    op: &SymmetricLinearOperator,
    pre: &GroundShiftPreconditioner,
    defl: &DeflationSet,
    state: &mut Sbci2State,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceRecord>,
) -> Result<PairSolution> {
    let alpha = state.alpha;
    for iteration in 0..cfg.t_max {
        let shifted = if alpha == 0 { pre.update_shift(state.ea) } else { pre.clone() };
        let ctx = StepContext {
            op,
            cfg,
            pre: &shifted,
            defl,
        };
        let (outcome, rec) = if state.t == 0 {
            sbci2_first_step(state, &ctx)?
        } else {
            sbci2_step(state, &ctx)?
        };
        trace.push(rec);
        match outcome {
            StepOutcome::Continue => state.t += 1,
            StepOutcome::Restart(_) => state.restart(&ctx)?,
            StepOutcome::Converged(pair) => {
                return Ok(PairSolution {
                    pair,
                    carry: state.carry(),
                    iterations: iteration + 1,
                    restarts: state.segment,
                })
            }
        }
    }
    Err(Error::NotConverged {
        state: alpha,
        iterations: cfg.t_max,
        energy: state.ea,
        residual: state.res_a,
    })
}

/// Pairs `(0,1), (1,2), …, (n−2, n−1)`; the upper member of each pair seeds
/// the lower member of the next, and the last state is finished by the
/// single-state solver.
pub fn solve_n_states_sbci2(op: &SymmetricLinearOperator, n: usize, cfg: &SolverConfig) -> Result<SolverRun> {
    cfg.validate()?;
    if n == 1 {
        return solve_n_states_sbci1(op, 1, cfg);
    }
    let count0 = op.apply_count();
    let guess = init_guess_from_diagonal(op, n, cfg.lindep)?;
    let init_matvecs = op.apply_count() - count0;
    let base = GroundShiftPreconditioner::new(op.diagonal(), guess.energies[0], cfg.clamp_delta)?;
    let mut pre = base.clone();
    let mut defl = DeflationSet::new();
    let mut trace = Vec::new();
    let (mut iterations, mut restarts) = (0, 0);
    let mut carried = Some(guess.seed(0));

    for alpha in 0..n - 1 {
        let lower = choose_seed(carried.take(), &guess, alpha, &defl, None)
            .ok_or(Error::RankDeficient { index: alpha, norm: 0.0 })?;
        let upper = choose_seed(None, &guess, alpha + 1, &defl, Some((&lower.vector, &lower.image)))
            .ok_or(Error::RankDeficient { index: alpha + 1, norm: 0.0 })?;
        let mut state = init_pair(alpha, lower, upper, &defl, cfg.lindep)?;
        if !defl.is_empty() {
            state.refresh_images(op, &defl)?;
        }
        let sol = solve_pair(op, &pre, &defl, &mut state, cfg, &mut trace)?;
        iterations += sol.iterations;
        restarts += sol.restarts;
        if alpha == 0 {
            pre = base.update_shift(sol.pair.energy);
        }
        defl.push(sol.pair.vector, sol.pair.energy)?;
        carried = Some(sol.carry);
    }

    let last = n - 1;
    let seed = choose_seed(carried, &guess, last, &defl, None)
        .ok_or(Error::RankDeficient { index: last, norm: 0.0 })?;
    let mut state = Sbci1State::start(last, seed.vector, seed.image, &defl)?;
    state.refresh_image(op, &defl)?;
    let sol = run_state(op, &pre, &defl, &mut state, cfg, &mut trace)?;
    iterations += sol.iterations;
    restarts += sol.restarts;
    defl.push(sol.pair.vector, sol.pair.energy)?;

    Ok(SolverRun::new(
        Method::Sbci2,
        defl.into_states(),
        trace,
        iterations,
        restarts,
        op.apply_count() - count0,
        init_matvecs,
        14,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn seed(op: &SymmetricLinearOperator, v: Vec<f64>) -> Seed {
        let image = op.apply(&v).unwrap();
        let energy = dot_unchecked(&v, &image) / dot_unchecked(&v, &v);
        Seed { vector: v, image, energy }
    }

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn four_by_four() -> SymmetricLinearOperator {
        SymmetricLinearOperator::from_dense(four_by_four_dense()).unwrap()
    }

    fn four_by_four_dense() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            vec![-1.0, 0.2, 0.05, 0.1],
            vec![0.2, -0.5, 0.1, -0.05],
            vec![0.05, 0.1, 0.7, 0.15],
            vec![0.1, -0.05, 0.15, 1.3],
        ])
    }

    fn pair_state(op: &SymmetricLinearOperator, alpha: usize) -> Sbci2State {
        let n = op.dim();
        init_pair(alpha, seed(op, unit(n, 0)), seed(op, unit(n, 1)), &DeflationSet::new(), 1e-14).unwrap()
    }

    fn max_image_error(op: &SymmetricLinearOperator, x: &[f64], hx: &[f64]) -> f64 {
        let exact = op.apply(x).unwrap();
        exact.iter().zip(hx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn restart_conditions_and_reasons() {
        let op = four_by_four();
        let cfg = SolverConfig::sbci2();
        let mut s = pair_state(&op, 0);
        s.t = 3;
        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-3, 1e-3), None);

        scale(0.05, &mut s.xb);
        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-3, 1e-3), Some(RestartReason::NormOutOfRange));
        scale(26.0, &mut s.xb);
        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-3, 1e-3), Some(RestartReason::NormOutOfRange));
        scale(1.0 / 1.3, &mut s.xb);

        // Pair stall also applies to the ground pair.
        s.coeffs.b[1][1] = 1e-3;
        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-9, 1e-3), Some(RestartReason::StallSmallB));
        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-5, 1e-3), None);
        s.coeffs = PairCoefficients::default();

        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-3, 2.0), Some(RestartReason::ResidualBlowup));
        s.t = 0;
        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-3, 2.0), None);
        s.t = cfg.max_cycle - 1;
        assert_eq!(check_restart_sbci2(&s, &cfg, 1e-3, 1e-3), Some(RestartReason::MaxCycle));
    }

    #[test]
    fn default_coefficients_are_identity_momentum() {
        let p = PairCoefficients::default();
        assert_eq!(p.b, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(p.a, [[0.0; 2]; 2]);
    }

    #[test]
    fn diagonal_pair_converges_at_first_step() {
        let op = SymmetricLinearOperator::from_dense(DenseMatrix::diag(&[1.0, 2.0, 3.0])).unwrap();
        let mut s = pair_state(&op, 0);
        let pre = GroundShiftPreconditioner::new(op.diagonal(), 1.0, 1e-10).unwrap();
        let mut trace = Vec::new();
        let sol = solve_pair(&op, &pre, &DeflationSet::new(), &mut s, &SolverConfig::sbci2(), &mut trace).unwrap();
        assert_eq!(sol.pair.energy, 1.0);
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.carry.energy, 2.0);
    }

    #[test]
    fn first_step_spans_four_dimensions() {
        let op = four_by_four();
        let exact = crate::linalg::symmetric_eig(&four_by_four_dense()).unwrap().eigenvalues;
        let mut s = pair_state(&op, 0);
        let pre = GroundShiftPreconditioner::new(op.diagonal(), -2.0, 1e-10).unwrap();
        let cfg = SolverConfig::sbci2();
        let defl = DeflationSet::new();
        let ctx = StepContext { op: &op, cfg: &cfg, pre: &pre, defl: &defl };
        sbci2_first_step(&mut s, &ctx).unwrap();
        assert!((s.ea - exact[0]).abs() < 1e-12, "{} vs {}", s.ea, exact[0]);
        assert!((s.eb - exact[1]).abs() < 1e-12, "{} vs {}", s.eb, exact[1]);
        assert_eq!(s.coeffs.b, [[1.0, 0.0], [0.0, 1.0]]);
        s.t = 1;
        assert!(matches!(sbci2_first_step(&mut s, &ctx), Err(Error::Contract(_))));
    }

    #[test]
    fn images_track_positions() {
        let n = 12;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i, j) {
                        _ if i == j => i as f64 * 0.4 - 1.0,
                        _ => 0.03 * (((i * 7 + j * 7) % 5) as f64 - 2.0),
                    })
                    .collect()
            })
            .collect();
        let op = SymmetricLinearOperator::from_dense(DenseMatrix::from_rows(&rows)).unwrap();
        let mut s = pair_state(&op, 0);
        let pre = GroundShiftPreconditioner::new(op.diagonal(), s.ea, 1e-10).unwrap();
        let cfg = SolverConfig::sbci2();
        let defl = DeflationSet::new();
        let ctx = StepContext { op: &op, cfg: &cfg, pre: &pre, defl: &defl };
        let mut last = s.ea;
        for _ in 0..4 {
            let before = op.apply_count();
            let (outcome, rec) = match s.t {
                0 => sbci2_first_step(&mut s, &ctx).unwrap(),
                _ => sbci2_step(&mut s, &ctx).unwrap(),
            };
            assert_eq!(op.apply_count() - before, 2);
            assert!(rec.energy <= last + 1e-12);
            last = rec.energy;
            assert!(max_image_error(&op, &s.xa, &s.hxa) < 1e-12);
            assert!(max_image_error(&op, &s.xb, &s.hxb) < 1e-12);
            match outcome {
                StepOutcome::Continue => s.t += 1,
                _ => break,
            }
        }
    }

    #[test]
    fn single_state_routes_to_sbci1() {
        let op = four_by_four();
        let a = solve_n_states_sbci2(&op, 1, &SolverConfig::sbci2()).unwrap();
        let op = four_by_four();
        let b = solve_n_states_sbci1(&op, 1, &SolverConfig::sbci2()).unwrap();
        assert_eq!(a.energies(), b.energies());
        assert_eq!(a.method, Method::Sbci1);
    }

    #[test]
    fn collapsed_upper_seed_is_rank_deficient() {
        let op = four_by_four();
        let a = seed(&op, unit(4, 0));
        let b = seed(&op, unit(4, 0));
        assert!(matches!(
            init_pair(0, a, b, &DeflationSet::new(), 1e-14),
            Err(Error::RankDeficient { index: 1, .. })
        ));
    }
}
