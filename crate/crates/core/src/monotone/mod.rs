//! The monotone reweighted iteration with ε-continuation.
//!
//! For fixed ε each step freezes the weights `w = 2Ψ_ε′((Λx)²)` at the current
//! iterate and solves `[2q AᵀA + Λᵀ diag(w) Λ] x = 2q Aᵀb`. The smoothed
//! objective `J_ε` cannot increase along these steps; both the plain descent
//! and the quantified form
//! `J_ε(x⁺) + q|A(x⁺−x)|² + Σ Ψ_ε′(yᵢ²)|y⁺ᵢ−yᵢ|² ≤ J_ε(x)`
//! are checked on every accepted step and reported as errors when violated.

mod asymptotics;
mod system;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use asymptotics::{
    asymptotic_lambda_sweep, asymptotic_tau_sweep, projected_data, LambdaSweepRow, TauSweep, TauSweepRow,
};
pub use system::{NormalSystem, Strategy, LOW_RANK_MAX};

use crate::error::{Error, Result};
use crate::penalty::SmoothedPenalty;
use crate::problem::CompositeProblem;
use crate::sparse::{norm_inf, EnvelopeCholesky, LinearSolveOptions};

/// Relative slack allowed on `J_ε(x⁺) ≤ J_ε(x)`.
pub const DESCENT_RTOL: f64 = 1e-12;
/// Additive slack allowed on the quantified descent inequality.
pub const DESCENT_INEQ_ATOL: f64 = 1e-10;
/// Steps smaller than this (relative, ℓ∞) count as a repeated iterate.
pub const STAGNATION_RTOL: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub eps_start: f64,
    pub eps_floor: f64,
    /// Each stage uses `ε ← factor·ε`.
    pub factor: f64,
    /// ℓ∞ bound on the optimality residual that ends a stage.
    pub tolerance: f64,
    pub max_inner: usize,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self {
            eps_start: 1e-1,
            eps_floor: 1e-12,
            factor: 0.1,
            tolerance: 1e-8,
            max_inner: 5000,
        }
    }
}

impl ContinuationSchedule {
    /// A single stage at fixed `eps`.
    pub fn fixed(eps: f64, tolerance: f64) -> Self {
        Self {
            eps_start: eps,
            eps_floor: eps,
            tolerance,
            ..Self::default()
        }
    }

    pub fn with_range(mut self, start: f64, floor: f64) -> Self {
        self.eps_start = start;
        self.eps_floor = floor;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.eps_floor > 0.0
            && self.eps_start >= self.eps_floor
            && self.eps_start.is_finite()
            && self.factor > 0.0
            && self.factor < 1.0
            && self.tolerance > 0.0
            && self.max_inner > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid continuation schedule {self:?}"
            )))
        }
    }

    /// The ε values of every stage, largest first.
    pub fn epsilons(&self) -> Vec<f64> {
        let mut out = vec![self.eps_start];
        let mut k = 1;
        while *out.last().unwrap() > self.eps_floor * (1.0 + 1e-9) {
            let e = (self.eps_start * self.factor.powi(k)).max(self.eps_floor);
            out.push(e);
            k += 1;
        }
        out
    }
}

/// Why a stage ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStop {
    /// Residual at or below the tolerance.
    Converged,
    /// The next iterate repeated the current one to machine precision.
    Stagnated,
    /// The next iterate raised `J_ε` by no more than rounding in evaluating
    /// it can account for; the step was discarded.
    RoundingFloor,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: usize,
    pub epsilon: f64,
    /// Step index within the stage; 0 is the stage's starting point.
    pub iteration: usize,
    pub j_eps: f64,
    pub j: f64,
    pub residual: f64,
    /// Left and right sides of the quantified descent inequality for the
    /// step that produced this iterate.
    pub descent_lhs: Option<f64>,
    pub descent_rhs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub epsilon: f64,
    pub iterations: usize,
    pub stop: StageStop,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub x: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    /// Seconds since the solve started, one per trace entry.
    pub elapsed: Vec<f64>,
    pub stages: Vec<StageSummary>,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

impl SolveReport {
    pub fn epsilons(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.epsilon).collect()
    }

    pub fn j_eps_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.j_eps).collect()
    }

    pub fn residual_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.residual).collect()
    }

    pub fn final_j(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |t| t.j)
    }

    /// First trace entry whose unregularized `J` is at most `target`, as
    /// (steps taken so far, seconds elapsed).
    pub fn first_reaching(&self, target: f64) -> Option<(usize, f64)> {
        let mut steps = 0;
        for (t, &e) in self.trace.iter().zip(&self.elapsed) {
            if t.iteration > 0 {
                steps += 1;
            }
            if t.j <= target {
                return Some((steps, e));
            }
        }
        None
    }

    /// Entries of one stage, in order.
    pub fn stage_trace(&self, stage: usize) -> impl Iterator<Item = &TraceEntry> {
        self.trace.iter().filter(move |t| t.stage == stage)
    }
}

/// How to pick the starting point.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// Minimizer of `|Ax − b|²` (regularized minimally when `A` is rank
    /// deficient).
    LeastSquares,
    Zero,
    Given(Vec<f64>),
}

/// `q|Ax − b|² + Σ φ((Λx)ᵢ)`.
pub fn j_value(p: &CompositeProblem, x: &[f64]) -> f64 {
    let ev = Eval::new(p, x);
    p.qscale() * ev.fit_sq() + ev.y.iter().map(|&y| p.penalty().phi(y)).sum::<f64>()
}

/// `q|Ax − b|² + Σ Ψ_ε((Λx)ᵢ²)`.
pub fn j_eps_value(p: &CompositeProblem, eps: f64, x: &[f64]) -> Result<f64> {
    let sp = p.penalty().smoothed(eps)?;
    Ok(Eval::new(p, x).j_eps(p, &sp))
}

/// Gradient of `J_ε`: `2q Aᵀ(Ax − b) + Λᵀ(w ⊙ Λx)`.
pub fn optimality_residual(p: &CompositeProblem, eps: f64, x: &[f64]) -> Result<Vec<f64>> {
    let sp = p.penalty().smoothed(eps)?;
    let ev = Eval::new(p, x);
    let w = weights(&sp, &ev.y);
    Ok(ev.residual(p, &w))
}

pub fn weights(sp: &SmoothedPenalty, y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| sp.weight(v)).collect()
}

struct Eval {
    r: Vec<f64>,
    y: Vec<f64>,
}

impl Eval {
    fn new(p: &CompositeProblem, x: &[f64]) -> Self {
        assert_eq!(x.len(), p.n(), "iterate has the wrong length");
        let mut r = p.a().mul_vec(x);
        r.iter_mut().zip(p.b()).for_each(|(r, b)| *r -= b);
        Self {
            r,
            y: p.lambda_op().mul_vec(x),
        }
    }

    fn fit_sq(&self) -> f64 {
        self.r.iter().map(|v| v * v).sum()
    }

    fn j(&self, p: &CompositeProblem) -> f64 {
        p.qscale() * self.fit_sq() + self.y.iter().map(|&y| p.penalty().phi(y)).sum::<f64>()
    }

    fn j_eps(&self, p: &CompositeProblem, sp: &SmoothedPenalty) -> f64 {
        p.qscale() * self.fit_sq() + self.y.iter().map(|&y| sp.psi(y * y)).sum::<f64>()
    }

    /// Bound on how far rounding in `Ax − b` and `Λx` can move `J_ε(x)`.
    /// Concavity of `ψ` caps the change from a perturbation `δ` of `y` at
    /// `w(y)(|y|δ + δ²/2)`.
    fn j_eps_rounding(&self, p: &CompositeProblem, x: &[f64], w: &[f64]) -> f64 {
        let u = f64::EPSILON;
        let abs_x: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let widest =
            |m: &crate::sparse::SparseMatrix| (0..m.rows()).map(|i| m.row(i).0.len()).max().unwrap_or(0) as f64;
        let ca = (widest(p.a()) + 2.0) * u;
        let cl = (widest(p.lambda_op()) + 2.0) * u;
        let ar = p.a().mul_abs_vec(&abs_x);
        let fit: f64 = self
            .r
            .iter()
            .zip(&ar)
            .zip(p.b())
            .map(|((r, a), b)| {
                let d = ca * (a + b.abs());
                2.0 * r.abs() * d + d * d
            })
            .sum();
        let lr = p.lambda_op().mul_abs_vec(&abs_x);
        let pen: f64 = self
            .y
            .iter()
            .zip(&lr)
            .zip(w)
            .map(|((y, l), w)| {
                let d = cl * l;
                w * (y.abs() * d + 0.5 * d * d)
            })
            .sum();
        let terms = (p.m() + p.r()) as f64;
        p.qscale() * fit + pen + terms * u * self.j_eps_upper(p, w)
    }

    /// Crude magnitude of `J_ε` for the summation term of the bound.
    fn j_eps_upper(&self, p: &CompositeProblem, w: &[f64]) -> f64 {
        p.qscale() * self.fit_sq() + self.y.iter().zip(w).map(|(y, w)| w * y * y).sum::<f64>()
    }

    fn residual(&self, p: &CompositeProblem, w: &[f64]) -> Vec<f64> {
        let mut g = p.a_t().mul_vec(&self.r);
        let wy: Vec<f64> = self.y.iter().zip(w).map(|(y, w)| y * w).collect();
        let lw = p.lambda_t().mul_vec(&wy);
        let two_q = 2.0 * p.qscale();
        g.iter_mut().zip(&lw).for_each(|(g, l)| *g = two_q * *g + l);
        g
    }
}

/// Minimizer of `|Ax − b|²`. Rank-deficient `A` falls back to the ridge
/// solution with a shift of `1e-10·max diag(AᵀA)`, computed on the smaller
/// of the two Gram matrices.
pub fn least_squares_start(p: &CompositeProblem) -> Result<Vec<f64>> {
    let (a, at) = (p.a(), p.a_t());
    if p.m() < p.n() {
        let aat = a.matmul(at)?;
        let shift = 1e-10 * aat.diag().iter().fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
        let fac = EnvelopeCholesky::factor(&aat, 0.0).or_else(|_| EnvelopeCholesky::factor(&aat, shift))?;
        return Ok(at.mul_vec(&fac.solve(p.b())));
    }
    let ata = at.matmul(a)?;
    let rhs = at.mul_vec(p.b());
    let fac = match EnvelopeCholesky::factor(&ata, 0.0) {
        Ok(f) => f,
        Err(_) => {
            let shift = 1e-10 * ata.diag().iter().fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
            EnvelopeCholesky::factor(&ata, shift)?
        }
    };
    Ok(fac.solve(&rhs))
}

/// Monotone solver bound to cached normal-equation factorizations.
pub struct MonotoneSolver {
    system: NormalSystem,
}

impl MonotoneSolver {
    pub fn new(p: &CompositeProblem, opts: &LinearSolveOptions) -> Result<Self> {
        Ok(Self {
            system: NormalSystem::new(p, opts)?,
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.system.strategy()
    }

    pub fn system(&self) -> &NormalSystem {
        &self.system
    }

    pub fn start(&self, p: &CompositeProblem, guess: &InitialGuess) -> Result<Vec<f64>> {
        match guess {
            InitialGuess::LeastSquares => least_squares_start(p),
            InitialGuess::Zero => Ok(vec![0.0; p.n()]),
            InitialGuess::Given(x) if x.len() == p.n() => Ok(x.clone()),
            InitialGuess::Given(x) => Err(Error::InvalidParameter(format!(
                "initial guess has length {} but the problem has {} unknowns",
                x.len(),
                p.n()
            ))),
        }
    }

    /// Run every stage of `sched`, warm-starting each from the last.
    pub fn solve(&self, p: &CompositeProblem, x0: &[f64], sched: &ContinuationSchedule) -> Result<SolveReport> {
        sched.validate()?;
        self.run(p, x0, sched, &sched.epsilons())
    }

    /// One stage at fixed `eps`.
    pub fn solve_fixed(
        &self,
        p: &CompositeProblem,
        eps: f64,
        x0: &[f64],
        sched: &ContinuationSchedule,
    ) -> Result<SolveReport> {
        sched.validate()?;
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
        }
        self.run(p, x0, sched, &[eps])
    }

    fn run(
        &self,
        p: &CompositeProblem,
        x0: &[f64],
        sched: &ContinuationSchedule,
        epsilons: &[f64],
    ) -> Result<SolveReport> {
        if x0.len() != p.n() || self.system.dim() != p.n() {
            return Err(Error::InvalidParameter(format!(
                "initial guess has length {} but the problem has {} unknowns",
                x0.len(),
                p.n()
            )));
        }
        let clock = Instant::now();
        let rhs: Vec<f64> = p.a_t().mul_vec(p.b()).iter().map(|v| 2.0 * p.qscale() * v).collect();
        let mut x = x0.to_vec();
        let mut report = SolveReport {
            solver: "monotone".into(),
            x: Vec::new(),
            trace: Vec::new(),
            elapsed: Vec::new(),
            stages: Vec::new(),
            iterations: 0,
            final_residual: f64::NAN,
            converged: false,
            wall_time: 0.0,
        };
        for (stage, &eps) in epsilons.iter().enumerate() {
            let sp = p.penalty().smoothed(eps)?;
            let summary = self.stage(p, &sp, stage, &rhs, &mut x, sched, &mut report, &clock)?;
            report.iterations += summary.iterations;
            report.final_residual = summary.residual;
            report.converged = summary.stop != StageStop::MaxIterations;
            report.stages.push(summary);
        }
        report.x = x;
        report.wall_time = clock.elapsed().as_secs_f64();
        Ok(report)
    }

    #[allow(clippy::too_many_arguments)]
    fn stage(
        &self,
        p: &CompositeProblem,
        sp: &SmoothedPenalty,
        stage: usize,
        rhs: &[f64],
        x: &mut Vec<f64>,
        sched: &ContinuationSchedule,
        report: &mut SolveReport,
        clock: &Instant,
    ) -> Result<StageSummary> {
        let eps = sp.epsilon();
        let mut ev = Eval::new(p, x);
        let mut w = weights(sp, &ev.y);
        let mut j_eps = ev.j_eps(p, sp);
        let mut res = norm_inf(&ev.residual(p, &w));
        if !j_eps.is_finite() {
            return Err(Error::Diverged { iteration: 0 });
        }
        let push = |report: &mut SolveReport, entry: TraceEntry| {
            report.trace.push(entry);
            report.elapsed.push(clock.elapsed().as_secs_f64());
        };
        push(
            report,
            TraceEntry {
                stage,
                epsilon: eps,
                iteration: 0,
                j_eps,
                j: ev.j(p),
                residual: res,
                descent_lhs: None,
                descent_rhs: None,
            },
        );
        let done = |iterations, stop, residual| StageSummary {
            epsilon: eps,
            iterations,
            stop,
            residual,
        };
        if res <= sched.tolerance {
            return Ok(done(0, StageStop::Converged, res));
        }
        for k in 1..=sched.max_inner {
            let xn = self.system.solve(p, &w, rhs, x).map_err(|source| Error::InnerSolve {
                stage,
                iteration: k,
                source,
            })?;
            let step = xn.iter().zip(x.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if step <= STAGNATION_RTOL * norm_inf(&xn).max(f64::MIN_POSITIVE) {
                return Ok(done(k - 1, StageStop::Stagnated, res));
            }
            let evn = Eval::new(p, &xn);
            let jn = evn.j_eps(p, sp);
            if !jn.is_finite() {
                return Err(Error::Diverged {
                    iteration: report.iterations + k,
                });
            }
            let a_step: f64 = evn.r.iter().zip(&ev.r).map(|(a, b)| (a - b) * (a - b)).sum();
            let y_step: f64 = evn
                .y
                .iter()
                .zip(&ev.y)
                .zip(&w)
                .map(|((a, b), w)| 0.5 * w * (a - b) * (a - b))
                .sum();
            // An increase that rounding in evaluating J_ε could explain means
            // the iterate is at the precision floor; the step is dropped.
            if jn >= j_eps {
                let wn = weights(sp, &evn.y);
                let noise = ev.j_eps_rounding(p, x, &w) + evn.j_eps_rounding(p, &xn, &wn);
                if jn - j_eps <= DESCENT_RTOL * j_eps.abs() + noise {
                    return Ok(done(k - 1, StageStop::RoundingFloor, res));
                }
            }
            if jn > j_eps + DESCENT_RTOL * j_eps.abs() {
                return Err(Error::DescentViolation {
                    stage,
                    iteration: k,
                    before: j_eps,
                    after: jn,
                });
            }
            let lhs = jn + p.qscale() * a_step + y_step;
            if lhs > j_eps + DESCENT_INEQ_ATOL {
                return Err(Error::DescentInequality {
                    stage,
                    iteration: k,
                    lhs,
                    rhs: j_eps,
                });
            }
            let wn = weights(sp, &evn.y);
            let resn = norm_inf(&evn.residual(p, &wn));
            push(
                report,
                TraceEntry {
                    stage,
                    epsilon: eps,
                    iteration: k,
                    j_eps: jn,
                    j: evn.j(p),
                    residual: resn,
                    descent_lhs: Some(lhs),
                    descent_rhs: Some(j_eps),
                },
            );
            *x = xn;
            ev = evn;
            w = wn;
            j_eps = jn;
            res = resn;
            if res <= sched.tolerance {
                return Ok(done(k, StageStop::Converged, res));
            }
        }
        Ok(done(sched.max_inner, StageStop::MaxIterations, res))
    }
}

/// One fixed-ε stage from `x0`.
pub fn inner_solve(
    p: &CompositeProblem,
    eps: f64,
    x0: &[f64],
    sched: &ContinuationSchedule,
    opts: &LinearSolveOptions,
) -> Result<SolveReport> {
    MonotoneSolver::new(p, opts)?.solve_fixed(p, eps, x0, sched)
}

/// All stages of `sched` from `x0`.
pub fn continuation_solve(
    p: &CompositeProblem,
    x0: &[f64],
    sched: &ContinuationSchedule,
    opts: &LinearSolveOptions,
) -> Result<SolveReport> {
    MonotoneSolver::new(p, opts)?.solve(p, x0, sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::Penalty;
    use crate::sparse::SparseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(lambda: f64) -> CompositeProblem {
        let one = SparseMatrix::identity(1);
        CompositeProblem::new(
            one.clone(),
            vec![1.0],
            one,
            Penalty::power_law(lambda, 0.5).unwrap(),
            0.5,
        )
        .unwrap()
    }

    fn random_problem(seed: u64) -> CompositeProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n, r) = (8, 5, 4);
        let a: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l: Vec<f64> = (0..r * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        CompositeProblem::new(
            SparseMatrix::from_dense(m, n, &a),
            b,
            SparseMatrix::from_dense(r, n, &l),
            Penalty::power_law(0.2, 0.5).unwrap(),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn schedule_stages() {
        let s = ContinuationSchedule::default();
        let e = s.epsilons();
        assert_eq!(e.len(), 12);
        assert!((e[0] - 0.1).abs() < 1e-18 && (e[11] - 1e-12).abs() < 1e-24);
        assert_eq!(ContinuationSchedule::fixed(1e-3, 1e-8).epsilons(), vec![1e-3]);
        let odd = ContinuationSchedule::default().with_range(0.5, 0.01);
        assert_eq!(odd.epsilons(), vec![0.5, 0.5 * 0.1, 0.01]);
        assert!(ContinuationSchedule { factor: 1.0, ..s }.validate().is_err());
        assert!(ContinuationSchedule::default()
            .with_range(1e-3, 1e-1)
            .validate()
            .is_err());
    }

    #[test]
    fn j_examples() {
        let p = scalar(1.0);
        assert_eq!(j_value(&p, &[1.0]), 1.0);
        let z = CompositeProblem::new(
            SparseMatrix::identity(3),
            vec![0.0; 3],
            SparseMatrix::identity(3),
            Penalty::scad(1.0, 3.0).unwrap(),
            0.5,
        )
        .unwrap();
        assert_eq!(j_value(&z, &[0.0; 3]), 0.0);
        let sp = z.penalty().smoothed(0.1).unwrap();
        assert!((j_eps_value(&z, 0.1, &[0.0; 3]).unwrap() - 3.0 * sp.psi(0.0)).abs() < 1e-15);
    }

    #[test]
    fn scalar_residual_hand_computation() {
        // w(1) = φ′(1)/1 = 0.5, frozen-weight fixed point x = 1/(1 + w) = 2/3.
        let p = scalar(1.0);
        let eps = 0.1;
        let sp = p.penalty().smoothed(eps).unwrap();
        assert!((sp.weight(1.0) - 0.5).abs() < 1e-15);
        let x = 1.0 / (1.0 + sp.weight(1.0));
        assert!((x - 2.0 / 3.0).abs() < 1e-15);
        let r = optimality_residual(&p, eps, &[x]).unwrap()[0];
        let hand = (x - 1.0) + sp.weight(x) * x;
        assert!((r - hand).abs() < 1e-15);
        let rep = inner_solve(
            &p,
            eps,
            &[1.0],
            &ContinuationSchedule::fixed(eps, 1e-14),
            &LinearSolveOptions::direct(),
        )
        .unwrap();
        assert!((rep.trace[1].j_eps - j_eps_value(&p, eps, &[2.0 / 3.0]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn residual_matches_finite_differences() {
        for seed in 0..10 {
            let p = random_problem(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let x: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let eps = 0.05;
            let g = optimality_residual(&p, eps, &x).unwrap();
            for i in 0..p.n() {
                let h = 1e-6;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                let fd = (j_eps_value(&p, eps, &xp).unwrap() - j_eps_value(&p, eps, &xm).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_penalty_is_least_squares_in_one_step() {
        let p = random_problem(3)
            .with_penalty(Penalty::power_law(0.0, 0.5).unwrap())
            .unwrap();
        let ls = least_squares_start(&p).unwrap();
        let sched = ContinuationSchedule::fixed(0.1, 1e-10);
        let rep = inner_solve(&p, 0.1, &vec![0.0; p.n()], &sched, &LinearSolveOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        for (a, b) in rep.x.iter().zip(&ls) {
            assert!((a - b).abs() < 1e-10);
        }
        let again = inner_solve(&p, 0.1, &rep.x, &sched, &LinearSolveOptions::default()).unwrap();
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn start_equal_floor_matches_single_stage() {
        let p = random_problem(4);
        let x0 = least_squares_start(&p).unwrap();
        let sched = ContinuationSchedule::fixed(1e-3, 1e-9);
        let a = continuation_solve(&p, &x0, &sched, &LinearSolveOptions::default()).unwrap();
        let b = inner_solve(&p, 1e-3, &x0, &sched, &LinearSolveOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn continuation_descends_and_converges() {
        for seed in 0..10 {
            let p = random_problem(seed);
            let x0 = least_squares_start(&p).unwrap();
            let rep = continuation_solve(
                &p,
                &x0,
                &ContinuationSchedule::default(),
                &LinearSolveOptions::default(),
            )
            .unwrap();
            assert!(rep.converged, "seed {seed}");
            for s in 0..rep.stages.len() {
                let js: Vec<f64> = rep.stage_trace(s).map(|t| t.j_eps).collect();
                assert!(js.windows(2).all(|w| w[1] <= w[0] * (1.0 + DESCENT_RTOL)));
            }
            assert!(rep.final_j() <= j_value(&p, &x0) + 1e-12);
        }
    }
}
