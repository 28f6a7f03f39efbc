use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_start, penalty_sum, require_identity, smooth_part};
use crate::error::{Error, Result};
use crate::monotone::{SolveReport, StageStop, StageSummary, TraceEntry};
use crate::penalty::PenaltyKind;
use crate::problem::CompositeProblem;
use crate::sparse::{dot, norm_inf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FistaConfig {
    /// Fixed step; `None` uses `1/L` from a power-iteration estimate.
    pub step: Option<f64>,
    pub max_iterations: usize,
    /// Stop once `|x_{k+1} − x_k|∞ ≤ tolerance · max(1, |x_{k+1}|∞)`.
    pub tolerance: f64,
}

impl Default for FistaConfig {
    fn default() -> Self {
        Self {
            step: None,
            max_iterations: 5000,
            tolerance: 1e-10,
        }
    }
}

/// Upper estimate of the Lipschitz constant `2q‖AᵀA‖` of the data gradient.
pub fn lipschitz_estimate(p: &CompositeProblem) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut est = 0.0;
    for _ in 0..300 {
        let nv = dot(&v, &v).sqrt();
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let w = p.a_t().mul_vec(&p.a().mul_vec(&v));
        let next = dot(&v, &w);
        v = w;
        if (next - est).abs() <= 1e-10 * next {
            est = next;
            break;
        }
        est = next;
    }
    // The Rayleigh quotient approaches from below.
    2.0 * p.qscale() * est * 1.02
}

pub fn fista_solve(p: &CompositeProblem, cfg: &FistaConfig, x0: &[f64]) -> Result<SolveReport> {
    require_identity(p, "FISTA")?;
    check_start(p, x0)?;
    let pen = *p.penalty();
    if pen.kind() != PenaltyKind::PowerLaw || pen.tau() != 1.0 {
        return Err(Error::Unsupported(
            "FISTA handles the ℓ¹ penalty (power law with τ = 1) only".into(),
        ));
    }
    let step = match cfg.step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::InvalidParameter(format!("FISTA step must be positive, got {s}"))),
        None => 1.0 / lipschitz_estimate(p).max(f64::MIN_POSITIVE),
    };
    let clock = Instant::now();
    let objective = |x: &[f64]| smooth_part(p, x).0 + penalty_sum(p, x);
    let entry = |iteration, j, residual| TraceEntry {
        stage: 0,
        epsilon: 0.0,
        iteration,
        j_eps: j,
        j,
        residual,
        descent_lhs: None,
        descent_rhs: None,
    };
    let mut x = x0.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut best = (objective(&x), x.clone());
    let mut report = SolveReport {
        solver: "fista".into(),
        x: Vec::new(),
        trace: vec![entry(0, best.0, f64::NAN)],
        elapsed: vec![clock.elapsed().as_secs_f64()],
        stages: Vec::new(),
        iterations: 0,
        final_residual: f64::NAN,
        converged: false,
        wall_time: 0.0,
    };
    let mut stop = StageStop::MaxIterations;
    let mut residual = f64::NAN;
    for k in 1..=cfg.max_iterations {
        let (_, g) = smooth_part(p, &y);
        let xn: Vec<f64> = y
            .iter()
            .zip(&g)
            .map(|(yi, gi)| pen.prox(yi - step * gi, step))
            .collect();
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / tn;
        y = xn.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        let dx = xn.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        residual = dx / step;
        x = xn;
        t = tn;
        let obj = objective(&x);
        if !obj.is_finite() {
            return Err(Error::Diverged { iteration: k });
        }
        if obj < best.0 {
            best = (obj, x.clone());
        }
        report.trace.push(entry(k, obj, residual));
        report.elapsed.push(clock.elapsed().as_secs_f64());
        report.iterations = k;
        if dx <= cfg.tolerance * norm_inf(&x).max(1.0) {
            stop = StageStop::Converged;
            break;
        }
    }
    // Report the best iterate seen; the accelerated sequence is not monotone.
    if best.0 < report.final_j() {
        report.trace.push(entry(report.iterations, best.0, residual));
        report.elapsed.push(clock.elapsed().as_secs_f64());
    }
    report.stages.push(StageSummary {
        epsilon: 0.0,
        iterations: report.iterations,
        stop,
        residual,
    });
    report.final_residual = residual;
    report.converged = stop != StageStop::MaxIterations;
    report.x = best.1;
    report.wall_time = clock.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::Penalty;
    use crate::sparse::SparseMatrix;

    fn random(m: usize, n: usize, lambda: f64, seed: u64) -> CompositeProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        CompositeProblem::new(
            SparseMatrix::from_dense(m, n, &d),
            b,
            SparseMatrix::identity(n),
            Penalty::power_law(lambda, 1.0).unwrap(),
            0.5,
        )
        .unwrap()
    }

    /// Unaccelerated proximal gradient with the same step.
    fn ista(p: &CompositeProblem, iters: usize) -> f64 {
        let step = 1.0 / lipschitz_estimate(p);
        let mut x = vec![0.0; p.n()];
        for _ in 0..iters {
            let (_, g) = smooth_part(p, &x);
            x = x
                .iter()
                .zip(&g)
                .map(|(a, gi)| p.penalty().prox(a - step * gi, step))
                .collect();
        }
        smooth_part(p, &x).0 + penalty_sum(p, &x)
    }

    #[test]
    fn matches_long_reference() {
        let p = random(20, 10, 0.1, 4);
        let r = fista_solve(&p, &FistaConfig::default(), &[0.0; 10]).unwrap();
        let reference = ista(&p, 100_000);
        assert!((r.final_j() - reference).abs() < 1e-6);
    }

    #[test]
    fn acceleration_dominates_at_equal_iterations() {
        for seed in 0..5 {
            let p = random(30, 60, 0.05, seed);
            let cfg = FistaConfig {
                max_iterations: 200,
                tolerance: 0.0,
                ..Default::default()
            };
            let r = fista_solve(&p, &cfg, &vec![0.0; 60]).unwrap();
            assert!(r.final_j() <= ista(&p, 200) + 1e-12);
        }
    }

    #[test]
    fn huge_lambda_gives_zero() {
        let p = random(10, 5, 1e6, 1);
        let r = fista_solve(&p, &FistaConfig::default(), &[0.3; 5]).unwrap();
        assert!(r.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_lambda_is_least_squares() {
        let p = random(12, 4, 0.0, 2);
        let r = fista_solve(&p, &FistaConfig::default(), &[0.0; 4]).unwrap();
        let ls = crate::monotone::least_squares_start(&p).unwrap();
        for (a, b) in r.x.iter().zip(&ls) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_nonconvex() {
        let p = random(4, 4, 0.1, 3)
            .with_penalty(Penalty::power_law(0.1, 0.5).unwrap())
            .unwrap();
        assert!(matches!(
            fista_solve(&p, &FistaConfig::default(), &[0.0; 4]),
            Err(Error::Unsupported(_))
        ));
    }
}
