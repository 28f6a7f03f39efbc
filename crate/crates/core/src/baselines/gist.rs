use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check_start, penalty_sum, require_identity, smooth_part};
use crate::error::{Error, Result};
use crate::monotone::{SolveReport, StageStop, StageSummary, TraceEntry};
use crate::problem::CompositeProblem;
use crate::sparse::{dot, norm_inf};

/// Barzilai–Borwein proximal gradient with a nonmonotone Armijo test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GistConfig {
    /// Stop once `|F_k − F_{k−1}| / |F_{k−1}|` falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Bounds on the step `η`.
    pub step_min: f64,
    pub step_max: f64,
    /// Backtracking multiplies `η` by this.
    pub shrink: f64,
    /// Sufficient-decrease constant.
    pub sigma: f64,
    /// Number of past objective values the Armijo test compares against.
    pub window: usize,
    pub max_backtracks: usize,
}

impl Default for GistConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 1000,
            step_min: 1e-30,
            step_max: 1e30,
            shrink: 0.5,
            sigma: 1e-5,
            window: 5,
            max_backtracks: 100,
        }
    }
}

impl GistConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tolerance > 0.0
            && self.step_min > 0.0
            && self.step_min <= self.step_max
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.sigma >= 0.0
            && self.window >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid GIST configuration {self:?}")))
        }
    }
}

pub fn gist_solve(p: &CompositeProblem, cfg: &GistConfig, x0: &[f64]) -> Result<SolveReport> {
    cfg.validate()?;
    require_identity(p, "GIST")?;
    check_start(p, x0)?;
    let clock = Instant::now();
    let pen = *p.penalty();
    let mut x = x0.to_vec();
    let (f0, mut g) = smooth_part(p, &x);
    let mut obj = f0 + penalty_sum(p, &x);
    if !obj.is_finite() {
        return Err(Error::Diverged { iteration: 0 });
    }
    let mut history: VecDeque<f64> = VecDeque::from([obj]);
    let entry = |iteration, j, residual, lhs, rhs| TraceEntry {
        stage: 0,
        epsilon: 0.0,
        iteration,
        j_eps: j,
        j,
        residual,
        descent_lhs: lhs,
        descent_rhs: rhs,
    };
    let mut report = SolveReport {
        solver: "gist".into(),
        x: Vec::new(),
        trace: vec![entry(0, obj, f64::NAN, None, None)],
        elapsed: vec![clock.elapsed().as_secs_f64()],
        stages: Vec::new(),
        iterations: 0,
        final_residual: f64::NAN,
        converged: false,
        wall_time: 0.0,
    };
    let mut eta = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut stop = StageStop::MaxIterations;
    let mut residual = f64::NAN;
    for k in 1..=cfg.max_iterations {
        if let Some((xp, gp)) = &prev {
            let s: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            let ss = dot(&s, &s);
            // BB step 1/t with t = ⟨s, y⟩/⟨s, s⟩.
            eta = if sy > 0.0 { ss / sy } else { cfg.step_max };
        }
        eta = eta.clamp(cfg.step_min, cfg.step_max);
        let reference = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let z: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| pen.prox(xi - eta * gi, eta)).collect();
            let dz: f64 = z.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            let (fz, gz) = smooth_part(p, &z);
            let oz = fz + penalty_sum(p, &z);
            let lhs = oz + cfg.sigma / (2.0 * eta) * dz;
            if lhs <= reference {
                accepted = Some((z, gz, oz, lhs));
                break;
            }
            eta *= cfg.shrink;
            if eta < cfg.step_min {
                break;
            }
        }
        let Some((z, gz, oz, lhs)) = accepted else {
            stop = StageStop::Stagnated;
            break;
        };
        if !oz.is_finite() {
            return Err(Error::Diverged { iteration: k });
        }
        // Gradient-mapping norm.
        residual = norm_inf(&z.iter().zip(&x).map(|(a, b)| (a - b) / eta).collect::<Vec<_>>());
        let change = (oz - obj).abs() / obj.abs().max(f64::MIN_POSITIVE);
        prev = Some((std::mem::replace(&mut x, z), std::mem::replace(&mut g, gz)));
        obj = oz;
        history.push_back(obj);
        if history.len() > cfg.window {
            history.pop_front();
        }
        report.trace.push(entry(k, obj, residual, Some(lhs), Some(reference)));
        report.elapsed.push(clock.elapsed().as_secs_f64());
        report.iterations = k;
        if change < cfg.tolerance {
            stop = StageStop::Converged;
            break;
        }
    }
    report.stages.push(StageSummary {
        epsilon: 0.0,
        iterations: report.iterations,
        stop,
        residual,
    });
    report.final_residual = residual;
    report.converged = stop != StageStop::MaxIterations;
    report.x = x;
    report.wall_time = clock.elapsed().as_secs_f64();
    Ok(report)
}
