//! Quasi-static loading: a sequence of energy minimizations under a slowly
//! increasing boundary load, each warm-started from the previous step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monotone::{ContinuationSchedule, MonotoneSolver, SolveReport};
use crate::problem::CompositeProblem;
use crate::sparse::LinearSolveOptions;

/// A family of problems indexed by the load time `t` that share `A` and `Λ`.
pub trait QuasiStaticModel {
    fn build(&self, t: f64) -> Result<CompositeProblem>;
    fn times(&self) -> Vec<f64>;
    /// Size of the imposed boundary displacement at `t`.
    fn load_amplitude(&self, t: f64) -> f64;
    /// Energy stored in the bulk, excluding boundary penalty rows.
    fn elastic_energy(&self, p: &CompositeProblem, u: &[f64]) -> f64;
    /// Largest crack opening.
    fn jump(&self, u: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Elastic,
    Prefracture,
    Fracture,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Elastic => "elastic",
            Phase::Prefracture => "prefracture",
            Phase::Fracture => "fracture",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elastic" => Ok(Phase::Elastic),
            "prefracture" => Ok(Phase::Prefracture),
            "fracture" => Ok(Phase::Fracture),
            other => Err(Error::InvalidParameter(format!("unknown phase '{other}'"))),
        }
    }
}

/// Phase labelling rule.
///
/// A step is elastic while the opening stays below `jump_rel` times the load
/// amplitude. Otherwise it is fractured once the bulk elastic energy has
/// dropped to `energy_ratio` times the energy the same load would store in
/// the uncracked body, and prefractured before that.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseThresholds {
    pub jump_rel: f64,
    pub energy_ratio: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            jump_rel: 1e-6,
            energy_ratio: 1e-4,
        }
    }
}

impl PhaseThresholds {
    pub fn classify(&self, jump: f64, load: f64, elastic: f64, closed: f64) -> Phase {
        if jump <= self.jump_rel * load {
            Phase::Elastic
        } else if elastic <= self.energy_ratio * closed {
            Phase::Fracture
        } else {
            Phase::Prefracture
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStep {
    pub t: f64,
    pub jump: f64,
    pub elastic_energy: f64,
    /// Elastic energy of the uncracked body under the same load.
    pub closed_energy: f64,
    pub phase: Phase,
    #[serde(rename = "J")]
    pub j: f64,
    pub residual: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiStaticSettings {
    pub schedule: ContinuationSchedule,
    pub linear: LinearSolveOptions,
    pub thresholds: PhaseThresholds,
    /// Keep every step's displacement, not just the last.
    pub keep_displacements: bool,
}

impl Default for QuasiStaticSettings {
    fn default() -> Self {
        Self {
            schedule: ContinuationSchedule::default().with_tolerance(1e-15),
            linear: LinearSolveOptions::default(),
            thresholds: PhaseThresholds::default(),
            keep_displacements: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuasiStaticRun {
    pub steps: Vec<PhaseStep>,
    pub reports: Vec<SolveReport>,
    /// Per-step displacements when requested, else only the final one.
    pub displacements: Vec<Vec<f64>>,
}

impl QuasiStaticRun {
    pub fn first_time(&self, phase: Phase) -> Option<f64> {
        self.steps.iter().find(|s| s.phase == phase).map(|s| s.t)
    }

    pub fn fracture_time(&self) -> Option<f64> {
        self.first_time(Phase::Fracture)
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.steps.iter().map(|s| s.phase).collect()
    }

    /// Phases with consecutive repeats collapsed.
    pub fn phase_sequence(&self) -> Vec<Phase> {
        let mut out: Vec<Phase> = Vec::new();
        for s in &self.steps {
            if out.last() != Some(&s.phase) {
                out.push(s.phase);
            }
        }
        out
    }
}

/// Weight standing in for an infinitely stiff crack when computing the
/// uncracked reference energy.
fn closing_weight(p: &CompositeProblem) -> f64 {
    let scale = p.a().column_sq_norms().into_iter().fold(0.0f64, f64::max);
    1e10 * 2.0 * p.qscale() * scale.max(1.0)
}

pub fn quasi_static_run(model: &dyn QuasiStaticModel, settings: &QuasiStaticSettings) -> Result<QuasiStaticRun> {
    let times = model.times();
    let Some(&t0) = times.first() else {
        return Err(Error::InvalidParameter("empty time grid".into()));
    };
    let p0 = model.build(t0)?;
    let solver = MonotoneSolver::new(&p0, &settings.linear)?;
    let mut u = vec![0.0; p0.n()];
    let mut run = QuasiStaticRun {
        steps: Vec::with_capacity(times.len()),
        reports: Vec::with_capacity(times.len()),
        displacements: Vec::new(),
    };
    for &t in &times {
        let at = |e: Error| Error::AtTime {
            time: t,
            source: Box::new(e),
        };
        let p = model.build(t).map_err(at)?;
        let report = solver.solve(&p, &u, &settings.schedule).map_err(at)?;
        u.clone_from(&report.x);
        let closed = {
            let w = vec![closing_weight(&p); p.r()];
            let rhs: Vec<f64> = p.a_t().mul_vec(p.b()).iter().map(|v| 2.0 * p.qscale() * v).collect();
            let uc = solver.system().solve(&p, &w, &rhs, &u).map_err(|e| at(e.into()))?;
            model.elastic_energy(&p, &uc)
        };
        let elastic = model.elastic_energy(&p, &u);
        let jump = model.jump(&u);
        run.steps.push(PhaseStep {
            t,
            jump,
            elastic_energy: elastic,
            closed_energy: closed,
            phase: settings
                .thresholds
                .classify(jump, model.load_amplitude(t), elastic, closed),
            j: report.final_j(),
            residual: report.final_residual,
            iters: report.iterations,
        });
        if settings.keep_displacements {
            run.displacements.push(u.clone());
        }
        run.reports.push(report);
    }
    if !settings.keep_displacements {
        run.displacements.push(u);
    }
    Ok(run)
}
