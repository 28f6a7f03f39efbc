//! JSON-lines log of stage transitions: ε reductions and phase changes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery::{Phase, QuasiStaticRun};
use crate::monotone::{SolveReport, StageStop};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RunStart {
        experiment: String,
        solver: String,
    },
    /// One ε stage finished; the next stage starts at a smaller ε.
    StageEnd {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        t: Option<f64>,
        stage: usize,
        epsilon: f64,
        iterations: usize,
        stop: StageStop,
        residual: f64,
    },
    PhaseChange {
        t: f64,
        from: Phase,
        to: Phase,
    },
    RunEnd {
        solver: String,
        j: f64,
        iterations: usize,
        converged: bool,
    },
}

/// Stage events of one solve, tagged with the load time when given.
pub fn stage_events(report: &SolveReport, t: Option<f64>) -> Vec<Event> {
    report
        .stages
        .iter()
        .enumerate()
        .map(|(stage, s)| Event::StageEnd {
            t,
            stage,
            epsilon: s.epsilon,
            iterations: s.iterations,
            stop: s.stop,
            residual: s.residual,
        })
        .collect()
}

/// Per-step stage events interleaved with phase changes.
pub fn quasi_static_events(run: &QuasiStaticRun) -> Vec<Event> {
    let mut out = Vec::new();
    let mut prev: Option<Phase> = None;
    for (step, report) in run.steps.iter().zip(&run.reports) {
        out.extend(stage_events(report, Some(step.t)));
        if let Some(p) = prev {
            if p != step.phase {
                out.push(Event::PhaseChange {
                    t: step.t,
                    from: p,
                    to: step.phase,
                });
            }
        }
        prev = Some(step.phase);
    }
    out
}

pub struct EventLog<W: Write> {
    out: W,
}

impl<W: Write> EventLog<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn emit(&mut self, e: &Event) -> Result<()> {
        let line = serde_json::to_string(e).map_err(|j| Error::Io(j.to_string()))?;
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn emit_all(&mut self, events: &[Event]) -> Result<()> {
        events.iter().try_for_each(|e| self.emit(e))
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_object_per_line() {
        let mut log = EventLog::new(Vec::new());
        log.emit(&Event::PhaseChange {
            t: 1.5,
            from: Phase::Elastic,
            to: Phase::Fracture,
        })
        .unwrap();
        log.emit(&Event::StageEnd {
            t: None,
            stage: 0,
            epsilon: 0.1,
            iterations: 4,
            stop: StageStop::Converged,
            residual: 1e-9,
        })
        .unwrap();
        let text = String::from_utf8(log.into_inner().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            r#"{"event":"phase_change","t":1.5,"from":"elastic","to":"fracture"}"#
        );
        let back: Event = serde_json::from_str(lines[1]).unwrap();
        assert!(matches!(
            back,
            Event::StageEnd {
                stage: 0,
                iterations: 4,
                t: None,
                ..
            }
        ));
    }
}
