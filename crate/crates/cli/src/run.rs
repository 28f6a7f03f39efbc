//! Experiment execution and output files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use monotone_core::baselines::{fista_solve, gist_solve, FistaConfig, GistConfig};
use monotone_core::gallery::{
    build_imaging, build_mmatrix, emitter_errors, quasi_static_run, top_k_support, ControlModel, Fracture1DModel,
    Fracture2DModel, ImagingModel, Material, PhaseThresholds, QuasiStaticModel, QuasiStaticSettings, Scene,
};
use monotone_core::io::{
    load_matrix, load_vector, quasi_static_events, stage_events, write_csv, Event, EventLog, Graymap,
};
use monotone_core::monotone::{j_value, InitialGuess, MonotoneSolver};
use monotone_core::{CompositeProblem, Error, Penalty, SolveReport, SparseMatrix};

use crate::config::{ConfigError, Experiment, RunConfig, Solver, Start};

pub const TRACE_HEADER: &[&str] = &[
    "solver",
    "instance",
    "t",
    "stage",
    "epsilon",
    "iteration",
    "j_eps",
    "j",
    "residual",
];
pub const SUMMARY_HEADER: &[&str] = &["solver", "instance", "j", "iterations", "converged", "match_iterations"];
pub const TIMING_HEADER: &[&str] = &["solver", "instance", "wall_time", "match_time"];
pub const PHASE_HEADER: &[&str] = &["t", "jump", "elastic_energy", "phase", "J", "residual", "iters"];
pub const ERRORS_HEADER: &[&str] = &["noise", "solver", "error_plus", "error_minus"];

/// A failed run, classified for the exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
            CliError::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn root_cause(e: &Error) -> &Error {
    match e {
        Error::AtTime { source, .. } => root_cause(source),
        e => e,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match root_cause(&e) {
            Error::InvalidParameter(_) | Error::NotCoercive(_) | Error::Unsupported(_) | Error::DerivativeDomain => {
                CliError::Config(e.to_string())
            }
            Error::Io(_) | Error::NonFinite { .. } => CliError::Io(e.to_string()),
            _ => CliError::Solver(e),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub solver: String,
    pub instance: String,
    pub j: f64,
    pub iterations: usize,
    pub converged: bool,
    pub match_iterations: Option<usize>,
}

#[derive(Serialize)]
struct TraceRow<'a> {
    solver: &'a str,
    instance: &'a str,
    t: Option<f64>,
    stage: usize,
    epsilon: f64,
    iteration: usize,
    j_eps: f64,
    j: f64,
    residual: Option<f64>,
}

#[derive(Serialize)]
struct TimingRow<'a> {
    solver: &'a str,
    instance: &'a str,
    wall_time: f64,
    match_time: Option<f64>,
}

/// Everything one solver produced on one problem instance.
struct Solved {
    solver: Solver,
    instance: String,
    /// Objective of the configured problem at the final point.
    j: f64,
    report: SolveReport,
}

struct Outputs {
    dir: PathBuf,
    events: EventLog<BufWriter<File>>,
    solved: Vec<Solved>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let events = EventLog::new(BufWriter::new(File::create(dir.join("events.jsonl"))?));
        Ok(Self {
            dir: dir.to_path_buf(),
            events,
            solved: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(
        &mut self,
        experiment: Experiment,
        solver: Solver,
        instance: &str,
        p: &CompositeProblem,
        report: SolveReport,
    ) -> Result<(), CliError> {
        let j = j_value(p, &report.x);
        self.events.emit(&Event::RunStart {
            experiment: experiment.name().into(),
            solver: solver.name().into(),
        })?;
        self.events.emit_all(&stage_events(&report, None))?;
        self.events.emit(&Event::RunEnd {
            solver: solver.name().into(),
            j,
            iterations: report.iterations,
            converged: report.converged,
        })?;
        self.solved.push(Solved {
            solver,
            instance: instance.into(),
            j,
            report,
        });
        Ok(())
    }

    /// Write trace, summary and timing tables; returns the summary rows.
    fn finish(self) -> Result<Vec<SummaryRow>, CliError> {
        self.events.into_inner()?;
        let mut trace = Vec::new();
        let mut summary = Vec::new();
        let mut timing = Vec::new();
        let mut instances: Vec<&str> = self.solved.iter().map(|s| s.instance.as_str()).collect();
        instances.dedup();
        for inst in instances {
            let group: Vec<&Solved> = self.solved.iter().filter(|s| s.instance == inst).collect();
            let best = group.iter().map(|s| s.j).fold(f64::INFINITY, f64::min);
            let target = best + 1e-6 * best.abs();
            for s in group {
                let r = &s.report;
                trace.extend(r.trace.iter().map(|e| TraceRow {
                    solver: s.solver.name(),
                    instance: &s.instance,
                    t: None,
                    stage: e.stage,
                    epsilon: e.epsilon,
                    iteration: e.iteration,
                    j_eps: e.j_eps,
                    j: e.j,
                    // Baselines have no residual before their first step.
                    residual: (s.solver == Solver::Monotone || e.iteration > 0).then_some(e.residual),
                }));
                // FISTA's trace follows its ℓ¹ surrogate, not J.
                let hit = match s.solver {
                    Solver::Fista => None,
                    _ => r.first_reaching(target),
                };
                summary.push(SummaryRow {
                    solver: s.solver.name().into(),
                    instance: s.instance.clone(),
                    j: s.j,
                    iterations: r.iterations,
                    converged: r.converged,
                    match_iterations: hit.map(|h| h.0),
                });
                timing.push(TimingRow {
                    solver: s.solver.name(),
                    instance: &s.instance,
                    wall_time: r.wall_time,
                    match_time: hit.map(|h| h.1),
                });
            }
        }
        write_csv(&self.dir.join("trace.csv"), TRACE_HEADER, &trace)?;
        write_csv(&self.dir.join("summary.csv"), SUMMARY_HEADER, &summary)?;
        write_csv(&self.dir.join("timing.csv"), TIMING_HEADER, &timing)?;
        Ok(summary)
    }
}

/// Validate, echo the effective configuration and run the experiment.
pub fn execute(cfg: &RunConfig) -> Result<Vec<SummaryRow>, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let mut echo: Vec<&str> = Vec::new();
    let text = cfg.echo();
    echo.extend(text.lines());
    echo.sort_unstable();
    fs::write(cfg.out.join("config.txt"), echo.join("\n") + "\n")?;
    let _ = fs::remove_file(cfg.out.join("error.json"));
    match cfg.experiment {
        Experiment::Fracture1d | Experiment::Fracture2d => fracture(cfg),
        Experiment::Imaging => imaging(cfg),
        Experiment::Mmatrix | Experiment::Control | Experiment::Custom => static_problem(cfg),
    }
}

fn solve_one(cfg: &RunConfig, solver: Solver, p: &CompositeProblem) -> Result<SolveReport, CliError> {
    let start = |s: &MonotoneSolver| -> Result<Vec<f64>, CliError> {
        Ok(match cfg.start() {
            Start::LeastSquares => s.start(p, &InitialGuess::LeastSquares)?,
            Start::Zero => vec![0.0; p.n()],
        })
    };
    Ok(match solver {
        Solver::Monotone => {
            let s = MonotoneSolver::new(p, &cfg.linear)?;
            let x0 = start(&s)?;
            s.solve(p, &x0, &cfg.schedule())?
        }
        Solver::Gist => {
            let s = MonotoneSolver::new(p, &cfg.linear)?;
            let x0 = start(&s)?;
            let g = GistConfig {
                tolerance: cfg.gist_tolerance,
                max_iterations: cfg.gist_max_iterations,
                ..GistConfig::default()
            };
            gist_solve(p, &g, &x0)?
        }
        Solver::Fista => {
            let l1 = p.with_penalty(Penalty::power_law(p.penalty().lambda(), 1.0)?)?;
            let f = FistaConfig {
                tolerance: cfg.fista_tolerance,
                max_iterations: cfg.fista_max_iterations,
                ..FistaConfig::default()
            };
            fista_solve(&l1, &f, &vec![0.0; p.n()])?
        }
    })
}

fn check_baselines(cfg: &RunConfig, p: &CompositeProblem) -> Result<(), CliError> {
    let baseline = cfg.solvers().into_iter().find(|s| *s != Solver::Monotone);
    match baseline {
        Some(s) if !p.lambda_op().is_identity() => Err(CliError::Config(format!(
            "{} needs the identity as Λ; {} has a {}×{} operator",
            s.name(),
            cfg.experiment.name(),
            p.r(),
            p.n()
        ))),
        _ => Ok(()),
    }
}

fn build_static(cfg: &RunConfig) -> Result<CompositeProblem, CliError> {
    let pen = cfg.penalty_value()?;
    Ok(match cfg.experiment {
        Experiment::Mmatrix => build_mmatrix(cfg.n(), cfg.lambda(), cfg.tau())?.with_penalty(pen)?,
        Experiment::Control => ControlModel {
            lambda: cfg.lambda(),
            tau: cfg.tau(),
            ..ControlModel::default()
        }
        .build()?
        .with_penalty(pen)?,
        Experiment::Custom => {
            let a_path = cfg
                .a
                .as_deref()
                .ok_or_else(|| CliError::Config("custom experiment needs a".into()))?;
            let b_path = cfg
                .b
                .as_deref()
                .ok_or_else(|| CliError::Config("custom experiment needs b".into()))?;
            let a = load_matrix(a_path)?;
            let b = load_vector(b_path)?;
            let l = match cfg.lambda_op.as_deref() {
                None => SparseMatrix::identity(a.cols()),
                Some(p) if p == Path::new("identity") => SparseMatrix::identity(a.cols()),
                Some(p) => load_matrix(p)?,
            };
            CompositeProblem::new(a, b, l, pen, cfg.qscale)?
        }
        _ => unreachable!("not a single-problem experiment"),
    })
}

fn static_problem(cfg: &RunConfig) -> Result<Vec<SummaryRow>, CliError> {
    let p = build_static(cfg)?;
    check_baselines(cfg, &p)?;
    let mut out = Outputs::new(&cfg.out)?;
    let mut columns = vec!["index".to_string()];
    let mut xs = Vec::new();
    for &s in &cfg.solvers() {
        let r = solve_one(cfg, s, &p)?;
        columns.push(s.name().into());
        xs.push(r.x.clone());
        out.record(cfg.experiment, s, "main", &p, r)?;
    }
    let rows: Vec<Vec<f64>> = (0..p.n())
        .map(|i| std::iter::once(i as f64).chain(xs.iter().map(|x| x[i])).collect())
        .collect();
    let header: Vec<&str> = columns.iter().map(String::as_str).collect();
    write_csv(&out.path("solution.csv"), &header, &rows)?;
    if cfg.experiment == Experiment::Mmatrix {
        let n = cfg.n();
        for (s, x) in cfg.solvers().iter().zip(&xs) {
            if x.len() == n * n {
                Graymap::from_values(n, n, x)?.save(&out.path(&format!("solution_{}.pgm", s.name())), cfg.pgm)?;
            }
        }
    }
    out.finish()
}

#[derive(Serialize)]
struct PhaseRow {
    t: f64,
    jump: f64,
    elastic_energy: f64,
    phase: String,
    #[serde(rename = "J")]
    j: f64,
    residual: f64,
    iters: usize,
}

fn fracture(cfg: &RunConfig) -> Result<Vec<SummaryRow>, CliError> {
    let (kind, lambda, tau) = (cfg.penalty_kind(), cfg.lambda(), cfg.tau());
    let settings = QuasiStaticSettings {
        schedule: cfg.schedule(),
        linear: cfg.linear,
        thresholds: PhaseThresholds {
            jump_rel: cfg.jump_rel,
            energy_ratio: cfg.energy_ratio,
        },
        keep_displacements: cfg.experiment == Experiment::Fracture1d,
    };
    let (model, side): (Box<dyn QuasiStaticModel>, Option<usize>) = if cfg.experiment == Experiment::Fracture1d {
        if cfg.material != Material::Homogeneous {
            return Err(CliError::Config(
                "fracture1d supports the homogeneous material only".into(),
            ));
        }
        let m = Fracture1DModel {
            n: cfg.n(),
            gamma: cfg.gamma,
            t_end: cfg.t_end,
            dt: cfg.dt,
            ..Fracture1DModel::default()
        }
        .with_penalty(kind, lambda, tau);
        (Box::new(m), None)
    } else {
        let m = Fracture2DModel {
            n: cfg.n(),
            gamma: cfg.gamma,
            material: cfg.material,
            datum: cfg.datum,
            tether: cfg.tether,
            t_end: cfg.t_end,
            dt: cfg.dt,
            ..Fracture2DModel::default()
        }
        .with_penalty(kind, lambda, tau);
        let side = m.side();
        (Box::new(m), Some(side))
    };
    let run = quasi_static_run(model.as_ref(), &settings)?;

    fs::create_dir_all(&cfg.out)?;
    let mut log = EventLog::new(BufWriter::new(File::create(cfg.out.join("events.jsonl"))?));
    log.emit(&Event::RunStart {
        experiment: cfg.experiment.name().into(),
        solver: Solver::Monotone.name().into(),
    })?;
    log.emit_all(&quasi_static_events(&run))?;
    let last = run.steps.last();
    let summary = SummaryRow {
        solver: Solver::Monotone.name().into(),
        instance: "main".into(),
        j: last.map_or(f64::NAN, |s| s.j),
        iterations: run.reports.iter().map(|r| r.iterations).sum(),
        converged: run.reports.iter().all(|r| r.converged),
        match_iterations: None,
    };
    log.emit(&Event::RunEnd {
        solver: summary.solver.clone(),
        j: summary.j,
        iterations: summary.iterations,
        converged: summary.converged,
    })?;
    log.into_inner()?;

    let phases: Vec<PhaseRow> = run
        .steps
        .iter()
        .map(|s| PhaseRow {
            t: s.t,
            jump: s.jump,
            elastic_energy: s.elastic_energy,
            phase: s.phase.to_string(),
            j: s.j,
            residual: s.residual,
            iters: s.iters,
        })
        .collect();
    write_csv(&cfg.out.join("phase.csv"), PHASE_HEADER, &phases)?;
    let trace: Vec<TraceRow> = run
        .steps
        .iter()
        .zip(&run.reports)
        .flat_map(|(s, r)| {
            r.trace.iter().map(move |e| TraceRow {
                solver: "monotone",
                instance: "main",
                t: Some(s.t),
                stage: e.stage,
                epsilon: e.epsilon,
                iteration: e.iteration,
                j_eps: e.j_eps,
                j: e.j,
                residual: Some(e.residual),
            })
        })
        .collect();
    write_csv(&cfg.out.join("trace.csv"), TRACE_HEADER, &trace)?;
    write_csv(
        &cfg.out.join("summary.csv"),
        SUMMARY_HEADER,
        std::slice::from_ref(&summary),
    )?;
    let wall: f64 = run.reports.iter().map(|r| r.wall_time).sum();
    write_csv(
        &cfg.out.join("timing.csv"),
        TIMING_HEADER,
        &[TimingRow {
            solver: "monotone",
            instance: "main",
            wall_time: wall,
            match_time: None,
        }],
    )?;

    match side {
        None => {
            let width = run.displacements.first().map_or(0, Vec::len);
            let flat: Vec<f64> = run.displacements.concat();
            Graymap::from_values(width, run.displacements.len(), &flat)?
                .save(&cfg.out.join("displacement.pgm"), cfg.pgm)?;
        }
        Some(side) => {
            if let Some(u) = run.displacements.last() {
                Graymap::from_values(side, side, u)?.save(&cfg.out.join("displacement.pgm"), cfg.pgm)?;
            }
        }
    }
    Ok(vec![summary])
}

#[derive(Serialize)]
struct ErrorRow {
    noise: f64,
    solver: &'static str,
    error_plus: f64,
    error_minus: f64,
}

fn imaging(cfg: &RunConfig) -> Result<Vec<SummaryRow>, CliError> {
    let scene = Scene::cross(cfg.fine, cfg.spacing);
    let mut out = Outputs::new(&cfg.out)?;
    let mut errors = Vec::new();
    Graymap::from_values(cfg.fine, cfg.fine, &scene.pixels)?.save(&out.path("truth.pgm"), cfg.pgm)?;
    for (level, &noise) in cfg.noise.iter().enumerate() {
        let mut totals = vec![(0usize, 0usize); cfg.solvers().len()];
        for k in 0..cfg.seeds {
            let model = ImagingModel {
                fine: cfg.fine,
                coarse: cfg.coarse,
                psf_variance: cfg.psf_variance,
                psf_radius: cfg.psf_radius,
                noise,
                seed: cfg.seed + k as u64,
                lambda: cfg.lambda(),
                tau: cfg.tau(),
            };
            let ip = build_imaging(&model, &scene)?;
            let p = ip.problem.with_penalty(cfg.penalty_value()?)?;
            let instance = format!("noise={noise};seed={}", model.seed);
            if k == 0 {
                Graymap::from_values(cfg.coarse, cfg.coarse, p.b())?
                    .save(&out.path(&format!("observed_{level}.pgm")), cfg.pgm)?;
            }
            for (slot, &s) in cfg.solvers().iter().enumerate() {
                let r = solve_one(cfg, s, &p)?;
                let detected = match s {
                    Solver::Fista => top_k_support(&r.x, scene.emitters()),
                    _ => r.x.clone(),
                };
                let (e_plus, e_minus) = emitter_errors(&detected, &ip.truth, cfg.threshold)?;
                totals[slot].0 += e_plus;
                totals[slot].1 += e_minus;
                if k == 0 {
                    Graymap::from_values(cfg.fine, cfg.fine, &r.x)?
                        .save(&out.path(&format!("recovered_{}_{level}.pgm", s.name())), cfg.pgm)?;
                }
                out.record(cfg.experiment, s, &instance, &p, r)?;
            }
        }
        for (&s, &(e_plus, e_minus)) in cfg.solvers().iter().zip(&totals) {
            errors.push(ErrorRow {
                noise,
                solver: s.name(),
                error_plus: e_plus as f64 / cfg.seeds as f64,
                error_minus: e_minus as f64 / cfg.seeds as f64,
            });
        }
    }
    write_csv(&out.path("errors.csv"), ERRORS_HEADER, &errors)?;
    out.finish()
}
