//! Run configuration: a plain `key = value` file plus command-line overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use monotone_core::gallery::{BoundaryDatum, Material, TetherMode};
use monotone_core::io::PgmFormat;
use monotone_core::monotone::ContinuationSchedule;
use monotone_core::{LinearSolveOptions, Penalty, PenaltyKind, SolveMethod};

/// A configuration problem; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fracture1d,
    Fracture2d,
    Mmatrix,
    Control,
    Imaging,
    Custom,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fracture1d => "fracture1d",
            Experiment::Fracture2d => "fracture2d",
            Experiment::Mmatrix => "mmatrix",
            Experiment::Control => "control",
            Experiment::Imaging => "imaging",
            Experiment::Custom => "custom",
        }
    }

    pub fn is_quasi_static(self) -> bool {
        matches!(self, Experiment::Fracture1d | Experiment::Fracture2d)
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "fracture1d" => Experiment::Fracture1d,
            "fracture2d" => Experiment::Fracture2d,
            "mmatrix" => Experiment::Mmatrix,
            "control" => Experiment::Control,
            "imaging" => Experiment::Imaging,
            "custom" => Experiment::Custom,
            _ => return Err(bad(format!("unknown experiment '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Solver {
    Monotone,
    Gist,
    Fista,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Monotone => "monotone",
            Solver::Gist => "gist",
            Solver::Fista => "fista",
        }
    }
}

impl FromStr for Solver {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "monotone" => Ok(Solver::Monotone),
            "gist" => Ok(Solver::Gist),
            "fista" => Ok(Solver::Fista),
            _ => Err(bad(format!("unknown solver '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    LeastSquares,
    Zero,
}

impl Start {
    fn name(self) -> &'static str {
        match self {
            Start::LeastSquares => "least-squares",
            Start::Zero => "zero",
        }
    }
}

/// Every configuration key with a one-line description, in echo order.
pub const KEYS: &[(&str, &str)] = &[
    (
        "experiment",
        "fracture1d | fracture2d | mmatrix | control | imaging | custom",
    ),
    ("solvers", "comma-separated subset of monotone, gist, fista"),
    ("penalty", "powerlaw | scad | mcp"),
    ("lambda", "penalty weight λ (default per experiment)"),
    ("tau", "penalty shape τ (default per experiment)"),
    ("start", "initial point: least-squares | zero (default per experiment)"),
    ("eps_start", "first smoothing parameter ε (default per experiment)"),
    ("eps_floor", "last smoothing parameter ε (default per experiment)"),
    ("eps_factor", "ε decay factor in (0, 1)"),
    (
        "tolerance",
        "ℓ∞ optimality residual tolerance per stage (default per experiment)",
    ),
    ("max_inner", "iteration cap per ε stage"),
    (
        "linear_solver",
        "auto | direct-cholesky | conjugate-gradient | low-rank-update",
    ),
    ("cg_tolerance", "CG residual tolerance"),
    ("cg_max_iterations", "CG iteration cap"),
    ("shift", "diagonal shift added before linear solves"),
    ("gist_tolerance", "GIST relative-change tolerance"),
    ("gist_max_iterations", "GIST iteration cap"),
    ("fista_tolerance", "FISTA step tolerance"),
    ("fista_max_iterations", "FISTA iteration cap"),
    ("out", "output directory"),
    ("seed", "random seed (imaging noise)"),
    ("pgm", "graymap encoding: plain (P2) | raw (P5)"),
    (
        "n",
        "mesh size: intervals (fracture1d), nodes per side (fracture2d), grid (mmatrix)",
    ),
    ("gamma", "boundary penalty γ (fracture)"),
    ("t_end", "final load time (fracture)"),
    ("dt", "load step (fracture)"),
    ("material", "fracture2d material: homogeneous | two-material | graded"),
    ("datum", "fracture2d boundary datum: g1 | g2 | g3"),
    ("tether", "fracture2d tether: boundary-only | full-grid"),
    ("jump_rel", "opening below jump_rel·load counts as elastic"),
    ("energy_ratio", "elastic energy ratio below which a step is fractured"),
    ("fine", "imaging scene side in pixels"),
    ("coarse", "imaging detector side in pixels (must divide fine)"),
    ("psf_variance", "imaging Gaussian PSF variance (fine pixels²)"),
    ("psf_radius", "imaging PSF truncation radius (fine pixels)"),
    ("noise", "imaging relative noise levels, comma-separated"),
    (
        "seeds",
        "imaging recoveries averaged per noise level (seeds seed, seed+1, …)",
    ),
    ("spacing", "imaging cross-scene emitter spacing in fine pixels"),
    ("threshold", "imaging detection threshold for Error+/Error−"),
    ("a", "custom: Matrix Market file for A"),
    ("b", "custom: Matrix Market file for b (one column)"),
    ("lambda_op", "custom: Matrix Market file for Λ, or identity"),
    ("qscale", "custom: coefficient q on |Ax − b|²"),
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub solvers: Option<Vec<Solver>>,
    pub penalty: Option<PenaltyKind>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub start: Option<Start>,
    pub eps_start: Option<f64>,
    pub eps_floor: Option<f64>,
    pub eps_factor: f64,
    pub tolerance: Option<f64>,
    pub max_inner: usize,
    pub linear: LinearSolveOptions,
    pub gist_tolerance: f64,
    pub gist_max_iterations: usize,
    pub fista_tolerance: f64,
    pub fista_max_iterations: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub pgm: PgmFormat,
    pub n: Option<usize>,
    pub gamma: f64,
    pub t_end: f64,
    pub dt: f64,
    pub material: Material,
    pub datum: BoundaryDatum,
    pub tether: TetherMode,
    pub jump_rel: f64,
    pub energy_ratio: f64,
    pub fine: usize,
    pub coarse: usize,
    pub psf_variance: f64,
    pub psf_radius: usize,
    pub noise: Vec<f64>,
    pub seeds: usize,
    pub spacing: usize,
    pub threshold: f64,
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub lambda_op: Option<PathBuf>,
    pub qscale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sched = ContinuationSchedule::default();
        let gist = monotone_core::baselines::GistConfig::default();
        let fista = monotone_core::baselines::FistaConfig::default();
        Self {
            experiment: Experiment::Mmatrix,
            solvers: None,
            penalty: None,
            lambda: None,
            tau: None,
            start: None,
            eps_start: None,
            eps_floor: None,
            eps_factor: sched.factor,
            tolerance: None,
            max_inner: sched.max_inner,
            linear: LinearSolveOptions::default(),
            gist_tolerance: gist.tolerance,
            gist_max_iterations: gist.max_iterations,
            fista_tolerance: fista.tolerance,
            fista_max_iterations: fista.max_iterations,
            out: PathBuf::from("out"),
            seed: 0,
            pgm: PgmFormat::Plain,
            n: None,
            gamma: 50.0,
            t_end: 3.0,
            dt: 0.01,
            material: Material::Homogeneous,
            datum: BoundaryDatum::G1,
            tether: TetherMode::BoundaryOnly,
            jump_rel: 1e-6,
            energy_ratio: 1e-4,
            fine: 128,
            coarse: 32,
            psf_variance: 8.0,
            psf_radius: 12,
            noise: vec![0.002, 0.005, 0.01, 0.02, 0.05, 0.1],
            seeds: 1,
            spacing: 8,
            threshold: 0.5,
            a: None,
            b: None,
            lambda_op: None,
            qscale: 0.5,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| bad(format!("{key}: cannot parse '{v}'")))
}

fn parsed<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| bad(format!("{key}: {e}")))
}

impl RunConfig {
    /// Load `path`: one `key = value` per line, `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| bad(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => self.experiment = v.parse()?,
            "solvers" => {
                let mut s: Vec<Solver> = v
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(str::parse)
                    .collect::<Result<_, _>>()?;
                s.sort();
                s.dedup();
                if s.is_empty() {
                    return Err(bad("solvers: at least one solver is needed"));
                }
                self.solvers = Some(s);
            }
            "penalty" => self.penalty = Some(parsed(key, v)?),
            "lambda" => self.lambda = Some(num(key, v)?),
            "tau" => self.tau = Some(num(key, v)?),
            "start" => {
                self.start = Some(match v {
                    "least-squares" | "ls" => Start::LeastSquares,
                    "zero" => Start::Zero,
                    _ => return Err(bad(format!("start: unknown initial point '{v}'"))),
                })
            }
            "eps_start" => self.eps_start = Some(num(key, v)?),
            "eps_floor" => self.eps_floor = Some(num(key, v)?),
            "eps_factor" => self.eps_factor = num(key, v)?,
            "tolerance" => self.tolerance = Some(num(key, v)?),
            "max_inner" => self.max_inner = num(key, v)?,
            "linear_solver" => self.linear.method = parsed::<SolveMethod>(key, v)?,
            "cg_tolerance" => self.linear.cg_tolerance = num(key, v)?,
            "cg_max_iterations" => self.linear.cg_max_iterations = num(key, v)?,
            "shift" => self.linear.shift = num(key, v)?,
            "gist_tolerance" => self.gist_tolerance = num(key, v)?,
            "gist_max_iterations" => self.gist_max_iterations = num(key, v)?,
            "fista_tolerance" => self.fista_tolerance = num(key, v)?,
            "fista_max_iterations" => self.fista_max_iterations = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "seed" => self.seed = num(key, v)?,
            "pgm" => {
                self.pgm = match v {
                    "plain" | "p2" => PgmFormat::Plain,
                    "raw" | "p5" => PgmFormat::Raw,
                    _ => return Err(bad(format!("pgm: unknown encoding '{v}'"))),
                }
            }
            "n" => self.n = Some(num(key, v)?),
            "gamma" => self.gamma = num(key, v)?,
            "t_end" => self.t_end = num(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "material" => self.material = parsed(key, v)?,
            "datum" => self.datum = parsed(key, v)?,
            "tether" => self.tether = parsed(key, v)?,
            "jump_rel" => self.jump_rel = num(key, v)?,
            "energy_ratio" => self.energy_ratio = num(key, v)?,
            "fine" => self.fine = num(key, v)?,
            "coarse" => self.coarse = num(key, v)?,
            "psf_variance" => self.psf_variance = num(key, v)?,
            "psf_radius" => self.psf_radius = num(key, v)?,
            "noise" => {
                self.noise = v.split(',').map(|t| num(key, t.trim())).collect::<Result<_, _>>()?;
                if self.noise.is_empty() {
                    return Err(bad("noise: at least one level is needed"));
                }
            }
            "seeds" => self.seeds = num(key, v)?,
            "spacing" => self.spacing = num(key, v)?,
            "threshold" => self.threshold = num(key, v)?,
            "a" => self.a = Some(PathBuf::from(v)),
            "b" => self.b = Some(PathBuf::from(v)),
            "lambda_op" => self.lambda_op = Some(PathBuf::from(v)),
            "qscale" => self.qscale = num(key, v)?,
            _ => return Err(bad(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Configured solvers; monotone alone unless set.
    pub fn solvers(&self) -> Vec<Solver> {
        self.solvers.clone().unwrap_or_else(|| vec![Solver::Monotone])
    }

    pub fn penalty_kind(&self) -> PenaltyKind {
        self.penalty.unwrap_or(PenaltyKind::PowerLaw)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(match self.experiment {
            Experiment::Fracture1d | Experiment::Fracture2d => 1.0,
            Experiment::Mmatrix => 0.1,
            Experiment::Control => 1e-4,
            Experiment::Imaging => 1e-4,
            Experiment::Custom => 1e-2,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(match (self.penalty_kind(), self.experiment) {
            (PenaltyKind::Scad, _) => 3.7,
            (PenaltyKind::Mcp, _) => 2.0,
            (_, Experiment::Fracture1d | Experiment::Fracture2d) => 0.01,
            _ => 0.5,
        })
    }

    pub fn start(&self) -> Start {
        self.start.unwrap_or(match self.experiment {
            Experiment::Control => Start::Zero,
            _ => Start::LeastSquares,
        })
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(match self.experiment {
            Experiment::Fracture1d => 100,
            Experiment::Fracture2d => 80,
            _ => 64,
        })
    }

    pub fn schedule(&self) -> ContinuationSchedule {
        let sched = ContinuationSchedule::default();
        let (floor, tol) = match self.experiment {
            Experiment::Mmatrix => (1e-6, 1e-3),
            Experiment::Fracture1d | Experiment::Fracture2d => (1e-12, 1e-15),
            _ => (1e-12, 1e-8),
        };
        ContinuationSchedule {
            eps_start: self.eps_start.unwrap_or(match self.experiment {
                Experiment::Imaging => 1e-4,
                _ => sched.eps_start,
            }),
            eps_floor: self.eps_floor.unwrap_or(floor),
            factor: self.eps_factor,
            tolerance: self.tolerance.unwrap_or(tol),
            max_inner: self.max_inner,
        }
    }

    pub fn penalty_value(&self) -> Result<Penalty, ConfigError> {
        Penalty::new(self.penalty_kind(), self.lambda(), self.tau()).map_err(|e| bad(format!("penalty: {e}")))
    }

    /// Check every field against the solver and model preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.penalty_value()?;
        self.schedule().validate().map_err(|e| bad(format!("schedule: {e}")))?;
        self.linear.validate().map_err(|e| bad(format!("linear solver: {e}")))?;
        let positive = [
            ("gist_tolerance", self.gist_tolerance),
            ("fista_tolerance", self.fista_tolerance),
            ("gamma", self.gamma),
            ("t_end", self.t_end),
            ("dt", self.dt),
            ("jump_rel", self.jump_rel),
            ("energy_ratio", self.energy_ratio),
            ("psf_variance", self.psf_variance),
            ("threshold", self.threshold),
            ("qscale", self.qscale),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{k} must be positive and finite, got {v}")));
            }
        }
        if let Some(v) = self.noise.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(bad(format!("noise must be nonnegative, got {v}")));
        }
        for (k, v) in [
            ("gist_max_iterations", self.gist_max_iterations),
            ("fista_max_iterations", self.fista_max_iterations),
            ("seeds", self.seeds),
            ("spacing", self.spacing),
            ("fine", self.fine),
            ("coarse", self.coarse),
        ] {
            if v == 0 {
                return Err(bad(format!("{k} must be at least 1")));
            }
        }
        if self.n() < 2 {
            return Err(bad("n must be at least 2"));
        }
        if !self.fine.is_multiple_of(self.coarse) {
            return Err(bad(format!(
                "coarse = {} does not divide fine = {}",
                self.coarse, self.fine
            )));
        }
        if self.experiment == Experiment::Custom && (self.a.is_none() || self.b.is_none()) {
            return Err(bad("custom experiment needs both a and b"));
        }
        if self.experiment.is_quasi_static() && self.solvers() != [Solver::Monotone] {
            return Err(bad("fracture experiments run the monotone solver only"));
        }
        Ok(())
    }

    /// The full effective configuration, one `key = value` per line.
    pub fn echo(&self) -> String {
        let sched = self.schedule();
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut s = String::new();
        for &(key, _) in KEYS {
            let v = match key {
                "experiment" => self.experiment.name().to_string(),
                "solvers" => self.solvers().iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
                "penalty" => self.penalty_kind().to_string(),
                "lambda" => self.lambda().to_string(),
                "tau" => self.tau().to_string(),
                "start" => self.start().name().to_string(),
                "eps_start" => sched.eps_start.to_string(),
                "eps_floor" => sched.eps_floor.to_string(),
                "eps_factor" => sched.factor.to_string(),
                "tolerance" => sched.tolerance.to_string(),
                "max_inner" => sched.max_inner.to_string(),
                "linear_solver" => self.linear.method.to_string(),
                "cg_tolerance" => self.linear.cg_tolerance.to_string(),
                "cg_max_iterations" => self.linear.cg_max_iterations.to_string(),
                "shift" => self.linear.shift.to_string(),
                "gist_tolerance" => self.gist_tolerance.to_string(),
                "gist_max_iterations" => self.gist_max_iterations.to_string(),
                "fista_tolerance" => self.fista_tolerance.to_string(),
                "fista_max_iterations" => self.fista_max_iterations.to_string(),
                "out" => self.out.display().to_string(),
                "seed" => self.seed.to_string(),
                "pgm" => match self.pgm {
                    PgmFormat::Plain => "plain".into(),
                    PgmFormat::Raw => "raw".into(),
                },
                "n" => self.n().to_string(),
                "gamma" => self.gamma.to_string(),
                "t_end" => self.t_end.to_string(),
                "dt" => self.dt.to_string(),
                "material" => self.material.to_string(),
                "datum" => self.datum.to_string(),
                "tether" => self.tether.to_string(),
                "jump_rel" => self.jump_rel.to_string(),
                "energy_ratio" => self.energy_ratio.to_string(),
                "fine" => self.fine.to_string(),
                "coarse" => self.coarse.to_string(),
                "psf_variance" => self.psf_variance.to_string(),
                "psf_radius" => self.psf_radius.to_string(),
                "noise" => self.noise.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
                "seeds" => self.seeds.to_string(),
                "spacing" => self.spacing.to_string(),
                "threshold" => self.threshold.to_string(),
                "a" => path(&self.a),
                "b" => path(&self.b),
                "lambda_op" => path(&self.lambda_op),
                "qscale" => self.qscale.to_string(),
                _ => unreachable!("every key is echoed"),
            };
            let _ = writeln!(s, "{key} = {v}");
        }
        s
    }
}
