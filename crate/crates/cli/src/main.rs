//! `monotone`: run, compare and sweep the gallery experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde::Serialize;

use config::{RunConfig, Solver, KEYS};
use run::{execute, CliError, SummaryRow};

const OUTPUTS: &str = "\
Outputs (in the `out` directory):
  config.txt      effective configuration, sorted key = value lines
  trace.csv       solver,instance,t,stage,epsilon,iteration,j_eps,j,residual
  summary.csv     solver,instance,j,iterations,converged,match_iterations
  timing.csv      solver,instance,wall_time,match_time (the only run-dependent file)
  events.jsonl    one JSON object per stage end, phase change and run boundary
  phase.csv       fracture: t,jump,elastic_energy,phase,J,residual,iters
  errors.csv      imaging: noise,solver,error_plus,error_minus (mean over seeds)
  solution.csv    mmatrix/control/custom: index and one column per solver
  *.pgm           graymaps: fracture displacement, mmatrix solution, imaging
                  truth/observed/recovered
  sweep.csv       sweep: key,value,solver,instance,j,iterations,converged
  error.json      on failure, the same record printed to stderr

match_iterations/match_time: steps and seconds until J first comes within
1e-6 (relative) of the best final J among the solvers on that instance.

Exit status: 0 success, 2 invalid configuration, 3 solver failure, 4 I/O.";

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn cli() -> Command {
    let mut cmd = Command::new("monotone")
        .about("Monotone reweighted solver experiments")
        .subcommand_required(true)
        .after_help(OUTPUTS)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .global(true)
                .help("key = value configuration file"),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .action(ArgAction::Append)
                .global(true)
                .help("override one key; repeatable"),
        );
    for &(key, help) in KEYS {
        cmd = cmd.arg(
            Arg::new(key)
                .long(flag(key))
                .alias(key)
                .value_name("VALUE")
                .global(true)
                .hide_short_help(true)
                .help(help),
        );
    }
    cmd.subcommand(Command::new("run").about("Run the configured solvers on one experiment"))
        .subcommand(Command::new("compare").about("Run monotone, GIST and FISTA unless `solvers` is set"))
        .subcommand(
            Command::new("sweep").about("Repeat a run over values of one key").arg(
                Arg::new("over")
                    .long("over")
                    .value_name("KEY=V1,V2,...")
                    .required(true)
                    .help("key and the values to sweep"),
            ),
        )
}

fn load(m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => RunConfig::from_file(&PathBuf::from(path))?,
        None => RunConfig::default(),
    };
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    for &(key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct SweepRow {
    key: String,
    value: String,
    solver: String,
    instance: String,
    j: f64,
    iterations: usize,
    converged: bool,
    match_iterations: Option<usize>,
}

const SWEEP_HEADER: &[&str] = &[
    "key",
    "value",
    "solver",
    "instance",
    "j",
    "iterations",
    "converged",
    "match_iterations",
];

fn sweep(cfg: &RunConfig, over: &str) -> Result<(), CliError> {
    let (key, values) = over
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--over expects KEY=V1,V2,..., got '{over}'")))?;
    let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Config("--over lists no values".into()));
    }
    if key == "out" {
        return Err(CliError::Config("cannot sweep over out".into()));
    }
    let mut runs = Vec::new();
    for v in &values {
        let mut c = cfg.clone();
        c.set(key, v)?;
        c.out = cfg.out.join(format!("{key}={v}"));
        c.validate()?;
        runs.push(c);
    }
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.txt"), {
        let mut lines: Vec<String> = cfg.echo().lines().map(String::from).collect();
        lines.push(format!("sweep = {over}"));
        lines.sort();
        lines.join("\n") + "\n"
    })?;
    let results = monotone_core::par::map(&runs, execute);
    let mut rows = Vec::new();
    for (v, res) in values.iter().zip(results) {
        rows.extend(res?.into_iter().map(|r: SummaryRow| SweepRow {
            key: key.into(),
            value: v.to_string(),
            solver: r.solver,
            instance: r.instance,
            j: r.j,
            iterations: r.iterations,
            converged: r.converged,
            match_iterations: r.match_iterations,
        }));
    }
    monotone_core::io::write_csv(&cfg.out.join("sweep.csv"), SWEEP_HEADER, &rows)?;
    Ok(())
}

fn dispatch(m: &ArgMatches) -> Result<(), (Option<Box<RunConfig>>, CliError)> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    let mut cfg = load(sub).map_err(|e| (None, e))?;
    let res = match name {
        "run" => execute(&cfg).map(drop),
        "compare" => {
            if cfg.solvers.is_none() {
                cfg.solvers = Some(vec![Solver::Monotone, Solver::Gist, Solver::Fista]);
            }
            execute(&cfg).map(drop)
        }
        "sweep" => sweep(&cfg, sub.get_one::<String>("over").expect("required")),
        _ => unreachable!("unknown subcommand"),
    };
    res.map_err(|e| (Some(Box::new(cfg)), e))
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("");
            let err = CliError::Config(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match dispatch(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err((cfg, e)) => {
            let json = e.to_json();
            eprintln!("{json}");
            if let Some(cfg) = cfg {
                if fs::create_dir_all(&cfg.out).is_ok() {
                    let _ = fs::write(cfg.out.join("error.json"), format!("{json}\n"));
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        cli().debug_assert();
    }

    #[test]
    fn flags_override_set_and_file() {
        let m = cli()
            .try_get_matches_from([
                "monotone",
                "run",
                "--set",
                "lambda=0.3",
                "--eps-floor",
                "1e-9",
                "--tau=0.7",
            ])
            .unwrap();
        let cfg = load(m.subcommand().unwrap().1).unwrap();
        assert_eq!(cfg.lambda(), 0.3);
        assert_eq!(cfg.tau(), 0.7);
        assert_eq!(cfg.schedule().eps_floor, 1e-9);
    }
}
