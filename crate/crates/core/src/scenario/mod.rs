//! Scenario orchestration: case resolution, method runs, artifacts.
//!
//! A run writes, under the output directory,
//!
//! ```text
//! <method>/solution.json    dispatch
//! <method>/iterations.csv   iteration log
//! <method>/report.json      post-dispatch validation
//! summary.csv               one row per method
//! ```

mod bundled;
mod synthetic;

pub use bundled::{bundled_case, bundled_case_file, BUNDLED};
pub use synthetic::{gen_synthetic, SyntheticSpec};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::DEFAULT_TOL;
use crate::error::{Error, Result};
use crate::grid::{load_case, NetworkCase};
use crate::maropf::{
    build_relaxed_linear, build_ropf, enumerate_modes_optimum, iterate_maropf, solve_program,
    DispatchSolution, IterateOptions, IterationEntry, IterationLog, Method,
    DEFAULT_PATTERN_LIMIT,
};
use crate::pf::{validate, ValidationReport};

fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_validate_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    10
}
fn default_limit() -> u64 {
    DEFAULT_PATTERN_LIMIT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// A case file path, `bundled:<name>`, or
    /// `synthetic:<nodes>:<steps>:<pv>:<batteries>` (uses `seed`).
    pub case: String,
    pub methods: Vec<Method>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_validate_tol")]
    pub validate_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_limit")]
    pub enumerate_limit: u64,
}

impl ScenarioConfig {
    pub fn new(case: impl Into<String>, methods: Vec<Method>, out_dir: impl Into<PathBuf>) -> Self {
        ScenarioConfig {
            case: case.into(),
            methods,
            tol: DEFAULT_TOL,
            validate_tol: default_validate_tol(),
            max_iters: default_max_iters(),
            out_dir: out_dir.into(),
            seed: 0,
            enumerate_limit: DEFAULT_PATTERN_LIMIT,
        }
    }

    pub fn iterate_options(&self) -> IterateOptions {
        IterateOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            validate_tol: self.validate_tol,
            ..IterateOptions::default()
        }
    }
}

/// Resolves a case reference (see [`ScenarioConfig::case`]).
pub fn resolve_case(reference: &str, seed: u64) -> Result<NetworkCase> {
    if let Some(name) = reference.strip_prefix("bundled:") {
        return bundled_case(name);
    }
    if let Some(rest) = reference.strip_prefix("synthetic:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || Error::Parameter(format!("bad synthetic reference {reference:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let spec = SyntheticSpec {
            seed,
            nodes: parts[0].parse().map_err(|_| bad())?,
            steps: parts[1].parse().map_err(|_| bad())?,
            pv_penetration: parts[2].parse().map_err(|_| bad())?,
            batteries: parts[3].parse().map_err(|_| bad())?,
        };
        return gen_synthetic(&spec)?.into_case();
    }
    load_case(reference)
}

#[derive(Clone, Debug)]
pub struct MethodRun {
    pub method: Method,
    pub solution: DispatchSolution,
    pub report: ValidationReport,
    pub log: IterationLog,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

fn single_entry(solution: &DispatchSolution, feasible: bool, wall_time: f64) -> IterationLog {
    IterationLog {
        entries: vec![IterationEntry {
            iteration: 0,
            objective: solution.objective,
            modes: String::new(),
            flips: 0,
            status: crate::conic::Status::Optimal,
            feasible,
            wall_time,
        }],
    }
}

/// Runs one method on a case and validates the result.
pub fn run_method(case: &NetworkCase, method: Method, config: &ScenarioConfig) -> Result<MethodRun> {
    let start = Instant::now();
    let (solution, report, log, converged) = match method {
        Method::Maropf => {
            let out = iterate_maropf(case, None, &config.iterate_options())?;
            (out.solution, out.report, out.log, out.converged)
        }
        Method::Ropf | Method::RelaxedLinear => {
            let built = if method == Method::Ropf {
                build_ropf(case)?
            } else {
                build_relaxed_linear(case)?
            };
            let (_, solution) = solve_program(&built, config.tol)?;
            let report = validate(case, &solution, config.validate_tol)?;
            let log = single_entry(&solution, report.feasible, start.elapsed().as_secs_f64());
            (solution, report, log, true)
        }
        Method::Enumerate => {
            let out = enumerate_modes_optimum(
                case,
                config.enumerate_limit,
                config.tol,
                config.validate_tol,
            )?;
            let log = single_entry(&out.solution, out.report.feasible, start.elapsed().as_secs_f64());
            (out.solution, out.report, log, true)
        }
    };
    Ok(MethodRun {
        method,
        solution,
        report,
        log,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    /// Objective of the solved program.
    pub objective: f64,
    /// Import cost of the validated operating point.
    pub validated_cost: f64,
    pub feasible: bool,
    pub min_margin: f64,
    pub v_upper_margin: f64,
    pub v_lower_margin: f64,
    pub current_margin: f64,
    pub soc_lower_margin: f64,
    pub soc_upper_margin: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
}

impl SummaryRow {
    pub fn of(run: &MethodRun) -> Self {
        let m = &run.report.margins;
        SummaryRow {
            method: run.method,
            objective: run.solution.objective,
            validated_cost: run.report.objective,
            feasible: run.report.feasible,
            min_margin: m.min(),
            v_upper_margin: m.v_upper,
            v_lower_margin: m.v_lower,
            current_margin: m.current,
            soc_lower_margin: m.soc_lower,
            soc_upper_margin: m.soc_upper,
            iterations: run.log.entries.len(),
            converged: run.converged,
            wall_time: run.wall_time,
        }
    }
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_method_artifacts(dir: &Path, run: &MethodRun) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    write(&dir.join("solution.json"), run.solution.to_json().as_bytes())?;
    write(&dir.join("iterations.csv"), run.log.to_csv_string().as_bytes())?;
    write(&dir.join("report.json"), run.report.to_json().as_bytes())
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Loads the case, runs every configured method (concurrently), and writes
/// the artifacts. Failures name the stage they occurred in.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<SummaryRow>> {
    if config.methods.is_empty() {
        return Err(Error::at_stage("config")(Error::Parameter(
            "at least one method is required".into(),
        )));
    }
    let case = resolve_case(&config.case, config.seed).map_err(Error::at_stage("load"))?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))
        .map_err(Error::at_stage("output"))?;

    let runs: Vec<MethodRun> = config
        .methods
        .par_iter()
        .map(|&m| {
            let run = run_method(&case, m, config).map_err(Error::at_stage(m.name()))?;
            write_method_artifacts(&config.out_dir.join(m.name()), &run)
                .map_err(Error::at_stage("output"))?;
            Ok(run)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SummaryRow> = runs.iter().map(SummaryRow::of).collect();
    let csv = summary_csv(&rows).map_err(Error::at_stage("output"))?;
    write(&config.out_dir.join("summary.csv"), csv.as_bytes()).map_err(Error::at_stage("output"))?;
    Ok(rows)
}
