use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{build_maropf, default_initial_guess, DispatchSolution, ModeGuess};
use crate::bess::Mode;
use crate::conic::{solve, Status, DEFAULT_TOL};
use crate::conditions::check_conditions;
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::pf::{validate, ValidationReport};

#[derive(Clone, Debug, PartialEq)]
pub struct IterateOptions {
    pub max_iters: usize,
    /// Solver tolerance.
    pub tol: f64,
    /// Reservoir powers with `|p_r|` below this keep their previous mode.
    pub mode_band: f64,
    /// Margin tolerance used when validating iterates.
    pub validate_tol: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            max_iters: 10,
            tol: DEFAULT_TOL,
            mode_band: 1e-7,
            validate_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry {
    pub iteration: usize,
    pub objective: f64,
    /// Mode guess used by this iteration, one `C`/`D` string per battery
    /// joined with `|`.
    pub modes: String,
    /// Modes that differ between this guess and the one derived from its
    /// solution.
    pub flips: usize,
    pub status: Status,
    pub feasible: bool,
    /// Seconds, including validation.
    pub wall_time: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub entries: Vec<IterationEntry>,
}

impl IterationLog {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.entries {
            w.serialize(e).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("iteration log", e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub solution: DispatchSolution,
    pub report: ValidationReport,
    pub converged: bool,
    pub log: IterationLog,
    /// Every iterate with its validation, in order.
    pub iterates: Vec<(DispatchSolution, ValidationReport)>,
}

impl IterationOutcome {
    pub fn iterations(&self) -> usize {
        self.log.entries.len()
    }
}

fn format_modes(guess: &ModeGuess) -> String {
    guess
        .iter()
        .map(|row| row.iter().map(|m| m.as_char()).collect::<String>())
        .collect::<Vec<_>>()
        .join("|")
}

fn derive_modes(solution: &DispatchSolution, previous: &ModeGuess, band: f64) -> ModeGuess {
    solution
        .batteries
        .iter()
        .zip(previous)
        .map(|(b, prev)| {
            b.p_r
                .iter()
                .zip(prev)
                .map(|(&p, &m)| if p.abs() < band { m } else { Mode::of(p) })
                .collect()
        })
        .collect()
}

/// Runs the build/solve/re-derive loop until the mode guess is a fixed
/// point of the solution's reservoir-power signs.
pub fn iterate_maropf(
    case: &NetworkCase,
    init_guess: Option<ModeGuess>,
    opts: &IterateOptions,
) -> Result<IterationOutcome> {
    if opts.max_iters == 0 {
        return Err(Error::Parameter("max_iters must be at least 1".into()));
    }
    match check_conditions(case) {
        Ok(r) if !r.all_pass() => log::warn!(
            "{}: sufficient exactness conditions fail ({}); feasibility is not guaranteed",
            case.name,
            r.failed().join(", ")
        ),
        Err(e) => log::warn!("{}: conditions not checked: {e}", case.name),
        _ => {}
    }

    let mut guess = init_guess.unwrap_or_else(|| default_initial_guess(case));
    let mut log = IterationLog::default();
    let mut iterates = Vec::new();
    for k in 0..opts.max_iters {
        let start = Instant::now();
        let built = build_maropf(case, &guess)?;
        let (status, x) = solve(&built.program, opts.tol)?;
        if !status.is_optimal() {
            log::error!("iteration {k}: {} {}", status.status, status.detail);
            return Err(Error::IterationSolve {
                iteration: k,
                status: format!("{} {}", status.status, status.detail),
                program: Box::new(built.program),
            });
        }
        let solution = built.extract(&x);
        let report = validate(case, &solution, opts.validate_tol)?;
        let next = derive_modes(&solution, &guess, opts.mode_band);
        let flips = next
            .iter()
            .flatten()
            .zip(guess.iter().flatten())
            .filter(|(a, b)| a != b)
            .count();
        log.entries.push(IterationEntry {
            iteration: k,
            objective: solution.objective,
            modes: format_modes(&guess),
            flips,
            status: status.status,
            feasible: report.feasible,
            wall_time: start.elapsed().as_secs_f64(),
        });
        log::info!(
            "{} iteration {k}: objective {:.9e}, flips {flips}, feasible {}",
            case.name,
            solution.objective,
            report.feasible
        );
        iterates.push((solution, report));
        if flips == 0 {
            let (solution, report) = iterates.last().cloned().expect("one iterate");
            return Ok(IterationOutcome {
                solution,
                report,
                converged: true,
                log,
                iterates,
            });
        }
        guess = next;
    }

    log::warn!(
        "{}: no mode fixed point after {} iterations",
        case.name,
        opts.max_iters
    );
    let best = iterates
        .iter()
        .filter(|(_, r)| r.feasible)
        .min_by(|a, b| a.0.objective.total_cmp(&b.0.objective))
        .or_else(|| iterates.last())
        .cloned()
        .expect("one iterate");
    Ok(IterationOutcome {
        solution: best.0,
        report: best.1,
        converged: false,
        log,
        iterates,
    })
}
