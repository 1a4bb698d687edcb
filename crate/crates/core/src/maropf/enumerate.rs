use rayon::prelude::*;

use super::{build_maropf, DispatchSolution, ModeGuess};
use crate::bess::Mode;
use crate::conic::solve;
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::pf::{validate, ValidationReport};

pub const DEFAULT_PATTERN_LIMIT: u64 = 1024;

#[derive(Clone, Debug)]
pub struct EnumerationOutcome {
    pub solution: DispatchSolution,
    pub report: ValidationReport,
    pub patterns: usize,
    /// Solver objective per pattern; `None` where the program was not
    /// solved to optimality or failed validation.
    pub objectives: Vec<Option<f64>>,
}

fn pattern(case: &NetworkCase, index: u64) -> ModeGuess {
    let t_len = case.horizon();
    (0..case.batteries.len())
        .map(|b| {
            (0..t_len)
                .map(|t| {
                    if index >> (b * t_len + t) & 1 == 1 {
                        Mode::Discharging
                    } else {
                        Mode::Charging
                    }
                })
                .collect()
        })
        .collect()
}

/// Solves the augmented program for every mode pattern and keeps the best
/// one whose dispatch validates.
pub fn enumerate_modes_optimum(
    case: &NetworkCase,
    limit: u64,
    tol: f64,
    validate_tol: f64,
) -> Result<EnumerationOutcome> {
    let bits = case.batteries.len() * case.horizon();
    let count = if bits < 64 { Some(1u64 << bits) } else { None };
    let count = match count {
        Some(c) if c <= limit => c,
        _ => {
            return Err(Error::EnumerationLimit {
                patterns: format!("2^{bits}"),
                limit,
            })
        }
    };

    let results: Vec<Option<(DispatchSolution, ValidationReport)>> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let built = build_maropf(case, &pattern(case, i))?;
            let (status, x) = solve(&built.program, tol)?;
            if !status.is_optimal() {
                return Ok(None);
            }
            let solution = built.extract(&x);
            let report = validate(case, &solution, validate_tol)?;
            Ok(report.feasible.then_some((solution, report)))
        })
        .collect::<Result<_>>()?;

    let objectives = results
        .iter()
        .map(|r| r.as_ref().map(|(s, _)| s.objective))
        .collect();
    let (solution, report) = results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.objective.total_cmp(&b.0.objective))
        .ok_or_else(|| Error::Solver("no mode pattern yields a feasible dispatch".into()))?;
    Ok(EnumerationOutcome {
        solution: DispatchSolution {
            method: super::Method::Enumerate,
            ..solution
        },
        report,
        patterns: count as usize,
        objectives,
    })
}
