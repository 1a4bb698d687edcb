//! The augmented relaxed OPF, its two baselines, and the sign-guess loop.

mod build;
mod diagnostics;
mod enumerate;
mod iterate;
mod solution;

pub use build::BuiltProgram;
pub use diagnostics::{bound_ordering_violation, tightness, Tightness};
pub use enumerate::{enumerate_modes_optimum, EnumerationOutcome, DEFAULT_PATTERN_LIMIT};
pub use iterate::{iterate_maropf, IterateOptions, IterationEntry, IterationLog, IterationOutcome};
pub use solution::{
    AuxBounds, BessDispatch, DdgDispatch, DispatchSolution, Flows, Method, Setpoint,
};

use crate::bess::Mode;
use crate::conic::{solve, SolveStatus};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use build::{build, BessModel, GridModel};

/// Guessed battery mode, indexed `[battery][t]` in case order.
pub type ModeGuess = Vec<Vec<Mode>>;

/// Augmented relaxation for a fixed mode guess.
pub fn build_maropf(case: &NetworkCase, guess: &ModeGuess) -> Result<BuiltProgram> {
    build(case, GridModel::Augmented, BessModel::Relaxed(guess), Method::Maropf)
}

/// Plain branch-flow relaxation with limits on the exact variables and the
/// split charge/discharge battery model.
pub fn build_ropf(case: &NetworkCase) -> Result<BuiltProgram> {
    build(case, GridModel::Plain, BessModel::SplitLinear, Method::Ropf)
}

/// Augmented grid model with the split charge/discharge battery model.
pub fn build_relaxed_linear(case: &NetworkCase) -> Result<BuiltProgram> {
    build(
        case,
        GridModel::Augmented,
        BessModel::SplitLinear,
        Method::RelaxedLinear,
    )
}

/// Discharging where the price is in the top quartile (nearest-rank 75th
/// percentile, strictly above the cheapest step), charging elsewhere.
pub fn default_initial_guess(case: &NetworkCase) -> ModeGuess {
    let mut sorted = case.prices.clone();
    sorted.sort_by(f64::total_cmp);
    let t_len = sorted.len();
    let row: Vec<Mode> = if t_len == 0 {
        Vec::new()
    } else {
        let rank = ((0.75 * t_len as f64).ceil() as usize).clamp(1, t_len);
        let q75 = sorted[rank - 1];
        let cheapest = sorted[0];
        case.prices
            .iter()
            .map(|&c| {
                if c >= q75 && c > cheapest {
                    Mode::Discharging
                } else {
                    Mode::Charging
                }
            })
            .collect()
    };
    vec![row; case.batteries.len()]
}

/// Solves a built program once, failing unless the solver reports an
/// optimum that passes the independent re-check.
pub fn solve_program(built: &BuiltProgram, tol: f64) -> Result<(SolveStatus, DispatchSolution)> {
    let (status, x) = solve(&built.program, tol)?;
    if !status.is_optimal() {
        return Err(Error::Solver(format!(
            "{} program: {} {}",
            built.method, status.status, status.detail
        )));
    }
    Ok((status, built.extract(&x)))
}
