use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use super::{max_violation, ConicProgram, LinExpr, Relation};
use crate::error::{Error, Result};

/// Default feasibility and duality-gap tolerance handed to the solver.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Returned assignments must pass the independent re-check at this multiple
/// of the solve tolerance.
pub const RECHECK_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub status: Status,
    /// Present iff `status == Optimal`.
    pub objective: Option<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Seconds.
    pub solve_time: f64,
    /// Worst violation found by the independent re-check.
    pub max_violation: f64,
    pub detail: String,
}

impl SolveStatus {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Narrow contract for an attached SOCP solver.
pub trait ConicSolver {
    fn solve(&self, program: &ConicProgram, tol: f64) -> Result<(SolveStatus, Vec<f64>)>;
}

/// Interior-point backend built on Clarabel.
#[derive(Clone, Debug, Default)]
pub struct ClarabelSolver {
    pub verbose: bool,
}

/// Solves with the default backend.
pub fn solve(program: &ConicProgram, tol: f64) -> Result<(SolveStatus, Vec<f64>)> {
    ClarabelSolver::default().solve(program, tol)
}

struct Rows {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    /// Appends the row `s = e(x)`, i.e. `-a·x + s = c` in `Ax + s = b` form.
    fn push(&mut self, e: &LinExpr, scale: f64) {
        let r = self.b.len();
        for &(v, c) in &e.terms {
            self.rows.push(r);
            self.cols.push(v.0);
            self.vals.push(-scale * c);
        }
        self.b.push(scale * e.constant);
    }

    /// Appends `s = a(x) + b(x)` scaled.
    fn push_sum(&mut self, a: &LinExpr, b: &LinExpr, sign: f64) {
        let sum = a.clone() + sign * b.clone();
        self.push(&sum.normalized(), 1.0);
    }
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, program: &ConicProgram, tol: f64) -> Result<(SolveStatus, Vec<f64>)> {
        program.validate()?;
        let start = Instant::now();
        let n = program.n_vars();
        let mut rows = Rows {
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
            b: Vec::new(),
        };
        let mut cones = Vec::new();

        let n_eq = program.linear.iter().filter(|c| c.relation == Relation::Eq).count();
        for c in program.linear.iter().filter(|c| c.relation == Relation::Eq) {
            rows.push(&c.expr, 1.0);
        }
        if n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_eq));
        }
        let n_ge = program.linear.len() - n_eq;
        for c in program.linear.iter().filter(|c| c.relation == Relation::Ge) {
            rows.push(&c.expr, 1.0);
        }
        if n_ge > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_ge));
        }
        for c in &program.soc {
            rows.push(&c.t, 1.0);
            for e in &c.x {
                rows.push(e, 1.0);
            }
            cones.push(SupportedConeT::SecondOrderConeT(1 + c.x.len()));
        }
        for c in &program.rotated {
            // ‖x‖² ≤ yz  ⇔  ‖(2x, y − z)‖ ≤ y + z
            rows.push_sum(&c.y, &c.z, 1.0);
            rows.push_sum(&c.y, &c.z, -1.0);
            for e in &c.x {
                rows.push(e, 2.0);
            }
            cones.push(SupportedConeT::SecondOrderConeT(2 + c.x.len()));
        }

        let m = rows.b.len();
        let a = CscMatrix::new_from_triplets(m, n, rows.rows, rows.cols, rows.vals);
        let p = CscMatrix::<f64>::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(v, c) in &program.objective.terms {
            q[v.0] += c;
        }

        let settings = DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            // Solver feasibility is relative to the data norm; leave room for
            // the absolute re-check.
            .tol_feas(tol / RECHECK_FACTOR)
            .tol_gap_abs(tol)
            .tol_gap_rel(tol)
            .max_iter(400)
            .equilibrate_enable(false)
            .build()
            .map_err(|e| Error::Solver(format!("settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &rows.b, &cones, settings)
            .map_err(|e| Error::Solver(format!("setup: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let x = sol.x.clone();

        let violation = max_violation(program, &x);
        let recheck_ok = violation.amount <= RECHECK_FACTOR * tol;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved if recheck_ok => Status::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Status::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Status::Unbounded,
            _ => Status::NumericalFailure,
        };
        let detail = if status == Status::Optimal {
            String::new()
        } else {
            format!(
                "clarabel status {:?} after {} iterations; worst violation {:.3e} at {}",
                sol.status, sol.iterations, violation.amount, violation.label
            )
        };
        let objective = (status == Status::Optimal).then(|| program.objective_value(&x));
        Ok((
            SolveStatus {
                status,
                objective,
                primal_residual: sol.r_prim,
                dual_residual: sol.r_dual,
                solve_time: start.elapsed().as_secs_f64(),
                max_violation: violation.amount,
                detail,
            },
            x,
        ))
    }
}
