//! Solver-agnostic conic program representation.
//!
//! A [`ConicProgram`] minimizes an affine objective over named scalar
//! variables subject to affine equalities (`expr == 0`), affine inequalities
//! (`expr >= 0`), second-order cones (`‖x‖ ≤ t`) and rotated cones
//! (`‖x‖² ≤ y·z`, `y, z ≥ 0`). Cone arguments are affine expressions of the
//! variables, so constants such as a fixed slack voltage can appear directly.

mod check;
mod expr;
mod solver;
mod text;

pub use check::{max_violation, Violation};
pub use expr::{LinExpr, VarId};
pub use solver::{solve, ClarabelSolver, ConicSolver, SolveStatus, Status, DEFAULT_TOL, RECHECK_FACTOR};
pub use text::parse_text;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `expr == 0`
    Eq,
    /// `expr >= 0`
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub label: String,
    pub relation: Relation,
    pub expr: LinExpr,
}

/// `‖x‖₂ ≤ t`
#[derive(Clone, Debug, PartialEq)]
pub struct SocConstraint {
    pub label: String,
    pub t: LinExpr,
    pub x: Vec<LinExpr>,
}

/// `‖x‖₂² ≤ y·z` with `y, z ≥ 0`
#[derive(Clone, Debug, PartialEq)]
pub struct RotatedConeConstraint {
    pub label: String,
    pub y: LinExpr,
    pub z: LinExpr,
    pub x: Vec<LinExpr>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConicProgram {
    pub variables: Vec<String>,
    pub linear: Vec<LinearConstraint>,
    pub soc: Vec<SocConstraint>,
    pub rotated: Vec<RotatedConeConstraint>,
    pub objective: LinExpr,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(name.into());
        VarId(self.variables.len() - 1)
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.variables[v.0]
    }

    /// `expr == 0`; returns the constraint index.
    pub fn add_eq(&mut self, label: impl Into<String>, expr: LinExpr) -> usize {
        self.push_linear(label.into(), Relation::Eq, expr)
    }

    /// `lhs == rhs`
    pub fn add_equal(&mut self, label: impl Into<String>, lhs: LinExpr, rhs: LinExpr) -> usize {
        self.add_eq(label, lhs - rhs)
    }

    /// `expr >= 0`
    pub fn add_ge(&mut self, label: impl Into<String>, expr: LinExpr) -> usize {
        self.push_linear(label.into(), Relation::Ge, expr)
    }

    /// `lhs <= rhs`
    pub fn add_le(&mut self, label: impl Into<String>, lhs: LinExpr, rhs: LinExpr) -> usize {
        self.add_ge(label, rhs - lhs)
    }

    pub fn add_soc(&mut self, label: impl Into<String>, t: LinExpr, x: Vec<LinExpr>) -> usize {
        self.soc.push(SocConstraint {
            label: label.into(),
            t: t.normalized(),
            x: x.into_iter().map(LinExpr::normalized).collect(),
        });
        self.soc.len() - 1
    }

    pub fn add_rotated(
        &mut self,
        label: impl Into<String>,
        y: LinExpr,
        z: LinExpr,
        x: Vec<LinExpr>,
    ) -> usize {
        self.rotated.push(RotatedConeConstraint {
            label: label.into(),
            y: y.normalized(),
            z: z.normalized(),
            x: x.into_iter().map(LinExpr::normalized).collect(),
        });
        self.rotated.len() - 1
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective.normalized();
    }

    pub fn count(&self, relation: Relation) -> usize {
        self.linear.iter().filter(|c| c.relation == relation).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Checks that every constraint refers to declared variables and that
    /// labels and names are single tokens.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let check_expr = |label: &str, e: &LinExpr| -> Result<()> {
            if let Some((v, _)) = e.terms.iter().find(|(v, _)| v.0 >= n) {
                return Err(Error::Program(format!("{label}: undeclared variable x{}", v.0)));
            }
            if e.constant.is_nan() || e.terms.iter().any(|(_, c)| !c.is_finite()) {
                return Err(Error::Program(format!("{label}: non-finite coefficient")));
            }
            Ok(())
        };
        let check_token = |what: &str, s: &str| -> Result<()> {
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '|') {
                return Err(Error::Program(format!("{what} {s:?} must be a non-empty token")));
            }
            Ok(())
        };
        for name in &self.variables {
            check_token("variable name", name)?;
        }
        check_expr("objective", &self.objective)?;
        for c in &self.linear {
            check_token("label", &c.label)?;
            check_expr(&c.label, &c.expr)?;
        }
        for c in &self.soc {
            check_token("label", &c.label)?;
            check_expr(&c.label, &c.t)?;
            for e in &c.x {
                check_expr(&c.label, e)?;
            }
        }
        for c in &self.rotated {
            check_token("label", &c.label)?;
            check_expr(&c.label, &c.y)?;
            check_expr(&c.label, &c.z)?;
            for e in &c.x {
                check_expr(&c.label, e)?;
            }
        }
        Ok(())
    }

    /// Human-readable dump; see [`parse_text`] for the inverse.
    pub fn to_text(&self) -> String {
        text::write_text(self)
    }

    fn push_linear(&mut self, label: String, relation: Relation, expr: LinExpr) -> usize {
        self.linear.push(LinearConstraint {
            label,
            relation,
            expr: expr.normalized(),
        });
        self.linear.len() - 1
    }
}
