//! Constraint evaluation independent of any solver.

use super::{ConicProgram, LinExpr, Relation};

/// Largest constraint violation of an assignment and where it occurs.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub amount: f64,
    pub label: String,
}

fn norm(xs: &[LinExpr], x: &[f64]) -> f64 {
    xs.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt()
}

/// Evaluates every constraint at `x` and returns the worst violation
/// (zero when all constraints hold).
///
/// Rotated cones are measured in their equivalent standard form
/// `‖(2x, y − z)‖ ≤ y + z`, so the amount has the units of `y + z` rather
/// than of their product.
pub fn max_violation(program: &ConicProgram, x: &[f64]) -> Violation {
    let mut worst = Violation {
        amount: 0.0,
        label: String::new(),
    };
    let mut note = |amount: f64, label: &str| {
        if amount > worst.amount || amount.is_nan() {
            worst = Violation {
                amount: if amount.is_nan() { f64::INFINITY } else { amount },
                label: label.to_string(),
            };
        }
    };
    for c in &program.linear {
        let value = c.expr.eval(x);
        let amount = match c.relation {
            Relation::Eq => value.abs(),
            Relation::Ge => -value,
        };
        note(amount, &c.label);
    }
    for c in &program.soc {
        note(norm(&c.x, x) - c.t.eval(x), &c.label);
    }
    for c in &program.rotated {
        let y = c.y.eval(x);
        let z = c.z.eval(x);
        let nx = norm(&c.x, x);
        let lhs = (4.0 * nx * nx + (y - z).powi(2)).sqrt();
        note(lhs - (y + z), &c.label);
        note(-y, &c.label);
        note(-z, &c.label);
    }
    worst
}
