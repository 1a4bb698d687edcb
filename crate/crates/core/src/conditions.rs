//! A-priori sufficient conditions for exactness of the augmented relaxation.
//!
//! With `R = diag(r)`, `X = diag(x)`, `Z = diag(|z|²)`:
//!
//! ```text
//! D = 2·H·R·(H − I)·R + 2·H·X·(H − I)·X + H·Z
//! E = 2·diag(π)·H·R + 2·diag(ϱ)·H·X + diag(ϑ)·D
//!
//! C1: ‖E‖_F < 1
//! C2: D·E ≤ η₁·D
//! C3: (H·R·E) ∘ H ≤ η₂·H·R
//! C4: H·R·E·E ≤ η₃·H·R·E
//! ```
//!
//! `π_l = max(P_max,l, |(H·p_min)_l|) / v_min,l`, `ϱ` likewise with `Q` and
//! `q_min`, and `ϑ = π² + ϱ²`. The nodal minima `p_min`, `q_min` are the
//! smallest consumption-signed injections the node can present over the
//! horizon, counting the full range of every device attached to it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{graph_matrices, GraphMatrices, NetworkCase};

pub const DEFAULT_ETA: f64 = 1.0 - 1e-6;

#[derive(Clone, Debug)]
pub struct ConditionMatrices {
    pub d: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub pi: DVector<f64>,
    pub rho: DVector<f64>,
    pub theta: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            eta1: DEFAULT_ETA,
            eta2: DEFAULT_ETA,
            eta3: DEFAULT_ETA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub case: String,
    pub e_norm: f64,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub thresholds: Thresholds,
    /// Smallest `rhs − lhs` over all entries; negative iff the condition
    /// fails.
    pub c2_margin: f64,
    pub c3_margin: f64,
    pub c4_margin: f64,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4
    }

    pub fn failed(&self) -> Vec<String> {
        [("C1", self.c1), ("C2", self.c2), ("C3", self.c3), ("C4", self.c4)]
            .into_iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.to_string())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Smallest consumption-signed active and reactive injection of every node.
pub fn nodal_minima(case: &NetworkCase) -> (DVector<f64>, DVector<f64>) {
    let n = case.n_lines();
    let mut p = DVector::from_fn(n, |l, _| {
        case.net_load[l].iter().map(|s| s.re).fold(f64::INFINITY, f64::min)
    });
    let mut q = DVector::from_fn(n, |l, _| {
        case.net_load[l].iter().map(|s| s.im).fold(f64::INFINITY, f64::min)
    });
    for l in 0..n {
        if !p[l].is_finite() {
            p[l] = 0.0;
        }
        if !q[l].is_finite() {
            q[l] = 0.0;
        }
    }
    for d in &case.ddgs {
        p[d.node - 1] += d.p_min;
        q[d.node - 1] -= d.s_max;
    }
    for b in &case.batteries {
        let l = b.node - 1;
        p[l] += b.spec.p_min;
        q[l] -= (b.spec.ib_max * case.lines[l].v_max).sqrt();
    }
    (p, q)
}

pub fn build_condition_matrices(
    case: &NetworkCase,
    gm: &GraphMatrices,
) -> Result<ConditionMatrices> {
    let n = case.n_lines();
    if let Some(l) = case.lines.iter().position(|line| line.v_min <= 0.0) {
        return Err(Error::Parameter(format!(
            "line ending at node {} has v_min = 0; the condition scalars are undefined",
            l + 1
        )));
    }
    let h = gm.h_f64();
    let eye = DMatrix::<f64>::identity(n, n);
    let r = DMatrix::from_diagonal(&DVector::from_fn(n, |l, _| case.lines[l].r));
    let x = DMatrix::from_diagonal(&DVector::from_fn(n, |l, _| case.lines[l].x));
    let z2 = DMatrix::from_diagonal(&DVector::from_fn(n, |l, _| case.lines[l].z_sq()));
    let below = &h - &eye;

    let d = 2.0 * &h * &r * &below * &r + 2.0 * &h * &x * &below * &x + &h * &z2;

    let (p_min, q_min) = nodal_minima(case);
    let hp = &h * &p_min;
    let hq = &h * &q_min;
    let pi = DVector::from_fn(n, |l, _| case.lines[l].p_max.max(hp[l].abs()) / case.lines[l].v_min);
    let rho = DVector::from_fn(n, |l, _| case.lines[l].q_max.max(hq[l].abs()) / case.lines[l].v_min);
    let theta = pi.component_mul(&pi) + rho.component_mul(&rho);

    let e = 2.0 * DMatrix::from_diagonal(&pi) * &h * &r
        + 2.0 * DMatrix::from_diagonal(&rho) * &h * &x
        + DMatrix::from_diagonal(&theta) * &d;
    Ok(ConditionMatrices {
        d,
        e,
        pi,
        rho,
        theta,
    })
}

/// Smallest `rhs − lhs`; entries with a zero right-hand side only need a
/// non-positive left-hand side, which the same difference already encodes.
fn elementwise_margin(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    rhs.iter()
        .zip(lhs.iter())
        .map(|(r, l)| r - l)
        .fold(f64::INFINITY, f64::min)
}

pub fn check_conditions(case: &NetworkCase) -> Result<ConditionReport> {
    check_conditions_with(case, Thresholds::default())
}

pub fn check_conditions_with(case: &NetworkCase, eta: Thresholds) -> Result<ConditionReport> {
    let gm = graph_matrices(case);
    let m = build_condition_matrices(case, &gm)?;
    let h = gm.h_f64();
    let n = case.n_lines();
    let r = DMatrix::from_diagonal(&DVector::from_fn(n, |l, _| case.lines[l].r));
    let hr = &h * &r;
    let hre = &hr * &m.e;

    let e_norm = m.e.norm();
    let c2_margin = elementwise_margin(&(&m.d * &m.e), &(eta.eta1 * &m.d));
    let c3_margin = elementwise_margin(&hre.component_mul(&h), &(eta.eta2 * &hr));
    let c4_margin = elementwise_margin(&(&hre * &m.e), &(eta.eta3 * &hre));
    let report = ConditionReport {
        case: case.name.clone(),
        e_norm,
        c1: e_norm < 1.0,
        c2: c2_margin >= 0.0,
        c3: c3_margin >= 0.0,
        c4: c4_margin >= 0.0,
        thresholds: eta,
        c2_margin,
        c3_margin,
        c4_margin,
    };
    Ok(report)
}
