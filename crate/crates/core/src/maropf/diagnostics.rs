use serde::{Deserialize, Serialize};

use super::DispatchSolution;
use crate::grid::NetworkCase;

/// Largest gaps left by the relaxations at a solved point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tightness {
    /// `max over (b, t) of min(p_upper − p_r/η_c, p_upper − η_d·p_r)`.
    pub conversion: f64,
    /// `max over (l, t) of f·v_up − P² − Q²`.
    pub line_cone: f64,
}

pub fn tightness(case: &NetworkCase, solution: &DispatchSolution) -> Tightness {
    let mut out = Tightness::default();
    for (bat, disp) in case.batteries.iter().zip(&solution.batteries) {
        let s = &bat.spec;
        for (&pu, &pr) in disp.p_upper.iter().zip(&disp.p_r) {
            let gap = (pu - pr / s.eta_c).min(pu - s.eta_d * pr);
            out.conversion = out.conversion.max(gap);
        }
    }
    let fl = &solution.flows;
    for l in 0..case.n_lines() {
        for t in 0..case.horizon() {
            let v_up = case.up_line(l).map_or(case.v0, |k| fl.v[k][t]);
            let gap = fl.f[l][t] * v_up - fl.p[l][t].powi(2) - fl.q[l][t].powi(2);
            out.line_cone = out.line_cone.max(gap);
        }
    }
    out
}

/// Worst violation of `v ≤ v̄`, `f ≤ f̄`, `S̲ ≤ S ≤ S̄` (componentwise);
/// zero when the solution carries no bound variables or all hold.
pub fn bound_ordering_violation(solution: &DispatchSolution) -> f64 {
    let Some(aux) = &solution.aux else {
        return 0.0;
    };
    let fl = &solution.flows;
    let pairs: [(&Vec<Vec<f64>>, &Vec<Vec<f64>>); 6] = [
        (&fl.v, &aux.v_up),
        (&fl.f, &aux.f_up),
        (&aux.p_lo, &fl.p),
        (&fl.p, &aux.p_up),
        (&aux.q_lo, &fl.q),
        (&fl.q, &aux.q_up),
    ];
    let mut worst = 0.0f64;
    for (lo, hi) in pairs {
        for (a, b) in lo.iter().flatten().zip(hi.iter().flatten()) {
            worst = worst.max(a - b);
        }
    }
    worst
}
