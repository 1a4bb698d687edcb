//! Nonlinear branch-flow power flow and post-dispatch validation.
//!
//! [`solve_pf`] is a backward/forward sweep on the DistFlow equations
//!
//! ```text
//! S_l = u_l + Σ_{m child of l} S_m + z_l·f_l
//! v_l = v_up(l) − 2·Re(conj(z_l)·S_l) + |z_l|²·f_l
//! f_l = |S_l|² / v_up(l)
//! ```
//!
//! and [`validate`] feeds a dispatch through it together with the exact
//! battery model to obtain true voltages, currents, energies and signed
//! margins to every limit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bess::{
    discharge_energy, exact_conversion, inverse_conversion, soc_trajectory, BessSpec,
};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::maropf::{DispatchSolution, Setpoint};

pub const MAX_SWEEPS: usize = 100;

/// Exact operating point of one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct PfState {
    /// Squared voltage at each line's ending node.
    pub v: Vec<f64>,
    /// Squared current of each line.
    pub f: Vec<f64>,
    /// Sending-end complex power of each line.
    pub s: Vec<Complex64>,
    pub sweeps: usize,
    /// Largest residual of the three branch-flow equations.
    pub residual: f64,
}

fn upstream_v(case: &NetworkCase, v: &[f64], l: usize) -> f64 {
    case.up_line(l).map_or(case.v0, |k| v[k])
}

fn accumulate_flows(case: &NetworkCase, inj: &[Complex64], f: &[f64]) -> Vec<Complex64> {
    let mut s: Vec<Complex64> = (0..case.n_lines())
        .map(|l| inj[l] + case.lines[l].z() * f[l])
        .collect();
    for &l in case.topological_order().iter().rev() {
        if let Some(k) = case.up_line(l) {
            let child = s[l];
            s[k] += child;
        }
    }
    s
}

fn propagate_voltages(case: &NetworkCase, s: &[Complex64], f: &[f64]) -> Vec<f64> {
    let mut v = vec![case.v0; case.n_lines()];
    for &l in case.topological_order() {
        let line = &case.lines[l];
        let up = upstream_v(case, &v, l);
        v[l] = up - 2.0 * (line.z().conj() * s[l]).re + line.z_sq() * f[l];
    }
    v
}

/// Largest absolute residual of the balance, voltage-drop and
/// current-definition equations at a candidate point.
pub fn pf_residual(
    case: &NetworkCase,
    inj: &[Complex64],
    v: &[f64],
    f: &[f64],
    s: &[Complex64],
) -> f64 {
    let mut worst = 0.0f64;
    for l in 0..case.n_lines() {
        let line = &case.lines[l];
        let children: Complex64 = case.children(l).iter().map(|&m| s[m]).sum();
        let balance = s[l] - inj[l] - children - line.z() * f[l];
        let up = upstream_v(case, v, l);
        let drop = v[l] - up + 2.0 * (line.z().conj() * s[l]).re - line.z_sq() * f[l];
        let current = s[l].norm_sqr() - f[l] * up;
        worst = worst.max(balance.norm()).max(drop.abs()).max(current.abs());
    }
    worst
}

/// Solves the branch-flow equations for fixed consumption-signed nodal
/// injections (`injections[l]` at node `l + 1`). `t` only labels errors.
pub fn solve_pf(case: &NetworkCase, injections: &[Complex64], t: usize) -> Result<PfState> {
    let n = case.n_lines();
    if injections.len() != n {
        return Err(Error::Dimension(format!(
            "{} injections for {n} nodes",
            injections.len()
        )));
    }
    let mut f = vec![0.0; n];
    let mut damping = 1.0;
    let mut prev_delta = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        let s = accumulate_flows(case, injections, &f);
        let v = propagate_voltages(case, &s, &f);
        if v.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::PowerFlowDivergence { t, sweeps: sweep });
        }
        let mut delta = 0.0f64;
        let mut scale = 1.0f64;
        for l in 0..n {
            let target = s[l].norm_sqr() / upstream_v(case, &v, l);
            let step = target - f[l];
            f[l] += damping * step;
            delta = delta.max(step.abs());
            scale = scale.max(target);
        }
        if !delta.is_finite() {
            return Err(Error::PowerFlowDivergence { t, sweeps: sweep });
        }
        if delta <= 1e-15 * scale {
            let s = accumulate_flows(case, injections, &f);
            let v = propagate_voltages(case, &s, &f);
            let residual = pf_residual(case, injections, &v, &f, &s);
            return Ok(PfState {
                v,
                f,
                s,
                sweeps: sweep,
                residual,
            });
        }
        if delta > prev_delta {
            damping *= 0.5;
        }
        prev_delta = delta;
    }
    Err(Error::PowerFlowDivergence {
        t,
        sweeps: MAX_SWEEPS,
    })
}

/// Signed worst-case distances to each limit family (negative = violated).
/// Families without members report `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub v_upper: f64,
    pub v_lower: f64,
    pub current: f64,
    pub p_line: f64,
    pub q_line: f64,
    pub soc_lower: f64,
    pub soc_upper: f64,
    pub cycle: f64,
    pub inverter_current: f64,
    pub bess_power: f64,
}

impl Margins {
    fn unbounded() -> Self {
        Margins {
            v_upper: f64::INFINITY,
            v_lower: f64::INFINITY,
            current: f64::INFINITY,
            p_line: f64::INFINITY,
            q_line: f64::INFINITY,
            soc_lower: f64::INFINITY,
            soc_upper: f64::INFINITY,
            cycle: f64::INFINITY,
            inverter_current: f64::INFINITY,
            bess_power: f64::INFINITY,
        }
    }

    pub fn named(&self) -> [(&'static str, f64); 10] {
        [
            ("v_upper", self.v_upper),
            ("v_lower", self.v_lower),
            ("current", self.current),
            ("p_line", self.p_line),
            ("q_line", self.q_line),
            ("soc_lower", self.soc_lower),
            ("soc_upper", self.soc_upper),
            ("cycle", self.cycle),
            ("inverter_current", self.inverter_current),
            ("bess_power", self.bess_power),
        ]
    }

    pub fn min(&self) -> f64 {
        self.named().iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min)
    }
}

/// Exact battery behaviour under a dispatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BessValidation {
    pub node: usize,
    pub p_r: Vec<f64>,
    pub p_b: Vec<f64>,
    pub q_b: Vec<f64>,
    pub f_b: Vec<f64>,
    pub energy: Vec<f64>,
    pub e_dsc: f64,
    pub soc_lower_margin: f64,
    pub soc_upper_margin: f64,
    pub cycle_margin: f64,
    pub current_margin: f64,
    pub power_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub case: String,
    /// `[line][t]` exact values.
    pub v: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub batteries: Vec<BessValidation>,
    pub margins: Margins,
    pub tol: f64,
    pub feasible: bool,
    /// `Σ_t C_t·max(import_t, 0)` at the exact operating point.
    pub objective: f64,
    pub max_pf_residual: f64,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat per-(line, t) table of exact values.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map = |e: csv::Error| Error::Solver(format!("csv: {e}"));
        w.write_record(["node", "t", "v", "f", "p", "q"]).map_err(map)?;
        for l in 0..self.v.len() {
            for t in 0..self.v[l].len() {
                w.write_record(&[
                    (l + 1).to_string(),
                    t.to_string(),
                    format!("{:e}", self.v[l][t]),
                    format!("{:e}", self.f[l][t]),
                    format!("{:e}", self.p[l][t]),
                    format!("{:e}", self.q[l][t]),
                ])
                .map_err(map)?;
            }
        }
        w.flush().map_err(|e| Error::io("csv", e))?;
        Ok(())
    }
}

/// Exact discharged energy, falling back to direct reservoir accounting
/// when the conversion is lossless.
fn exact_discharge(p_b: &[f64], p_r: &[f64], spec: &BessSpec, dt: f64) -> Result<f64> {
    if spec.is_lossless_conversion() {
        Ok(p_r.iter().map(|p| (-p).max(0.0)).sum::<f64>() * dt)
    } else {
        discharge_energy(p_b, p_r, spec, dt)
    }
}

/// Replays a dispatch through the exact battery and grid models.
pub fn validate(case: &NetworkCase, solution: &DispatchSolution, tol: f64) -> Result<ValidationReport> {
    solution.check_dimensions(case)?;
    let n = case.n_lines();
    let t_len = case.horizon();

    // Exact terminal/reservoir pairs per battery.
    let mut bess_pr = Vec::with_capacity(case.batteries.len());
    let mut bess_pb = Vec::with_capacity(case.batteries.len());
    for (bat, disp) in case.batteries.iter().zip(&solution.batteries) {
        let (pr, pb): (Vec<f64>, Vec<f64>) = match disp.setpoint {
            Setpoint::Reservoir => disp
                .p_r
                .iter()
                .map(|&p| (p, exact_conversion(p, &bat.spec)))
                .unzip(),
            Setpoint::Terminal => disp
                .p_upper
                .iter()
                .map(|&p| (inverse_conversion(p, &bat.spec), p))
                .unzip(),
        };
        bess_pr.push(pr);
        bess_pb.push(pb);
    }

    let mut report_v = vec![vec![0.0; t_len]; n];
    let mut report_f = vec![vec![0.0; t_len]; n];
    let mut report_p = vec![vec![0.0; t_len]; n];
    let mut report_q = vec![vec![0.0; t_len]; n];
    let mut margins = Margins::unbounded();
    let mut objective = 0.0;
    let mut max_residual = 0.0f64;
    let mut node_v = vec![vec![0.0; t_len]; n];

    for t in 0..t_len {
        let mut inj: Vec<Complex64> = (0..n).map(|l| case.net_load[l][t]).collect();
        for d in &solution.ddgs {
            inj[d.node - 1] += Complex64::new(d.p[t], d.q[t]);
        }
        for (b, disp) in solution.batteries.iter().enumerate() {
            inj[disp.node - 1] += Complex64::new(bess_pb[b][t], disp.q_b[t]);
        }
        let state = solve_pf(case, &inj, t)?;
        max_residual = max_residual.max(state.residual);
        for (l, line) in case.lines.iter().enumerate() {
            let (v, f, s) = (state.v[l], state.f[l], state.s[l]);
            report_v[l][t] = v;
            report_f[l][t] = f;
            report_p[l][t] = s.re;
            report_q[l][t] = s.im;
            node_v[l][t] = v;
            margins.v_upper = margins.v_upper.min(line.v_max - v);
            margins.v_lower = margins.v_lower.min(v - line.v_min);
            margins.current = margins.current.min(line.i_max - f);
            margins.p_line = margins.p_line.min(line.p_max - s.re);
            margins.q_line = margins.q_line.min(line.q_max - s.im);
        }
        let import: f64 = case.root_lines().map(|l| state.s[l].re).sum();
        objective += case.prices[t] * import.max(0.0);
    }

    let mut batteries = Vec::with_capacity(case.batteries.len());
    for (b, (bat, disp)) in case.batteries.iter().zip(&solution.batteries).enumerate() {
        let spec = &bat.spec;
        let l = bat.node - 1;
        let f_b: Vec<f64> = (0..t_len)
            .map(|t| (bess_pb[b][t].powi(2) + disp.q_b[t].powi(2)) / node_v[l][t])
            .collect();
        let energy = soc_trajectory(&bess_pr[b], &f_b, spec, case.dt)?;
        let e_dsc = exact_discharge(&bess_pb[b], &bess_pr[b], spec, case.dt)?;
        let lo = spec.soc_min * spec.e_cap;
        let hi = spec.soc_max * spec.e_cap;
        let min_e = energy.iter().copied().fold(f64::INFINITY, f64::min);
        let max_e = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_fb = f_b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let power_margin = bess_pb[b]
            .iter()
            .map(|p| (spec.p_max - p).min(p - spec.p_min))
            .fold(f64::INFINITY, f64::min);
        let v = BessValidation {
            node: bat.node,
            p_r: bess_pr[b].clone(),
            p_b: bess_pb[b].clone(),
            q_b: disp.q_b.clone(),
            f_b,
            energy,
            e_dsc,
            soc_lower_margin: min_e - lo,
            soc_upper_margin: hi - max_e,
            cycle_margin: spec.n_dsc * spec.e_cap - e_dsc,
            current_margin: spec.ib_max - max_fb,
            power_margin,
        };
        margins.soc_lower = margins.soc_lower.min(v.soc_lower_margin);
        margins.soc_upper = margins.soc_upper.min(v.soc_upper_margin);
        margins.cycle = margins.cycle.min(v.cycle_margin);
        margins.inverter_current = margins.inverter_current.min(v.current_margin);
        margins.bess_power = margins.bess_power.min(v.power_margin);
        batteries.push(v);
    }

    let feasible = margins.min() >= -tol;
    Ok(ValidationReport {
        case: case.name.clone(),
        v: report_v,
        f: report_f,
        p: report_p,
        q: report_q,
        batteries,
        margins,
        tol,
        feasible,
        objective,
        max_pf_residual: max_residual,
    })
}
