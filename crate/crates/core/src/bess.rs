//! Battery model: exact conversion and energy accounting, plus the convex
//! relaxation installed into the dispatch program.
//!
//! Reservoir power `p_r` is what the energy store sees; terminal power `p_b`
//! is what the grid sees. Both are positive while charging. Every energy
//! summand is multiplied by the step length so energies come out in p.u.·h.

use serde::{Deserialize, Serialize};

use crate::conic::{ConicProgram, LinExpr, VarId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Charging,
    Discharging,
}

impl Mode {
    /// Mode implied by a reservoir power; zero counts as charging.
    pub fn of(p_r: f64) -> Mode {
        if p_r >= 0.0 {
            Mode::Charging
        } else {
            Mode::Discharging
        }
    }

    pub fn flipped(self) -> Mode {
        match self {
            Mode::Charging => Mode::Discharging,
            Mode::Discharging => Mode::Charging,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Mode::Charging => 'C',
            Mode::Discharging => 'D',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BessSpec {
    pub eta_c: f64,
    pub eta_d: f64,
    /// Internal equivalent resistance.
    pub r_b: f64,
    /// Energy capacity, p.u.·h.
    pub e_cap: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Initial stored energy, p.u.·h.
    pub e0: f64,
    /// Squared inverter current limit.
    pub ib_max: f64,
    /// Terminal active power bounds.
    pub p_min: f64,
    pub p_max: f64,
    /// Reservoir ramp bounds per step (`ramp_dn <= 0 <= ramp_up`).
    pub ramp_dn: f64,
    pub ramp_up: f64,
    /// Discharge cycles allowed over the horizon.
    pub n_dsc: f64,
}

impl BessSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        for (name, eta) in [("eta_c", self.eta_c), ("eta_d", self.eta_d)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(format!("{name} must be in (0, 1], got {eta}"));
            }
        }
        if !(self.r_b >= 0.0) {
            return bad(format!("r_b must be >= 0, got {}", self.r_b));
        }
        if !(self.e_cap > 0.0) {
            return bad(format!("e_cap must be > 0, got {}", self.e_cap));
        }
        if !(0.0 <= self.soc_min && self.soc_min <= self.soc_max && self.soc_max <= 1.0) {
            return bad("need 0 <= soc_min <= soc_max <= 1".into());
        }
        let (lo, hi) = (self.soc_min * self.e_cap, self.soc_max * self.e_cap);
        if !(lo <= self.e0 && self.e0 <= hi) {
            return bad(format!("e0 = {} outside [{lo}, {hi}]", self.e0));
        }
        if !(self.ramp_dn <= 0.0 && 0.0 <= self.ramp_up) {
            return bad("need ramp_dn <= 0 <= ramp_up".into());
        }
        if !(self.p_min <= 0.0 && 0.0 <= self.p_max) {
            return bad("need p_min <= 0 <= p_max".into());
        }
        if !(self.ib_max >= 0.0 && self.n_dsc >= 0.0) {
            return bad("ib_max and n_dsc must be >= 0".into());
        }
        Ok(())
    }

    pub fn is_lossless_conversion(&self) -> bool {
        self.eta_c * self.eta_d >= 1.0
    }

    /// `η_c / (1 − η_c·η_d)`, the factor turning terminal-side conversion
    /// surplus into discharged reservoir energy.
    pub fn discharge_factor(&self) -> Result<f64> {
        let rt = self.eta_c * self.eta_d;
        if rt >= 1.0 {
            return Err(Error::Parameter(format!(
                "discharge energy needs eta_c*eta_d < 1, got {rt}"
            )));
        }
        Ok(self.eta_c / (1.0 - rt))
    }
}

/// Terminal power for a reservoir power: `max(p_r/η_c, η_d·p_r)`.
pub fn exact_conversion(p_r: f64, spec: &BessSpec) -> f64 {
    (p_r / spec.eta_c).max(spec.eta_d * p_r)
}

/// Terminal power under an assumed mode. Never exceeds [`exact_conversion`].
pub fn lower_bound_conversion(p_r: f64, guessed: Mode, spec: &BessSpec) -> f64 {
    match guessed {
        Mode::Charging => p_r / spec.eta_c,
        Mode::Discharging => spec.eta_d * p_r,
    }
}

/// Reservoir power produced by a terminal power setpoint.
pub fn inverse_conversion(p_b: f64, spec: &BessSpec) -> f64 {
    if p_b >= 0.0 {
        spec.eta_c * p_b
    } else {
        p_b / spec.eta_d
    }
}

/// Stored energy after each step, `E_t = E_0 + Σ_{t'≤t} (p_r − r_b·f_b)·Δt`.
pub fn soc_trajectory(p_r: &[f64], f_b: &[f64], spec: &BessSpec, dt: f64) -> Result<Vec<f64>> {
    if p_r.len() != f_b.len() {
        return Err(Error::Parameter(format!(
            "series lengths differ: {} vs {}",
            p_r.len(),
            f_b.len()
        )));
    }
    let mut energy = spec.e0;
    Ok(p_r
        .iter()
        .zip(f_b)
        .map(|(p, f)| {
            energy += (p - spec.r_b * f) * dt;
            energy
        })
        .collect())
}

/// Total discharged reservoir energy from terminal and reservoir series,
/// `η_c/(1 − η_c·η_d) · Σ (p_b − p_r/η_c)·Δt`.
pub fn discharge_energy(p_b: &[f64], p_r: &[f64], spec: &BessSpec, dt: f64) -> Result<f64> {
    if p_b.len() != p_r.len() {
        return Err(Error::Parameter(format!(
            "series lengths differ: {} vs {}",
            p_b.len(),
            p_r.len()
        )));
    }
    let k = spec.discharge_factor()?;
    let surplus: f64 = p_b
        .iter()
        .zip(p_r)
        .map(|(b, r)| b - r / spec.eta_c)
        .sum();
    Ok(k * surplus * dt)
}

/// Program variables of one battery, one entry per time step.
#[derive(Clone, Debug)]
pub struct BessHandles {
    pub p_r: Vec<VarId>,
    pub q_b: Vec<VarId>,
    /// Upper bound on terminal active power.
    pub p_upper: Vec<VarId>,
    /// Mode-guessed lower bound on terminal active power.
    pub p_lower: Vec<VarId>,
    /// Upper bound on squared inverter current.
    pub f_b: Vec<VarId>,
    /// Squared voltage of the host node.
    pub v: Vec<LinExpr>,
    /// Loss-inclusive (lower) and lossless (upper) energy bounds.
    pub e_lo: Vec<VarId>,
    pub e_hi: Vec<VarId>,
    /// Upper bound on total discharged energy.
    pub e_dsc: VarId,
}

/// Indices of the constraints installed for one battery.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InstalledConstraints {
    pub linear: Vec<usize>,
    pub rotated: Vec<usize>,
}

/// Installs the convex battery relaxation for one battery:
///
/// * `p_upper ≥ p_r/η_c` and `p_upper ≥ η_d·p_r`
/// * `p_lower` fixed to the branch selected by the guessed mode
/// * `f_b ≥ 0` and `p_upper² + q_b² ≤ f_b·v`
/// * `e_lo` (charged with `r_b·f_b` losses) and `e_hi` (lossless)
/// * `e_dsc` from the discharge factor. A battery with `η_c·η_d = 1` has no
///   conversion surplus to measure discharge with, so auxiliary
///   `d_t ≥ max(0, −p_r)` variables are added and `e_dsc = Σ d_t·Δt`.
pub fn relaxed_bess_constraints(
    spec: &BessSpec,
    modes: &[Mode],
    dt: f64,
    tag: &str,
    program: &mut ConicProgram,
    h: &BessHandles,
) -> Result<InstalledConstraints> {
    let t_len = modes.len();
    let lens = [
        ("p_r", h.p_r.len()),
        ("q_b", h.q_b.len()),
        ("p_upper", h.p_upper.len()),
        ("p_lower", h.p_lower.len()),
        ("f_b", h.f_b.len()),
        ("v", h.v.len()),
        ("e_lo", h.e_lo.len()),
        ("e_hi", h.e_hi.len()),
    ];
    for (name, len) in lens {
        if len != t_len {
            return Err(Error::Builder(format!(
                "{tag}: handle {name} has {len} entries, expected {t_len}"
            )));
        }
    }
    let declared = program.n_vars();
    let undeclared = [&h.p_r, &h.q_b, &h.p_upper, &h.p_lower, &h.f_b, &h.e_lo, &h.e_hi]
        .into_iter()
        .flatten()
        .chain(std::iter::once(&h.e_dsc))
        .find(|v| v.0 >= declared);
    if let Some(v) = undeclared {
        return Err(Error::Builder(format!("{tag}: handle x{} is not declared", v.0)));
    }

    let mut out = InstalledConstraints::default();
    let mut e_lo_expr = LinExpr::constant(spec.e0);
    let mut e_hi_expr = LinExpr::constant(spec.e0);
    for t in 0..t_len {
        let (pr, pu, pl, fb) = (h.p_r[t], h.p_upper[t], h.p_lower[t], h.f_b[t]);
        out.linear.push(program.add_ge(
            format!("{tag}.pup_chg[t{t}]"),
            LinExpr::var(pu) - (1.0 / spec.eta_c) * pr,
        ));
        out.linear.push(program.add_ge(
            format!("{tag}.pup_dsc[t{t}]"),
            LinExpr::var(pu) - spec.eta_d * pr,
        ));
        let branch = match modes[t] {
            Mode::Charging => 1.0 / spec.eta_c,
            Mode::Discharging => spec.eta_d,
        };
        out.linear.push(program.add_eq(
            format!("{tag}.plo[t{t}]"),
            LinExpr::var(pl) - branch * pr,
        ));
        out.linear
            .push(program.add_ge(format!("{tag}.fb_nonneg[t{t}]"), LinExpr::var(fb)));
        out.rotated.push(program.add_rotated(
            format!("{tag}.inverter[t{t}]"),
            LinExpr::var(fb),
            h.v[t].clone(),
            vec![LinExpr::var(pu), LinExpr::var(h.q_b[t])],
        ));

        e_lo_expr += dt * pr;
        if spec.r_b != 0.0 {
            e_lo_expr += (-spec.r_b * dt) * fb;
        }
        e_hi_expr += dt * pr;
        out.linear.push(program.add_equal(
            format!("{tag}.e_lo[t{t}]"),
            LinExpr::var(h.e_lo[t]),
            e_lo_expr.clone(),
        ));
        out.linear.push(program.add_equal(
            format!("{tag}.e_hi[t{t}]"),
            LinExpr::var(h.e_hi[t]),
            e_hi_expr.clone(),
        ));
    }

    if spec.is_lossless_conversion() {
        let mut total = LinExpr::zero();
        for t in 0..t_len {
            let d = program.add_var(format!("{tag}.dsc[t{t}]"));
            out.linear.push(program.add_ge(format!("{tag}.dsc_nonneg[t{t}]"), d.into()));
            out.linear.push(program.add_ge(
                format!("{tag}.dsc_epi[t{t}]"),
                LinExpr::var(d) + h.p_r[t],
            ));
            total += dt * d;
        }
        out.linear
            .push(program.add_equal(format!("{tag}.e_dsc"), h.e_dsc.into(), total));
    } else {
        let k = spec.discharge_factor()?;
        let mut total = LinExpr::zero();
        for t in 0..t_len {
            total += (k * dt) * h.p_upper[t];
            total += (-k * dt / spec.eta_c) * h.p_r[t];
        }
        out.linear
            .push(program.add_equal(format!("{tag}.e_dsc"), h.e_dsc.into(), total));
    }
    Ok(out)
}
