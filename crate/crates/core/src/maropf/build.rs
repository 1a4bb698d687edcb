//! Program construction for the augmented relaxation and its baselines.
//!
//! All three formulations share the branch-flow core (line balance,
//! voltage drop, and the rotated-cone relaxation `P² + Q² ≤ f·v_up`) and the
//! substation-import objective. They differ in two switches:
//!
//! * grid: `Augmented` adds the conservative bound system (lossless lower
//!   flows `S̲` with upper voltages `v̄`, and loss-inclusive upper flows `S̄`
//!   with upper currents `f̄`) and applies the voltage/current/flow limits to
//!   those bounds; `Plain` applies them directly to `v`, `f`, `S`.
//! * battery: `Relaxed` uses the mode-guessed bound pair around the terminal
//!   power; `SplitLinear` uses independent non-negative charge and discharge
//!   powers with no complementarity.

use num_complex::Complex64;

use super::solution::{
    AuxBounds, BessDispatch, DdgDispatch, DispatchSolution, Flows, Method, Setpoint,
};
use super::ModeGuess;
use crate::bess::{relaxed_bess_constraints, BessHandles, BessSpec, Mode};
use crate::conic::{ConicProgram, LinExpr, VarId};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum GridModel {
    Augmented,
    Plain,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum BessModel<'a> {
    Relaxed(&'a ModeGuess),
    SplitLinear,
}

#[derive(Clone, Debug)]
struct LineVars {
    p: VarId,
    q: VarId,
    f: VarId,
    v: VarId,
    aux: Option<AuxVars>,
}

#[derive(Clone, Copy, Debug)]
struct AuxVars {
    p_lo: VarId,
    q_lo: VarId,
    v_up: VarId,
    p_up: VarId,
    q_up: VarId,
    f_up: VarId,
    m_p: VarId,
    m_q: VarId,
}

#[derive(Clone, Debug)]
struct BessVars {
    handles: BessHandles,
    split: Option<(Vec<VarId>, Vec<VarId>)>,
    modes: Option<Vec<Mode>>,
}

/// A built program together with the variable map needed to read a
/// dispatch back out of a solver assignment.
#[derive(Clone, Debug)]
pub struct BuiltProgram {
    pub program: ConicProgram,
    pub method: Method,
    case_name: String,
    /// `[t][line]`
    lines: Vec<Vec<LineVars>>,
    import: Vec<VarId>,
    ddgs: Vec<(usize, Vec<VarId>, Vec<VarId>)>,
    bess: Vec<(usize, BessVars)>,
}

fn check_guess(case: &NetworkCase, modes: &ModeGuess) -> Result<()> {
    if modes.len() != case.batteries.len() {
        return Err(Error::Builder(format!(
            "mode guess covers {} batteries, case has {}",
            modes.len(),
            case.batteries.len()
        )));
    }
    for (b, row) in modes.iter().enumerate() {
        if row.len() != case.horizon() {
            return Err(Error::Builder(format!(
                "mode guess for battery at node {} has {} entries, expected {}",
                case.batteries[b].node,
                row.len(),
                case.horizon()
            )));
        }
    }
    Ok(())
}

pub(crate) fn build(
    case: &NetworkCase,
    grid: GridModel,
    bess_model: BessModel<'_>,
    method: Method,
) -> Result<BuiltProgram> {
    if let BessModel::Relaxed(modes) = bess_model {
        check_guess(case, modes)?;
    }
    let n = case.n_lines();
    let t_len = case.horizon();
    let dt = case.dt;
    let mut prog = ConicProgram::new();

    // Grid variables.
    let mut lines = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut row = Vec::with_capacity(n);
        for l in 0..n {
            let k = l + 1;
            let name = |s: &str| format!("{s}[n{k},t{t}]");
            let p = prog.add_var(name("P"));
            let q = prog.add_var(name("Q"));
            let f = prog.add_var(name("f"));
            let v = prog.add_var(name("v"));
            let aux = (grid == GridModel::Augmented).then(|| AuxVars {
                p_lo: prog.add_var(name("P_lo")),
                q_lo: prog.add_var(name("Q_lo")),
                v_up: prog.add_var(name("v_up")),
                p_up: prog.add_var(name("P_up")),
                q_up: prog.add_var(name("Q_up")),
                f_up: prog.add_var(name("f_up")),
                m_p: prog.add_var(name("mP")),
                m_q: prog.add_var(name("mQ")),
            });
            row.push(LineVars { p, q, f, v, aux });
        }
        lines.push(row);
    }
    let import: Vec<VarId> = (0..t_len).map(|t| prog.add_var(format!("import[t{t}]"))).collect();

    // Nodal injection expressions: upper (uses the terminal upper bound) and
    // lower (uses the mode-guessed lower bound).
    let mut inj_up_p: Vec<Vec<LinExpr>> = (0..t_len)
        .map(|t| (0..n).map(|l| LinExpr::constant(case.net_load[l][t].re)).collect())
        .collect();
    let mut inj_q: Vec<Vec<LinExpr>> = (0..t_len)
        .map(|t| (0..n).map(|l| LinExpr::constant(case.net_load[l][t].im)).collect())
        .collect();

    let mut ddgs = Vec::with_capacity(case.ddgs.len());
    for (d, ddg) in case.ddgs.iter().enumerate() {
        let l = ddg.node - 1;
        let mut ps = Vec::with_capacity(t_len);
        let mut qs = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let tag = format!("ddg{d}[n{},t{t}]", ddg.node);
            let p = prog.add_var(format!("{tag}.p"));
            let q = prog.add_var(format!("{tag}.q"));
            prog.add_le(format!("{tag}.p_min"), LinExpr::constant(ddg.p_min), p.into());
            prog.add_le(format!("{tag}.p_max"), p.into(), LinExpr::constant(ddg.p_max));
            prog.add_soc(
                format!("{tag}.s_max"),
                LinExpr::constant(ddg.s_max),
                vec![p.into(), q.into()],
            );
            inj_up_p[t][l] += LinExpr::var(p);
            inj_q[t][l] += LinExpr::var(q);
            ps.push(p);
            qs.push(q);
        }
        ddgs.push((ddg.node, ps, qs));
    }
    let mut inj_lo_p = inj_up_p.clone();

    let mut bess = Vec::with_capacity(case.batteries.len());
    for (b, bat) in case.batteries.iter().enumerate() {
        let spec = &bat.spec;
        let l = bat.node - 1;
        let tag = format!("bess{b}[n{}]", bat.node);
        let per_t = |prog: &mut ConicProgram, s: &str| -> Vec<VarId> {
            (0..t_len).map(|t| prog.add_var(format!("{tag}.{s}[t{t}]"))).collect()
        };
        let p_r = per_t(&mut prog, "p_r");
        let q_b = per_t(&mut prog, "q_b");
        let f_b = per_t(&mut prog, "f_b");
        let e_lo = per_t(&mut prog, "e_lo");
        let e_hi = per_t(&mut prog, "e_hi");
        let e_dsc = prog.add_var(format!("{tag}.e_dsc"));
        let v: Vec<LinExpr> = (0..t_len).map(|t| lines[t][l].v.into()).collect();

        let vars = match bess_model {
            BessModel::Relaxed(guess) => {
                let p_upper = per_t(&mut prog, "p_up");
                let p_lower = per_t(&mut prog, "p_lo");
                let handles = BessHandles {
                    p_r,
                    q_b,
                    p_upper,
                    p_lower,
                    f_b,
                    v,
                    e_lo,
                    e_hi,
                    e_dsc,
                };
                relaxed_bess_constraints(spec, &guess[b], dt, &tag, &mut prog, &handles)?;
                for t in 0..t_len {
                    // p_lower never exceeds the exact terminal power, so
                    // bounding it keeps the exact power above p_min too.
                    prog.add_le(
                        format!("{tag}.p_min_lo[t{t}]"),
                        LinExpr::constant(spec.p_min),
                        handles.p_lower[t].into(),
                    );
                }
                BessVars {
                    handles,
                    split: None,
                    modes: Some(guess[b].clone()),
                }
            }
            BessModel::SplitLinear => {
                let p_ch = per_t(&mut prog, "p_ch");
                let p_dsc = per_t(&mut prog, "p_dsc");
                let p_b = per_t(&mut prog, "p_b");
                install_split_linear(spec, dt, &tag, &mut prog, &p_ch, &p_dsc, &p_b, &p_r, &q_b, &f_b, &v, &e_lo, &e_hi, e_dsc);
                let handles = BessHandles {
                    p_r,
                    q_b,
                    p_upper: p_b.clone(),
                    p_lower: p_b,
                    f_b,
                    v,
                    e_lo,
                    e_hi,
                    e_dsc,
                };
                BessVars {
                    handles,
                    split: Some((p_ch, p_dsc)),
                    modes: None,
                }
            }
        };
        install_bess_limits(spec, &tag, &mut prog, &vars.handles);
        for t in 0..t_len {
            inj_up_p[t][l] += LinExpr::var(vars.handles.p_upper[t]);
            inj_lo_p[t][l] += LinExpr::var(vars.handles.p_lower[t]);
            inj_q[t][l] += LinExpr::var(vars.handles.q_b[t]);
        }
        bess.push((bat.node, vars));
    }

    // Branch-flow core and bound system.
    for t in 0..t_len {
        let row = &lines[t];
        for l in 0..n {
            let line = &case.lines[l];
            let lv = &row[l];
            let tag = |s: &str| format!("{s}[n{},t{t}]", l + 1);
            let up_v: LinExpr = match case.up_line(l) {
                Some(k) => row[k].v.into(),
                None => LinExpr::constant(case.v0),
            };
            let children = case.children(l);
            let child_sum = |pick: &dyn Fn(&LineVars) -> VarId| -> LinExpr {
                LinExpr::sum(children.iter().map(|&m| (pick(&row[m]), 1.0)))
            };

            // S_l = u_l + Σ children S_m + z_l f_l
            prog.add_equal(
                tag("balP"),
                LinExpr::var(lv.p) - child_sum(&|x| x.p) - line.r * lv.f,
                inj_up_p[t][l].clone(),
            );
            prog.add_equal(
                tag("balQ"),
                LinExpr::var(lv.q) - child_sum(&|x| x.q) - line.x * lv.f,
                inj_q[t][l].clone(),
            );
            // v_l = v_up − 2(rP + xQ) + |z|² f
            prog.add_eq(
                tag("vdrop"),
                LinExpr::var(lv.v) - up_v.clone()
                    + 2.0 * line.r * lv.p
                    + 2.0 * line.x * lv.q
                    - line.z_sq() * lv.f,
            );
            prog.add_rotated(
                tag("flow_cone"),
                lv.f.into(),
                up_v.clone(),
                vec![lv.p.into(), lv.q.into()],
            );
            prog.add_le(tag("v_min"), LinExpr::constant(line.v_min), lv.v.into());

            match lv.aux {
                Some(a) => {
                    let up_vbar: LinExpr = match case.up_line(l) {
                        Some(k) => row[k].aux.expect("augmented").v_up.into(),
                        None => LinExpr::constant(case.v0),
                    };
                    let aux_child = |pick: &dyn Fn(&AuxVars) -> VarId| -> LinExpr {
                        LinExpr::sum(
                            children
                                .iter()
                                .map(|&m| (pick(&row[m].aux.expect("augmented")), 1.0)),
                        )
                    };
                    // Lossless flows with lower injections.
                    prog.add_equal(
                        tag("balP_lo"),
                        LinExpr::var(a.p_lo) - aux_child(&|x| x.p_lo),
                        inj_lo_p[t][l].clone(),
                    );
                    prog.add_equal(
                        tag("balQ_lo"),
                        LinExpr::var(a.q_lo) - aux_child(&|x| x.q_lo),
                        inj_q[t][l].clone(),
                    );
                    prog.add_eq(
                        tag("vdrop_up"),
                        LinExpr::var(a.v_up) - up_vbar + 2.0 * line.r * a.p_lo + 2.0 * line.x * a.q_lo,
                    );
                    // Loss-inclusive flows with upper injections.
                    prog.add_equal(
                        tag("balP_up"),
                        LinExpr::var(a.p_up) - aux_child(&|x| x.p_up) - line.r * a.f_up,
                        inj_up_p[t][l].clone(),
                    );
                    prog.add_equal(
                        tag("balQ_up"),
                        LinExpr::var(a.q_up) - aux_child(&|x| x.q_up) - line.x * a.f_up,
                        inj_q[t][l].clone(),
                    );
                    // max(|P̄|, |P̲|)² + max(|Q̄|, |Q̲|)² ≤ f̄·v_up
                    for (m, hi, lo, s) in [(a.m_p, a.p_up, a.p_lo, "mP"), (a.m_q, a.q_up, a.q_lo, "mQ")] {
                        prog.add_ge(tag(&format!("{s}_hi+")), LinExpr::var(m) - hi);
                        prog.add_ge(tag(&format!("{s}_hi-")), LinExpr::var(m) + hi);
                        prog.add_ge(tag(&format!("{s}_lo+")), LinExpr::var(m) - lo);
                        prog.add_ge(tag(&format!("{s}_lo-")), LinExpr::var(m) + lo);
                    }
                    prog.add_rotated(
                        tag("bound_cone"),
                        a.f_up.into(),
                        up_v,
                        vec![a.m_p.into(), a.m_q.into()],
                    );
                    prog.add_le(tag("v_max"), a.v_up.into(), LinExpr::constant(line.v_max));
                    prog.add_le(tag("i_max"), a.f_up.into(), LinExpr::constant(line.i_max));
                    prog.add_le(tag("P_le_Pup"), lv.p.into(), a.p_up.into());
                    prog.add_le(tag("P_max"), a.p_up.into(), LinExpr::constant(line.p_max));
                    prog.add_le(tag("Q_le_Qup"), lv.q.into(), a.q_up.into());
                    prog.add_le(tag("Q_max"), a.q_up.into(), LinExpr::constant(line.q_max));
                }
                None => {
                    prog.add_le(tag("v_max"), lv.v.into(), LinExpr::constant(line.v_max));
                    prog.add_le(tag("i_max"), lv.f.into(), LinExpr::constant(line.i_max));
                    prog.add_le(tag("P_max"), lv.p.into(), LinExpr::constant(line.p_max));
                    prog.add_le(tag("Q_max"), lv.q.into(), LinExpr::constant(line.q_max));
                }
            }
        }

        // Import epigraph: ρ_t ≥ 0, ρ_t ≥ Σ_root P.
        let rho = import[t];
        prog.add_ge(format!("import_nonneg[t{t}]"), rho.into());
        let root_flow = LinExpr::sum(case.root_lines().map(|l| (row[l].p, 1.0)));
        prog.add_ge(format!("import_epi[t{t}]"), LinExpr::var(rho) - root_flow);
    }

    let objective = LinExpr::sum(import.iter().zip(&case.prices).map(|(&r, &c)| (r, c)));
    prog.set_objective(objective);

    Ok(BuiltProgram {
        program: prog,
        method,
        case_name: case.name.clone(),
        lines,
        import,
        ddgs,
        bess,
    })
}

#[allow(clippy::too_many_arguments)]
fn install_split_linear(
    spec: &BessSpec,
    dt: f64,
    tag: &str,
    prog: &mut ConicProgram,
    p_ch: &[VarId],
    p_dsc: &[VarId],
    p_b: &[VarId],
    p_r: &[VarId],
    q_b: &[VarId],
    f_b: &[VarId],
    v: &[LinExpr],
    e_lo: &[VarId],
    e_hi: &[VarId],
    e_dsc: VarId,
) {
    let mut lo = LinExpr::constant(spec.e0);
    let mut hi = LinExpr::constant(spec.e0);
    let mut discharged = LinExpr::zero();
    for t in 0..p_r.len() {
        prog.add_ge(format!("{tag}.p_ch_nonneg[t{t}]"), p_ch[t].into());
        prog.add_ge(format!("{tag}.p_dsc_nonneg[t{t}]"), p_dsc[t].into());
        prog.add_eq(
            format!("{tag}.p_r_split[t{t}]"),
            LinExpr::var(p_r[t]) - p_ch[t] + p_dsc[t],
        );
        prog.add_eq(
            format!("{tag}.p_b_split[t{t}]"),
            LinExpr::var(p_b[t]) - (1.0 / spec.eta_c) * p_ch[t] + spec.eta_d * p_dsc[t],
        );
        prog.add_ge(format!("{tag}.fb_nonneg[t{t}]"), f_b[t].into());
        prog.add_rotated(
            format!("{tag}.inverter[t{t}]"),
            f_b[t].into(),
            v[t].clone(),
            vec![p_b[t].into(), q_b[t].into()],
        );
        lo += dt * p_r[t];
        if spec.r_b != 0.0 {
            lo += (-spec.r_b * dt) * f_b[t];
        }
        hi += dt * p_r[t];
        prog.add_equal(format!("{tag}.e_lo[t{t}]"), e_lo[t].into(), lo.clone());
        prog.add_equal(format!("{tag}.e_hi[t{t}]"), e_hi[t].into(), hi.clone());
        discharged += dt * p_dsc[t];
    }
    prog.add_equal(format!("{tag}.e_dsc"), e_dsc.into(), discharged);
}

fn install_bess_limits(spec: &BessSpec, tag: &str, prog: &mut ConicProgram, h: &BessHandles) {
    let t_len = h.p_r.len();
    for t in 0..t_len {
        prog.add_le(
            format!("{tag}.ib_max[t{t}]"),
            h.f_b[t].into(),
            LinExpr::constant(spec.ib_max),
        );
        prog.add_le(
            format!("{tag}.soc_min[t{t}]"),
            LinExpr::constant(spec.soc_min * spec.e_cap),
            h.e_lo[t].into(),
        );
        prog.add_le(
            format!("{tag}.soc_max[t{t}]"),
            h.e_hi[t].into(),
            LinExpr::constant(spec.soc_max * spec.e_cap),
        );
        prog.add_le(
            format!("{tag}.p_min[t{t}]"),
            LinExpr::constant(spec.p_min),
            h.p_upper[t].into(),
        );
        prog.add_le(
            format!("{tag}.p_max[t{t}]"),
            h.p_upper[t].into(),
            LinExpr::constant(spec.p_max),
        );
        if t > 0 {
            let step = LinExpr::var(h.p_r[t]) - h.p_r[t - 1];
            prog.add_le(
                format!("{tag}.ramp_dn[t{t}]"),
                LinExpr::constant(spec.ramp_dn),
                step.clone(),
            );
            prog.add_le(
                format!("{tag}.ramp_up[t{t}]"),
                step,
                LinExpr::constant(spec.ramp_up),
            );
        }
    }
    prog.add_le(
        format!("{tag}.cycles"),
        h.e_dsc.into(),
        LinExpr::constant(spec.n_dsc * spec.e_cap),
    );
}

impl BuiltProgram {
    /// Reads a dispatch out of a solver assignment.
    pub fn extract(&self, x: &[f64]) -> DispatchSolution {
        let t_len = self.lines.len();
        let n = self.lines.first().map_or(0, Vec::len);
        let grab = |pick: &dyn Fn(&LineVars) -> VarId| -> Vec<Vec<f64>> {
            (0..n)
                .map(|l| (0..t_len).map(|t| x[pick(&self.lines[t][l]).0]).collect())
                .collect()
        };
        let flows = Flows {
            p: grab(&|lv| lv.p),
            q: grab(&|lv| lv.q),
            f: grab(&|lv| lv.f),
            v: grab(&|lv| lv.v),
        };
        let has_aux = self
            .lines
            .first()
            .and_then(|row| row.first())
            .is_some_and(|lv| lv.aux.is_some());
        let aux = has_aux.then(|| {
            let grab_aux = |pick: &dyn Fn(&AuxVars) -> VarId| {
                grab(&|lv: &LineVars| pick(&lv.aux.expect("augmented")))
            };
            AuxBounds {
                p_lo: grab_aux(&|a| a.p_lo),
                q_lo: grab_aux(&|a| a.q_lo),
                v_up: grab_aux(&|a| a.v_up),
                p_up: grab_aux(&|a| a.p_up),
                q_up: grab_aux(&|a| a.q_up),
                f_up: grab_aux(&|a| a.f_up),
            }
        });
        let vals = |ids: &[VarId]| ids.iter().map(|v| x[v.0]).collect::<Vec<f64>>();
        let batteries = self
            .bess
            .iter()
            .map(|(node, b)| {
                let h = &b.handles;
                BessDispatch {
                    node: *node,
                    setpoint: if b.split.is_some() {
                        Setpoint::Terminal
                    } else {
                        Setpoint::Reservoir
                    },
                    p_r: vals(&h.p_r),
                    q_b: vals(&h.q_b),
                    p_upper: vals(&h.p_upper),
                    p_lower: vals(&h.p_lower),
                    f_b: vals(&h.f_b),
                    e_lo: vals(&h.e_lo),
                    e_hi: vals(&h.e_hi),
                    e_dsc: x[h.e_dsc.0],
                    modes: b.modes.clone(),
                    p_charge: b.split.as_ref().map(|(c, _)| vals(c)),
                    p_discharge: b.split.as_ref().map(|(_, d)| vals(d)),
                }
            })
            .collect();
        let ddgs = self
            .ddgs
            .iter()
            .map(|(node, p, q)| DdgDispatch {
                node: *node,
                p: vals(p),
                q: vals(q),
            })
            .collect();
        DispatchSolution {
            method: self.method,
            case: self.case_name.clone(),
            objective: self.program.objective_value(x),
            import: vals(&self.import),
            ddgs,
            batteries,
            flows,
            aux,
        }
    }

    /// Complex sending-end flow of line `l` at step `t`.
    pub fn flow(&self, x: &[f64], l: usize, t: usize) -> Complex64 {
        let lv = &self.lines[t][l];
        Complex64::new(x[lv.p.0], x[lv.q.0])
    }
}
