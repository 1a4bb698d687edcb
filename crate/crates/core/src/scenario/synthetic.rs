use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bess::BessSpec;
use crate::error::{Error, Result};
use crate::grid::{BatteryRecord, CaseFile, LineRecord, LoadRecord, PvRecord};
use crate::pf::solve_pf;

const V_MIN: f64 = 0.81;
const V_MAX: f64 = 1.1025;
/// Headroom kept between the no-battery operating point and the voltage
/// limits.
const V_HEADROOM: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub nodes: usize,
    pub steps: usize,
    /// Installed PV as a multiple of total peak load.
    pub pv_penetration: f64,
    pub batteries: usize,
}

fn hour_of(t: usize, steps: usize) -> f64 {
    3.0 + 12.0 * t as f64 / steps as f64
}

fn load_shape(h: f64) -> f64 {
    0.55 + 0.3 * (-(h - 8.5).powi(2) / 4.0).exp() + 0.25 * (-(h - 13.0).powi(2) / 3.0).exp()
}

fn pv_shape(h: f64) -> f64 {
    if (6.0..=19.0).contains(&h) {
        (std::f64::consts::PI * (h - 6.0) / 13.0).sin().powi(2)
    } else {
        0.0
    }
}

fn price(h: f64) -> f64 {
    if h < 7.0 {
        0.04
    } else if h < 10.0 {
        0.08
    } else {
        0.12 + 0.01 * (h - 10.0)
    }
}

/// Random radial feeder with load, PV and battery profiles.
///
/// Loads are shrunk and PV is capped until the feeder without batteries has
/// every voltage inside its limits with some headroom, and line limits are
/// then sized from the resulting flows plus the battery ratings below each
/// line. The result depends only on `spec`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<CaseFile> {
    if spec.nodes < 2 || spec.steps < 1 {
        return Err(Error::Parameter("need nodes >= 2 and steps >= 1".into()));
    }
    let n = spec.nodes - 1;
    let t_len = spec.steps;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let parents: Vec<usize> = (1..=n)
        .map(|k| if k == 1 { 0 } else { rng.gen_range(k.saturating_sub(3).max(1)..k) })
        .collect();
    let rx: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let r = rng.gen_range(0.003..0.012);
            (r, r * rng.gen_range(0.6..1.4))
        })
        .collect();
    let base: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let p = rng.gen_range(0.02..0.08);
            (p, p * rng.gen_range(0.2..0.5))
        })
        .collect();
    let pv_nodes: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.35)).collect();
    let mut bess_nodes: Vec<usize> = Vec::new();
    while bess_nodes.len() < spec.batteries.min(n) {
        let node = rng.gen_range(1..=n);
        if !bess_nodes.contains(&node) {
            bess_nodes.push(node);
        }
    }
    bess_nodes.sort_unstable();
    let bess_scale: Vec<(f64, f64)> = bess_nodes
        .iter()
        .map(|_| (rng.gen_range(0.5..1.0), rng.gen_range(2.0..4.0)))
        .collect();

    let dt = 12.0 / t_len as f64;
    let hours: Vec<f64> = (0..t_len).map(|t| hour_of(t, t_len)).collect();
    let shape: Vec<f64> = hours.iter().map(|&h| load_shape(h)).collect();
    let sun: Vec<f64> = hours.iter().map(|&h| pv_shape(h)).collect();
    let peak_load: f64 = base.iter().map(|b| b.0).sum::<f64>() * shape.iter().copied().fold(0.0, f64::max);
    let pv_total = spec.pv_penetration * peak_load;
    let pv_each = if pv_nodes.is_empty() { 0.0 } else { pv_total / pv_nodes.len() as f64 };

    let mut load_scale = 1.0;
    let mut pv_scale = 1.0;
    let mut file = CaseFile {
        name: format!("synthetic-s{}-n{}-t{}", spec.seed, spec.nodes, t_len),
        v0: 1.0,
        dt_hours: dt,
        prices: hours.iter().map(|&h| price(h)).collect(),
        lines: Vec::new(),
        loads: Vec::new(),
        pv: Vec::new(),
        ddgs: Vec::new(),
        batteries: Vec::new(),
    };
    for _ in 0..60 {
        file.lines = (0..n)
            .map(|l| LineRecord {
                from: parents[l],
                to: l + 1,
                r: rx[l].0,
                x: rx[l].1,
                v_min: V_MIN,
                v_max: V_MAX,
                i_max: 1e3,
                p_max: 1e3,
                q_max: 1e3,
            })
            .collect();
        file.loads = (0..n)
            .map(|l| LoadRecord {
                node: l + 1,
                p: shape.iter().map(|s| load_scale * base[l].0 * s).collect(),
                q: shape.iter().map(|s| load_scale * base[l].1 * s).collect(),
            })
            .collect();
        file.pv = pv_nodes
            .iter()
            .map(|&node| PvRecord {
                node,
                p: sun.iter().map(|s| pv_scale * pv_each * s).collect(),
                q: None,
            })
            .collect();
        let case = file.clone().into_case()?;
        let mut low = false;
        let mut high = false;
        let mut peak_flow = vec![(0.0f64, 0.0f64); n];
        for t in 0..t_len {
            let inj: Vec<Complex64> = (0..n).map(|l| case.net_load[l][t]).collect();
            let state = match solve_pf(&case, &inj, t) {
                Ok(s) => s,
                Err(Error::PowerFlowDivergence { .. }) => {
                    low = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            low |= state.v.iter().any(|&v| v < V_MIN + V_HEADROOM);
            high |= state.v.iter().any(|&v| v > V_MAX - V_HEADROOM);
            for l in 0..n {
                peak_flow[l].0 = peak_flow[l].0.max(state.s[l].re.abs());
                peak_flow[l].1 = peak_flow[l].1.max(state.s[l].im.abs());
            }
        }
        if low {
            load_scale *= 0.85;
            continue;
        }
        if high {
            pv_scale *= 0.85;
            continue;
        }
        finish(&mut file, &case, &peak_flow, &bess_nodes, &bess_scale, peak_load * load_scale);
        return Ok(file);
    }
    Err(Error::InvalidCase(format!(
        "seed {}: could not scale the feeder into voltage limits",
        spec.seed
    )))
}

fn finish(
    file: &mut CaseFile,
    case: &crate::grid::NetworkCase,
    peak_flow: &[(f64, f64)],
    bess_nodes: &[usize],
    bess_scale: &[(f64, f64)],
    peak_load: f64,
) {
    let n = case.n_lines();
    file.batteries = bess_nodes
        .iter()
        .zip(bess_scale)
        .map(|(&node, &(size, hours))| {
            let p_max = 0.1 * peak_load * size;
            let e_cap = p_max * hours;
            BatteryRecord {
                node,
                spec: BessSpec {
                    eta_c: 0.95,
                    eta_d: 0.95,
                    r_b: 0.01,
                    e_cap,
                    soc_min: 0.1,
                    soc_max: 0.9,
                    e0: 0.5 * e_cap,
                    ib_max: 1.5 * p_max * p_max,
                    p_min: -p_max,
                    p_max,
                    ramp_dn: -p_max,
                    ramp_up: p_max,
                    n_dsc: 2.0,
                },
            }
        })
        .collect();
    // Battery ratings below each line.
    let mut below = vec![0.0f64; n];
    for b in &file.batteries {
        let mut l = Some(b.node - 1);
        while let Some(k) = l {
            below[k] += b.spec.p_max + b.spec.ib_max.sqrt();
            l = case.up_line(k);
        }
    }
    for (l, rec) in file.lines.iter_mut().enumerate() {
        rec.p_max = 1.5 * peak_flow[l].0 + 1.5 * below[l] + 0.02;
        rec.q_max = 1.5 * peak_flow[l].1 + 1.5 * below[l] + 0.02;
        rec.i_max = (rec.p_max.powi(2) + rec.q_max.powi(2)) / V_MIN;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec {
            seed: 1,
            nodes: 2,
            steps: 2,
            pv_penetration: 0.0,
            batteries: 1,
        };
        let a = gen_synthetic(&spec).unwrap().to_json();
        let b = gen_synthetic(&spec).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_degenerate_sizes() {
        let spec = SyntheticSpec {
            seed: 1,
            nodes: 1,
            steps: 2,
            pv_penetration: 0.0,
            batteries: 0,
        };
        assert!(gen_synthetic(&spec).is_err());
    }
}
