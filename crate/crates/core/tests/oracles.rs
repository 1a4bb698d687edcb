mod common;

use maropf::bess::exact_conversion;
use maropf::maropf::{iterate_maropf, IterateOptions};
use maropf::scenario::bundled_case;
use num_complex::Complex64;

/// Exact import cost of the single-line arbitrage case for a reservoir
/// trajectory with zero reactive battery power, or `None` if any limit
/// is violated.
fn arbitrage_cost(case: &maropf::grid::NetworkCase, p_r: [f64; 2]) -> Option<f64> {
    let line = &case.lines[0];
    let spec = &case.batteries[0].spec;
    let z = line.z();
    let mut energy = spec.e0;
    let mut discharged = 0.0;
    let mut cost = 0.0;
    for t in 0..2 {
        let p_b = exact_conversion(p_r[t], spec);
        if p_b < spec.p_min || p_b > spec.p_max {
            return None;
        }
        if t > 0 {
            let ramp = p_r[t] - p_r[t - 1];
            if ramp < spec.ramp_dn || ramp > spec.ramp_up {
                return None;
            }
        }
        let u = case.net_load[0][t] + Complex64::new(p_b, 0.0);
        let (f, v, s) = common::one_line_closed_form(z, u, case.v0);
        if v < line.v_min || v > line.v_max || f > line.i_max || s.re > line.p_max || s.im > line.q_max {
            return None;
        }
        let f_b = p_b * p_b / v;
        if f_b > spec.ib_max {
            return None;
        }
        energy += (p_r[t] - spec.r_b * f_b) * case.dt;
        if energy < spec.soc_min * spec.e_cap || energy > spec.soc_max * spec.e_cap {
            return None;
        }
        discharged += (-p_r[t]).max(0.0) * case.dt;
        cost += case.prices[t] * s.re.max(0.0);
    }
    (discharged <= spec.n_dsc * spec.e_cap).then_some(cost)
}

fn grid_search(
    case: &maropf::grid::NetworkCase,
    center: [f64; 2],
    half: f64,
    step: f64,
) -> (f64, [f64; 2]) {
    let k = (half / step).round() as i64;
    let mut best = (f64::INFINITY, center);
    for i in -k..=k {
        for j in -k..=k {
            let p = [center[0] + i as f64 * step, center[1] + j as f64 * step];
            if let Some(c) = arbitrage_cost(case, p) {
                if c < best.0 {
                    best = (c, p);
                }
            }
        }
    }
    best
}

#[test]
fn arbitrage_optimum_matches_grid_search() {
    let case = bundled_case("case2-arbitrage").unwrap();
    let coarse = grid_search(&case, [0.0, 0.0], 0.6, 1e-3);
    let fine = grid_search(&case, coarse.1, 2e-3, 1e-5);
    let run = iterate_maropf(&case, None, &IterateOptions::default()).unwrap();
    assert!(run.converged);
    assert!(
        (run.report.objective - fine.0).abs() <= 1e-4,
        "maropf {} vs grid {} at {:?}",
        run.report.objective,
        fine.0,
        fine.1
    );
    let p_r = &run.solution.batteries[0].p_r;
    assert!((p_r[0] - fine.1[0]).abs() <= 1e-3 && (p_r[1] - fine.1[1]).abs() <= 1e-3);
}

#[test]
fn validated_energy_stays_within_relaxed_bounds() {
    for name in ["case2", "case2-arbitrage", "case5-arbitrage", "case34like"] {
        let case = bundled_case(name).unwrap();
        let run = iterate_maropf(&case, None, &IterateOptions::default()).unwrap();
        for (b, disp) in run.solution.batteries.iter().enumerate() {
            let exact = &run.report.batteries[b].energy;
            for t in 0..case.horizon() {
                assert!(
                    exact[t] >= disp.e_lo[t] - 1e-6 && exact[t] <= disp.e_hi[t] + 1e-6,
                    "{name} battery {b} t={t}: {} not in [{}, {}]",
                    exact[t],
                    disp.e_lo[t],
                    disp.e_hi[t]
                );
            }
        }
    }
}
