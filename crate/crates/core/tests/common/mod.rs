//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use maropf::bess::BessSpec;
use maropf::grid::{Line, NetworkCase};
use maropf::scenario::SyntheticSpec;
use num_complex::Complex64;
use rand::Rng;

/// Generated feeders used for the feasibility sweep: nodes 5..=34,
/// alternating horizons of 4 and 48 steps, 1 to 3 batteries.
pub fn feeder_specs() -> Vec<SyntheticSpec> {
    (0..24)
        .map(|i| SyntheticSpec {
            seed: 100 + i as u64,
            nodes: 5 + (i * 29) / 23,
            steps: if i % 2 == 0 { 4 } else { 48 },
            pv_penetration: 0.3,
            batteries: 1 + i % 3,
        })
        .collect()
}

pub fn plain_line(up: usize, r: f64, x: f64) -> Line {
    Line {
        up,
        r,
        x,
        v_min: 0.81,
        v_max: 1.21,
        i_max: 100.0,
        p_max: 100.0,
        q_max: 100.0,
    }
}

/// Random tree with `n` lines; each node hangs off any earlier node.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> NetworkCase {
    let lines = (1..=n)
        .map(|k| plain_line(rng.gen_range(0..k), rng.gen_range(0.0..0.05), rng.gen_range(0.0..0.05)))
        .collect();
    NetworkCase::new(
        "random-tree",
        1.0,
        1.0,
        vec![1.0],
        lines,
        vec![vec![Complex64::new(0.0, 0.0)]; n],
        Vec::new(),
        Vec::new(),
    )
    .expect("valid tree")
}

/// Lines in the subtree of line `l`, found by walking child lists.
pub fn subtree(case: &NetworkCase, l: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut stack = vec![l];
    while let Some(k) = stack.pop() {
        out.insert(k);
        for m in 0..case.n_lines() {
            if case.lines[m].up == k + 1 {
                stack.push(m);
            }
        }
    }
    out
}

/// Smaller root of the single-line branch-flow quadratic
/// `|z|²f² + (2Re(u·z̄) − v0)f + |u|² = 0`, returning `(f, v, S)`.
pub fn one_line_closed_form(z: Complex64, u: Complex64, v0: f64) -> (f64, f64, Complex64) {
    let b = v0 - 2.0 * (u * z.conj()).re;
    let disc = b * b - 4.0 * z.norm_sqr() * u.norm_sqr();
    let f = 2.0 * u.norm_sqr() / (b + disc.sqrt());
    let s = u + z * f;
    let v = v0 - 2.0 * (z.conj() * s).re + z.norm_sqr() * f;
    (f, v, s)
}

/// Energy that leaves the reservoir, accumulated step by step.
pub fn reservoir_outflow(p_r: &[f64], dt: f64) -> f64 {
    let mut out = 0.0;
    for &p in p_r {
        if p < 0.0 {
            out += -p * dt;
        }
    }
    out
}

/// Terminal power by explicit mode branch.
pub fn terminal_power(p_r: f64, spec: &BessSpec) -> f64 {
    if p_r >= 0.0 {
        p_r / spec.eta_c
    } else {
        p_r * spec.eta_d
    }
}

pub fn random_spec<R: Rng>(rng: &mut R) -> BessSpec {
    let e_cap = rng.gen_range(0.5..5.0);
    BessSpec {
        eta_c: rng.gen_range(0.7..0.999),
        eta_d: rng.gen_range(0.7..0.999),
        r_b: rng.gen_range(0.0..0.05),
        e_cap,
        soc_min: 0.1,
        soc_max: 0.9,
        e0: 0.5 * e_cap,
        ib_max: 1.0,
        p_min: -1.0,
        p_max: 1.0,
        ramp_dn: -2.0,
        ramp_up: 2.0,
        n_dsc: 2.0,
    }
}
