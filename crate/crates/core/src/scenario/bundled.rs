//! Built-in cases.
//!
//! | name | nodes | steps | purpose |
//! |---|---|---|---|
//! | `case2` | 2 | 4 | smallest feeder with one battery |
//! | `case2-arbitrage` | 2 | 2 | cheap/expensive step pair, one lossy battery |
//! | `case5-arbitrage` | 5 | 8 | branched feeder, two batteries and a generator |
//! | `case5-highpv` | 5 | 2 | reverse flow with a binding upper voltage limit, empty battery |
//! | `case5-pv-surplus` | 5 | 2 | same feeder, nearly full battery |
//! | `case34like` | 34 | 48 | 33-bus test feeder behind a substation line, PV and three batteries |

use crate::bess::BessSpec;
use crate::error::{Error, Result};
use crate::grid::{
    BatteryRecord, CaseFile, DdgRecord, LineRecord, LoadRecord, NetworkCase, PvRecord,
};

pub const BUNDLED: &[&str] = &[
    "case2",
    "case2-arbitrage",
    "case5-arbitrage",
    "case5-highpv",
    "case5-pv-surplus",
    "case34like",
];

const V_MIN: f64 = 0.81;
const V_MAX: f64 = 1.1025;

pub fn bundled_case_file(name: &str) -> Result<CaseFile> {
    match name {
        "case2" => Ok(case2()),
        "case2-arbitrage" => Ok(case2_arbitrage()),
        "case5-arbitrage" => Ok(case5_arbitrage()),
        "case5-highpv" => Ok(case5_highpv()),
        "case5-pv-surplus" => Ok(case5_pv_surplus()),
        "case34like" => Ok(case34like()),
        other => Err(Error::Parameter(format!(
            "unknown bundled case {other:?}; available: {}",
            BUNDLED.join(", ")
        ))),
    }
}

pub fn bundled_case(name: &str) -> Result<NetworkCase> {
    bundled_case_file(name)?.into_case()
}

fn line(from: usize, to: usize, r: f64, x: f64, p_max: f64, q_max: f64) -> LineRecord {
    LineRecord {
        from,
        to,
        r,
        x,
        v_min: V_MIN,
        v_max: V_MAX,
        i_max: (p_max * p_max + q_max * q_max) / V_MIN,
        p_max,
        q_max,
    }
}

fn battery(node: usize, e_cap: f64, p_max: f64) -> BatteryRecord {
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
            ramp_dn: -2.0 * p_max,
            ramp_up: 2.0 * p_max,
            n_dsc: 2.0,
        },
    }
}

fn load(node: usize, p: Vec<f64>, q: Vec<f64>) -> LoadRecord {
    LoadRecord { node, p, q }
}

pub fn case2() -> CaseFile {
    CaseFile {
        name: "case2".into(),
        v0: 1.0,
        dt_hours: 1.0,
        prices: vec![0.5, 0.6, 1.0, 0.8],
        lines: vec![line(0, 1, 0.01, 0.02, 2.0, 2.0)],
        loads: vec![load(1, vec![0.8, 0.9, 1.0, 0.9], vec![0.2, 0.25, 0.3, 0.25])],
        pv: vec![],
        ddgs: vec![],
        batteries: vec![battery(1, 1.0, 0.3)],
    }
}

pub fn case2_arbitrage() -> CaseFile {
    let spec = BessSpec {
        eta_c: 0.9,
        eta_d: 0.95,
        r_b: 0.01,
        e_cap: 10.0,
        soc_min: 0.1,
        soc_max: 0.9,
        e0: 1.0,
        ib_max: 1.0,
        p_min: -0.5,
        p_max: 0.5,
        ramp_dn: -2.0,
        ramp_up: 2.0,
        n_dsc: 10.0,
    };
    CaseFile {
        name: "case2-arbitrage".into(),
        v0: 1.0,
        dt_hours: 1.0,
        prices: vec![0.1, 1.0],
        lines: vec![line(0, 1, 0.01, 0.02, 3.0, 3.0)],
        loads: vec![load(1, vec![1.0, 1.0], vec![0.0, 0.0])],
        pv: vec![],
        ddgs: vec![],
        batteries: vec![BatteryRecord { node: 1, spec }],
    }
}

pub fn case5_arbitrage() -> CaseFile {
    let shape = [0.6, 0.55, 0.6, 0.75, 0.9, 1.0, 0.95, 0.8];
    let scaled = |base: f64| shape.iter().map(|s| s * base).collect::<Vec<_>>();
    CaseFile {
        name: "case5-arbitrage".into(),
        v0: 1.0,
        dt_hours: 1.0,
        prices: vec![0.05, 0.04, 0.06, 0.1, 0.2, 0.3, 0.25, 0.12],
        lines: vec![
            line(0, 1, 0.004, 0.008, 2.5, 2.0),
            line(1, 2, 0.008, 0.012, 1.5, 1.2),
            line(2, 3, 0.010, 0.012, 1.0, 0.8),
            line(1, 4, 0.012, 0.010, 1.0, 0.8),
        ],
        loads: vec![
            load(2, scaled(0.3), scaled(0.1)),
            load(3, scaled(0.4), scaled(0.15)),
            load(4, scaled(0.35), scaled(0.12)),
        ],
        pv: vec![],
        ddgs: vec![DdgRecord {
            node: 2,
            p_min: -0.15,
            p_max: 0.0,
            s_max: 0.2,
        }],
        batteries: vec![battery(3, 1.0, 0.2), battery(4, 0.8, 0.15)],
    }
}

/// Four-line chain with a large PV plant at its end: exporting and over the
/// voltage limit at `t0` unless the end node absorbs power, importing at a
/// higher price at `t1`.
fn pv_chain(name: &str, pv: f64, e_cap: f64, e0: f64) -> CaseFile {
    let spec = BessSpec {
        eta_c: 0.95,
        eta_d: 0.95,
        r_b: 0.05,
        e_cap,
        soc_min: 0.1,
        soc_max: 0.9,
        e0,
        ib_max: 1.0,
        p_min: -0.4,
        p_max: 0.4,
        ramp_dn: -1.0,
        ramp_up: 1.0,
        n_dsc: 4.0,
    };
    let mut lines = vec![
        line(0, 1, 0.01, 0.02, 1.5, 1.0),
        line(1, 2, 0.02, 0.02, 1.3, 1.0),
        line(2, 3, 0.02, 0.02, 1.1, 1.0),
        line(3, 4, 0.02, 0.02, 0.9, 1.0),
    ];
    // Reverse flow exceeds the forward limits, so currents get their own cap.
    for l in &mut lines {
        l.i_max = 8.0;
    }
    CaseFile {
        name: name.into(),
        v0: 1.0,
        dt_hours: 1.0,
        prices: vec![0.2, 1.0],
        lines,
        loads: vec![
            load(1, vec![0.2, 0.4], vec![0.05, 0.1]),
            load(2, vec![0.2, 0.4], vec![0.05, 0.1]),
            load(3, vec![0.2, 0.4], vec![0.05, 0.1]),
            load(4, vec![0.1, 0.3], vec![0.02, 0.1]),
        ],
        pv: vec![PvRecord {
            node: 4,
            p: vec![pv, 0.0],
            q: None,
        }],
        ddgs: vec![],
        batteries: vec![BatteryRecord { node: 4, spec }],
    }
}

/// Empty battery: charging at `t0` is worth its full energy at `t1`, and
/// reactive absorption costs stored energy through the battery resistance.
pub fn case5_highpv() -> CaseFile {
    pv_chain("case5-highpv", 2.0, 1.0, 0.1)
}

/// Nearly full battery: the surplus at `t0` can only be absorbed without
/// storing it.
pub fn case5_pv_surplus() -> CaseFile {
    pv_chain("case5-pv-surplus", 1.8, 0.5, 0.4)
}

/// `(from, to, r Ω, x Ω, p kW, q kvar)` of the 33-bus test feeder; loads sit
/// at the `to` bus.
const FEEDER33: [(usize, usize, f64, f64, f64, f64); 32] = [
    (1, 2, 0.0922, 0.0470, 100.0, 60.0),
    (2, 3, 0.4930, 0.2511, 90.0, 40.0),
    (3, 4, 0.3660, 0.1864, 120.0, 80.0),
    (4, 5, 0.3811, 0.1941, 60.0, 30.0),
    (5, 6, 0.8190, 0.7070, 60.0, 20.0),
    (6, 7, 0.1872, 0.6188, 200.0, 100.0),
    (7, 8, 0.7114, 0.2351, 200.0, 100.0),
    (8, 9, 1.0300, 0.7400, 60.0, 20.0),
    (9, 10, 1.0440, 0.7400, 60.0, 20.0),
    (10, 11, 0.1966, 0.0650, 45.0, 30.0),
    (11, 12, 0.3744, 0.1238, 60.0, 35.0),
    (12, 13, 1.4680, 1.1550, 60.0, 35.0),
    (13, 14, 0.5416, 0.7129, 120.0, 80.0),
    (14, 15, 0.5910, 0.5260, 60.0, 10.0),
    (15, 16, 0.7463, 0.5450, 60.0, 20.0),
    (16, 17, 1.2890, 1.7210, 60.0, 20.0),
    (17, 18, 0.7320, 0.5740, 90.0, 40.0),
    (2, 19, 0.1640, 0.1565, 90.0, 40.0),
    (19, 20, 1.5042, 1.3554, 90.0, 40.0),
    (20, 21, 0.4095, 0.4784, 90.0, 40.0),
    (21, 22, 0.7089, 0.9373, 90.0, 40.0),
    (3, 23, 0.4512, 0.3083, 90.0, 50.0),
    (23, 24, 0.8980, 0.7091, 420.0, 200.0),
    (24, 25, 0.8960, 0.7011, 420.0, 200.0),
    (6, 26, 0.2030, 0.1034, 60.0, 25.0),
    (26, 27, 0.2842, 0.1447, 60.0, 25.0),
    (27, 28, 1.0590, 0.9337, 60.0, 20.0),
    (28, 29, 0.8042, 0.7006, 120.0, 70.0),
    (29, 30, 0.5075, 0.2585, 200.0, 600.0),
    (30, 31, 0.9744, 0.9630, 150.0, 70.0),
    (31, 32, 0.3105, 0.3619, 210.0, 100.0),
    (32, 33, 0.3410, 0.5302, 60.0, 40.0),
];

/// Scales the tabulated peak loads.
const LOAD_SCALE: f64 = 0.6;

/// 12.66 kV, 1 MVA.
const Z_BASE: f64 = 12.66 * 12.66;

/// 48 quarter-hour steps from 03:00.
fn hour_of(t: usize) -> f64 {
    3.0 + 0.25 * t as f64
}

fn load_shape(h: f64) -> f64 {
    let morning = (-(h - 8.5).powi(2) / 4.0).exp();
    let noon = (-(h - 13.0).powi(2) / 3.0).exp();
    0.55 + 0.3 * morning + 0.25 * noon
}

fn pv_shape(h: f64) -> f64 {
    if !(6.0..=19.0).contains(&h) {
        return 0.0;
    }
    let s = (std::f64::consts::PI * (h - 6.0) / 13.0).sin();
    s * s
}

fn tou_price(h: f64) -> f64 {
    if h < 7.0 {
        0.04
    } else if h < 10.0 {
        0.08
    } else {
        0.12 + 0.01 * (h - 10.0)
    }
}

pub fn case34like() -> CaseFile {
    let t_len = 48;
    let hours: Vec<f64> = (0..t_len).map(hour_of).collect();
    let shape: Vec<f64> = hours.iter().map(|&h| load_shape(h)).collect();
    let peak = shape.iter().copied().fold(0.0, f64::max);

    // Subtree peak demand plus downstream battery ratings drive the flow
    // limits.
    let n = FEEDER33.len() + 1;
    let batteries = vec![
        battery(18, 0.4, 0.15),
        battery(25, 0.6, 0.2),
        battery(33, 0.4, 0.15),
    ];
    let mut sub_p = vec![0.0f64; n + 1];
    let mut sub_q = vec![0.0f64; n + 1];
    for b in &batteries {
        sub_p[b.node] += b.spec.p_max;
        sub_q[b.node] += b.spec.ib_max.sqrt();
    }
    for &(from, to, _, _, p, q) in FEEDER33.iter().rev() {
        sub_p[to] += p * 1e-3 * LOAD_SCALE * peak;
        sub_q[to] += q * 1e-3 * LOAD_SCALE * peak;
        let (cp, cq) = (sub_p[to], sub_q[to]);
        sub_p[from] += cp;
        sub_q[from] += cq;
    }
    let limit = |node: usize| (1.2 * sub_p[node] + 0.05, 1.2 * sub_q[node] + 0.05);

    let (p1, q1) = limit(1);
    let mut lines = vec![line(0, 1, 0.0001, 0.0005, p1, q1)];
    let mut loads = Vec::with_capacity(FEEDER33.len());
    for &(from, to, r, x, p, q) in &FEEDER33 {
        let (pm, qm) = limit(to);
        lines.push(line(from, to, r / Z_BASE, x / Z_BASE, pm, qm));
        loads.push(load(
            to,
            shape.iter().map(|s| s * p * 1e-3 * LOAD_SCALE).collect(),
            shape.iter().map(|s| s * q * 1e-3 * LOAD_SCALE).collect(),
        ));
    }
    let pv = [(14usize, 0.2), (18, 0.15), (25, 0.25), (31, 0.2)]
        .into_iter()
        .map(|(node, cap)| PvRecord {
            node,
            p: hours.iter().map(|&h| cap * pv_shape(h)).collect(),
            q: None,
        })
        .collect();
    CaseFile {
        name: "case34like".into(),
        v0: 1.0,
        dt_hours: 0.25,
        prices: hours.iter().map(|&h| tou_price(h)).collect(),
        lines,
        loads,
        pv,
        ddgs: vec![],
        batteries,
    }
}
