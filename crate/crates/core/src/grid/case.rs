//! JSON case schema.
//!
//! ```json
//! {
//!   "name": "case2",
//!   "v0": 1.0,
//!   "dt_hours": 0.25,
//!   "prices": [1.0, 1.0],
//!   "lines": [{ "from": 0, "to": 1, "r": 0.01, "x": 0.01,
//!               "v_min": 0.81, "v_max": 1.1025, "i_max": 4.0,
//!               "p_max": 2.0, "q_max": 2.0 }],
//!   "loads": [{ "node": 1, "p": [0.1, 0.1], "q": [0.05, 0.05] }],
//!   "pv": [],
//!   "ddgs": [],
//!   "batteries": []
//! }
//! ```
//!
//! Every node `1..=L` must be the `to` end of exactly one line. Load and PV
//! series are per unit; PV is generation-positive and is subtracted from the
//! loads to form the fixed net consumption. Battery records carry the
//! [`BessSpec`] fields inline next to `node`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Battery, Ddg, Line, NetworkCase};
use crate::bess::BessSpec;
use crate::error::{Error, Result};

fn default_v0() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub name: String,
    #[serde(default = "default_v0")]
    pub v0: f64,
    pub dt_hours: f64,
    pub prices: Vec<f64>,
    pub lines: Vec<LineRecord>,
    #[serde(default)]
    pub loads: Vec<LoadRecord>,
    #[serde(default)]
    pub pv: Vec<PvRecord>,
    #[serde(default)]
    pub ddgs: Vec<DdgRecord>,
    #[serde(default)]
    pub batteries: Vec<BatteryRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub i_max: f64,
    pub p_max: f64,
    pub q_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRecord {
    pub node: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvRecord {
    pub node: usize,
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdgRecord {
    pub node: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub s_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryRecord {
    pub node: usize,
    #[serde(flatten)]
    pub spec: BessSpec,
}

impl CaseFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case file serializes")
    }

    pub fn into_case(self) -> Result<NetworkCase> {
        let n = self.lines.len();
        let t_len = self.prices.len();
        let mut slots: Vec<Option<Line>> = vec![None; n];
        for rec in &self.lines {
            if rec.to == 0 || rec.to > n {
                return Err(Error::Topology(format!(
                    "orphan: line {} -> {} ends outside nodes 1..={n}",
                    rec.from, rec.to
                )));
            }
            let slot = &mut slots[rec.to - 1];
            if slot.is_some() {
                return Err(Error::Topology(format!(
                    "node {} is the ending node of more than one line",
                    rec.to
                )));
            }
            *slot = Some(Line {
                up: rec.from,
                r: rec.r,
                x: rec.x,
                v_min: rec.v_min,
                v_max: rec.v_max,
                i_max: rec.i_max,
                p_max: rec.p_max,
                q_max: rec.q_max,
            });
        }
        // with n records landing in n distinct slots every slot is filled
        let lines: Vec<Line> = slots.into_iter().map(|s| s.expect("slot filled")).collect();

        let mut net_load = vec![vec![Complex64::new(0.0, 0.0); t_len]; n];
        let check_node = |kind: &str, node: usize| -> Result<()> {
            if node == 0 || node > n {
                return Err(Error::InvalidCase(format!("{kind}: node {node} out of range 1..={n}")));
            }
            Ok(())
        };
        let check_len = |kind: &str, node: usize, len: usize| -> Result<()> {
            if len != t_len {
                return Err(Error::InvalidCase(format!(
                    "{kind} at node {node}: series length {len} != horizon {t_len}"
                )));
            }
            Ok(())
        };
        for load in &self.loads {
            check_node("loads", load.node)?;
            check_len("loads.p", load.node, load.p.len())?;
            check_len("loads.q", load.node, load.q.len())?;
            for (t, slot) in net_load[load.node - 1].iter_mut().enumerate() {
                *slot += Complex64::new(load.p[t], load.q[t]);
            }
        }
        for pv in &self.pv {
            check_node("pv", pv.node)?;
            check_len("pv.p", pv.node, pv.p.len())?;
            if let Some(q) = &pv.q {
                check_len("pv.q", pv.node, q.len())?;
            }
            for (t, slot) in net_load[pv.node - 1].iter_mut().enumerate() {
                let q = pv.q.as_ref().map_or(0.0, |q| q[t]);
                *slot -= Complex64::new(pv.p[t], q);
            }
        }

        let ddgs = self
            .ddgs
            .iter()
            .map(|d| Ddg {
                node: d.node,
                p_min: d.p_min,
                p_max: d.p_max,
                s_max: d.s_max,
            })
            .collect();
        let batteries = self
            .batteries
            .iter()
            .map(|b| Battery {
                node: b.node,
                spec: b.spec.clone(),
            })
            .collect();

        NetworkCase::new(
            self.name,
            self.v0,
            self.dt_hours,
            self.prices,
            lines,
            net_load,
            ddgs,
            batteries,
        )
    }
}

impl NetworkCase {
    /// Serializable form. Fixed consumption is written as one load record per
    /// node holding the net series.
    pub fn to_case_file(&self) -> CaseFile {
        CaseFile {
            name: self.name.clone(),
            v0: self.v0,
            dt_hours: self.dt,
            prices: self.prices.clone(),
            lines: self
                .lines
                .iter()
                .enumerate()
                .map(|(l, line)| LineRecord {
                    from: line.up,
                    to: l + 1,
                    r: line.r,
                    x: line.x,
                    v_min: line.v_min,
                    v_max: line.v_max,
                    i_max: line.i_max,
                    p_max: line.p_max,
                    q_max: line.q_max,
                })
                .collect(),
            loads: self
                .net_load
                .iter()
                .enumerate()
                .filter(|(_, row)| row.iter().any(|s| s.norm() > 0.0))
                .map(|(l, row)| LoadRecord {
                    node: l + 1,
                    p: row.iter().map(|s| s.re).collect(),
                    q: row.iter().map(|s| s.im).collect(),
                })
                .collect(),
            pv: Vec::new(),
            ddgs: self
                .ddgs
                .iter()
                .map(|d| DdgRecord {
                    node: d.node,
                    p_min: d.p_min,
                    p_max: d.p_max,
                    s_max: d.s_max,
                })
                .collect(),
            batteries: self
                .batteries
                .iter()
                .map(|b| BatteryRecord {
                    node: b.node,
                    spec: b.spec.clone(),
                })
                .collect(),
        }
    }
}
