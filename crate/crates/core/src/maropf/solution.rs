use serde::{Deserialize, Serialize};

use crate::bess::Mode;
use crate::error::{Error, Result};
use crate::grid::NetworkCase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Maropf,
    Ropf,
    RelaxedLinear,
    Enumerate,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Maropf => "maropf",
            Method::Ropf => "ropf",
            Method::RelaxedLinear => "relaxed-linear",
            Method::Enumerate => "enumerate",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maropf" => Ok(Method::Maropf),
            "ropf" => Ok(Method::Ropf),
            "relaxed-linear" => Ok(Method::RelaxedLinear),
            "enumerate" => Ok(Method::Enumerate),
            other => Err(Error::Parameter(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which battery quantity the dispatch commands. Reservoir setpoints are
/// pushed through the exact conversion during validation; terminal
/// setpoints are what the inverter delivers and the reservoir follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setpoint {
    Reservoir,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdgDispatch {
    pub node: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BessDispatch {
    pub node: usize,
    pub setpoint: Setpoint,
    pub p_r: Vec<f64>,
    pub q_b: Vec<f64>,
    pub p_upper: Vec<f64>,
    pub p_lower: Vec<f64>,
    pub f_b: Vec<f64>,
    pub e_lo: Vec<f64>,
    pub e_hi: Vec<f64>,
    pub e_dsc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Mode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_charge: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_discharge: Option<Vec<f64>>,
}

/// Per-line, per-step matrices indexed `[line][t]`; `v` is the squared
/// voltage at the line's ending node.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Flows {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// Auxiliary bound variables of the augmented grid model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxBounds {
    pub p_lo: Vec<Vec<f64>>,
    pub q_lo: Vec<Vec<f64>>,
    pub v_up: Vec<Vec<f64>>,
    pub p_up: Vec<Vec<f64>>,
    pub q_up: Vec<Vec<f64>>,
    pub f_up: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub method: Method,
    pub case: String,
    /// Relaxed objective reported by the solver.
    pub objective: f64,
    /// Substation import epigraph per step.
    pub import: Vec<f64>,
    pub ddgs: Vec<DdgDispatch>,
    pub batteries: Vec<BessDispatch>,
    pub flows: Flows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<AuxBounds>,
}

impl DispatchSolution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn modes(&self) -> Option<Vec<Vec<Mode>>> {
        self.batteries.iter().map(|b| b.modes.clone()).collect()
    }

    /// Checks that device placement and series lengths match `case`.
    pub fn check_dimensions(&self, case: &NetworkCase) -> Result<()> {
        let t_len = case.horizon();
        let n = case.n_lines();
        let bad = |msg: String| Err(Error::Dimension(msg));
        if self.import.len() != t_len {
            return bad(format!("import has {} steps, case has {t_len}", self.import.len()));
        }
        if self.batteries.len() != case.batteries.len() {
            return bad(format!(
                "{} batteries in solution, {} in case",
                self.batteries.len(),
                case.batteries.len()
            ));
        }
        for (b, bat) in self.batteries.iter().zip(&case.batteries) {
            if b.node != bat.node {
                return bad(format!("battery at node {} expected at {}", b.node, bat.node));
            }
            if [&b.p_r, &b.q_b, &b.p_upper].iter().any(|s| s.len() != t_len) {
                return bad(format!("battery at node {}: series length mismatch", b.node));
            }
        }
        if self.ddgs.len() != case.ddgs.len() {
            return bad("ddg count mismatch".into());
        }
        for (d, ddg) in self.ddgs.iter().zip(&case.ddgs) {
            if d.node != ddg.node || d.p.len() != t_len || d.q.len() != t_len {
                return bad(format!("ddg at node {}: placement or length mismatch", d.node));
            }
        }
        if self.flows.p.len() != n || self.flows.p.iter().any(|r| r.len() != t_len) {
            return bad("line flow matrix does not match case".into());
        }
        Ok(())
    }
}
