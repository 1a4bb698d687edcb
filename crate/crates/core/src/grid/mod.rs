//! Radial feeder model.
//!
//! Nodes are numbered `0..=L` with node `0` the slack bus. Every other node
//! `l` has exactly one upstream node `up(l)`, and the line feeding it is
//! identified with its ending node: line index `i` (0-based, used for all
//! per-line vectors) is the line that ends at node `i + 1`.
//!
//! All quantities are per unit on a 1 MVA base. Voltages and currents are
//! stored squared (`v = |V|²`, `f = |I|²`). Power is consumption-positive.

mod case;
mod matrices;

pub use case::{BatteryRecord, CaseFile, DdgRecord, LineRecord, LoadRecord, PvRecord};
pub use matrices::{graph_matrices, GraphMatrices};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bess::BessSpec;
use crate::error::{Error, Result};

/// Electrical data and security limits for the line ending at a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    /// Upstream (sending) node.
    pub up: usize,
    pub r: f64,
    pub x: f64,
    /// Squared-voltage limits at the ending node.
    pub v_min: f64,
    pub v_max: f64,
    /// Squared-current limit.
    pub i_max: f64,
    pub p_max: f64,
    pub q_max: f64,
}

impl Line {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.r, self.x)
    }

    pub fn z_sq(&self) -> f64 {
        self.r * self.r + self.x * self.x
    }
}

/// Dispatchable generator. Its setpoint is consumption-signed like every
/// other injection, so generation is a negative `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ddg {
    pub node: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Apparent power capacity.
    pub s_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub node: usize,
    pub spec: BessSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCase {
    pub name: String,
    /// Slack squared voltage.
    pub v0: f64,
    /// Step length in hours.
    pub dt: f64,
    /// Energy price per p.u. per step.
    pub prices: Vec<f64>,
    /// Indexed by ending node minus one.
    pub lines: Vec<Line>,
    /// Fixed net consumption (loads minus PV), `[line][t]`.
    pub net_load: Vec<Vec<Complex64>>,
    pub ddgs: Vec<Ddg>,
    pub batteries: Vec<Battery>,
    order: Vec<usize>,
    children: Vec<Vec<usize>>,
}

impl NetworkCase {
    /// Assembles a case from parts, checking every invariant.
    pub fn new(
        name: impl Into<String>,
        v0: f64,
        dt: f64,
        prices: Vec<f64>,
        lines: Vec<Line>,
        net_load: Vec<Vec<Complex64>>,
        ddgs: Vec<Ddg>,
        batteries: Vec<Battery>,
    ) -> Result<Self> {
        let (order, children) = tree_order(&lines)?;
        let case = NetworkCase {
            name: name.into(),
            v0,
            dt,
            prices,
            lines,
            net_load,
            ddgs,
            batteries,
            order,
            children,
        };
        case.check()?;
        Ok(case)
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn horizon(&self) -> usize {
        self.prices.len()
    }

    /// Line index of the line upstream of line `l`, or `None` if line `l`
    /// leaves the slack bus.
    pub fn up_line(&self, l: usize) -> Option<usize> {
        self.lines[l].up.checked_sub(1)
    }

    /// Lines directly downstream of line `l`.
    pub fn children(&self, l: usize) -> &[usize] {
        &self.children[l]
    }

    /// Lines leaving the slack bus.
    pub fn root_lines(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_lines()).filter(|&l| self.lines[l].up == 0)
    }

    /// Lines ordered so that every line comes after its upstream line.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn line_of_node(&self, node: usize) -> usize {
        node - 1
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        load_case(path)
    }

    fn check(&self) -> Result<()> {
        let t_len = self.horizon();
        if t_len == 0 {
            return Err(Error::InvalidCase("prices: horizon must have at least one step".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidCase(format!("dt_hours: must be positive, got {}", self.dt)));
        }
        if !(self.v0 > 0.0) {
            return Err(Error::InvalidCase(format!("v0: must be positive, got {}", self.v0)));
        }
        if let Some(c) = self.prices.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidCase(format!(
                "prices: must be finite and non-negative, got {c}"
            )));
        }
        for (l, line) in self.lines.iter().enumerate() {
            let node = l + 1;
            let fields = [
                ("r", line.r),
                ("x", line.x),
                ("v_min", line.v_min),
                ("v_max", line.v_max),
                ("i_max", line.i_max),
                ("p_max", line.p_max),
                ("q_max", line.q_max),
            ];
            for (field, value) in fields {
                if !value.is_finite() {
                    return Err(Error::InvalidCase(format!("line to {node}: {field} is not finite")));
                }
            }
            if line.r < 0.0 {
                return Err(Error::InvalidCase(format!("line to {node}: r must be >= 0")));
            }
            if line.v_min < 0.0 || line.i_max < 0.0 || line.p_max < 0.0 || line.q_max < 0.0 {
                return Err(Error::InvalidCase(format!("line to {node}: limits must be >= 0")));
            }
            if !(line.v_min < line.v_max) {
                return Err(Error::InvalidCase(format!("line to {node}: v_min must be < v_max")));
            }
        }
        if self.net_load.len() != self.n_lines() {
            return Err(Error::InvalidCase("net load rows must match line count".into()));
        }
        for (l, row) in self.net_load.iter().enumerate() {
            if row.len() != t_len {
                return Err(Error::InvalidCase(format!(
                    "node {}: series length {} != horizon {t_len}",
                    l + 1,
                    row.len()
                )));
            }
        }
        for ddg in &self.ddgs {
            self.check_device_node("ddg", ddg.node)?;
            if !(ddg.p_min <= ddg.p_max) || ddg.s_max < 0.0 {
                return Err(Error::InvalidCase(format!("ddg at {}: inconsistent limits", ddg.node)));
            }
        }
        for bat in &self.batteries {
            self.check_device_node("battery", bat.node)?;
            bat.spec
                .validate()
                .map_err(|e| Error::InvalidCase(format!("battery at {}: {e}", bat.node)))?;
        }
        Ok(())
    }

    fn check_device_node(&self, kind: &str, node: usize) -> Result<()> {
        if node == 0 || node > self.n_lines() {
            return Err(Error::InvalidCase(format!(
                "{kind} node {node} must be in 1..={}",
                self.n_lines()
            )));
        }
        Ok(())
    }
}

/// Checks that `up` pointers form a tree rooted at node 0 and returns a
/// parent-first ordering plus child lists.
fn tree_order(lines: &[Line]) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    let n = lines.len();
    if n == 0 {
        return Err(Error::Topology("feeder has no lines".into()));
    }
    for (l, line) in lines.iter().enumerate() {
        if line.up > n {
            return Err(Error::Topology(format!(
                "orphan: line to node {} starts at unknown node {}",
                l + 1,
                line.up
            )));
        }
        if line.up == l + 1 {
            return Err(Error::Topology(format!("cycle: node {} feeds itself", l + 1)));
        }
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches the slack bus
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = lines[node - 1].up;
        }
        if state[node] == 1 {
            let pos = path.iter().position(|&p| p == node).unwrap_or(0);
            let cycle: Vec<String> = path[pos..].iter().map(|p| p.to_string()).collect();
            return Err(Error::Topology(format!("cycle: {} -> {}", cycle.join(" -> "), node)));
        }
        for p in path {
            state[p] = 2;
        }
    }

    let mut children = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for (l, line) in lines.iter().enumerate() {
        match line.up {
            0 => roots.push(l),
            up => children[up - 1].push(l),
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::from(roots);
    while let Some(l) = queue.pop_front() {
        order.push(l);
        queue.extend(children[l].iter().copied());
    }
    debug_assert_eq!(order.len(), n);
    Ok((order, children))
}

/// Reads and validates a JSON case file.
pub fn load_case(path: impl AsRef<std::path::Path>) -> Result<NetworkCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    CaseFile::from_json(&text)?.into_case()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(up: usize) -> Line {
        Line {
            up,
            r: 0.01,
            x: 0.02,
            v_min: 0.81,
            v_max: 1.21,
            i_max: 4.0,
            p_max: 2.0,
            q_max: 2.0,
        }
    }

    fn case_with(ups: &[usize]) -> Result<NetworkCase> {
        let n = ups.len();
        NetworkCase::new(
            "t",
            1.0,
            1.0,
            vec![1.0, 2.0],
            ups.iter().map(|&u| line(u)).collect(),
            vec![vec![Complex64::new(0.1, 0.0); 2]; n],
            Vec::new(),
            Vec::new(),
        )
    }

    #[test]
    fn branched_tree_order_and_children() {
        // 0 - 1 - 2 - 3, 1 - 4
        let case = case_with(&[0, 1, 2, 1]).unwrap();
        assert_eq!(case.children(0), &[1, 3]);
        assert_eq!(case.up_line(2), Some(1));
        assert_eq!(case.up_line(0), None);
        assert_eq!(case.root_lines().collect::<Vec<_>>(), vec![0]);
        let order = case.topological_order();
        let pos = |l: usize| order.iter().position(|&x| x == l).unwrap();
        for l in 0..4 {
            if let Some(k) = case.up_line(l) {
                assert!(pos(k) < pos(l));
            }
        }
    }

    #[test]
    fn topology_errors() {
        match case_with(&[0, 3, 2]) {
            Err(Error::Topology(msg)) => assert!(msg.contains("cycle"), "{msg}"),
            other => panic!("expected cycle, got {other:?}"),
        }
        match case_with(&[0, 1, 2, 1, 1, 1, 7]) {
            Err(Error::Topology(msg)) => assert!(msg.contains("feeds itself"), "{msg}"),
            other => panic!("expected self loop, got {other:?}"),
        }
        match case_with(&[0, 9]) {
            Err(Error::Topology(msg)) => assert!(msg.contains("orphan"), "{msg}"),
            other => panic!("expected orphan, got {other:?}"),
        }
        assert!(matches!(case_with(&[]), Err(Error::Topology(_))));
    }

    #[test]
    fn rejects_bad_limits_and_series() {
        let mut lines = vec![line(0)];
        lines[0].v_min = 1.3;
        let err = NetworkCase::new(
            "t",
            1.0,
            1.0,
            vec![1.0],
            lines,
            vec![vec![Complex64::new(0.0, 0.0)]],
            Vec::new(),
            Vec::new(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("v_min"), "{err}");

        let err = NetworkCase::new(
            "t",
            1.0,
            1.0,
            vec![1.0, 1.0],
            vec![line(0)],
            vec![vec![Complex64::new(0.0, 0.0)]],
            Vec::new(),
            Vec::new(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("series length"), "{err}");
    }
}
