//! Line-oriented debug dump of a [`ConicProgram`].
//!
//! ```text
//! conic-program v1
//! var 0 p[l1,t0]
//! minimize 0e0 1e0*x0
//! eq balance[l1,t0] -1e-1e0 1e0*x0
//! ge vmin[l1,t0] ...
//! soc cap[...] <t> | <x1> | <x2>
//! rsoc flow[...] <y> | <z> | <x1> | <x2>
//! ```
//!
//! An affine expression is its constant followed by `coef*x<id>` tokens.
//! Numbers use Rust's shortest round-trip exponent format, so parsing a dump
//! reproduces the program exactly.

use std::fmt::Write;

use super::{ConicProgram, LinExpr, LinearConstraint, Relation, RotatedConeConstraint, SocConstraint, VarId};
use crate::error::{Error, Result};

const HEADER: &str = "conic-program v1";

fn write_expr(out: &mut String, e: &LinExpr) {
    write!(out, "{:e}", e.constant).unwrap();
    for (v, c) in &e.terms {
        write!(out, " {:e}*x{}", c, v.0).unwrap();
    }
}

fn write_exprs(out: &mut String, exprs: &[&LinExpr]) {
    for (i, e) in exprs.iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        write_expr(out, e);
    }
}

pub(super) fn write_text(p: &ConicProgram) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for (i, name) in p.variables.iter().enumerate() {
        writeln!(out, "var {i} {name}").unwrap();
    }
    out.push_str("minimize ");
    write_expr(&mut out, &p.objective);
    out.push('\n');
    for c in &p.linear {
        let kw = match c.relation {
            Relation::Eq => "eq",
            Relation::Ge => "ge",
        };
        write!(out, "{kw} {} ", c.label).unwrap();
        write_expr(&mut out, &c.expr);
        out.push('\n');
    }
    for c in &p.soc {
        write!(out, "soc {} ", c.label).unwrap();
        let mut parts = vec![&c.t];
        parts.extend(c.x.iter());
        write_exprs(&mut out, &parts);
        out.push('\n');
    }
    for c in &p.rotated {
        write!(out, "rsoc {} ", c.label).unwrap();
        let mut parts = vec![&c.y, &c.z];
        parts.extend(c.x.iter());
        write_exprs(&mut out, &parts);
        out.push('\n');
    }
    out
}

fn parse_err(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Program(format!("line {}: {msg}", line_no + 1))
}

fn parse_expr(line_no: usize, s: &str) -> Result<LinExpr> {
    let mut tokens = s.split_whitespace();
    let constant = tokens
        .next()
        .ok_or_else(|| parse_err(line_no, "empty expression"))?
        .parse::<f64>()
        .map_err(|e| parse_err(line_no, e))?;
    let mut terms = Vec::new();
    for tok in tokens {
        let (coef, var) = tok
            .split_once("*x")
            .ok_or_else(|| parse_err(line_no, format!("bad term {tok:?}")))?;
        let coef = coef.parse::<f64>().map_err(|e| parse_err(line_no, e))?;
        let var = var.parse::<usize>().map_err(|e| parse_err(line_no, e))?;
        terms.push((VarId(var), coef));
    }
    Ok(LinExpr { terms, constant })
}

fn parse_exprs(line_no: usize, s: &str) -> Result<Vec<LinExpr>> {
    s.split('|').map(|part| parse_expr(line_no, part)).collect()
}

/// Parses the output of [`ConicProgram::to_text`].
pub fn parse_text(text: &str) -> Result<ConicProgram> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(Error::Program(format!("missing header {HEADER:?}"))),
    }
    let mut p = ConicProgram::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (kw, rest) = line.split_once(' ').unwrap_or((line, ""));
        match kw {
            "var" => {
                let (id, name) = rest
                    .split_once(' ')
                    .ok_or_else(|| parse_err(no, "var needs an id and a name"))?;
                let id: usize = id.parse().map_err(|e| parse_err(no, e))?;
                if id != p.variables.len() {
                    return Err(parse_err(no, format!("variable ids out of order at {id}")));
                }
                p.variables.push(name.to_string());
            }
            "minimize" => p.objective = parse_expr(no, rest)?,
            "eq" | "ge" | "soc" | "rsoc" => {
                let (label, body) = rest
                    .split_once(' ')
                    .ok_or_else(|| parse_err(no, "constraint needs a label and a body"))?;
                let label = label.to_string();
                match kw {
                    "eq" | "ge" => p.linear.push(LinearConstraint {
                        label,
                        relation: if kw == "eq" { Relation::Eq } else { Relation::Ge },
                        expr: parse_expr(no, body)?,
                    }),
                    "soc" => {
                        let mut parts = parse_exprs(no, body)?;
                        let t = parts.remove(0);
                        p.soc.push(SocConstraint { label, t, x: parts });
                    }
                    _ => {
                        let mut parts = parse_exprs(no, body)?;
                        if parts.len() < 2 {
                            return Err(parse_err(no, "rotated cone needs y and z"));
                        }
                        let y = parts.remove(0);
                        let z = parts.remove(0);
                        p.rotated.push(RotatedConeConstraint { label, y, z, x: parts });
                    }
                }
            }
            other => return Err(parse_err(no, format!("unknown keyword {other:?}"))),
        }
    }
    p.validate()?;
    Ok(p)
}
