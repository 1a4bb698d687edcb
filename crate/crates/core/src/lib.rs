//! Exact convex relaxation of the AC optimal power flow for radial
//! distribution grids with batteries.
//!
//! The crate builds second-order cone programs over a branch-flow grid
//! model, iterates a charge/discharge sign guess until it is a fixed point,
//! checks sufficient exactness conditions ahead of time, and replays every
//! dispatch through a nonlinear power-flow oracle.

pub mod bess;
pub mod conditions;
pub mod conic;
pub mod error;
pub mod grid;
pub mod maropf;
pub mod pf;
pub mod scenario;

pub use error::{Error, Result};
