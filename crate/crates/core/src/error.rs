use thiserror::Error;

use crate::conic::ConicProgram;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("case parse error: {0}")]
    Parse(String),

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("program builder error: {0}")]
    Builder(String),

    #[error("conic program error: {0}")]
    Program(String),

    #[error("solver failure: {0}")]
    Solver(String),

    /// A solve inside the iterative loop did not reach optimality; the
    /// offending program is kept so callers can dump it.
    #[error("iteration {iteration}: solver returned {status}")]
    IterationSolve {
        iteration: usize,
        status: String,
        program: Box<ConicProgram>,
    },

    #[error("power flow diverged at t={t} after {sweeps} sweeps (likely voltage collapse)")]
    PowerFlowDivergence { t: usize, sweeps: usize },

    #[error("enumeration refused: {patterns} mode patterns exceed the limit of {limit}")]
    EnumerationLimit { patterns: String, limit: u64 },

    #[error("solution does not match case: {0}")]
    Dimension(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(stage: impl Into<String>) -> impl FnOnce(Error) -> Error {
        let stage = stage.into();
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
