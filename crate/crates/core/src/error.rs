use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(
        "eigenvalue iteration did not converge after {iterations} iterations \
         (bracket [{lower}, {upper}])"
    )]
    EigenNoConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error(
        "discount rate {r} does not exceed the spectral abscissa {abscissa}; \
         rI - A is not a nonsingular M-matrix (choose r > {abscissa})"
    )]
    DiscountTooSmall { r: f64, abscissa: f64 },

    #[error("linear solve failed: {0}")]
    SolveBreakdown(String),

    #[error("linear program: {0}")]
    Lp(#[from] LpError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration left the admissible region at t = {t} (node {node}, value {value})")]
    Unstable { t: f64, node: usize, value: f64 },

    #[error("control row {row} has a zero cost-to-go but nonzero allocated resources")]
    DegenerateControl { row: usize },

    #[error("graph has no node geometry")]
    MissingGeometry,

    #[error("exact tour search supports at most {max} waypoints, got {n}")]
    TooManyWaypoints { n: usize, max: usize },
}
