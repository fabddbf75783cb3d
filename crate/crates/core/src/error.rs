use std::fmt;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid interaction spec:\n{}", ViolationList(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("unknown color id {0}")]
    UnknownColor(usize),

    #[error("agent index {agent} out of range for {n_agents} agents")]
    AgentOutOfRange { agent: usize, n_agents: usize },

    /// The incrementally maintained weight totals drifted from their closed form.
    #[error("weight index drift for agent {agent} at t={t}: tree total {tree} vs closed form {expected}")]
    Consistency {
        agent: usize,
        t: u64,
        tree: f64,
        expected: f64,
    },

    #[error("matrix is reducible; use the ODE trajectory to obtain per-component growth rates")]
    Reducible,

    #[error("matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate fit range: t_min={t_min} must be below t_max={t_max}")]
    DegenerateRange { t_min: f64, t_max: f64 },

    #[error("series {series} has a non-positive value {value} at t={t}")]
    NonPositive { series: usize, t: f64, value: f64 },

    #[error("observation at t={t}, agent {agent}, item {item} has probability zero under the spec")]
    ImpossibleObservation { t: u64, agent: usize, item: String },

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("no observation for t={t}, agent {agent}")]
    Missing { t: u64, agent: usize },

    #[error("item {item:?} first appears for several agents at t={t}")]
    Simultaneity { t: u64, item: String },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidSpec(_)
            | Error::AgentOutOfRange { .. }
            | Error::Reducible
            | Error::NegativeEntry { .. }
            | Error::DegenerateRange { .. }
            | Error::NonPositive { .. }
            | Error::Malformed { .. }
            | Error::Missing { .. }
            | Error::Simultaneity { .. }
            | Error::Domain(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Io(e) => e.kind() == std::io::ErrorKind::NotFound,
            Error::UnknownColor(_)
            | Error::Consistency { .. }
            | Error::NotConverged { .. }
            | Error::ImpossibleObservation { .. } => false,
        }
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}
