use thiserror::Error;

/// Errors produced by the solvers, projections and market routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, got {actual}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("infeasible profile: {}", describe_violations(.violations))]
    Infeasible { violations: Vec<Violation> },

    #[error("projection did not converge after {iterations} cycles (residual {residual:e})")]
    ProjectionNotConverged {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("invalid set description: {0}")]
    InvalidSet(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unbounded demand: {0}")]
    UnboundedDemand(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot sample from an unbounded set")]
    UnboundedSet,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A single violated feasibility condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: String,
    pub index: usize,
    pub value: f64,
}

fn describe_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{}[{}] = {:e}", v.what, v.index, v.value))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(field: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            field,
            expected,
            actual,
        })
    }
}
