use thiserror::Error;

/// Errors raised by the models and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {constraint}")]
    Invalid {
        field: &'static str,
        constraint: String,
    },

    #[error("singular impedance: series magnitude {magnitude:e} ohm is below 1e-12")]
    SingularImpedance { magnitude: f64 },

    #[error("power factor angle undefined: |P| and |Q| are both below threshold")]
    ZeroPower,

    #[error("degenerate operating point: linearization denominator {denom:e} <= 1e-12")]
    DegeneratePoint { denom: f64 },

    #[error("no equilibrium: residual has no sign change over (-pi, pi]")]
    NoRoot,

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },

    #[error("analytic and numeric eigenvalues disagree by {gap:e}")]
    EigenMismatch { gap: f64 },

    #[error("operation requires {expected} mode")]
    WrongMode { expected: &'static str },

    #[error("at t = {time} s: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, constraint: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            constraint: constraint.into(),
        }
    }

    /// Strips any time context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
