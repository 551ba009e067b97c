use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a type invariant (norm bound, positivity, finiteness).
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// `sin θ` is below the cutoff; the observables commute and the commuting construction applies.
    #[error("observables commute (sin θ = {sin_theta:e}); use the commuting construction")]
    DegenerateCommuting { sin_theta: f64 },

    #[error("joint measurability of biased non-commuting observables is not supported")]
    UnsupportedCriterion,

    #[error("POVM is not of the two-projector form (max reconstruction residual {residual:e})")]
    DecompositionFailure { residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("infeasible search configuration: {0}")]
    InfeasibleConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Error {
    Error::Invalid {
        what,
        reason: reason.into(),
    }
}
