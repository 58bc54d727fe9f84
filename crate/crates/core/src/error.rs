use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("order {order} outside supported range 0..={max}")]
    OrderOutOfRange { order: usize, max: usize },

    /// The requested tolerance cannot be met; `best_bound` is the tightest
    /// error bound that was reached.
    #[error("precision unachievable: best bound {best_bound:e} exceeds tolerance {tol:e}")]
    PrecisionUnachievable { best_bound: f64, tol: f64 },

    #[error("quadrature budget exhausted: estimate {estimate:e} with bound {bound:e}")]
    QuadratureBudget { estimate: f64, bound: f64 },

    /// A Bonferroni-bracketed series did not narrow enough within the
    /// allowed number of terms.
    #[error("series bracket [{lower}, {upper}] too wide after {terms} terms")]
    SeriesNotConverged { lower: f64, upper: f64, terms: usize },

    #[error("insufficient samples: observed {observed}, need at least {required}")]
    InsufficientSamples { observed: usize, required: usize },

    #[error("malformed record: {0}")]
    Format(String),
}

impl Error {
    /// Best error bound carried by the error, when it has one.
    pub fn best_bound(&self) -> Option<f64> {
        match self {
            Error::PrecisionUnachievable { best_bound, .. } => Some(*best_bound),
            Error::QuadratureBudget { bound, .. } => Some(*bound),
            Error::SeriesNotConverged { lower, upper, .. } => Some(upper - lower),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OrderOutOfRange { .. } => "order_out_of_range",
            Error::PrecisionUnachievable { .. } => "precision_unachievable",
            Error::QuadratureBudget { .. } => "quadrature_budget",
            Error::SeriesNotConverged { .. } => "series_not_converged",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::Format(_) => "format",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
