use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module.
///
/// Argument and shape errors are caller mistakes; the remaining variants are
/// domain errors (the inputs are well-formed but violate a mathematical
/// precondition such as positivity, irreducibility or reversibility).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    Domain(String),

    #[error("chain is reducible: state {to} is not reachable from state {from}")]
    Reducible { from: usize, to: usize },

    #[error("distribution is not stationary for the chain (max residual {residual:e})")]
    NotStationary { residual: f64 },

    #[error("chain is not reversible (max detailed-balance residual {residual:e})")]
    NotReversible {
        residual: f64,
        /// Infimum of the Dirichlet quotient, which for a non-reversible chain
        /// is the gap of its additive reversibilization. Reported, not used.
        variational_gap: Option<f64>,
    },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in structured CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Shape(_) => "shape",
            Error::Domain(_) => "domain",
            Error::Reducible { .. } => "reducible",
            Error::NotStationary { .. } => "not_stationary",
            Error::NotReversible { .. } => "not_reversible",
            Error::SizeGuard(_) => "size_guard",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for caller mistakes that map to the usage exit code.
    pub fn is_argument_error(&self) -> bool {
        matches!(self, Error::Argument(_))
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
