use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("oracle failure at iteration {iteration}: {message}")]
    Oracle { iteration: usize, message: String },

    #[error("backtracking exceeded {cap} trials (L = {last_l:e}); the gradient oracle is likely broken")]
    BacktrackingCap { cap: usize, last_l: f64 },

    #[error("supply mu: no coercivity bound is known for this objective")]
    MuUnavailable,

    #[error("missing geometry for sigma variant {0}")]
    MissingGeometry(&'static str),

    #[error("budget breach at iteration {iteration}: |e| = {e_norm:e} > budget {budget:e}")]
    BudgetBreach {
        iteration: usize,
        e_norm: f64,
        budget: f64,
    },

    #[error("divergence at iteration {iteration}: non-finite objective value")]
    Divergence { iteration: usize },

    #[error("missing trace metadata: {0}")]
    MissingMetadata(String),

    #[error("strategy mismatch: {0}")]
    StrategyMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
