use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("window has infinite intensity mass")]
    InfiniteMass,

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point configurations live on different windows")]
    WindowMismatch,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("evaluation failed at atom {index} ({location:?}): {reason}")]
    Evaluation {
        index: usize,
        location: Vec<f64>,
        reason: String,
    },

    #[error("tail mass unavailable for model `{0}`")]
    TailUnavailable(String),

    #[error("quadrature did not converge (residual {residual:e})")]
    Quadrature { residual: f64 },

    #[error("covariance matrix is not positive semidefinite after jitter")]
    NotPositiveSemidefinite,

    #[error("grid has {nodes} nodes; dense factorization is limited to {limit}")]
    GridTooLarge { nodes: usize, limit: usize },

    #[error("psi not admissible: {0}")]
    PsiNotAdmissible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("error budget {requested:e} is unattainable; smallest attainable budget is {attainable:e}")]
    BudgetUnattainable { requested: f64, attainable: f64 },

    #[error("{undecided} of {total} atoms are undecided; use larger radii")]
    TooManyUndecided { undecided: usize, total: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
