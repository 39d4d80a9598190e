use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InlsError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("interpolation search failed: {0}")]
    SearchFailed(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("profile is identically zero")]
    ZeroProfile,
    #[error("no convergence after {iters} iterations (residual {el_res:e})")]
    Diverged { iters: usize, el_res: f64 },
    #[error("configuration is not coercive: {0}")]
    NotCoerciveConfig(String),
    #[error("singular hessian: {0}")]
    SingularHessian(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl InlsError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            InlsError::HypothesisViolation(_) => "HYPOTHESIS_VIOLATION",
            InlsError::Domain(_) => "DOMAIN",
            InlsError::SearchFailed(_) => "SEARCH_FAILED",
            InlsError::EmptyGrid => "EMPTY_GRID",
            InlsError::ZeroProfile => "ZERO_PROFILE",
            InlsError::Diverged { .. } => "DIVERGED",
            InlsError::NotCoerciveConfig(_) => "NOT_COERCIVE_CONFIG",
            InlsError::SingularHessian(_) => "SINGULAR_HESSIAN",
            InlsError::Io(_) => "IO",
            InlsError::Parse(_) => "PARSE",
        }
    }
}

pub type Result<T> = std::result::Result<T, InlsError>;
