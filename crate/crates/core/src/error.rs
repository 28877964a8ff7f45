use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the set on which the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Index or level outside the truncated tree.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// The (beta, depth) pair makes p^{-L} (or p^{L}) overflow, or the tree is too large.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("beta = 0 has no distinguished principal eigenvalue: every lambda in (0, 1] is principal with eigenfunction (1 - lambda)^|x|; use closed_form_beta0")]
    BetaZero,

    /// The shooting predicate never changed sign on the search interval.
    #[error("no principal eigenvalue found for beta = {beta}: {reason}")]
    NoEigenvalue { beta: f64, reason: String },

    /// lambda is not strictly below the truncated principal eigenvalue.
    #[error("lambda = {lambda} is outside the resolvent window (0, lambda1(L)): {reason}")]
    SpectralWindow { lambda: f64, reason: String },

    #[error("singular elimination at index {index}: pivot {pivot}")]
    Singular { index: usize, pivot: f64 },

    #[error("time {t} outside trajectory range [0, {t_end}]")]
    Range { t: f64, t_end: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("fit window contains {found} samples, need at least 3")]
    Window { found: usize },

    #[error("picard iteration did not converge after {iterations} iterations (last update {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
