use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid theta: {0}")]
    InvalidTheta(String),

    #[error("rank-2 factorization needs sum(theta) = pi, got {sum} (off by {offset:e})")]
    NotOnPsdBoundary { sum: f64, offset: f64 },

    #[error("pivot a[{index}][{index}] = {value:e} is not positive")]
    SingularPivot { index: usize, value: f64 },

    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not of the form S(theta) on its edges: {0}")]
    NotInFamily(String),

    #[error("theta completion precondition failed: {0}")]
    CompletionPrecondition(String),

    #[error("wrong reduction branch: {0}")]
    WrongBranch(String),

    #[error("certificate rejected: {0}")]
    InvalidCertificate(String),

    #[error("graph pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("K2,{n} is outside the proved range n <= 4")]
    OutOfProvedRange { n: usize },

    #[error("diagonal entry a[{index}][{index}] = {value:e} is not positive")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("arccos argument {value} is outside [-1, 1] by more than the clamp tolerance")]
    ArccosDomain { value: f64 },

    #[error("certification failed on every route: {}", .0.join("; "))]
    CertificationFailed(Vec<String>),

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("malformed matrix document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
