use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid too short: need at least {required} points, got {got}")]
    GridTooShort { required: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("sample contains negative value {0}")]
    NegativeValue(f64),

    #[error(
        "circulant embedding for {model} (h = {h}, n = {n}) dropped {mass:.3e} of spectral mass, \
         above the ceiling {ceiling:.1e}"
    )]
    EmbeddingTruncation {
        model: String,
        h: f64,
        n: usize,
        mass: f64,
        ceiling: f64,
    },

    #[error("no bracket for delta(c = {c}) within {doublings} doublings; malformed variance function?")]
    BracketNotFound { c: f64, doublings: usize },

    #[error("x / sigma(x) is not monotone near x = {at}; non-monotone variance functions are unsupported")]
    NonMonotone { at: f64 },

    #[error("theta = {theta} is outside the range of sigma")]
    ThetaOutOfRange { theta: f64 },

    #[error("quadrature did not converge: coarse {coarse}, refined {refined}")]
    QuadratureNotConverged { coarse: f64, refined: f64 },

    #[error("model violates regime requirements: {0}")]
    RegimeConditions(String),

    #[error(
        "lookback truncation rate {rate:.3} at c = {c} exceeds {limit}; increase kappa"
    )]
    TruncationRate { c: f64, rate: f64, limit: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
