use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid effect: {0}")]
    InvalidEffect(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("selective operation has zero probability on this state (rho(T(I)) = {probability:e})")]
    NullOutcome { probability: f64 },

    #[error("matrix is not a projection (|P^2 - P| = {residual:e})")]
    NotAProjection { residual: f64 },

    #[error("hermitian square root failed: eigenvalue {eigenvalue:e} below -tol")]
    SquareRootFailure { eigenvalue: f64 },

    #[error("effects do not resolve the identity (|sum E_i - I| = {residual:e})")]
    IncompleteResolution { residual: f64 },

    #[error("operation requires a nonselective channel")]
    SelectiveChannel,

    #[error("ambiguous numerical rank decision in {context}: value {value:e} lies in the gap around threshold {threshold:e}")]
    RankAmbiguity {
        context: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("algebra is abelian: no ambiguous mixture exists")]
    AbelianAlgebra,

    #[error("algebra is not abelian (|[A,B]| = {commutator:e})")]
    NotAbelian { commutator: f64 },

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("density matrices do not commute (|[D0,D1]| = {commutator:e})")]
    NonCommuting { commutator: f64 },

    #[error("event has zero probability ({probability:e})")]
    ZeroProbabilityEvent { probability: f64 },

    #[error("not a bijection of {0} points")]
    NotABijection(usize),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown checker `{0}`")]
    UnknownChecker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
