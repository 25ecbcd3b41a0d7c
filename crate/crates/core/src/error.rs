use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator dimension {dim} exceeds the supported maximum of {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("joint estimation unattainable: QFIM is singular (det/|F|² = {ratio:.3e})")]
    SingularQfim { ratio: f64 },

    #[error("grid too coarse: step-halving discrepancy {discrepancy:.3e} exceeds {tolerance:.3e}")]
    GridTooCoarse { discrepancy: f64, tolerance: f64 },

    #[error("non-positive probability {value:.3e} for outcome {index}")]
    NonPositiveProbability { index: usize, value: f64 },

    #[error("singular Jacobian (condition number {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("estimate left the linear-response window in round {round}")]
    Divergence { round: usize },

    #[error("propagation lost unitarity (deviation {deviation:.3e})")]
    Propagation { deviation: f64 },
}
