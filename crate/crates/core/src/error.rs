use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("entry {index} is {value}, expected a strictly positive probability")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("entries sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("channel entry W({row}|{col}) = {value} is negative or not finite")]
    InvalidChannelEntry { row: usize, col: usize, value: f64 },

    #[error("channel column {col} sums to {sum}, expected 1")]
    ColumnNotStochastic { col: usize, sum: f64 },

    #[error("perturbation entries sum to {sum}, expected 0")]
    NonZeroSum { sum: f64 },

    #[error("scaled perturbation is not orthogonal to sqrt(P): inner product {inner}")]
    NotTangent { inner: f64 },

    #[error("epsilon {epsilon} moves the distribution off the simplex")]
    InvalidEpsilon { epsilon: f64 },

    #[error("output distribution has zero mass at symbol {index}")]
    SingularOutput { index: usize },

    #[error("numerical decomposition did not converge")]
    ConvergenceFailure,

    #[error("zero perturbation")]
    ZeroPerturbation,

    #[error("size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error(
        "top singular vectors differ by {deviation}; the DTMs do not share an input distribution"
    )]
    BasisMismatch { deviation: f64 },

    #[error("duality gap {gap} exceeds tolerance (primal {value}, dual {dual_value})")]
    GapDetected {
        value: f64,
        dual_value: f64,
        gap: f64,
    },

    #[error("ensemble feasibility failed: trace spread {spread}")]
    FeasibilityFailure { spread: f64 },

    #[error("invalid receiver count k = {k}")]
    InvalidK { k: usize },

    #[error("ensemble weights do not preserve the input marginal: residual {residual}")]
    MarginalViolated { residual: f64 },

    #[error("invalid quadratic form: {0}")]
    InvalidForm(String),

    #[error("quadratic form has no originating channel; exact evaluation unavailable")]
    MissingSource,
}

pub type Result<T> = std::result::Result<T, Error>;
