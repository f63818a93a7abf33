use thiserror::Error;

pub type Result<T> = std::result::Result<T, CcaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CcaError {
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotSymmetric { max_asymmetry: f64, tolerance: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error(
        "{block} is not positive definite (eigenvalue range [{min_eigenvalue:.3e}, {max_eigenvalue:.3e}]); \
         add a ridge term (regularised variant) to restore invertibility"
    )]
    NotPositiveDefinite {
        block: String,
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error(
        "{block} is singular or ill-conditioned (condition estimate {condition:.3e} > 1e10); \
         use the regularised variant with a ridge of at least {min_ridge:.3e}"
    )]
    SingularBlock {
        block: String,
        condition: f64,
        min_ridge: f64,
    },

    #[error("kernel matrix is not positive semi-definite: pivot diagonal {value:.3e} at index {index}")]
    PsdViolation { index: usize, value: f64 },

    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row count mismatch: view a has {rows_a} rows, view b has {rows_b} rows")]
    RowCountMismatch { rows_a: usize, rows_b: usize },

    #[error("column '{column}' of view {view} is constant (std < 1e-12)")]
    ConstantColumn { view: char, column: String },

    #[error("data must be standardized before computing covariance blocks")]
    NotStandardized,

    #[error("unregularised kernel CCA is degenerate (all canonical correlations equal one); c1 and c2 must be positive, got c1={c1}, c2={c2}")]
    DegenerateKernelProblem { c1: f64, c2: f64 },

    #[error("correlation r_{index} = {value} makes the Bartlett-Lawley statistic singular")]
    SingularStatistic { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all {0} basis indices failed to fit")]
    AllBasisFitsFailed(usize),
}

impl CcaError {
    /// True for failures that come from the numerics (singular blocks,
    /// indefinite kernels, ...) rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CcaError::NotPositiveDefinite { .. }
                | CcaError::SingularBlock { .. }
                | CcaError::PsdViolation { .. }
                | CcaError::DegenerateKernelProblem { .. }
                | CcaError::SingularStatistic { .. }
                | CcaError::AllBasisFitsFailed(_)
                | CcaError::NonFinite
        )
    }
}
