use crate::capacity::CapacityResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants fall into two classes: validation errors (bad input data or
/// arguments) and numeric errors (the input is well formed but the requested
/// quantity does not exist or could not be computed). [`Error::is_validation`]
/// tells them apart, and [`Error::code`] gives a stable machine-readable tag.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NonSquare { rows: usize, row: usize, cols: usize },
    #[error("alphabet size {0} is too small (need n >= 2)")]
    TooSmall(usize),
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, outside the renormalization tolerance")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("support violation: p[{index}] > 0 but q[{index}] = 0")]
    SupportViolation { index: usize },

    #[error("Blahut-Arimoto did not converge after {} iterations (gap {})", .0.iterations, .0.gap)]
    NoConvergence(Box<CapacityResult>),
    #[error("channel matrix is singular to working precision (condition number {condition:e})")]
    SingularChannel { condition: f64 },
    #[error("Muroga formula not applicable: min d = {min_d:e}")]
    NotApplicable { min_d: f64 },
    #[error("entry ({row}, {col}) is zero; log ratio undefined")]
    ZeroEntry { row: usize, col: usize },
    #[error("finite-difference step {step} leaves (0, 1) at ({row}, {col})")]
    StepOutOfRange { row: usize, col: usize, step: f64 },
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("invariant distribution is not unique ({multiplicity} null directions)")]
    NonUniqueInvariant { multiplicity: usize },
    #[error("no nonnegative invariant distribution found")]
    InvariantNotFound,
    #[error("invariant distribution has zero mass at state {index}")]
    ZeroInvariantMass { index: usize },
    #[error("distribution is not invariant (residual {residual:e})")]
    NotInvariant { residual: f64 },
    #[error("reversibilization S is not symmetric (asymmetry {asymmetry:e})")]
    AsymmetricReversibilization { asymmetry: f64 },

    #[error("distribution is degenerate: p[{index}] = {value}")]
    DegenerateDistribution { index: usize, value: f64 },
    #[error("timescale must be positive and finite, got {0}")]
    InfiniteTimescale(f64),
    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("identity check failed: {what} residual {residual:e}")]
    IdentityViolation { what: &'static str, residual: f64 },

    #[error("parameter {name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error("every grid cell failed")]
    AllCellsFailed,
    #[error("grid has no capacity-achieving distribution columns")]
    MissingPStar,
    #[error("capacity gradient is not computable near the argmin: {0}")]
    SingularNeighborhood(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier used in structured error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonSquare { .. } => "non_square",
            Error::TooSmall(_) => "too_small",
            Error::NonFinite { .. } => "non_finite",
            Error::NegativeEntry { .. } => "negative_entry",
            Error::RowSumViolation { .. } => "row_sum_violation",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::SupportViolation { .. } => "support_violation",
            Error::NoConvergence(_) => "no_convergence",
            Error::SingularChannel { .. } => "singular_channel",
            Error::NotApplicable { .. } => "not_applicable",
            Error::ZeroEntry { .. } => "zero_entry",
            Error::StepOutOfRange { .. } => "step_out_of_range",
            Error::InvalidPerturbation(_) => "invalid_perturbation",
            Error::NonUniqueInvariant { .. } => "non_unique_invariant",
            Error::InvariantNotFound => "invariant_not_found",
            Error::ZeroInvariantMass { .. } => "zero_invariant_mass",
            Error::NotInvariant { .. } => "not_invariant",
            Error::AsymmetricReversibilization { .. } => "asymmetric_reversibilization",
            Error::DegenerateDistribution { .. } => "degenerate_distribution",
            Error::InfiniteTimescale(_) => "infinite_timescale",
            Error::NonPositiveBeta(_) => "non_positive_beta",
            Error::IdentityViolation { .. } => "identity_violation",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidParams(_) => "invalid_params",
            Error::AllCellsFailed => "all_cells_failed",
            Error::MissingPStar => "missing_p_star",
            Error::SingularNeighborhood(_) => "singular_neighborhood",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse(_) => "parse_error",
            Error::Io(_) => "io_error",
        }
    }

    /// True for errors caused by malformed input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonSquare { .. }
                | Error::TooSmall(_)
                | Error::NonFinite { .. }
                | Error::NegativeEntry { .. }
                | Error::RowSumViolation { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidDistribution(_)
                | Error::SupportViolation { .. }
                | Error::StepOutOfRange { .. }
                | Error::InvalidPerturbation(_)
                | Error::OutOfRange { .. }
                | Error::InvalidParams(_)
                | Error::MissingPStar
                | Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}
