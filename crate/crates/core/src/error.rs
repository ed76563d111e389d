//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("edge length {0} is not strictly positive")]
    NonPositiveLength(f64),
    #[error("a star graph needs at least two edges, got {0}")]
    TooFewEdges(usize),
    #[error("rational declaration is inconsistent: {0}")]
    InconsistentRationalDeclaration(String),
    #[error("operation requires a declared rationality structure")]
    RationalityUndeclared,
    #[error("argument {0} is within the pole tolerance of a multiple of pi")]
    PoleProximity(f64),
    #[error("secular function evaluated at z = 0")]
    ZeroArgument,
    #[error("bisection bracket ({lo}, {hi}) does not change sign")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("tau = {0} is not a regular Kirchhoff root")]
    NotARegularRoot(f64),
    #[error("spectrum covers (0, {covered}] but {requested} was requested")]
    SpectrumTooShort { covered: f64, requested: f64 },
    #[error("Newton iteration diverged for index {index}")]
    NewtonDiverged { index: usize },
    #[error("contour quadrature ill-conditioned for index {index}: {reason}")]
    ContourIllConditioned { index: usize, reason: String },
    #[error("eigenfunction at a coincident eigenvalue is not fixed by u(v) = 1")]
    CoincidentEigenfunction,
    #[error("operation requires lengths declared rationally independent")]
    RequiresIndependentLengths,
    #[error("too many Monte-Carlo draws near a pole: {rejected} of {drawn}")]
    SampleNearPole { rejected: u64, drawn: u64 },
    #[error("operation requires lengths declared rational")]
    RequiresRationalLengths,
    #[error("alpha must be nonzero")]
    AlphaZero,
    #[error("measures live on different supports: {0} vs {1}")]
    SupportMismatch(f64, f64),
    #[error("index {0} lies beyond the computed spectrum")]
    OutOfComputedRange(usize),
    #[error("no torus point within the target radius in window {0}")]
    TargetNotFound(usize),
    #[error("target {0} is outside the admissible range")]
    InvalidTarget(f64),
    #[error("eigenvalue count mismatch in the low-frequency region: expected {expected}, found {found}")]
    RegionCountMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Variant name, used by the command line tool on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonPositiveLength(_) => "NonPositiveLength",
            Error::TooFewEdges(_) => "TooFewEdges",
            Error::InconsistentRationalDeclaration(_) => "InconsistentRationalDeclaration",
            Error::RationalityUndeclared => "RationalityUndeclared",
            Error::PoleProximity(_) => "PoleProximity",
            Error::ZeroArgument => "ZeroArgument",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::NotARegularRoot(_) => "NotARegularRoot",
            Error::SpectrumTooShort { .. } => "SpectrumTooShort",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::ContourIllConditioned { .. } => "ContourIllConditioned",
            Error::CoincidentEigenfunction => "CoincidentEigenfunction",
            Error::RequiresIndependentLengths => "RequiresIndependentLengths",
            Error::SampleNearPole { .. } => "SampleNearPole",
            Error::RequiresRationalLengths => "RequiresRationalLengths",
            Error::AlphaZero => "AlphaZero",
            Error::SupportMismatch(..) => "SupportMismatch",
            Error::OutOfComputedRange(_) => "OutOfComputedRange",
            Error::TargetNotFound(_) => "TargetNotFound",
            Error::InvalidTarget(_) => "InvalidTarget",
            Error::RegionCountMismatch { .. } => "RegionCountMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// True for input/usage errors as opposed to numerical breakdowns.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveLength(_)
                | Error::TooFewEdges(_)
                | Error::InconsistentRationalDeclaration(_)
                | Error::RationalityUndeclared
                | Error::RequiresIndependentLengths
                | Error::RequiresRationalLengths
                | Error::AlphaZero
                | Error::InvalidTarget(_)
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
