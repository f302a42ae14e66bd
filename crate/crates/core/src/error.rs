use thiserror::Error;

use crate::cubature::AssumptionViolation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("marginal factor is singular at diagonal entry {index}")]
    SingularMarginal { index: usize },

    #[error("prior factor is singular at diagonal entry {index}")]
    SingularPrior { index: usize },

    /// The rank-one downdate needed the square root of a nonpositive number
    /// (or produced a non-finite entry) at pivot `pivot`. `column` is the
    /// index of the downdate vector when several are applied in sequence.
    #[error("Cholesky downdate failed at pivot {pivot}{}", column.map(|c| format!(" (downdate column {c})")).unwrap_or_default())]
    DowndateFailure { pivot: usize, column: Option<usize> },

    #[error("non-finite function image at cubature node {node}")]
    NonFiniteImage { node: usize },

    #[error("cubature rule rejected: {0}")]
    AssumptionViolated(AssumptionViolation),

    #[error("cubature rule with {nodes} nodes exceeds the cap of {cap}")]
    RuleTooLarge { nodes: usize, cap: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("not a valid triangular factor: {0}")]
    InvalidFactor(&'static str),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("bearing undefined at the sensor origin")]
    OriginSingularity,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at time step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },

    #[error("in smoother iteration {iteration}: {source}")]
    AtIteration { iteration: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// The innermost error, with step/iteration annotations removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } | Error::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }

    /// Innermost annotated time step, if any.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::AtStep { step, source } => source.step().or(Some(*step)),
            Error::AtIteration { source, .. } => source.step(),
            _ => None,
        }
    }

    /// Outermost annotated smoother iteration, if any.
    pub fn iteration(&self) -> Option<usize> {
        match self {
            Error::AtIteration { iteration, .. } => Some(*iteration),
            Error::AtStep { source, .. } => source.iteration(),
            _ => None,
        }
    }

    pub fn is_downdate_failure(&self) -> bool {
        matches!(self.root(), Error::DowndateFailure { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
