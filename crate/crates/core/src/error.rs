use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular Mehler kernel: |1 - t^2| = {0:e} is below the floor")]
    SingularKernel(f64),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("quadrature did not converge: estimated relative error {estimate:e} exceeds target {target:e}")]
    QuadratureNotConverged { estimate: f64, target: f64 },
    #[error("series did not converge after {0} terms")]
    NotConverged(usize),
    #[error("no threshold: Re(E_cav / Omega^2) = {0:e} is not negative")]
    NoThreshold(f64),
    #[error("model evaluation failed for row {row}: {reason}")]
    ModelEvaluationFailed { row: usize, reason: String },
    #[error("optimizer stopped after {0} iterations without converging")]
    MaxIterations(usize),
    #[error("singular Jacobian; degenerate direction: {0}")]
    SingularJacobian(String),
    #[error("degenerate fit: {0}")]
    FitDegenerate(String),
    #[error("no peak found in scan")]
    NoPeak,
    #[error("grid too coarse: spacing {spacing} um exceeds {limit} um")]
    GridTooCoarse { spacing: f64, limit: f64 },
    #[error("negative radicand {0:e} in quadrature-difference width")]
    NegativeRadicand(f64),
    #[error("perturbative dispersive expansion invalid: proxy {0:.3} exceeds 0.3")]
    PerturbationInvalid(f64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("no superradiant onset detected")]
    NoOnset,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
