use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("domain error in `{op}` at offset {offset}")]
    Domain { op: &'static str, offset: usize },
    #[error("derivative undefined for `{op}` at offset {offset}")]
    NonDifferentiable { op: &'static str, offset: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input check failed: {0}")]
    InputCheck(String),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite derivative at t = {t}")]
    NonFiniteDerivative { t: f64 },
    #[error("Newton iteration did not converge (residual {residual:e})")]
    NewtonNonConvergence { residual: f64 },
    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },
    #[error("QR iteration did not converge")]
    QrNonConvergence,

    #[error("equilibrium is not hyperbolic")]
    NonHyperbolic,
    #[error("continuation failed at the seed: {0}")]
    SeedFailure(String),
    #[error("limit entry of dΛ_α/ds not guaranteed zero: α = {alpha} ≥ ρ = {rho}")]
    AlphaWindow { alpha: f64, rho: f64 },
    #[error("explicit threshold geometry not supported for n = {n}")]
    NotSupportedExplicitly { n: usize },
    #[error("empty point set")]
    EmptySet,
    #[error("branch does not reach the future limit")]
    BranchTruncated,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    Construction(String),
}

impl Error {
    /// Errors that come from the numerics rather than from a malformed problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::NonFiniteDerivative { .. }
                | Error::NewtonNonConvergence { .. }
                | Error::SingularJacobian { .. }
                | Error::QrNonConvergence
                | Error::NonHyperbolic
                | Error::SeedFailure(_)
                | Error::BranchTruncated
                | Error::Construction(_)
                | Error::Domain { .. }
                | Error::NonDifferentiable { .. }
        )
    }
}
