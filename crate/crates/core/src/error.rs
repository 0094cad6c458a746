use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum AlapError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("point outside the admissible region: {0}")]
    OutOfRange(String),

    #[error("quadrature did not converge on [{lo}, {hi}]")]
    QuadratureFailure { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("integrator step failure at t = {0}")]
    StepFailure(f64),

    #[error("orbit left the domain: {0}")]
    DomainExit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AlapError>;
