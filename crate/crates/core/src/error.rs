use thiserror::Error;

/// Errors produced by the identification library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("systems live in different time domains")]
    DomainMismatch,

    #[error("singular algebraic loop (1 + D1*D2 = 0)")]
    AlgebraicLoop,

    #[error("closed loop is unstable (max pole real part {0:.6e})")]
    UnstableLoop(f64),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("realization is not stabilizable/detectable")]
    NotStabilizable,

    #[error("regressor matrix is rank deficient (insufficient excitation)")]
    RankDeficient,

    #[error("optimizer found no stable candidate")]
    NoStableCandidate,

    #[error("ARMAX predictor recursion diverged")]
    Divergent,

    #[error("degenerate input signal: {0}")]
    DegenerateInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
