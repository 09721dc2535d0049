use thiserror::Error;

/// Errors raised by the library. Each module reports through one of these variants.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShearError {
    #[error("mobius action overflow: |cz+d| = {0:e} is below the guard threshold")]
    MobiusOverflow(f64),
    #[error("domain reduction did not terminate within {0} steps")]
    IterationCap(usize),
    #[error("search budget exhausted after {nodes} nodes at depth {depth}")]
    BudgetExceeded { nodes: usize, depth: usize },
    #[error("invalid group specification: {0}")]
    InvalidGroup(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: need at least {need} points, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("tolerance not met: estimate {estimate:e}, achieved error {achieved:e}, requested {requested:e}")]
    ToleranceNotMet { estimate: f64, achieved: f64, requested: f64 },
    #[error("parameters outside the convergent range: {0}")]
    NonConvergent(String),
    #[error("divergent pairing: {0}")]
    DivergentPairing(String),
    #[error("pole at s = {0}")]
    Pole(f64),
    #[error("insufficient convergence: cutoffs disagree by {0:e} (relative)")]
    InsufficientConvergence(f64),
    #[error("parameter list spans only {0:.3} decades")]
    InsufficientSpan(f64),
    #[error("test function failed automorphy check: violation {0:e}")]
    NotAutomorphic(f64),
}

pub type Result<T> = std::result::Result<T, ShearError>;
