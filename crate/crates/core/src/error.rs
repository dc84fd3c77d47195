use thiserror::Error;

/// Errors raised by the solvers and verification routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FracError {
    #[error("{what}: quadrature did not reach tolerance {requested:e} (estimate {achieved:e})")]
    NonConvergentQuadrature {
        what: &'static str,
        achieved: f64,
        requested: f64,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no sign change found on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("assembly produced a non-positive diagonal entry at row {row}: {value:e}")]
    SingularAssembly { row: usize, value: f64 },
    #[error("linear solve broke down at pivot {row}: {value:e}")]
    SingularSolve { row: usize, value: f64 },
    #[error("closed-form Green kernel is not available for {0}")]
    KernelUnavailable(String),
    #[error("probe window [{lo:e}, {hi:e}] is finer than the grid resolution {resolution:e}")]
    WindowTooClose { lo: f64, hi: f64, resolution: f64 },
    #[error("weighted denominator failed its refinement check: {0:e} relative change")]
    DivergentDenominator(f64),
    #[error("no converged load found down to lambda = {lowest:e}")]
    BracketExhausted { lowest: f64 },
    #[error("computed c_s is not positive: {0:e}")]
    NonPositiveCs(f64),
    #[error("energy is not finite")]
    NonFiniteEnergy,
    #[error("eigen-solver did not converge: residual {residual:e} after {sweeps} sweeps")]
    EigenFailure { residual: f64, sweeps: usize },
    #[error("fit window holds only {points} nodes, need at least {needed}")]
    InsufficientWindow { points: usize, needed: usize },
    #[error("check failed at node {node}: {detail}")]
    AssertionFailure { node: usize, detail: String },
    #[error("load {lambda:e} converged with margin {margin:e} where no solution should exist")]
    ExistenceAnomaly { lambda: f64, margin: f64 },
    #[error("NaN encountered in iterate {iteration}")]
    NanIterate { iteration: usize },
}

pub type Result<T> = std::result::Result<T, FracError>;
