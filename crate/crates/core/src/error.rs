use alloc::string::String;

use crate::linalg::C64;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid value: {0}")]
    Value(String),
    #[error("all delays are zero; use the delay-free path")]
    DegenerateDelays,
    #[error("resolvent is singular at omega = {omega} (rcond = {rcond:e})")]
    SingularResolvent { omega: f64, rcond: f64 },
    #[error("D^T D - xi^2 I is singular at xi = {xi}")]
    SingularDxi { xi: f64 },
    #[error("collocation system is singular at lambda = {lambda}")]
    CollocationPole { lambda: C64 },
    #[error("eigenvalue computation did not converge ({0})")]
    Eigensolver(&'static str),
    #[error("level-set search exceeded {0} iterations")]
    MaxIterations(usize),
    #[error("crossings persist at xi = {xi}; g_max(N) appears unbounded")]
    NonFiniteGmax { xi: f64 },
    #[error("Gauss-Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Gauss-Newton Jacobian is rank deficient (sigma ratio {ratio:e})")]
    RankDeficient { ratio: f64 },
    #[error("Gauss-Newton diverged: xi = {xi} left the admissible range")]
    Divergence { xi: f64 },
    #[error("cut-off target {target} unreachable with N <= {n_max}; rescale or raise the cap")]
    UnreachableCutoff { target: f64, n_max: usize },
    #[error("system is not exponentially stable: rightmost root estimate {root}")]
    Unstable { root: C64 },
}

impl Error {
    /// True for errors caused by malformed input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_) | Error::Value(_) | Error::DegenerateDelays
        )
    }
}
