use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{m} is not coprime to {n}")]
    NotCoprime { m: i64, n: i64 },
    #[error("l = {l} outside 1..={max}")]
    BadL { l: i64, max: i64 },
    #[error("invalid symbol sequence: {0}")]
    BadSequence(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular (det = {det:e})")]
    SingularMatrix { det: f64 },
    #[error("continuity violated: {0}")]
    ContinuityViolated(String),
    #[error("I - A_{side} is singular (det = {det:e})")]
    UnitMultiplier { side: char, det: f64 },
    #[error(
        "n-cycle solution system is singular: det(I-M_S) = {det_i_minus_m:e}, det(P_S) = {det_p:e}"
    )]
    SingularSystem { det_i_minus_m: f64, det_p: f64 },
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian (det = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("degenerate certificate: {0}")]
    DegenerateCertificate(String),
    #[error("degenerate unfolding: {0}")]
    DegenerateUnfolding(String),
    #[error("seed is not admissible: {0}")]
    SeedNotAdmissible(String),
    #[error("continuation stalled: {0}")]
    ContinuationStalled(String),
    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,
}
