use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {what}: {value} is outside the admissible range")]
    Domain { what: &'static str, value: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("state is not strictly positive: {field}[{cell}] = {value}")]
    Positivity {
        field: &'static str,
        cell: usize,
        value: f64,
    },

    #[error("charge compatibility violated: integral of (n - p) is {charge:e}, tolerance {tol:e}")]
    Compatibility { charge: f64, tol: f64 },

    #[error("nonzero total charge {charge:e} (tolerance {tol:e}); the equilibrium requires Q0 = 0")]
    NonzeroCharge { charge: f64, tol: f64 },

    #[error("reactive entropy term diverges at n*p = 0 in cell {cell}")]
    ReactiveDivergence { cell: usize },

    #[error("u_inf = {u_inf} lies outside the band [c_u, C_u] = [{c_u}, {upper}]")]
    Band { u_inf: f64, c_u: f64, upper: f64 },

    #[error("time step rejected {halvings} times at t = {t}")]
    StepFailure { t: f64, halvings: u32 },

    #[error("could not generate an admissible state after {retries} retries")]
    Generation { retries: u32 },

    #[error("need at least {needed} trajectory samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("linear solve failed: {0}")]
    Solver(String),
}
