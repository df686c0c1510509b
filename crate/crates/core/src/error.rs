use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not take a step larger than its floor.
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64, state: Vec<f64> },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("state is not an equilibrium (residual {residual:e} > {tolerance:e})")]
    NotEquilibrium { residual: f64, tolerance: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid wind series: {0}")]
    Wind(String),

    #[error("constant output: variance of the model output is zero")]
    ConstantOutput,

    #[error("{failed} of {total} sample blocks failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix at pivot {0}")]
    Singular(usize),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
