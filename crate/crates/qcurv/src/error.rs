use thiserror::Error;

/// One diagnostic row of a fixed-point iteration trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IterationStep {
    pub iter: usize,
    pub update_norm: f64,
    pub residual_inf: f64,
    pub fredholm_defect: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    #[error("aliasing residual {residual:.3e} exceeds limit {limit:.3e}")]
    AliasingExceeded { residual: f64, limit: f64 },

    #[error("abstract factor not grid-backed: {0}")]
    AbstractFactorNotGridBacked(String),

    #[error("kernel gap ratio {ratio:.3e} below required {required:.3e}: indeterminate kernel")]
    IndeterminateGap { ratio: f64, required: f64 },

    #[error("conformal stability violated: {0}")]
    StabilityViolation(String),

    #[error("field not in operator kernel (relative residual {residual:.3e})")]
    NotInKernel { residual: f64 },

    #[error("field not in the null space of the Q functional (residual {residual:.3e})")]
    NotInNullQ { residual: f64 },

    #[error("k_Q = {kq:.6e} is below the decomposition tolerance")]
    KQZero { kq: f64 },

    #[error("Q is not constant for this metric (relative deviation {deviation:.3e})")]
    NotConstantQ { deviation: f64 },

    #[error("input field is constant")]
    ConstantInput,

    #[error("Fredholm condition violated: kernel integrals {integrals:?}")]
    FredholmViolation { integrals: Vec<f64>, kq: f64 },

    #[error("target {target:+.3e} incompatible with the sign of k_Q = {kq:+.3e}")]
    SignMismatch { target: f64, kq: f64 },

    #[error("no convergence after {iterations} iterations (last residual {last_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        trace: Vec<IterationStep>,
    },

    #[error("sector dimension {dim} exceeds the dense-operator cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
