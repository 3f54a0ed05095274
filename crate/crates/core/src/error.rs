//! Error type shared across the crate.

use thiserror::Error;

use crate::kernel::AssumptionKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension must be 1 or 2, got {0}")]
    UnsupportedDimension(usize),

    #[error("grid must have at least one cell per axis")]
    EmptyGrid,

    #[error("alpha must lie in (0, 2), got {0}")]
    AlphaOutOfRange(f64),

    #[error("piecewise-constant assembly requires alpha in (0, 1); got {0} (the touching-cell form integral is not finite otherwise)")]
    AlphaNotAssemblable(f64),

    #[error("assumption {0:?} applies only to convolution kernels")]
    AssumptionNeedsConvolution(AssumptionKind),

    #[error("probe radii must be nonempty and positive")]
    InvalidProbe,

    #[error("quadrature did not converge within budget: {0}")]
    QuadratureBudget(String),

    #[error("coefficient has random structure but no realization was drawn")]
    RealizationMissing,

    #[error("draw_realization called on a periodic coefficient")]
    NotRandom,

    #[error("operation requires a product-structure coefficient")]
    NotProductStructure,

    #[error("coefficient value range [{lo}, {hi}] violates the bound [1/{gamma}, {gamma}]")]
    RangeViolation { lo: f64, hi: f64, gamma: f64 },

    #[error("gamma must be >= 1, got {0}")]
    GammaTooSmall(f64),

    #[error("Richardson consistency check failed: relative change {rel:.3e} exceeds {cap:.3e} (quadrature under-resolved)")]
    QuadratureUnderResolved { rel: f64, cap: f64 },

    #[error("Monte Carlo stderr {stderr:.3e} exceeds the configured cap {cap:.3e}")]
    McStderrTooLarge { stderr: f64, cap: f64 },

    #[error("tail policy tolerance must lie in (0, 1e-4], got {0}")]
    BadTailTolerance(f64),

    #[error("far-field cutoff {r_far} must exceed the box half-width {half_width}")]
    BadFarCutoff { r_far: f64, half_width: f64 },

    #[error("solver tolerance must lie in (0, 1e-6], got {0}")]
    BadSolverTolerance(f64),

    #[error("phi exponent p must exceed 1, got {0}")]
    BadPhiExponent(f64),

    #[error("phi scale c must be positive, got {0}")]
    BadPhiScale(f64),

    #[error("line search failed: step {0:.3e} fell below 1e-14 without decrease")]
    LineSearchFailed(f64),

    #[error("nonlinear solver exhausted {0} iterations before reaching tolerance")]
    NonlinearMaxIter(usize),

    #[error("epsilon {epsilon} is not aligned: cell width {h} must divide it and the box must hold a whole number of periods")]
    EpsilonMisaligned { epsilon: f64, h: f64 },

    #[error("rate fit needs at least two records with positive errors")]
    RateFitUndefined,

    #[error("ensemble summary needs at least two seeds per epsilon")]
    SingleSeedEnsemble,

    #[error("linear solver failed to converge: residual {residual:.3e} after {iterations} iterations")]
    SolverFailed { residual: f64, iterations: usize },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
