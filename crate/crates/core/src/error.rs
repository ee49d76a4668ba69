use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid functions live on grids that are not nested: {0}")]
    NotNested(String),

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("direction {0:?} is not part of the operator's direction set")]
    UnknownDirection(Vec<i64>),

    #[error("noise index {index} out of range (noise count {count})")]
    NoiseIndex { index: usize, count: usize },

    #[error("non-finite {what} at node {node} (coordinates {coords:?})")]
    NonFinite {
        what: String,
        node: usize,
        coords: Vec<f64>,
    },

    #[error("diffusion matrix cannot be decomposed over the direction set (best residual {residual:.3e})")]
    InfeasibleDecomposition { residual: f64 },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("time {0} is not a node of the path's time grid")]
    NotOnTimeGrid(f64),

    #[error("explicit scheme violates the stability guard (ratio {ratio:.4} > 1)")]
    Cfl { ratio: f64 },

    #[error("linear solver failed to converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("solution blew up at step {step}: max |u| = {max_abs:.3e}")]
    BlowUp { step: usize, max_abs: f64 },

    #[error("problem is not eligible for spectral-exact integration: {0}")]
    SpectralIneligible(String),

    #[error("imaginary residue {0:.3e} exceeds tolerance after inverse transform")]
    ImaginaryResidue(f64),

    #[error("extrapolation level k = {0} outside supported range 0..=8")]
    LevelOutOfRange(usize),

    #[error("power step must be 1 or 2, got {0}")]
    InvalidPowerStep(u32),

    #[error("extrapolation input mismatch: {0}")]
    ExtrapolationInput(String),

    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    UnknownProblem {
        name: String,
        available: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("error values must be finite and nonnegative, got {0}")]
    InvalidErrorValue(f64),

    #[error("resolution {resolution}, path {path}: {source}")]
    Cell {
        resolution: usize,
        path: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("surrogate oracle is not self-consistent: refinement difference {difference:.3e} >= coarsest error / 10 ({bound:.3e})")]
    SurrogateInconsistent { difference: f64, bound: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
