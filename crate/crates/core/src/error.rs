use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: expected {expected}, found {found}")]
    InvalidDimension { expected: &'static str, found: usize },

    #[error("dimension mismatch: {left}x{left} against {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("density matrix trace {0} is not 1")]
    NotNormalized(f64),

    #[error("density matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid measurement basis: {0}")]
    InvalidBasis(String),

    #[error("negative evolution time {0}")]
    NegativeTime(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size too large for {given} steps; at least {required} steps are required")]
    StepSizeTooLarge { given: u64, required: u64 },

    #[error("impact parameter {y1} lies outside the aperture half-span {half_span}")]
    OutOfAperture { y1: f64, half_span: f64 },

    #[error("impact parameter 0 is the separatrix through the cloak center; pick a nonzero offset")]
    Separatrix,

    #[error("point at radius {radius} lies outside the cloak disk of radius {outer}")]
    OutsideDisk { radius: f64, outer: f64 },

    #[error("point at radius {radius} lies inside the hidden region of radius {inner}")]
    HiddenRegion { radius: f64, inner: f64 },

    #[error("observation set is empty")]
    EmptyObservations,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no record is usable for the fit")]
    Unfittable,

    #[error("J_max = {j_max} is not resolved by the time grid; admissible J_max <= {admissible}")]
    SamplingGuard { j_max: f64, admissible: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
