use alloc::string::String;

/// Everything that can go wrong inside the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("validation failed: {0}")]
    Validation(String),
    /// Coefficient index is 0-based; messages print it 1-based.
    #[error("coefficient {} is zero; the state is not an N-party W-class state", .index + 1)]
    DegenerateCoefficient { index: usize },
    #[error("user {} holds the smallest coefficient and performs no local step", .index + 1)]
    MinIndexStep { index: usize },
    #[error("coefficients are not normalized: sum |c_i|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },
    #[error("state dimension {dim} exceeds the configured cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("closed-form propagator requires resonance, got omega = {omega}, omega0 = {omega0}")]
    OffResonance { omega: f64, omega0: f64 },
    #[error("fock cutoff {cutoff} cannot represent the populated photon levels")]
    Truncation { cutoff: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numerical tolerance breached: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
