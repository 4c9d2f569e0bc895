//! Waveform-level simulator and estimation toolkit for pure line-of-sight
//! MIMO links at millimeter-wave frequencies.
//!
//! The crate synthesizes LOS channel matrices from array geometry, simulates
//! impaired training transmissions, runs a maximum-likelihood channel and
//! frequency-offset estimation chain, and evaluates condition number,
//! capacity and SNR across geometry sweeps.
//!
//! The math core ([`numerics`], [`geometry`], [`metrics`]) is generic over the
//! scalar type via `num_traits::Float`; the signal path ([`training`],
//! [`linksim`], [`estimation`]) and the experiment [`harness`] run on `f64`.

pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod linksim;
pub mod metrics;
pub mod numerics;
pub mod training;

/// Default scalar for the signal path and the harness.
pub type Real = f64;
/// Complex sample type used throughout the signal path.
pub type Complex = num_complex::Complex<f64>;
/// Single-precision alias for callers that want the math core on `f32`.
pub type Real32 = f32;

/// Speed of light in m/s, used to convert carrier frequency to wavelength.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("sync failure: {0}")]
    SyncFailure(String),
    #[error("estimation failure: {0}")]
    EstimationFailure(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class for the CLI: 2 config, 3 sim/estimation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Unsupported(_) => 2,
            Error::Io(_) | Error::Format { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
