//! Bipolar LFP pair selection and behavior classification.
//!
//! This crate implements an offline pipeline for subthalamic local field
//! potential recordings captured during a behavioral session:
//!
//! 1. [`preprocess`]: bipolar re-referencing of the four contacts on each
//!    electrode, zero-phase FIR bandpass filtering, and epoch extraction
//!    around event onsets.
//! 2. [`sync`]: an FFT-based phase synchronization measure between the three
//!    left and three right bipolar channels; the most synchronized
//!    left/right pair is selected automatically.
//! 3. [`features`]: Morlet wavelet spectrograms over the beta band,
//!    time-downsampling, and per-trial feature assembly, plus [`pca`] for
//!    dimensionality reduction.
//! 4. [`svm`] / [`mkl`]: a dual SVM solver and an lp-norm multiple kernel
//!    learning wrapper over a configurable kernel bank.
//! 5. [`eval`]: leave-one-out cross-validation, confusion matrices, and the
//!    per-pair accuracy sweep, orchestrated end to end by [`pipeline`].
//!
//! [`synth`] generates seeded, fully reproducible synthetic recordings with a
//! known coupled pair and known class structure, so every stage can be
//! validated against ground truth.
//!
//! # Feature flags
//!
//! The crate is `no_std`-compatible (it requires `alloc`). Math functions
//! route through `std` by default; disable default features and enable
//! `libm` for embedded targets:
//!
//! ```toml
//! lfpsync = { version = "0.1", default-features = false, features = ["libm"] }
//! ```
//!
//! The `serde` feature derives `Serialize`/`Deserialize` on configuration and
//! report types.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("lfpsync requires either the `std` or the `libm` feature for floating-point math");

pub mod eval;
pub mod features;
pub mod fft;
pub mod kernel;
pub(crate) mod math;
pub mod mkl;
pub mod pca;
pub mod pipeline;
pub mod preprocess;
pub mod recording;
pub mod rng;
pub mod svm;
pub mod sync;
pub mod synth;

pub use recording::{EventMarker, Label, Recording};

use alloc::string::String;

/// Crate-wide error type.
///
/// Numeric routines return structured errors rather than panicking so that
/// callers (notably the CLI) can map failure classes to exit codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Inputs have inconsistent or unsupported dimensions.
    #[error("shape error: {0}")]
    Shape(String),
    /// A configuration value is out of its documented domain.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Data violates a structural invariant (mismatched lengths, non-finite
    /// samples, duplicate channel names, unsorted events, ...).
    #[error("data integrity error: {0}")]
    Integrity(String),
    /// An epoch window would extend past the start or end of the recording.
    #[error("epoch out of bounds: {0}")]
    Boundary(String),
    /// Too few usable spectral bins to form a synchronization measure.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    /// A model fit collapsed (zero variance, all-zero kernel weights, a
    /// training fold missing a class, ...).
    #[error("degenerate model: {0}")]
    Degenerate(String),
    /// Labels are missing, unknown, or unusable for the requested operation.
    #[error("label error: {0}")]
    Label(String),
    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("failed to converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    /// A computation produced non-finite intermediate values.
    #[error("numeric error: {0}")]
    Numeric(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
