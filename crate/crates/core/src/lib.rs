//! Camera sensor-noise fingerprint toolkit.
//!
//! The crate covers the full PRNU workflow at desk scale:
//!
//! - blockwise 8×8 DCT, frequency subband masks and JPEG quantization
//!   simulation ([`dct`], [`mask`], [`jpeg`]),
//! - a seeded synthetic camera for ground-truth experiments ([`sensor`]),
//! - wavelet noise residuals, fingerprint estimators and similarity
//!   detectors ([`denoise`], [`fingerprint`]),
//! - analytical correlation bounds for quantized Laplacian subbands
//!   ([`theory`]),
//! - the fingerprint-copy attack and LP-based DCT coefficient recovery
//!   ([`attack`], [`recovery`], [`lp`]),
//! - kernel independence testing and the triangle test ([`hsic`],
//!   [`triangle`]).
//!
//! All operations are pure functions of their inputs; generators are
//! deterministic under a fixed seed.

pub mod attack;
pub mod denoise;
pub mod dct;
pub mod error;
pub mod fingerprint;
pub mod hsic;
pub mod io;
pub mod jpeg;
pub mod lp;
pub mod mask;
pub mod plane;
pub mod recovery;
pub mod sensor;
pub mod stats;
pub mod theory;
pub mod triangle;

mod fft;
mod seed;
mod wavelet;

pub use error::Error;
pub use plane::ImagePlane;
pub use seed::derive_seed;

/// Shorthand result type used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
