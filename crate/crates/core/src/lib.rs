//! Chirp-domain multicarrier waveform laboratory.
//!
//! Discrete affine Fourier and Fresnel transforms, continuous-time waveform
//! emulation with SRRC shaping, spectral and aliasing analysis, doubly
//! dispersive channels, matched-filter receivers and effective channel
//! models, plus reproducible experiment runners.

pub mod aliasing;
pub mod channel;
pub mod csvio;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod receiver;
pub mod spectral;
pub mod transforms;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
