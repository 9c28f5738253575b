//! Beamformer-independent evaluation of microphone arrays.
//!
//! The array is treated as a single-input multiple-output channel: a source
//! signal reaches `M` microphones through a steering vector and is corrupted by
//! spatially coherent noise. Whitening the noise with its eigendecomposition
//! turns the channel into one with white noise, whose Shannon capacity
//! (bits/s/Hz) depends only on geometry, noise field and source position.
//!
//! Module map:
//!
//! * [`geometry`] array layouts and inter-microphone distances
//! * [`wavefield`] far/near-field steering vectors and scattering tables
//! * [`noisefield`] diffuse, custom and interference noise covariances
//! * [`capacity`] whitening, narrowband/broadband capacity, MMSE, scans
//! * [`optimize`] pattern search over microphone placements
//! * [`validation`] the built-in oracle checks behind `arraycap validate`

pub mod capacity;
mod error;
pub mod geometry;
pub mod linalg;
pub mod noisefield;
pub mod optimize;
pub mod special;
pub mod validation;
pub mod wavefield;

pub use error::{Error, Result};

/// Speed of sound in air at room temperature, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Converts a decibel SNR to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
