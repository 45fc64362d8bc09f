//! Chirplet transform family for time-frequency analysis.
//!
//! The crate provides the standard chirplet transform (CT) with a
//! chirp-modulated Gaussian window, its rotation-window variant, the
//! Wigner-Ville distribution and chirp-Fourier transform used to verify and
//! parameterize it, the multi-resolution CT (geometric mean of several CTs)
//! and the synchroextracting post-processor built on the combined
//! instantaneous-frequency equation.
//!
//! Units: every frequency handled by the library is angular (rad/s) and every
//! chirp rate is in rad/s². Conversion from Hz happens at the edges (see
//! [`hz_to_rad`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combine;
pub mod extract;
pub mod geometry;
pub mod grid;
pub mod metrics;
pub mod signals;
pub mod transforms;

mod error;

pub use error::{Error, Result};
pub use grid::{
    make_tf_grid, ComplexTf, ParameterSet, RealTf, Signal, TfGrid, TfMatrix, WindowParams,
};

pub use num_complex::Complex64;

use std::f64::consts::PI;

/// Hz (or Hz/s) to rad/s (or rad/s²).
#[inline]
pub fn hz_to_rad(x: f64) -> f64 {
    2.0 * PI * x
}

/// rad/s (or rad/s²) to Hz (or Hz/s).
#[inline]
pub fn rad_to_hz(x: f64) -> f64 {
    x / (2.0 * PI)
}
