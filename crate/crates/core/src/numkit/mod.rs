//! Minimal dense linear algebra and seeded randomness substrate.

pub mod matrix;
pub mod rng;
pub mod vector;

pub use matrix::{spectral_norm, spectral_norm_safe, Matrix, SpectralNorm};
pub use matrix::{SPECTRAL_NORM_MAX_ITER, SPECTRAL_NORM_TOL};
pub use rng::{mix, sample_gaussian, sample_uniform, RngStream};
pub use vector::Vector;
