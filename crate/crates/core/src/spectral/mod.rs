//! Torus geometry, FFTs, Fourier-multiplier operators and norms.

mod field;
mod grid;
mod norms;
mod ops;

use thiserror::Error;

pub use field::{Field, Spectrum, VectorField};
pub use grid::SpectralGrid;
pub use norms::{
    gn_theta, hs_inhom, hs_norm, lp_norm, vector_hs_norm, vector_lp_norm, GnError,
};
pub use ops::{
    dealias, dealias_in_place, derivative_spectrum, divergence, divergence_spectrum,
    fft_forward, fft_inverse, fft_inverse_coeffs, frac_laplacian, frac_laplacian_spectrum,
    gradient, gradient_spectrum, laplacian, leray_project, leray_project_spectrum,
};
pub(crate) use ops::frac_symbol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
}
