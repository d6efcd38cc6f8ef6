//! Coefficients, state and right-hand sides of the chemotaxis-fluid system.

mod functions;
mod params;
mod rhs;

use thiserror::Error;

use crate::spectral::SpectralError;

pub use functions::{CubicSpline, Jet, ScalarFunction};
pub use params::{ModelParams, State, VelocityMode, HYPOTHESIS_SAMPLES};
pub use rhs::{
    recover_pressure, rhs_c, rhs_n, rhs_u, tendencies, SpectralState, Tendencies,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(
        "{function} evaluated on [{min}, {max}], outside its domain [{lo}, {hi}]"
    )]
    OutOfDomain {
        function: String,
        min: f64,
        max: f64,
        lo: f64,
        hi: f64,
    },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid model input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
