//! Monitored quantities: criterion admissibility and accumulators, energies,
//! the bootstrap quantity, Lyapunov monitors and decay fits.

mod criteria;
mod fit;
mod monitor;
mod record;

use thiserror::Error;

use crate::model::ModelError;
use crate::spectral::SpectralError;

pub use criteria::{
    check_pairs, format_exponent, parse_exponent, CriterionKind, CriterionSpec, PairVerdict,
    SCALING_SLACK,
};
pub use fit::{fit_decay, fit_decay_for, reference_exponent, DecayFit, MIN_FIT_SAMPLES};
pub use monitor::{EnergyMonitors, MonitorTolerances, MonitorVerdict, Tracker, Verdict};
pub use record::{
    bootstrap_exponent, bootstrap_quantity, evaluate_norm, Accumulators, Diagnostics,
    DiagnosticsConfig, DiagnosticsRecord, NormField, NormKind, NormSpec, STANDARD_COLUMNS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid diagnostics input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
