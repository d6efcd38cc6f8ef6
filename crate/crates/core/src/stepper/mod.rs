//! Time integration: adaptive integrating-factor stepping and the lagged
//! successive-approximation solver.

mod imex;
mod picard;

use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;
use crate::model::ModelError;

pub use imex::{
    run, run_with, step, NoObserver, RunObserver, RunSummary, Scheme, StepOutcome, Stepper,
    StepperConfig, Violation,
};
pub use picard::{find_contractive_window, picard_solve, PicardConfig, PicardReport, WindowSearch};

#[derive(Debug, Error)]
pub enum StepError {
    #[error("invalid stepper configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("suspected singularity at t = {t}: {reason} persists down to dt = {dt:e}")]
    SuspectedSingularity {
        t: f64,
        dt: f64,
        reason: String,
        /// Latest diagnostics before the failing step, if any were recorded.
        record: Option<Box<DiagnosticsRecord>>,
    },
    #[error("observer failed: {0}")]
    Observer(String),
}
