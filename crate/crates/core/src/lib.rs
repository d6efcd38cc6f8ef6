//! Pseudo-spectral simulation of the chemotaxis-Navier-Stokes system with
//! fractional fluid dissipation on a periodic box, together with the
//! diagnostics used to monitor blow-up criteria, Lyapunov-type invariants
//! and time-decay rates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over several parallel arrays read more plainly than zips.
#![allow(clippy::needless_range_loop)]

pub mod diagnostics;
pub mod experiment;
pub mod io;
pub mod model;
pub mod oracle;
pub mod random;
pub mod spectral;
pub mod stepper;
