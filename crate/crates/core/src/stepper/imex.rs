//! Integrating-factor time stepping.
//!
//! In Fourier space every linear term is diagonal: density and oxygen decay
//! by `exp(-kappa |k|^2 dt)`, velocity by `exp(-|k|^{2 alpha} dt)`. Those
//! factors are applied exactly and the remaining tendencies are integrated
//! explicitly (forward Euler or explicit midpoint on the transformed
//! variables).

use std::sync::Arc;

use num_complex::Complex64;

use super::StepError;
use crate::diagnostics::DiagnosticsRecord;
use crate::model::{tendencies, ModelParams, SpectralState, State, Tendencies, VelocityMode};
use crate::spectral::{
    frac_symbol, gradient, leray_project_spectrum, vector_lp_norm, SpectralGrid, Spectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    IfEuler,
    #[default]
    IfRk2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::IfEuler => "euler",
            Scheme::IfRk2 => "rk2",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "euler" | "if-euler" => Some(Scheme::IfEuler),
            "rk2" | "if-rk2" => Some(Scheme::IfRk2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub max_dt_halvings: u32,
    /// Relative undershoot/overshoot tolerated on `n >= 0`, `0 <= c <= |c_0|_inf`.
    pub positivity_tol: f64,
    /// Bound on `|div u|_2 / |u|_{H^1}` after a step.
    pub divergence_tol: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-2,
            cfl: 0.4,
            t_end: 1.0,
            scheme: Scheme::IfRk2,
            max_dt_halvings: 10,
            positivity_tol: 1e-8,
            divergence_tol: 1e-10,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return Err(format!("dt_init = {} must be > 0", self.dt_init));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(format!("cfl = {} must lie in (0, 1]", self.cfl));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(format!("t_end = {} must be >= 0", self.t_end));
        }
        Ok(())
    }
}

/// Which invariant rejected a trial step.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite,
    NegativeDensity { min: f64 },
    OxygenBounds { min: f64, max: f64 },
    Divergence { relative: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonFinite => write!(f, "non-finite values"),
            Violation::NegativeDensity { min } => write!(f, "density undershoot min n = {min:e}"),
            Violation::OxygenBounds { min, max } => {
                write!(f, "oxygen left its bounds: min c = {min:e}, max c = {max:e}")
            }
            Violation::Divergence { relative } => {
                write!(f, "velocity divergence {relative:e} relative to |u|_H1")
            }
        }
    }
}

/// An accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: State,
    pub dt: f64,
    pub rejections: u32,
}

/// Integrating-factor stepper bound to one model and one reference state.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<SpectralGrid>,
    params: ModelParams,
    cfg: StepperConfig,
    sym_n: Vec<f64>,
    sym_c: Vec<f64>,
    sym_u: Vec<f64>,
    s_fchi: f64,
    n_ref: f64,
    c_ref: f64,
}

impl Stepper {
    /// `initial` fixes the reference bounds for the positivity and maximum
    /// principle checks, and the oxygen range used for `S_{f,chi}`.
    pub fn new(params: &ModelParams, cfg: &StepperConfig, initial: &State) -> Result<Self, StepError> {
        cfg.validate().map_err(StepError::Config)?;
        let grid = Arc::clone(initial.grid());
        let c_ref = initial.c.sup_abs();
        params.validate(c_ref)?;
        let s_fchi = params.s_fchi(c_ref)?;
        let k2 = grid.k_squared();
        Ok(Self {
            sym_n: k2.iter().map(|k| params.kappa_n * k).collect(),
            sym_c: k2.iter().map(|k| params.kappa_c * k).collect(),
            sym_u: frac_symbol(&grid, params.alpha),
            grid,
            params: params.clone(),
            cfg: cfg.clone(),
            s_fchi,
            n_ref: initial.n.sup_abs(),
            c_ref,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn s_fchi(&self) -> f64 {
        self.s_fchi
    }

    /// Largest step allowed by
    /// `dt <= cfl h / max(1, |u|_inf + S_{f,chi} |grad c|_inf)`, capped by `dt_init`.
    pub fn cfl_dt(&self, state: &State) -> f64 {
        let u_max = state.u.sup_abs();
        let grad_c = vector_lp_norm(&gradient(&state.c), f64::INFINITY).expect("p = inf");
        let speed = (u_max + self.s_fchi * grad_c).max(1.0);
        (self.cfg.cfl * self.grid.min_spacing() / speed).min(self.cfg.dt_init)
    }

    fn factors(symbol: &[f64], dt: f64) -> Vec<f64> {
        symbol.iter().map(|s| (-s * dt).exp()).collect()
    }

    fn scale(spec: &mut Spectrum, factors: &[f64]) {
        spec.coeffs_mut()
            .iter_mut()
            .zip(factors)
            .for_each(|(z, &e)| *z *= e);
    }

    /// `E(dt) (y + h * N)`, componentwise; a frozen velocity is left alone.
    fn propagate(&self, y: &SpectralState, rhs: Option<(&Tendencies, f64)>, dt: f64) -> SpectralState {
        let mut out = y.clone();
        if let Some((t, h)) = rhs {
            out.n.axpy(h, &t.n);
            out.c.axpy(h, &t.c);
            if let Some(tu) = &t.u {
                for (a, b) in out.u.iter_mut().zip(tu) {
                    a.axpy(h, b);
                }
            }
        }
        Self::scale(&mut out.n, &Self::factors(&self.sym_n, dt));
        Self::scale(&mut out.c, &Self::factors(&self.sym_c, dt));
        if self.params.velocity == VelocityMode::Dynamic {
            let eu = Self::factors(&self.sym_u, dt);
            out.u.iter_mut().for_each(|u| Self::scale(u, &eu));
        }
        out
    }

    /// One trial step of size `dt` without invariant checks.
    pub fn advance_spectral(&self, y: &SpectralState, dt: f64) -> Result<SpectralState, StepError> {
        let n0 = tendencies(y, &self.params)?;
        let mut out = match self.cfg.scheme {
            Scheme::IfEuler => self.propagate(y, Some((&n0, dt)), dt),
            Scheme::IfRk2 => {
                let half = self.propagate(y, Some((&n0, 0.5 * dt)), 0.5 * dt);
                let n_half = tendencies(&half, &self.params)?;
                // E(dt) y + dt E(dt/2) N(half)
                let kick = self.propagate(
                    &SpectralState {
                        n: n_half.n.scaled(dt),
                        c: n_half.c.scaled(dt),
                        u: match &n_half.u {
                            Some(u) => u.iter().map(|s| s.scaled(dt)).collect(),
                            None => y.u.iter().map(|s| s.scaled(0.0)).collect(),
                        },
                    },
                    None,
                    0.5 * dt,
                );
                let mut out = self.propagate(y, None, dt);
                out.n.axpy(1.0, &kick.n);
                out.c.axpy(1.0, &kick.c);
                if n_half.u.is_some() {
                    for (a, b) in out.u.iter_mut().zip(&kick.u) {
                        a.axpy(1.0, b);
                    }
                }
                out
            }
        };
        if self.params.velocity == VelocityMode::Dynamic {
            leray_project_spectrum(&mut out.u);
        }
        Ok(out)
    }

    /// Checks the admissibility of a candidate state.
    pub fn check(&self, candidate: &State, spectral: &SpectralState) -> Option<Violation> {
        if !candidate.is_finite() {
            return Some(Violation::NonFinite);
        }
        let eps = self.cfg.positivity_tol;
        let n_min = candidate.n.min();
        if n_min < -eps * self.n_ref.max(f64::MIN_POSITIVE) {
            return Some(Violation::NegativeDensity { min: n_min });
        }
        let (c_min, c_max) = (candidate.c.min(), candidate.c.max());
        let c_ref = self.c_ref.max(f64::MIN_POSITIVE);
        if c_min < -eps * c_ref || c_max > c_ref * (1.0 + eps) {
            return Some(Violation::OxygenBounds {
                min: c_min,
                max: c_max,
            });
        }
        let relative = spectral_divergence(&self.grid, &spectral.u);
        if relative > self.cfg.divergence_tol {
            return Some(Violation::Divergence { relative });
        }
        None
    }

    /// Advances `state` by `dt`, halving on invariant violations up to
    /// `max_dt_halvings` times.
    pub fn step(&self, state: &State, dt: f64) -> Result<StepOutcome, StepError> {
        let y = SpectralState::from_state(state);
        let mut trial = dt;
        let mut last = None;
        for rejections in 0..=self.cfg.max_dt_halvings {
            let next = self.advance_spectral(&y, trial)?;
            let candidate = next.to_state(state.t + trial);
            match self.check(&candidate, &next) {
                None => {
                    return Ok(StepOutcome {
                        state: candidate,
                        dt: trial,
                        rejections,
                    })
                }
                Some(v) => last = Some(v),
            }
            trial *= 0.5;
        }
        Err(StepError::SuspectedSingularity {
            t: state.t,
            dt: trial * 2.0,
            reason: last.map(|v| v.to_string()).unwrap_or_default(),
            record: None,
        })
    }
}

/// `|k . u_hat| / |(|k| u_hat)|` over all modes.
fn spectral_divergence(grid: &SpectralGrid, u: &[Spectrum]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    grid.for_each_deriv_wavevector(|flat, k| {
        let mut d = Complex64::new(0.0, 0.0);
        let mut k2 = 0.0;
        let mut mag = 0.0;
        for (axis, comp) in u.iter().enumerate() {
            let z = comp.coeffs()[flat];
            d += z * k[axis];
            k2 += k[axis] * k[axis];
            mag += z.norm_sqr();
        }
        num += d.norm_sqr();
        den += k2 * mag;
    });
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Observer of accepted states during [`run`].
pub trait RunObserver {
    /// Called with the initial state (`step = 0`) and after every accepted step.
    fn observe(&mut self, state: &State, step: usize) -> Result<(), String>;

    /// Most recent diagnostics, attached to a suspected-singularity error.
    fn latest_record(&self) -> Option<DiagnosticsRecord> {
        None
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl RunObserver for NoObserver {
    fn observe(&mut self, _: &State, _: usize) -> Result<(), String> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: State,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Accepted step sizes in order.
    pub dts: Vec<f64>,
}

/// Advances from `state0` to `cfg.t_end` with adaptive steps
/// `dt = min(dt_init, cfl_dt, 2 dt_prev)`.
pub fn run(
    state0: &State,
    params: &ModelParams,
    cfg: &StepperConfig,
    observer: &mut dyn RunObserver,
) -> Result<RunSummary, StepError> {
    let stepper = Stepper::new(params, cfg, state0)?;
    run_with(&stepper, state0, observer)
}

pub fn run_with(
    stepper: &Stepper,
    state0: &State,
    observer: &mut dyn RunObserver,
) -> Result<RunSummary, StepError> {
    let cfg = stepper.config();
    let mut state = state0.clone();
    observer.observe(&state, 0).map_err(StepError::Observer)?;
    let mut dts = Vec::new();
    let mut rejected = 0usize;
    let mut prev_dt = f64::INFINITY;
    // Relative slack so roundoff in t does not trigger a sliver step.
    let t_end = cfg.t_end;
    while state.t < t_end * (1.0 - 1e-14) {
        let mut dt = stepper.cfl_dt(&state).min(2.0 * prev_dt);
        let remaining = t_end - state.t;
        let last = dt >= remaining;
        if last {
            dt = remaining;
        }
        let outcome = stepper.step(&state, dt).map_err(|e| match e {
            StepError::SuspectedSingularity { t, dt, reason, .. } => {
                StepError::SuspectedSingularity {
                    t,
                    dt,
                    reason,
                    record: observer.latest_record().map(Box::new),
                }
            }
            other => other,
        })?;
        rejected += outcome.rejections as usize;
        state = outcome.state;
        if last && outcome.rejections == 0 {
            state.t = t_end;
        }
        if !last || outcome.rejections > 0 {
            prev_dt = outcome.dt;
        }
        dts.push(outcome.dt);
        observer
            .observe(&state, dts.len())
            .map_err(StepError::Observer)?;
    }
    Ok(RunSummary {
        final_state: state,
        accepted_steps: dts.len(),
        rejected_steps: rejected,
        dts,
    })
}

/// Single step with the largest admissible `dt`.
pub fn step(state: &State, params: &ModelParams, cfg: &StepperConfig) -> Result<State, StepError> {
    let stepper = Stepper::new(params, cfg, state)?;
    let dt = stepper.cfl_dt(state);
    Ok(stepper.step(state, dt)?.state)
}
