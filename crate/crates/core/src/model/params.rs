use std::sync::Arc;

use super::{ModelError, ScalarFunction};
use crate::spectral::{divergence, vector_hs_norm, Field, SpectralGrid, VectorField};

/// Sample count used to check sign conditions and take suprema of `chi`, `f`.
pub const HYPOTHESIS_SAMPLES: usize = 10_000;

/// Whether the velocity evolves or is held at its initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityMode {
    #[default]
    Dynamic,
    Frozen,
}

/// Coefficients of the coupled system.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Fluid dissipation exponent; the velocity is damped by `|k|^{2 alpha}`.
    pub alpha: f64,
    /// Chemotactic sensitivity `chi(c)`.
    pub chi: ScalarFunction,
    /// Oxygen consumption rate `f(c)`.
    pub f: ScalarFunction,
    /// Potential gradient forcing the fluid through `-n grad(phi)`.
    pub grad_phi: VectorField,
    pub kappa_n: f64,
    pub kappa_c: f64,
    pub velocity: VelocityMode,
}

impl ModelParams {
    /// Unit diffusivities and a dynamic velocity.
    pub fn new(alpha: f64, chi: ScalarFunction, f: ScalarFunction, grad_phi: VectorField) -> Self {
        Self {
            alpha,
            chi,
            f,
            grad_phi,
            kappa_n: 1.0,
            kappa_c: 1.0,
            velocity: VelocityMode::Dynamic,
        }
    }

    /// `chi = 0`, `f = 0`, `grad phi = 0`: pure diffusion of `n`, `c` and
    /// fractional Stokes-advection of `u`.
    pub fn decoupled(grid: &Arc<SpectralGrid>, alpha: f64) -> Self {
        Self::new(
            alpha,
            ScalarFunction::Constant(0.0),
            ScalarFunction::Constant(0.0),
            VectorField::zeros(grid),
        )
    }

    /// Checks the standing hypotheses on the coefficients for oxygen levels in
    /// `[0, c_max]`: `alpha > 1/2`, positive diffusivities, `f(0) = 0` and
    /// `f >= 0` (sampled), `chi` and `f` evaluable, `grad phi` finite.
    pub fn validate(&self, c_max: f64) -> Result<(), ModelError> {
        if !(self.alpha > 0.5 && self.alpha.is_finite()) {
            return Err(ModelError::Hypothesis(format!(
                "alpha = {} violates alpha > 1/2 required for local well-posedness",
                self.alpha
            )));
        }
        for (name, k) in [("kappa_n", self.kappa_n), ("kappa_c", self.kappa_c)] {
            if !(k > 0.0 && k.is_finite()) {
                return Err(ModelError::Hypothesis(format!("{name} = {k} must be > 0")));
            }
        }
        let f0 = self.f.value(0.0)?;
        if f0 != 0.0 {
            return Err(ModelError::Hypothesis(format!(
                "f(0) = {f0}, but the consumption rate must satisfy f(0) = 0"
            )));
        }
        for s in sample_points(c_max) {
            let v = self.f.value(s)?;
            if v < 0.0 || !v.is_finite() {
                return Err(ModelError::Hypothesis(format!(
                    "f({s}) = {v}, but f must be nonnegative on [0, {c_max}]"
                )));
            }
            let chi = self.chi.jet(s)?;
            if !(chi.value.is_finite() && chi.d1.is_finite() && chi.d2.is_finite()) {
                return Err(ModelError::Hypothesis(format!(
                    "chi or its derivatives are not finite at {s}"
                )));
            }
        }
        if !self.grad_phi.is_finite() {
            return Err(ModelError::Hypothesis("grad phi must be finite".into()));
        }
        Ok(())
    }

    /// `sup_{0 <= s <= c_max} (|f| + |f'| + |chi| + |chi'| + |chi''|)` by dense
    /// sampling.
    pub fn s_fchi(&self, c_max: f64) -> Result<f64, ModelError> {
        let mut sup = 0.0f64;
        for s in sample_points(c_max) {
            let f = self.f.jet(s)?;
            let chi = self.chi.jet(s)?;
            let total = f.value.abs() + f.d1.abs() + chi.value.abs() + chi.d1.abs() + chi.d2.abs();
            sup = sup.max(total);
        }
        Ok(sup)
    }
}

fn sample_points(c_max: f64) -> impl Iterator<Item = f64> {
    let c_max = if c_max > 0.0 && c_max.is_finite() {
        c_max
    } else {
        0.0
    };
    (0..=HYPOTHESIS_SAMPLES).map(move |i| c_max * i as f64 / HYPOTHESIS_SAMPLES as f64)
}

/// Cell density, oxygen concentration and fluid velocity at time `t`.
#[derive(Debug, Clone)]
pub struct State {
    pub n: Field,
    pub c: Field,
    pub u: VectorField,
    pub t: f64,
}

impl State {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            n: Field::zeros(grid),
            c: Field::zeros(grid),
            u: VectorField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn new(n: Field, c: Field, u: VectorField) -> Result<Self, ModelError> {
        let grid = n.grid();
        if **c.grid() != **grid || **u.grid() != **grid {
            return Err(ModelError::Invalid("state fields live on different grids".into()));
        }
        Ok(Self { n, c, u, t: 0.0 })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.n.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.n.is_finite() && self.c.is_finite() && self.u.is_finite() && self.t.is_finite()
    }

    /// `|div u|_2 / |u|_{H^1}` (0 for a constant velocity).
    pub fn relative_divergence(&self) -> f64 {
        let div = divergence(&self.u);
        let num = div.inner(&div).sqrt();
        let den = vector_hs_norm(&self.u, 1.0);
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}
