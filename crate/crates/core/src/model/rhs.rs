//! Non-diffusive right-hand sides of the coupled system.
//!
//! All transport terms are assembled in divergence form, so the zero mode
//! of the density and oxygen tendencies is exactly zero. Pointwise
//! nonlinearities (`chi(c)`, `f(c)`) are evaluated in physical space and
//! only the final products are dealiased.

use std::sync::Arc;

use num_complex::Complex64;

use super::{ModelError, ModelParams, State, VelocityMode};
use crate::spectral::{
    dealias_in_place, derivative_spectrum, divergence_spectrum, fft_forward, fft_inverse,
    leray_project_spectrum, Field, SpectralGrid, Spectrum, VectorField,
};

/// Spectral coefficients of `(n, c, u)`.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub n: Spectrum,
    pub c: Spectrum,
    pub u: Vec<Spectrum>,
}

impl SpectralState {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            n: Spectrum::zeros(grid),
            c: Spectrum::zeros(grid),
            u: (0..grid.dim()).map(|_| Spectrum::zeros(grid)).collect(),
        }
    }

    pub fn from_state(state: &State) -> Self {
        Self {
            n: fft_forward(&state.n),
            c: fft_forward(&state.c),
            u: state.u.components().iter().map(fft_forward).collect(),
        }
    }

    pub fn to_state(&self, t: f64) -> State {
        State {
            n: fft_inverse(&self.n),
            c: fft_inverse(&self.c),
            u: VectorField::from_components(self.u.iter().map(fft_inverse).collect())
                .expect("one component per axis"),
            t,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.n.grid()
    }

    /// Applies `op` to every spectrum (n, c, then velocity components).
    pub fn for_each_mut(&mut self, mut op: impl FnMut(usize, &mut Spectrum)) {
        op(0, &mut self.n);
        op(1, &mut self.c);
        for (i, u) in self.u.iter_mut().enumerate() {
            op(2 + i, u);
        }
    }

    /// `self += factor * other`, component-wise.
    pub fn axpy(&mut self, factor: f64, other: &SpectralState) {
        self.n.axpy(factor, &other.n);
        self.c.axpy(factor, &other.c);
        for (a, b) in self.u.iter_mut().zip(&other.u) {
            a.axpy(factor, b);
        }
    }
}

/// Tendencies of the three equations without their diffusion terms.
#[derive(Debug, Clone)]
pub struct Tendencies {
    pub n: Spectrum,
    pub c: Spectrum,
    /// `None` when the velocity is frozen.
    pub u: Option<Vec<Spectrum>>,
}

fn product(grid: &Arc<SpectralGrid>, a: &[f64], b: &[f64]) -> Spectrum {
    let values: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mut spec = fft_forward(&Field::from_values(grid, values).expect("grid-sized product"));
    dealias_in_place(&mut spec);
    spec
}

/// Dealiased spectrum of `-div(u (x) u)`, one entry per component.
fn advection_divergence_form(grid: &Arc<SpectralGrid>, u: &[Field]) -> Vec<Spectrum> {
    let dim = grid.dim();
    let mut tensor: Vec<Vec<Option<Spectrum>>> = vec![vec![None; dim]; dim];
    for j in 0..dim {
        for l in j..dim {
            let s = product(grid, u[j].values(), u[l].values());
            tensor[l][j] = Some(s.clone());
            tensor[j][l] = Some(s);
        }
    }
    (0..dim)
        .map(|j| {
            let row: Vec<Spectrum> = (0..dim)
                .map(|l| tensor[j][l].clone().expect("filled above"))
                .collect();
            divergence_spectrum(&row).scaled(-1.0)
        })
        .collect()
}

/// Non-diffusive tendencies of all three equations. The velocity tendency is
/// Leray projected; its zero mode carries `-mean(n grad phi)`.
pub fn tendencies(state: &SpectralState, params: &ModelParams) -> Result<Tendencies, ModelError> {
    let grid = Arc::clone(state.grid());
    let dim = grid.dim();
    let n = fft_inverse(&state.n);
    let c = fft_inverse(&state.c);
    let u: Vec<Field> = state.u.iter().map(fft_inverse).collect();
    let u_active = u.iter().any(|f| f.values().iter().any(|&v| v != 0.0));

    let chi = params.chi.eval_all(c.values())?;
    let consumption = params.f.eval_all(c.values())?;

    // n: -div(u n + chi(c) n grad c)
    let chemotaxis = !params.chi.is_zero();
    let chi_n: Vec<f64> = chi.iter().zip(n.values()).map(|(a, b)| a * b).collect();
    let mut flux_n = Vec::with_capacity(dim);
    let mut flux_c = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut fn_axis = Spectrum::zeros(&grid);
        if chemotaxis {
            let dc = fft_inverse(&derivative_spectrum(&state.c, axis));
            fn_axis = product(&grid, &chi_n, dc.values());
        }
        if u_active {
            fn_axis.axpy(1.0, &product(&grid, u[axis].values(), n.values()));
            flux_c.push(product(&grid, u[axis].values(), c.values()));
        } else {
            flux_c.push(Spectrum::zeros(&grid));
        }
        flux_n.push(fn_axis);
    }
    let rhs_n = divergence_spectrum(&flux_n).scaled(-1.0);

    // c: -div(u c) - n f(c)
    let mut rhs_c = divergence_spectrum(&flux_c).scaled(-1.0);
    if !params.f.is_zero() {
        rhs_c.axpy(-1.0, &product(&grid, n.values(), &consumption));
    }

    let rhs_u = match params.velocity {
        VelocityMode::Frozen => None,
        VelocityMode::Dynamic => {
            let mut out = if u_active {
                advection_divergence_form(&grid, &u)
            } else {
                (0..dim).map(|_| Spectrum::zeros(&grid)).collect()
            };
            for (axis, comp) in out.iter_mut().enumerate() {
                let g = params.grad_phi.component(axis);
                if g.values().iter().any(|&v| v != 0.0) {
                    comp.axpy(-1.0, &product(&grid, n.values(), g.values()));
                }
            }
            leray_project_spectrum(&mut out);
            Some(out)
        }
    };

    Ok(Tendencies {
        n: rhs_n,
        c: rhs_c,
        u: rhs_u,
    })
}

/// `-u . grad n - div(chi(c) n grad c)`.
pub fn rhs_n(state: &State, params: &ModelParams) -> Result<Field, ModelError> {
    let t = tendencies(&SpectralState::from_state(state), params)?;
    Ok(fft_inverse(&t.n))
}

/// `-u . grad c - n f(c)`.
pub fn rhs_c(state: &State, params: &ModelParams) -> Result<Field, ModelError> {
    let t = tendencies(&SpectralState::from_state(state), params)?;
    Ok(fft_inverse(&t.c))
}

/// Leray projection of `-u . grad u - n grad phi`.
pub fn rhs_u(state: &State, params: &ModelParams) -> Result<VectorField, ModelError> {
    let mut p = params.clone();
    p.velocity = VelocityMode::Dynamic;
    let t = tendencies(&SpectralState::from_state(state), &p)?;
    let comps = t.u.expect("dynamic velocity").iter().map(fft_inverse).collect();
    Ok(VectorField::from_components(comps)?)
}

/// Zero-mean pressure solving `Delta P = -div div(u (x) u) - div(n grad phi)`,
/// i.e. the pressure whose gradient removes the compressible part of
/// `-u . grad u - n grad phi`.
pub fn recover_pressure(state: &State, params: &ModelParams) -> Result<Field, ModelError> {
    let grid = Arc::clone(state.grid());
    let dim = grid.dim();
    let u = state.u.components();
    let mut forcing = advection_divergence_form(&grid, u);
    for (axis, comp) in forcing.iter_mut().enumerate() {
        comp.axpy(
            -1.0,
            &product(&grid, state.n.values(), params.grad_phi.component(axis).values()),
        );
    }
    debug_assert_eq!(forcing.len(), dim);
    // Delta P = div(forcing)  =>  P_hat = -div_hat / |k|^2
    let mut p = divergence_spectrum(&forcing);
    let k2 = grid.k_squared();
    p.coeffs_mut().iter_mut().zip(k2).for_each(|(z, &k2)| {
        *z = if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            -*z / k2
        };
    });
    Ok(fft_inverse(&p))
}
