use std::sync::Arc;

use num_complex::Complex64;

use super::{SpectralError, SpectralGrid};

/// Real scalar field sampled on the nodes of a [`SpectralGrid`].
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::SizeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Samples `f` at every node; `f` receives the node coordinates.
    pub fn from_fn(grid: &Arc<SpectralGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// Pointwise `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Field) -> Self {
        assert_eq!(*self.grid, *other.grid, "fields live on different grids");
        Self {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule integral over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// L2 inner product by rectangle-rule quadrature.
    pub fn inner(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }
}

/// A `dim`-component vector field; all components share one grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<Field>,
}

impl VectorField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| Field::zeros(grid)).collect(),
        }
    }

    pub fn from_components(components: Vec<Field>) -> Result<Self, SpectralError> {
        let first = components
            .first()
            .ok_or_else(|| SpectralError::Config("vector field needs components".into()))?;
        let grid = Arc::clone(first.grid());
        if components.len() != grid.dim() {
            return Err(SpectralError::Config(format!(
                "{} components for a {}-dimensional grid",
                components.len(),
                grid.dim()
            )));
        }
        if components.iter().any(|c| **c.grid() != *grid) {
            return Err(SpectralError::Config(
                "vector components live on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn from_fn(grid: &Arc<SpectralGrid>, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let dim = grid.dim();
        let mut components: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); dim];
        for i in 0..grid.len() {
            let v = f(&grid.node(i));
            assert_eq!(v.len(), dim, "vector function returned wrong arity");
            for (c, x) in components.iter_mut().zip(v) {
                c.push(x);
            }
        }
        Self {
            components: components
                .into_iter()
                .map(|values| Field {
                    grid: Arc::clone(grid),
                    values,
                })
                .collect(),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Field] {
        &mut self.components
    }

    pub fn component(&self, axis: usize) -> &Field {
        &self.components[axis]
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(Field::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.values().iter().all(|&v| v == 0.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c.scaled(factor)).collect(),
        }
    }

    pub fn axpy(&self, factor: f64, other: &VectorField) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.axpy(factor, b))
                .collect(),
        }
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Field {
        let grid = self.grid();
        let values = (0..grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values()[i] * c.values()[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Field {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// L2 inner product summed over components.
    pub fn inner(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.magnitude().sup_abs()
    }
}

/// Unnormalized discrete Fourier coefficients of a real field,
/// `f_hat[k] = sum_j f[j] exp(-i k . x_j)`, stored in the full complex layout.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(
        grid: &Arc<SpectralGrid>,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::SizeMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Fourier-series coefficient of the mode at `flat` (normalized by the
    /// number of nodes).
    pub fn normalized(&self, flat: usize) -> Complex64 {
        self.coeffs[flat] / self.grid.len() as f64
    }

    /// Multiplies every mode by a real symbol.
    pub fn apply_symbol(&mut self, symbol: impl Fn(usize) -> f64) {
        self.coeffs
            .iter_mut()
            .enumerate()
            .for_each(|(i, z)| *z *= symbol(i));
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn axpy(&mut self, factor: f64, other: &Spectrum) {
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b * factor);
    }

    /// `sum_k |f_hat_k|^2`, unnormalized.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }
}
