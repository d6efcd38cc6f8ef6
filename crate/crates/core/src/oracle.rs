//! Slow, independent reference implementations used to validate the fast
//! spectral path: dense DFT matrices, finite differences and closed-form
//! heat evolutions.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{Field, SpectralGrid};

/// Largest admissible grid size per axis for dense operators.
pub const MAX_DENSE_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("dense oracle refuses {found} points on axis {axis} (limit {MAX_DENSE_POINTS})")]
    TooLarge { axis: usize, found: usize },
    #[error("DFT matrix of size {size} is not unitary: deviation {deviation:e}")]
    NotUnitary { size: usize, deviation: f64 },
    #[error("mode {mode:?} deviates by {deviation:e} (tolerance {tol:e})")]
    Mismatch { mode: Vec<i64>, deviation: f64, tol: f64 },
    #[error("invalid oracle input: {0}")]
    Invalid(String),
}

/// Unitary DFT matrix `F_{jk} = exp(-2 pi i j k / N) / sqrt(N)`, row-major.
fn dft_matrix(n: usize) -> Vec<Complex64> {
    let norm = 1.0 / (n as f64).sqrt();
    let mut m = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            // Reduce j k mod n first so the angle stays exact for large products.
            let phase = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
            m.push(Complex64::from_polar(norm, phase));
        }
    }
    m
}

/// Signed frequency of index `j` on `n` points; the Nyquist index keeps `+n/2`.
fn signed_frequency(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Materialized per-axis DFT matrices and the multiplier `|k|^2` of a small grid.
#[derive(Debug, Clone)]
pub struct DenseSpectralOracle {
    grid: Arc<SpectralGrid>,
    matrices: Vec<Vec<Complex64>>,
    k_squared: Vec<f64>,
}

impl DenseSpectralOracle {
    /// Builds the matrices and checks `F F^H = I` to 1e-12.
    pub fn new(grid: &Arc<SpectralGrid>) -> Result<Self, OracleError> {
        for (axis, &n) in grid.sizes().iter().enumerate() {
            if n > MAX_DENSE_POINTS {
                return Err(OracleError::TooLarge { axis, found: n });
            }
        }
        let matrices: Vec<_> = grid.sizes().iter().map(|&n| dft_matrix(n)).collect();
        for (m, &n) in matrices.iter().zip(grid.sizes()) {
            let deviation = unitarity_defect(m, n);
            if deviation > 1e-12 {
                return Err(OracleError::NotUnitary { size: n, deviation });
            }
        }
        let k_squared = (0..grid.len())
            .map(|flat| {
                grid.unflatten(flat)
                    .iter()
                    .enumerate()
                    .map(|(axis, &j)| {
                        let n = grid.sizes()[axis];
                        let k = 2.0 * PI * signed_frequency(j, n) as f64 / grid.lengths()[axis];
                        k * k
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            grid: Arc::clone(grid),
            matrices,
            k_squared,
        })
    }

    /// Applies `M` (or its conjugate transpose) along every axis in turn.
    fn apply(&self, data: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let sizes = self.grid.sizes();
        let mut cur = data.to_vec();
        for (axis, m) in self.matrices.iter().enumerate() {
            let n = sizes[axis];
            let stride: usize = sizes[axis + 1..].iter().product();
            let mut next = vec![Complex64::new(0.0, 0.0); cur.len()];
            for (flat, out) in next.iter_mut().enumerate() {
                let row = (flat / stride) % n;
                let base = flat - row * stride;
                let mut acc = Complex64::new(0.0, 0.0);
                for col in 0..n {
                    let entry = if adjoint {
                        m[col * n + row].conj()
                    } else {
                        m[row * n + col]
                    };
                    acc += entry * cur[base + col * stride];
                }
                *out = acc;
            }
            cur = next;
        }
        cur
    }

    /// Unitary transform of `f` (mode `k` at the flat FFT-order position).
    pub fn forward(&self, f: &Field) -> Vec<Complex64> {
        let data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply(&data, false)
    }

    /// `F^H diag(|k|^{2s}) F f`, zero mode mapped to zero.
    pub fn frac_laplacian(&self, f: &Field, s: f64) -> Result<Field, OracleError> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(OracleError::Invalid(format!("order s = {s} must be >= 0")));
        }
        let mut spec = self.forward(f);
        for (z, &k2) in spec.iter_mut().zip(&self.k_squared) {
            *z *= if k2 == 0.0 { 0.0 } else { k2.powf(s) };
        }
        let back = self.apply(&spec, true);
        Ok(Field::from_values(&self.grid, back.iter().map(|z| z.re).collect())
            .expect("grid size preserved"))
    }

    /// Largest deviation between `candidate` and the dense `(-Delta)^s f`,
    /// relative to the largest dense coefficient. Reports the first mode
    /// whose deviation exceeds `tol`.
    pub fn check_frac_laplacian(
        &self,
        f: &Field,
        s: f64,
        candidate: &Field,
        tol: f64,
    ) -> Result<f64, OracleError> {
        let reference = self.forward(&self.frac_laplacian(f, s)?);
        let got = self.forward(candidate);
        let scale = reference
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for (flat, (a, b)) in reference.iter().zip(&got).enumerate() {
            let dev = (a - b).norm() / scale;
            if dev > tol {
                let mode = self
                    .grid
                    .unflatten(flat)
                    .iter()
                    .zip(self.grid.sizes())
                    .map(|(&j, &n)| signed_frequency(j, n))
                    .collect();
                return Err(OracleError::Mismatch {
                    mode,
                    deviation: dev,
                    tol,
                });
            }
            worst = worst.max(dev);
        }
        Ok(worst)
    }
}

fn unitarity_defect(m: &[Complex64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += m[i * n + k] * m[j * n + k].conj();
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// Dense `(-Delta)^s f` on a grid of at most 16 points per axis.
pub fn dense_frac_laplacian(f: &Field, s: f64) -> Result<Field, OracleError> {
    DenseSpectralOracle::new(f.grid())?.frac_laplacian(f, s)
}

/// Fourth-order centered difference of derivative order 1 or 2 along `axis`.
pub fn fd_derivative(f: &Field, axis: usize, order: usize) -> Result<Field, OracleError> {
    let grid = f.grid();
    if axis >= grid.dim() {
        return Err(OracleError::Invalid(format!("axis {axis} out of range")));
    }
    let h = grid.spacing(axis);
    let (weights, denom): ([f64; 5], f64) = match order {
        1 => ([1.0, -8.0, 0.0, 8.0, -1.0], 12.0 * h),
        2 => ([-1.0, 16.0, -30.0, 16.0, -1.0], 12.0 * h * h),
        _ => {
            return Err(OracleError::Invalid(format!(
                "derivative order {order} not supported (1 or 2)"
            )))
        }
    };
    let n = grid.sizes()[axis] as i64;
    let values = f.values();
    let out = (0..grid.len())
        .map(|flat| {
            let mut idx = grid.unflatten(flat);
            let i = idx[axis] as i64;
            let mut acc = 0.0;
            for (w, off) in weights.iter().zip(-2i64..=2) {
                if *w != 0.0 {
                    idx[axis] = (i + off).rem_euclid(n) as usize;
                    acc += w * values[grid.flatten(&idx)];
                }
            }
            acc / denom
        })
        .collect();
    Ok(Field::from_values(grid, out).expect("grid size preserved"))
}

/// Closed-form initial data for [`exact_heat`].
#[derive(Debug, Clone, PartialEq)]
pub enum HeatData {
    /// `amplitude * cos(k . x + phase)` with `k_i = 2 pi m_i / L_i`.
    Mode {
        m: Vec<i64>,
        amplitude: f64,
        phase: f64,
    },
    /// Periodized sum of `a exp(-|x - x0|^2 / (2 sigma^2))`, evolved by the
    /// heat equation with unit diffusivity (only `s = 1`).
    Gaussians(Vec<Gaussian>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub sigma: f64,
}

/// Solution at time `t` of `u_t + (-Delta)^s u = 0` from `data`.
pub fn exact_heat(
    grid: &Arc<SpectralGrid>,
    data: &HeatData,
    s: f64,
    t: f64,
) -> Result<Field, OracleError> {
    let dim = grid.dim();
    match data {
        HeatData::Mode { m, amplitude, phase } => {
            if m.len() != dim {
                return Err(OracleError::Invalid("mode index has wrong dimension".into()));
            }
            let k: Vec<f64> = m
                .iter()
                .zip(grid.lengths())
                .map(|(&mi, &l)| 2.0 * PI * mi as f64 / l)
                .collect();
            let k2: f64 = k.iter().map(|x| x * x).sum();
            let decay = if k2 == 0.0 { 1.0 } else { (-k2.powf(s) * t).exp() };
            Ok(Field::from_fn(grid, |x| {
                let arg: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
                amplitude * decay * (arg + phase).cos()
            }))
        }
        HeatData::Gaussians(list) => {
            if s != 1.0 {
                return Err(OracleError::Invalid(
                    "Gaussian data has a closed form only for s = 1".into(),
                ));
            }
            let lengths = grid.lengths().to_vec();
            let mut field = Field::zeros(grid);
            for g in list {
                if g.center.len() != dim || !(g.sigma > 0.0) {
                    return Err(OracleError::Invalid("malformed Gaussian".into()));
                }
                let var = g.sigma * g.sigma + 2.0 * t;
                let amp = g.amplitude * (g.sigma * g.sigma / var).powf(dim as f64 / 2.0);
                // Images beyond 8 standard deviations contribute below 1e-14.
                let reach: Vec<i64> = lengths
                    .iter()
                    .map(|l| (8.0 * var.sqrt() / l).ceil() as i64 + 1)
                    .collect();
                let term = Field::from_fn(grid, |x| {
                    let per_axis: Vec<f64> = (0..dim)
                        .map(|a| {
                            (-reach[a]..=reach[a])
                                .map(|img| {
                                    let d = x[a] - g.center[a] + img as f64 * lengths[a];
                                    (-d * d / (2.0 * var)).exp()
                                })
                                .sum()
                        })
                        .collect();
                    amp * per_axis.iter().product::<f64>()
                });
                field = field.axpy(1.0, &term);
            }
            Ok(field)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::bandlimited_field;
    use crate::spectral::{frac_laplacian, gradient};

    fn grid3(n: usize) -> Arc<SpectralGrid> {
        SpectralGrid::uniform(3, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn dense_examples() {
        let g = grid3(8);
        let f = Field::from_fn(&g, |x| x[0].cos());
        let out = dense_frac_laplacian(&f, 1.0).unwrap();
        assert!(out.axpy(-1.0, &f).sup_abs() < 1e-13);
        let one = Field::constant(&g, 1.0);
        assert!(dense_frac_laplacian(&one, 0.7).unwrap().sup_abs() < 1e-13);
    }

    #[test]
    fn dense_matches_fast_path() {
        let g = grid3(8);
        let f = bandlimited_field(&g, 7, 0, 3, 1.0).unwrap();
        let oracle = DenseSpectralOracle::new(&g).unwrap();
        let fast = frac_laplacian(&f, 0.9).unwrap();
        let dev = oracle.check_frac_laplacian(&f, 0.9, &fast, 1e-12).unwrap();
        assert!(dev < 1e-12);
    }

    #[test]
    fn mismatch_names_mode() {
        let g = grid3(8);
        let f = Field::from_fn(&g, |x| (2.0 * x[1]).cos());
        let oracle = DenseSpectralOracle::new(&g).unwrap();
        match oracle.check_frac_laplacian(&f, 1.0, &f, 1e-12) {
            Err(OracleError::Mismatch { mode, .. }) => assert_eq!(mode, vec![0, 2, 0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn refuses_large_grids() {
        let g = grid3(32);
        assert!(matches!(
            dense_frac_laplacian(&Field::zeros(&g), 1.0),
            Err(OracleError::TooLarge { axis: 0, found: 32 })
        ));
    }

    #[test]
    fn fd_sine_converges_at_fourth_order() {
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let g = SpectralGrid::uniform(2, n, 2.0 * PI).unwrap();
                let f = Field::from_fn(&g, |x| x[0].sin());
                let d = fd_derivative(&f, 0, 1).unwrap();
                d.axpy(-1.0, &Field::from_fn(&g, |x| x[0].cos())).sup_abs()
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!((3.7..=4.3).contains(&order), "order {order}");
        let g = SpectralGrid::uniform(2, 16, 2.0 * PI).unwrap();
        assert_eq!(fd_derivative(&Field::constant(&g, 3.0), 1, 1).unwrap().sup_abs(), 0.0);
    }

    #[test]
    fn fd_matches_spectral_gradient() {
        let g = SpectralGrid::uniform(2, 128, 2.0 * PI).unwrap();
        let f = bandlimited_field(&g, 3, 1, 3, 1.0).unwrap();
        let spectral = gradient(&f);
        let fd = fd_derivative(&f, 1, 1).unwrap();
        let err = fd.axpy(-1.0, spectral.component(1)).sup_abs();
        assert!(err < 1e-4, "{err:e}");
    }

    #[test]
    fn heat_mode_examples() {
        let g = grid3(8);
        let halved = exact_heat(
            &g,
            &HeatData::Mode {
                m: vec![1, 0, 0],
                amplitude: 1.0,
                phase: 0.0,
            },
            1.0,
            2f64.ln(),
        )
        .unwrap();
        assert!((halved.values()[0] - 0.5).abs() < 1e-15);
        let k2 = exact_heat(
            &g,
            &HeatData::Mode {
                m: vec![2, 0, 0],
                amplitude: 1.0,
                phase: 0.0,
            },
            0.75,
            1.0,
        )
        .unwrap();
        assert!((k2.values()[0] - (-2f64.powf(1.5)).exp()).abs() < 1e-15);
        let zero = exact_heat(&g, &HeatData::Gaussians(vec![]), 1.0, 1.0).unwrap();
        assert_eq!(zero.sup_abs(), 0.0);
    }

    #[test]
    fn gaussian_mass_is_conserved() {
        let g = SpectralGrid::uniform(2, 64, 20.0).unwrap();
        let data = HeatData::Gaussians(vec![Gaussian {
            amplitude: 1.0,
            center: vec![10.0, 10.0],
            sigma: 1.0,
        }]);
        let m0 = exact_heat(&g, &data, 1.0, 0.0).unwrap().integral();
        let m1 = exact_heat(&g, &data, 1.0, 3.0).unwrap().integral();
        assert!((m0 - 2.0 * PI).abs() < 1e-10);
        assert!((m1 - m0).abs() < 1e-10);
    }
}
