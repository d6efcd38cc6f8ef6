use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

/// Lines handed to one rayon task during a batched axis transform.
const LINES_PER_TASK: usize = 64;

/// Periodic box `[0, L_1) x ... x [0, L_d)` sampled on a uniform tensor grid.
///
/// Arrays over the grid are stored row-major with the last axis fastest, in
/// both physical and spectral space (full complex layout, no half-spectrum).
pub struct SpectralGrid {
    sizes: Vec<usize>,
    lengths: Vec<f64>,
    freqs: Vec<Vec<i64>>,
    wavenumbers: Vec<Vec<f64>>,
    /// Per-axis wavenumbers with the Nyquist entry zeroed; used by odd-order
    /// operators so their output stays real.
    deriv_wavenumbers: Vec<Vec<f64>>,
    strides: Vec<usize>,
    k_squared: Vec<f64>,
    dealias_mask: Vec<bool>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("sizes", &self.sizes)
            .field("lengths", &self.lengths)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.lengths == other.lengths
    }
}

impl SpectralGrid {
    /// Builds a grid; `sizes` and `lengths` must have 2 or 3 entries, each size
    /// even and at least 8, each length positive and finite.
    pub fn new(sizes: &[usize], lengths: &[f64]) -> Result<Arc<Self>, SpectralError> {
        let dim = sizes.len();
        if !(2..=3).contains(&dim) {
            return Err(SpectralError::Config(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if lengths.len() != dim {
            return Err(SpectralError::Config(format!(
                "{} box lengths given for a {dim}-dimensional grid",
                lengths.len()
            )));
        }
        for (axis, &n) in sizes.iter().enumerate() {
            if n < 8 || n % 2 != 0 {
                return Err(SpectralError::Config(format!(
                    "axis {axis}: point count {n} must be even and >= 8"
                )));
            }
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(SpectralError::Config(format!(
                    "axis {axis}: box length {l} must be positive"
                )));
            }
        }

        let freqs: Vec<Vec<i64>> = sizes
            .iter()
            .map(|&n| {
                let n = n as i64;
                (0..n).map(|i| if i <= n / 2 { i } else { i - n }).collect()
            })
            .collect();
        let wavenumbers: Vec<Vec<f64>> = freqs
            .iter()
            .zip(lengths)
            .map(|(fs, &l)| fs.iter().map(|&m| 2.0 * PI * m as f64 / l).collect())
            .collect();
        let deriv_wavenumbers: Vec<Vec<f64>> = wavenumbers
            .iter()
            .zip(sizes)
            .map(|(ks, &n)| {
                let mut ks = ks.clone();
                ks[n / 2] = 0.0;
                ks
            })
            .collect();

        let mut strides = vec![1usize; dim];
        for axis in (0..dim - 1).rev() {
            strides[axis] = strides[axis + 1] * sizes[axis + 1];
        }
        let total: usize = sizes.iter().product();

        let mut k_squared = vec![0.0; total];
        let mut dealias_mask = vec![true; total];
        let mut index = vec![0usize; dim];
        for flat in 0..total {
            let mut rem = flat;
            for axis in 0..dim {
                index[axis] = rem / strides[axis];
                rem %= strides[axis];
            }
            let mut k2 = 0.0;
            let mut keep = true;
            for axis in 0..dim {
                let k = wavenumbers[axis][index[axis]];
                k2 += k * k;
                // 2/3 rule: keep |m| <= N/3 on every axis.
                if 3 * freqs[axis][index[axis]].unsigned_abs() as usize > sizes[axis] {
                    keep = false;
                }
            }
            k_squared[flat] = k2;
            dealias_mask[flat] = keep;
        }

        let mut planner = FftPlanner::new();
        let forward = sizes.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = sizes.iter().map(|&n| planner.plan_fft_inverse(n)).collect();

        Ok(Arc::new(Self {
            sizes: sizes.to_vec(),
            lengths: lengths.to_vec(),
            freqs,
            wavenumbers,
            deriv_wavenumbers,
            strides,
            k_squared,
            dealias_mask,
            forward,
            inverse,
        }))
    }

    /// Cubic (or square) box of side `length` with `n` points per axis.
    pub fn uniform(dim: usize, n: usize, length: f64) -> Result<Arc<Self>, SpectralError> {
        Self::new(&vec![n; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.k_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_squared.is_empty()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.sizes[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight of a single node, the product of the spacings.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Signed integer frequencies along `axis`, in FFT order.
    pub fn frequencies(&self, axis: usize) -> &[i64] {
        &self.freqs[axis]
    }

    /// Angular wavenumbers `2 pi m / L` along `axis`, in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// `|k|^2` for every mode of the flattened spectrum.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias_mask
    }

    /// Multi-index of a flat position.
    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        self.strides
            .iter()
            .map(|&s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect()
    }

    pub fn flatten(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Flat position of the mode with signed integer frequencies `freqs`.
    pub fn mode_index(&self, freqs: &[i64]) -> usize {
        let index: Vec<usize> = freqs
            .iter()
            .zip(&self.sizes)
            .map(|(&m, &n)| m.rem_euclid(n as i64) as usize)
            .collect();
        self.flatten(&index)
    }

    /// Physical coordinate of node `index` along `axis`.
    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        index as f64 * self.spacing(axis)
    }

    /// Coordinates of the node at flat position `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coordinate(axis, i))
            .collect()
    }

    /// Wavenumber vector of the mode at flat position `flat`.
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.wavenumbers[axis][i])
            .collect()
    }

    /// Iterates the flat index together with the per-axis derivative
    /// wavenumbers of each mode. Used by the gradient-type operators.
    pub(crate) fn for_each_deriv_wavevector(&self, mut f: impl FnMut(usize, &[f64])) {
        let dim = self.dim();
        let mut k = vec![0.0; dim];
        for flat in 0..self.len() {
            let mut rem = flat;
            for axis in 0..dim {
                let i = rem / self.strides[axis];
                rem %= self.strides[axis];
                k[axis] = self.deriv_wavenumbers[axis][i];
            }
            f(flat, &k);
        }
    }

    pub(crate) fn transform(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.len());
        for axis in (0..self.dim()).rev() {
            let plan = if inverse {
                &self.inverse[axis]
            } else {
                &self.forward[axis]
            };
            self.transform_axis(data, axis, plan.as_ref());
        }
        if inverse {
            let scale = 1.0 / self.len() as f64;
            data.iter_mut().for_each(|z| *z *= scale);
        }
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, plan: &dyn Fft<f64>) {
        let n = self.sizes[axis];
        let stride = self.strides[axis];
        if stride == 1 {
            data.par_chunks_mut(n * LINES_PER_TASK)
                .for_each(|chunk| plan.process(chunk));
            return;
        }
        // Gather strided lines into contiguous buffers, transform, scatter back.
        let outer = data.len() / (n * stride);
        let lines = outer * stride;
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        {
            let src: &[Complex64] = data;
            buf.par_chunks_mut(n).enumerate().for_each(|(line, out)| {
                let base = (line / stride) * n * stride + line % stride;
                for (j, v) in out.iter_mut().enumerate() {
                    *v = src[base + j * stride];
                }
            });
        }
        buf.par_chunks_mut(n * LINES_PER_TASK)
            .for_each(|chunk| plan.process(chunk));
        for line in 0..lines {
            let base = (line / stride) * n * stride + line % stride;
            let src = &buf[line * n..(line + 1) * n];
            for (j, v) in src.iter().enumerate() {
                data[base + j * stride] = *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_index_has_zero_wavenumber() {
        let g = SpectralGrid::new(&[8, 16, 12], &[1.0, 2.0 * PI, 3.0]).unwrap();
        for axis in 0..3 {
            assert_eq!(g.wavenumbers(axis)[0], 0.0);
        }
        assert_eq!(g.k_squared()[0], 0.0);
    }

    #[test]
    fn mask_symmetric_under_negation() {
        let g = SpectralGrid::uniform(3, 12, 2.0 * PI).unwrap();
        for flat in 0..g.len() {
            let neg: Vec<i64> = g
                .unflatten(flat)
                .iter()
                .enumerate()
                .map(|(a, &i)| -g.frequencies(a)[i])
                .collect();
            assert_eq!(g.dealias_mask()[flat], g.dealias_mask()[g.mode_index(&neg)]);
        }
    }

    #[test]
    fn mask_keeps_a_third() {
        let g = SpectralGrid::uniform(2, 64, 2.0 * PI).unwrap();
        assert!(g.dealias_mask()[g.mode_index(&[21, -21])]);
        assert!(!g.dealias_mask()[g.mode_index(&[22, 0])]);
        assert!(!g.dealias_mask()[g.mode_index(&[0, -22])]);
    }

    #[test]
    fn spacing_and_weights() {
        let g = SpectralGrid::new(&[8, 10], &[2.0, 5.0]).unwrap();
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.spacing(1), 0.5);
        assert_eq!(g.cell_volume(), 0.125);
        assert_eq!(g.volume(), 10.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(SpectralGrid::new(&[8], &[1.0]).is_err());
        assert!(SpectralGrid::new(&[8, 7], &[1.0, 1.0]).is_err());
        assert!(SpectralGrid::new(&[8, 6], &[1.0, 1.0]).is_err());
        assert!(SpectralGrid::new(&[8, 8], &[1.0, -1.0]).is_err());
        assert!(SpectralGrid::new(&[8, 8], &[1.0]).is_err());
    }
}
