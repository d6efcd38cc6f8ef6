//! Transforms and Fourier-multiplier operators on periodic fields.
//!
//! First-order operators (gradient, divergence, Leray projection) use
//! wavenumbers with the Nyquist entry zeroed so that real input yields real
//! output. Even-order symbols (`|k|^{2s}`) use the true wavenumbers.

use std::sync::Arc;

use num_complex::Complex64;

use super::{Field, SpectralError, SpectralGrid, Spectrum, VectorField};

pub fn fft_forward(f: &Field) -> Spectrum {
    let grid = f.grid();
    let mut data: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    grid.transform(&mut data, false);
    Spectrum::from_coeffs(grid, data).expect("transform preserves length")
}

/// Inverse transform; the imaginary residue (roundoff for Hermitian input)
/// is discarded.
pub fn fft_inverse(spec: &Spectrum) -> Field {
    let grid = spec.grid();
    let mut data = spec.coeffs().to_vec();
    grid.transform(&mut data, true);
    Field::from_values(grid, data.into_iter().map(|z| z.re).collect())
        .expect("transform preserves length")
}

/// Checked variant of [`fft_inverse`] for raw coefficient buffers.
pub fn fft_inverse_coeffs(
    grid: &Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
) -> Result<Field, SpectralError> {
    Ok(fft_inverse(&Spectrum::from_coeffs(grid, coeffs)?))
}

/// `|k|^{2s}` for every mode; the zero mode maps to 0 for every `s`.
pub(crate) fn frac_symbol(grid: &SpectralGrid, s: f64) -> Vec<f64> {
    grid.k_squared()
        .iter()
        .map(|&k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) })
        .collect()
}

/// Applies `(-Delta)^s` in spectral space.
pub fn frac_laplacian_spectrum(spec: &Spectrum, s: f64) -> Result<Spectrum, SpectralError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(SpectralError::Domain(format!(
            "fractional order s = {s} must be finite and >= 0"
        )));
    }
    let symbol = frac_symbol(spec.grid(), s);
    let mut out = spec.clone();
    out.apply_symbol(|i| symbol[i]);
    Ok(out)
}

/// `(-Delta)^s f` via the multiplier `|k|^{2s}`.
pub fn frac_laplacian(f: &Field, s: f64) -> Result<Field, SpectralError> {
    let spec = frac_laplacian_spectrum(&fft_forward(f), s)?;
    Ok(fft_inverse(&spec))
}

pub fn laplacian(f: &Field) -> Field {
    frac_laplacian(f, 1.0)
        .expect("order 1 is admissible")
        .scaled(-1.0)
}

/// Spectral derivative `i k_axis f_hat`.
pub fn derivative_spectrum(spec: &Spectrum, axis: usize) -> Spectrum {
    let grid = Arc::clone(spec.grid());
    let mut out = spec.clone();
    let coeffs = out.coeffs_mut();
    grid.for_each_deriv_wavevector(|flat, k| {
        let z = coeffs[flat];
        coeffs[flat] = Complex64::new(-k[axis] * z.im, k[axis] * z.re);
    });
    out
}

pub fn gradient_spectrum(spec: &Spectrum) -> Vec<Spectrum> {
    (0..spec.grid().dim())
        .map(|axis| derivative_spectrum(spec, axis))
        .collect()
}

pub fn divergence_spectrum(components: &[Spectrum]) -> Spectrum {
    let grid = Arc::clone(components[0].grid());
    let mut out = Spectrum::zeros(&grid);
    let coeffs = out.coeffs_mut();
    grid.for_each_deriv_wavevector(|flat, k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (axis, c) in components.iter().enumerate() {
            let z = c.coeffs()[flat];
            acc += Complex64::new(-k[axis] * z.im, k[axis] * z.re);
        }
        coeffs[flat] = acc;
    });
    out
}

pub fn gradient(f: &Field) -> VectorField {
    let components = gradient_spectrum(&fft_forward(f))
        .iter()
        .map(fft_inverse)
        .collect();
    VectorField::from_components(components).expect("one component per axis")
}

pub fn divergence(v: &VectorField) -> Field {
    let specs: Vec<Spectrum> = v.components().iter().map(fft_forward).collect();
    fft_inverse(&divergence_spectrum(&specs))
}

/// In-place Leray projection `P = Id - k k^T / |k|^2`. The zero mode (and
/// any mode whose derivative wavevector vanishes) is passed through.
pub fn leray_project_spectrum(components: &mut [Spectrum]) {
    let grid = Arc::clone(components[0].grid());
    let dim = components.len();
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    grid.for_each_deriv_wavevector(|flat, k| {
        let k2: f64 = k.iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            return;
        }
        let mut kdotz = Complex64::new(0.0, 0.0);
        for axis in 0..dim {
            z[axis] = components[axis].coeffs()[flat];
            kdotz += z[axis] * k[axis];
        }
        let factor = kdotz / k2;
        for axis in 0..dim {
            components[axis].coeffs_mut()[flat] = z[axis] - factor * k[axis];
        }
    });
}

pub fn leray_project(v: &VectorField) -> VectorField {
    let mut specs: Vec<Spectrum> = v.components().iter().map(fft_forward).collect();
    leray_project_spectrum(&mut specs);
    VectorField::from_components(specs.iter().map(fft_inverse).collect())
        .expect("one component per axis")
}

/// Zeroes every mode outside the 2/3-rule retention box.
pub fn dealias(mut spec: Spectrum) -> Spectrum {
    dealias_in_place(&mut spec);
    spec
}

pub fn dealias_in_place(spec: &mut Spectrum) {
    let grid = Arc::clone(spec.grid());
    spec.coeffs_mut()
        .iter_mut()
        .zip(grid.dealias_mask())
        .for_each(|(z, &keep)| {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        });
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::random::bandlimited_field;

    fn random_bandlimited(g: &Arc<SpectralGrid>, seed: u64, k_max: usize) -> Field {
        bandlimited_field(g, seed, 0, k_max, 1.0).unwrap()
    }

    fn grid3(n: usize) -> Arc<SpectralGrid> {
        SpectralGrid::uniform(3, n, 2.0 * PI).unwrap()
    }

    fn max_abs_diff(a: &Field, b: &Field) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = grid3(8);
        let spec = fft_forward(&Field::constant(&g, 1.0));
        assert!((spec.coeffs()[0].re - g.len() as f64).abs() < 1e-12);
        for z in &spec.coeffs()[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn single_harmonic_has_two_conjugate_modes() {
        let g = SpectralGrid::new(&[16, 8], &[3.0, 2.0]).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * PI * x[0] / 3.0).sin());
        let spec = fft_forward(&f);
        let plus = g.mode_index(&[1, 0]);
        let minus = g.mode_index(&[-1, 0]);
        for (i, z) in spec.coeffs().iter().enumerate() {
            if i == plus || i == minus {
                assert!((z.norm() - g.len() as f64 / 2.0).abs() < 1e-10);
            } else {
                assert!(z.norm() < 1e-10, "stray mode {i}: {z}");
            }
        }
        let zp = spec.coeffs()[plus];
        let zm = spec.coeffs()[minus];
        assert!((zp - zm.conj()).norm() < 1e-10);
    }

    #[test]
    fn frac_laplacian_single_modes() {
        let g = grid3(16);
        let f = Field::from_fn(&g, |x| x[0].cos());
        for s in [0.3, 0.75, 1.0, 2.5] {
            let out = frac_laplacian(&f, s).unwrap();
            // Roundoff in the discarded modes is amplified by at most |k_max|^{2s}.
            let k_max2: f64 = g.k_squared().iter().cloned().fold(0.0, f64::max);
            let d = max_abs_diff(&out, &f);
            assert!(d < 1e-13 + 1e-16 * k_max2.powf(s), "s = {s}: {d:e}");
        }
        let seven = Field::constant(&g, 7.0);
        assert!(frac_laplacian(&seven, 0.6).unwrap().sup_abs() < 1e-13);
        let f2 = Field::from_fn(&g, |x| (2.0 * x[0]).cos());
        let out = frac_laplacian(&f2, 0.75).unwrap();
        assert!(max_abs_diff(&out, &f2.scaled(2f64.powf(1.5))) < 1e-12);
        assert!((2f64.powf(1.5) - 2.8284271).abs() < 1e-7);
    }

    #[test]
    fn frac_laplacian_rejects_negative_order() {
        let g = grid3(8);
        assert!(matches!(
            frac_laplacian(&Field::zeros(&g), -0.1),
            Err(SpectralError::Domain(_))
        ));
    }

    #[test]
    fn gradient_and_divergence_examples() {
        let g = grid3(16);
        let grad = gradient(&Field::from_fn(&g, |x| x[0].sin()));
        let expected = Field::from_fn(&g, |x| x[0].cos());
        assert!(max_abs_diff(grad.component(0), &expected) < 1e-13);
        assert!(grad.component(1).sup_abs() < 1e-13);
        assert!(grad.component(2).sup_abs() < 1e-13);

        let v = VectorField::from_fn(&g, |x| vec![x[1].sin(), 0.0, 0.0]);
        assert!(divergence(&v).sup_abs() < 1e-13);
    }

    #[test]
    fn leray_examples() {
        let g = grid3(16);
        let pure_grad = VectorField::from_fn(&g, |x| vec![x[0].cos(), 0.0, 0.0]);
        assert!(leray_project(&pure_grad).sup_abs() < 1e-13);

        let shear = VectorField::from_fn(&g, |x| vec![x[1].sin(), 0.0, 0.0]);
        let p = leray_project(&shear);
        assert!(max_abs_diff(p.component(0), shear.component(0)) < 1e-13);

        let mixed = VectorField::from_fn(&g, |x| vec![x[1].sin() + x[0].cos(), 0.0, 0.0]);
        let p = leray_project(&mixed);
        assert!(max_abs_diff(p.component(0), shear.component(0)) < 1e-13);
        assert!(p.component(1).sup_abs() < 1e-13);
    }

    #[test]
    fn leray_passes_zero_mode() {
        let g = grid3(8);
        let v = VectorField::from_fn(&g, |_| vec![1.5, -2.0, 0.25]);
        let p = leray_project(&v);
        assert!((p.component(0).mean() - 1.5).abs() < 1e-14);
        assert!((p.component(1).mean() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn dealias_examples() {
        let g = SpectralGrid::uniform(2, 12, 2.0 * PI).unwrap();
        let kept = Field::from_fn(&g, |x| (4.0 * x[0]).cos() + (2.0 * x[1]).sin());
        let out = fft_inverse(&dealias(fft_forward(&kept)));
        assert!(max_abs_diff(&out, &kept) < 1e-13);

        let masked = Field::from_fn(&g, |x| (5.0 * x[0]).cos());
        let out = fft_inverse(&dealias(fft_forward(&masked)));
        assert!(out.sup_abs() < 1e-14);
    }

    #[test]
    fn div_grad_is_laplacian_on_random_fields() {
        for n in [8, 16] {
            let g = grid3(n);
            for seed in 0..5 {
                let f = random_bandlimited(&g, seed, n / 2 - 1);
                let lap = laplacian(&f);
                let dg = divergence(&gradient(&f));
                let diff = dg.axpy(-1.0, &lap);
                assert!(diff.inner(&diff).sqrt() <= 1e-11 * lap.inner(&lap).sqrt());
            }
        }
    }
}
