//! Counter-based random numbers for reproducible initial data.
//!
//! Every draw is a pure function of `(seed, stream, counter)`:
//!
//! ```text
//! mix(z)   = SplitMix64 finalizer of z + 0x9E3779B97F4A7C15
//! key      = mix(seed + stream * 0xD1B54A32D192ED03)      (wrapping u64)
//! bits     = mix(key XOR counter)
//! uniform  = (bits >> 11) * 2^-53 * 2 - 1                 in [-1, 1)
//! ```
//!
//! Any implementation that follows these lines reproduces the same fields.

use std::sync::Arc;

use num_complex::Complex64;

use crate::spectral::{fft_inverse, Field, SpectralError, SpectralGrid, Spectrum};

fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[-1, 1)` addressed by `(seed, stream, counter)`.
pub fn counter_uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    let key = mix(seed.wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)));
    let bits = mix(key ^ counter);
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0
}

/// Integer frequency vectors in `[-k_max, k_max]^dim` whose first nonzero
/// entry is positive, in lexicographic order. One representative per
/// conjugate pair; the zero vector is excluded.
pub fn half_space_modes(dim: usize, k_max: usize) -> Vec<Vec<i64>> {
    let k = k_max as i64;
    let mut out = Vec::new();
    let mut m = vec![-k; dim];
    loop {
        if let Some(first) = m.iter().find(|&&x| x != 0) {
            if *first > 0 {
                out.push(m.clone());
            }
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if m[axis] < k {
                m[axis] += 1;
                break;
            }
            m[axis] = -k;
        }
    }
}

/// Real trigonometric polynomial
/// `amplitude / sqrt(M) * sum_j (a_j cos(k_j . x) + b_j sin(k_j . x))`
/// over the `M` half-space modes with `|m_i| <= k_max`, where
/// `a_j = counter_uniform(seed, stream, 2j)` and `b_j = ...(2j + 1)`.
/// The result has zero mean and no Nyquist content.
pub fn bandlimited_field(
    grid: &Arc<SpectralGrid>,
    seed: u64,
    stream: u64,
    k_max: usize,
    amplitude: f64,
) -> Result<Field, SpectralError> {
    let n_min = *grid.sizes().iter().min().expect("grid has axes");
    if k_max == 0 || 2 * k_max >= n_min {
        return Err(SpectralError::Config(format!(
            "random band limit k_max = {k_max} must be in 1..{}",
            n_min / 2
        )));
    }
    let modes = half_space_modes(grid.dim(), k_max);
    let scale = amplitude / (modes.len() as f64).sqrt() * grid.len() as f64 / 2.0;
    let mut spec = Spectrum::zeros(grid);
    for (j, m) in modes.iter().enumerate() {
        let a = counter_uniform(seed, stream, 2 * j as u64);
        let b = counter_uniform(seed, stream, 2 * j as u64 + 1);
        let z = Complex64::new(a, -b) * scale;
        let neg: Vec<i64> = m.iter().map(|x| -x).collect();
        spec.coeffs_mut()[grid.mode_index(m)] = z;
        spec.coeffs_mut()[grid.mode_index(&neg)] = z.conj();
    }
    Ok(fft_inverse(&spec))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn draws_are_pure_and_in_range() {
        for c in 0..1000 {
            let x = counter_uniform(42, 3, c);
            assert_eq!(x, counter_uniform(42, 3, c));
            assert!((-1.0..1.0).contains(&x));
        }
        assert_ne!(counter_uniform(1, 0, 0), counter_uniform(2, 0, 0));
        assert_ne!(counter_uniform(1, 0, 0), counter_uniform(1, 1, 0));
    }

    #[test]
    fn draws_look_uniform() {
        let n = 20_000;
        let mean = (0..n).map(|c| counter_uniform(7, 0, c)).sum::<f64>() / n as f64;
        let var = (0..n)
            .map(|c| counter_uniform(7, 0, c).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn half_space_counts() {
        // (2k+1)^d - 1 nonzero vectors, half of them.
        assert_eq!(half_space_modes(2, 2).len(), 12);
        assert_eq!(half_space_modes(3, 1).len(), 13);
    }

    #[test]
    fn bandlimited_is_mean_free_and_reproducible() {
        let g = SpectralGrid::uniform(2, 16, 2.0 * PI).unwrap();
        let f = bandlimited_field(&g, 9, 0, 4, 1.0).unwrap();
        let f2 = bandlimited_field(&g, 9, 0, 4, 1.0).unwrap();
        assert_eq!(f.values(), f2.values());
        assert!(f.mean().abs() < 1e-14);
        assert!(bandlimited_field(&g, 9, 0, 8, 1.0).is_err());
    }
}
