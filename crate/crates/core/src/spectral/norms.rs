//! Lebesgue and Sobolev norms on the torus.
//!
//! Lebesgue norms use the rectangle rule on the collocation nodes. Sobolev
//! norms are lattice sums over Fourier-series coefficients `c_k`:
//! `|f|_{H^s}^2 = vol * sum_{k != 0} |k|^{2s} |c_k|^2`.

use thiserror::Error;

use super::{fft_forward, Field, SpectralError, VectorField};

/// `(sum |f|^p * h^d)^{1/p}`; `p = inf` is the grid maximum of `|f|`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64, SpectralError> {
    lp_norm_values(f.values(), f.grid().cell_volume(), p)
}

/// Lebesgue norm of the pointwise Euclidean magnitude of `v`.
pub fn vector_lp_norm(v: &VectorField, p: f64) -> Result<f64, SpectralError> {
    lp_norm(&v.magnitude(), p)
}

fn lp_norm_values(values: &[f64], weight: f64, p: f64) -> Result<f64, SpectralError> {
    if p.is_nan() || p < 1.0 {
        return Err(SpectralError::Domain(format!(
            "Lebesgue exponent p = {p} must be >= 1"
        )));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    // Scale by the max to keep |f|^p representable for large p.
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| (v / scale) * (v / scale)).sum()
    } else {
        values.iter().map(|v| (v.abs() / scale).powf(p)).sum()
    };
    Ok(scale * (sum * weight).powf(1.0 / p))
}

/// Homogeneous `H^s` seminorm; the zero mode is excluded, so any real `s`
/// (including negative orders) gives a finite value.
pub fn hs_norm(f: &Field, s: f64) -> f64 {
    let grid = f.grid();
    let spec = fft_forward(f);
    let n = grid.len() as f64;
    let sum: f64 = spec
        .coeffs()
        .iter()
        .zip(grid.k_squared())
        .skip(1)
        .map(|(z, &k2)| k2.powf(s) * z.norm_sqr())
        .sum();
    (sum * grid.volume()).sqrt() / n
}

/// Inhomogeneous norm `(|f|_{L^2}^2 + |f|_{H^s}^2)^{1/2}`.
pub fn hs_inhom(f: &Field, s: f64) -> f64 {
    let l2 = lp_norm(f, 2.0).expect("p = 2 is admissible");
    (l2 * l2 + hs_norm(f, s).powi(2)).sqrt()
}

/// Homogeneous `H^s` seminorm of a vector field (root-sum-square over
/// components).
pub fn vector_hs_norm(v: &VectorField, s: f64) -> f64 {
    v.components()
        .iter()
        .map(|c| hs_norm(c, s).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GnError {
    #[error("degenerate interpolation: both endpoints have the same scaling")]
    Degenerate,
    #[error("interpolation exponent theta = {0} lies outside [0, 1]")]
    Infeasible(f64),
    #[error("invalid Gagliardo-Nirenberg parameters: {0}")]
    Invalid(String),
}

/// Interpolation exponent of the Gagliardo-Nirenberg inequality
/// `|L^sigma u|_p <= C |L^a u|_m^theta |L^s u|_r^{1-theta}`, solving
/// `1/p - sigma/d = theta (1/m - a/d) + (1 - theta)(1/r - s/d)`.
/// Exponents may be `f64::INFINITY`.
pub fn gn_theta(
    sigma: f64,
    p: f64,
    a: f64,
    m: f64,
    s: f64,
    r: f64,
    dim: usize,
) -> Result<f64, GnError> {
    if dim == 0 {
        return Err(GnError::Invalid("dimension must be positive".into()));
    }
    for (name, v) in [("p", p), ("m", m), ("r", r)] {
        if v.is_nan() || v < 1.0 {
            return Err(GnError::Invalid(format!("{name} = {v} must be >= 1")));
        }
    }
    let d = dim as f64;
    let target = 1.0 / p - sigma / d;
    let low = 1.0 / m - a / d;
    let high = 1.0 / r - s / d;
    if (low - high).abs() <= 1e-14 * (1.0 + low.abs() + high.abs()) {
        return Err(GnError::Degenerate);
    }
    if sigma >= s {
        return Err(GnError::Invalid(format!(
            "sigma = {sigma} must be below s = {s}"
        )));
    }
    let theta = (target - high) / (low - high);
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&theta) {
        return Err(GnError::Infeasible(theta));
    }
    Ok(theta.clamp(0.0, 1.0))
}
