use super::record::{NormField, NormKind, NormSpec};
use super::DiagnosticsError;

/// Minimum number of samples inside the fit window.
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub selector: Option<String>,
    pub window: (f64, f64),
    pub samples: usize,
    /// Slope of `log value` against `log(1 + t)`.
    pub exponent: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub reference: Option<f64>,
}

impl DecayFit {
    /// `|exponent / reference - 1|`, when a reference exists.
    pub fn relative_deviation(&self) -> Option<f64> {
        self.reference
            .map(|r| ((self.exponent - r) / r).abs())
    }
}

/// Decay exponent predicted for a norm selector. In three dimensions these
/// are the whole-space rates; for `n`, `c` and `u` in `L^p` the formula is
/// generalized to dimension `d` by heat-kernel scaling.
pub fn reference_exponent(selector: &NormSpec, alpha: f64, dim: usize) -> Option<f64> {
    let d = dim as f64;
    match (selector.field, selector.kind) {
        (NormField::N | NormField::C, NormKind::Lp(p)) => Some(-(d / 2.0) * (1.0 - 1.0 / p)),
        (NormField::U, NormKind::Lp(p)) if p >= 2.0 => {
            Some(-(d / (2.0 * alpha)) * (0.5 - 1.0 / p))
        }
        (NormField::GradN | NormField::GradC, NormKind::Lp(p)) if p == 2.0 && dim == 3 => {
            Some(-1.25)
        }
        (NormField::LambdaU, NormKind::Lp(p)) if p == 2.0 && dim == 3 => Some(-0.5),
        _ => None,
    }
}

/// Least-squares fit of `log value = a + b log(1 + t)` over samples with
/// `t` in `[window.0, window.1]`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, DiagnosticsError> {
    let (ta, tb) = window;
    if !(ta < tb) {
        return Err(DiagnosticsError::Invalid(format!(
            "fit window [{ta}, {tb}] must satisfy t_a < t_b"
        )));
    }
    let inside: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= ta && t <= tb)
        .collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::Invalid(format!(
            "{} samples in [{ta}, {tb}], at least {MIN_FIT_SAMPLES} required",
            inside.len()
        )));
    }
    if let Some(&(t, v)) = inside.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(DiagnosticsError::Invalid(format!(
            "value {v} at t = {t} is not positive; its logarithm is undefined"
        )));
    }
    let xs: Vec<f64> = inside.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = inside.iter().map(|(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DiagnosticsError::Invalid(
            "all samples share one time; slope undefined".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(DecayFit {
        selector: None,
        window,
        samples: inside.len(),
        exponent: slope,
        residual: (rss / m).sqrt(),
        reference: None,
    })
}

/// [`fit_decay`] with the selector's reference exponent attached.
pub fn fit_decay_for(
    series: &[(f64, f64)],
    window: (f64, f64),
    selector: &NormSpec,
    alpha: f64,
    dim: usize,
) -> Result<DecayFit, DiagnosticsError> {
    let mut fit = fit_decay(series, window)?;
    fit.selector = Some(selector.to_string());
    fit.reference = reference_exponent(selector, alpha, dim);
    Ok(fit)
}
