use std::fmt;
use std::str::FromStr;

use super::criteria::{check_pairs, format_exponent, parse_exponent, CriterionSpec};
use super::DiagnosticsError;
use crate::model::{ModelParams, State};
use crate::spectral::{
    derivative_spectrum, fft_forward, fft_inverse, frac_laplacian, gradient, hs_norm, lp_norm,
    vector_hs_norm, vector_lp_norm, Field, VectorField,
};

/// Quantity whose norm is monitored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormField {
    N,
    C,
    U,
    GradN,
    GradC,
    /// Pointwise Frobenius norm of the velocity Jacobian.
    GradU,
    /// `(-Delta)^{alpha/2} u`.
    LambdaU,
}

impl NormField {
    const ALL: [(NormField, &'static str); 7] = [
        (NormField::N, "n"),
        (NormField::C, "c"),
        (NormField::U, "u"),
        (NormField::GradN, "gradn"),
        (NormField::GradC, "gradc"),
        (NormField::GradU, "gradu"),
        (NormField::LambdaU, "lambdau"),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(f, _)| *f == self).unwrap().1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// Lebesgue norm with exponent in `[1, inf]`.
    Lp(f64),
    /// Homogeneous Sobolev seminorm of order `s`.
    Hs(f64),
}

/// One column of the norm table, written `field_L<p>` or `field_H<s>`
/// (`c_L2`, `u_Linf`, `gradc_L3`, `n_H1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub field: NormField,
    pub kind: NormKind,
}

impl NormSpec {
    pub fn lp(field: NormField, p: f64) -> Self {
        Self {
            field,
            kind: NormKind::Lp(p),
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NormKind::Lp(p) => write!(f, "{}_L{}", self.field.name(), format_exponent(p)),
            NormKind::Hs(s) => write!(f, "{}_H{}", self.field.name(), s),
        }
    }
}

impl FromStr for NormSpec {
    type Err = DiagnosticsError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || DiagnosticsError::Invalid(format!("cannot parse norm selector '{text}'"));
        let (field, rest) = text.trim().split_once('_').ok_or_else(bad)?;
        let field = NormField::ALL
            .iter()
            .find(|(_, n)| *n == field)
            .ok_or_else(bad)?
            .0;
        let kind = if let Some(p) = rest.strip_prefix('L') {
            let p = parse_exponent(p)?;
            if p < 1.0 {
                return Err(DiagnosticsError::Invalid(format!(
                    "Lebesgue exponent in '{text}' must be >= 1"
                )));
            }
            NormKind::Lp(p)
        } else if let Some(s) = rest.strip_prefix('H') {
            NormKind::Hs(s.parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        Ok(Self { field, kind })
    }
}

/// Velocity Jacobian `d_j u_i` as `d * d` fields, row `i`, column `j`.
fn jacobian(u: &VectorField) -> Vec<Field> {
    let dim = u.dim();
    let mut out = Vec::with_capacity(dim * dim);
    for comp in u.components() {
        let spec = fft_forward(comp);
        for axis in 0..dim {
            out.push(fft_inverse(&derivative_spectrum(&spec, axis)));
        }
    }
    out
}

fn frobenius(parts: &[Field]) -> Field {
    let grid = parts[0].grid();
    let mut values = vec![0.0; grid.len()];
    for p in parts {
        for (v, x) in values.iter_mut().zip(p.values()) {
            *v += x * x;
        }
    }
    Field::from_values(grid, values.into_iter().map(f64::sqrt).collect()).expect("same grid")
}

/// Evaluates one norm of the state.
pub fn evaluate_norm(state: &State, alpha: f64, spec: &NormSpec) -> Result<f64, DiagnosticsError> {
    let dim = state.grid().dim();
    let value = match (spec.field, spec.kind) {
        (NormField::N, NormKind::Lp(p)) => lp_norm(&state.n, p)?,
        (NormField::C, NormKind::Lp(p)) => lp_norm(&state.c, p)?,
        (NormField::U, NormKind::Lp(p)) => vector_lp_norm(&state.u, p)?,
        (NormField::N, NormKind::Hs(s)) => hs_norm(&state.n, s),
        (NormField::C, NormKind::Hs(s)) => hs_norm(&state.c, s),
        (NormField::U, NormKind::Hs(s)) => vector_hs_norm(&state.u, s),
        (NormField::GradN, NormKind::Lp(p)) => vector_lp_norm(&gradient(&state.n), p)?,
        (NormField::GradC, NormKind::Lp(p)) => vector_lp_norm(&gradient(&state.c), p)?,
        (NormField::GradN, NormKind::Hs(s)) => hs_norm(&state.n, s + 1.0),
        (NormField::GradC, NormKind::Hs(s)) => hs_norm(&state.c, s + 1.0),
        (NormField::GradU, NormKind::Lp(p)) => lp_norm(&frobenius(&jacobian(&state.u)), p)?,
        (NormField::GradU, NormKind::Hs(s)) => vector_hs_norm(&state.u, s + 1.0),
        (NormField::LambdaU, NormKind::Lp(p)) => {
            let parts = state
                .u
                .components()
                .iter()
                .map(|c| frac_laplacian(c, alpha / 2.0))
                .collect::<Result<Vec<_>, _>>()?;
            vector_lp_norm(&VectorField::from_components(parts)?, p)?
        }
        (NormField::LambdaU, NormKind::Hs(s)) => vector_hs_norm(&state.u, s + alpha),
    };
    debug_assert!(dim >= 2);
    Ok(value)
}

/// Running integrals (or running suprema for `p = inf`) of the four
/// criterion integrands `|n|_{q1}^{p1}`, `|u|_{q2}^{p2}`, `|grad c|_{q1}^{p1}`,
/// `|grad u|_{q2}^{p2}`, plus the bootstrap integrand `|grad u|_2^{4a/(4a-3)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulators {
    pub t: f64,
    /// Integrand values at `t`.
    pub integrands: [f64; 5],
    pub totals: [f64; 5],
    /// Entries accumulated as running suprema.
    pub sup_convention: [bool; 5],
    pub started: bool,
}

impl Accumulators {
    pub fn new(sup_convention: [bool; 5]) -> Self {
        Self {
            t: 0.0,
            integrands: [0.0; 5],
            totals: [0.0; 5],
            sup_convention,
            started: false,
        }
    }

    /// Trapezoid update to time `t`; running sup for flagged entries. The
    /// first call only records the integrands.
    pub fn advance(&self, t: f64, integrands: [f64; 5]) -> Self {
        let mut next = self.clone();
        for i in 0..5 {
            if self.sup_convention[i] {
                let prev = if self.started { self.totals[i] } else { 0.0 };
                next.totals[i] = prev.max(integrands[i]);
            } else if self.started {
                next.totals[i] += 0.5 * (t - self.t) * (self.integrands[i] + integrands[i]);
            }
        }
        next.t = t;
        next.integrands = integrands;
        next.started = true;
        next
    }

    pub fn b1(&self) -> f64 {
        self.totals[0] + self.totals[1]
    }

    pub fn b2(&self) -> f64 {
        self.totals[2] + self.totals[3]
    }

    /// `B1` with `|grad c|_{q1}^{p1}` in place of `|n|_{q1}^{p1}`.
    pub fn b1_grad_c(&self) -> f64 {
        self.totals[2] + self.totals[1]
    }

    pub fn bootstrap_integral(&self) -> f64 {
        self.totals[4]
    }
}

/// `4 alpha / (4 alpha - 3)`, defined for `alpha > 3/4`.
pub fn bootstrap_exponent(alpha: f64) -> Result<f64, DiagnosticsError> {
    if !(alpha > 0.75 && alpha.is_finite()) {
        return Err(DiagnosticsError::OutOfRange(format!(
            "bootstrap quantity requires alpha > 3/4, got alpha = {alpha}"
        )));
    }
    Ok(4.0 * alpha / (4.0 * alpha - 3.0))
}

/// `S^2 |grad c|_{L^3}^2 + |u|_{L^3}^2 + integral`.
pub fn bootstrap_quantity(
    state: &State,
    alpha: f64,
    s_fchi: f64,
    integral: f64,
) -> Result<f64, DiagnosticsError> {
    bootstrap_exponent(alpha)?;
    let gc = vector_lp_norm(&gradient(&state.c), 3.0)?;
    let u = vector_lp_norm(&state.u, 3.0)?;
    Ok(s_fchi * s_fchi * gc * gc + u * u + integral)
}

/// Configuration of the recorded quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub norms: Vec<NormSpec>,
    /// Record every `cadence`-th accepted step (accumulators see every step).
    pub cadence: usize,
    pub criterion: Option<CriterionSpec>,
    /// Also report `B1` with `grad c` in place of `n`.
    pub grad_c_variant: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            norms: vec![
                NormSpec::lp(NormField::N, 2.0),
                NormSpec::lp(NormField::C, 2.0),
                NormSpec::lp(NormField::C, f64::INFINITY),
                NormSpec::lp(NormField::U, 2.0),
            ],
            cadence: 1,
            criterion: None,
            grad_c_variant: false,
        }
    }
}

/// Columns that every record provides besides the configured norms.
pub const STANDARD_COLUMNS: [&str; 16] = [
    "B1",
    "B2",
    "B1_gradc",
    "bootstrap",
    "bootstrap_integral",
    "n_L2sq",
    "c_L2sq",
    "u_L2sq",
    "gradc_L2sq",
    "lambdau_L2sq",
    "n_min",
    "n_max",
    "c_min",
    "c_max",
    "mass_n",
    "mass_c",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub norms: Vec<(NormSpec, f64)>,
    pub accumulators: Accumulators,
    pub b1: f64,
    pub b2: f64,
    pub b1_grad_c: Option<f64>,
    pub bootstrap: Option<f64>,
    pub n_l2_sq: f64,
    pub c_l2_sq: f64,
    pub u_l2_sq: f64,
    pub grad_c_l2_sq: f64,
    pub lambda_u_l2_sq: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub mass_n: f64,
    pub mass_c: f64,
}

impl DiagnosticsRecord {
    /// Value of a named column; `None` for unknown names and absent entries.
    pub fn get(&self, column: &str) -> Option<f64> {
        let v = match column {
            "t" => self.t,
            "B1" => self.b1,
            "B2" => self.b2,
            "B1_gradc" => self.b1_grad_c?,
            "bootstrap" => self.bootstrap?,
            "bootstrap_integral" => {
                self.bootstrap?;
                self.accumulators.bootstrap_integral()
            }
            "n_L2sq" => self.n_l2_sq,
            "c_L2sq" => self.c_l2_sq,
            "u_L2sq" => self.u_l2_sq,
            "gradc_L2sq" => self.grad_c_l2_sq,
            "lambdau_L2sq" => self.lambda_u_l2_sq,
            "n_min" => self.n_min,
            "n_max" => self.n_max,
            "c_min" => self.c_min,
            "c_max" => self.c_max,
            "mass_n" => self.mass_n,
            "mass_c" => self.mass_c,
            other => {
                return self
                    .norms
                    .iter()
                    .find(|(s, _)| s.to_string() == other)
                    .map(|(_, v)| *v)
            }
        };
        Some(v)
    }

    /// Every entry is finite (absent optional entries are ignored).
    pub fn is_finite(&self) -> bool {
        let optional = [self.b1_grad_c, self.bootstrap];
        [
            self.t,
            self.b1,
            self.b2,
            self.n_l2_sq,
            self.c_l2_sq,
            self.u_l2_sq,
            self.grad_c_l2_sq,
            self.lambda_u_l2_sq,
            self.n_min,
            self.n_max,
            self.c_min,
            self.c_max,
            self.mass_n,
            self.mass_c,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.norms.iter().all(|(_, v)| v.is_finite())
            && optional.iter().flatten().all(|v| v.is_finite())
    }
}

/// Evaluates records for one model.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub config: DiagnosticsConfig,
    alpha: f64,
    s_fchi: f64,
    /// `(p1, q1, p2, q2)`; zeros in the integrands when no criterion is set.
    exponents: Option<(f64, f64, f64, f64)>,
    bootstrap_power: Option<f64>,
}

impl Diagnostics {
    /// Rejects inadmissible criterion pairs. `c_max` bounds the oxygen range
    /// used for `S_{f,chi}`.
    pub fn new(
        config: DiagnosticsConfig,
        params: &ModelParams,
        c_max: f64,
    ) -> Result<Self, DiagnosticsError> {
        if config.cadence == 0 {
            return Err(DiagnosticsError::Invalid("cadence must be >= 1".into()));
        }
        let exponents = match &config.criterion {
            None => None,
            Some(spec) => {
                let verdicts = check_pairs(spec)?;
                if let Some((i, v)) = verdicts.iter().enumerate().find(|(_, v)| !v.is_admissible()) {
                    return Err(DiagnosticsError::Invalid(format!("pair {}: {v}", i + 1)));
                }
                let (p1, q1) = spec.pairs[0];
                let (p2, q2) = spec.pairs.get(1).copied().unwrap_or((f64::INFINITY, f64::INFINITY));
                Some((p1, q1, p2, q2))
            }
        };
        Ok(Self {
            config,
            alpha: params.alpha,
            s_fchi: params.s_fchi(c_max)?,
            exponents,
            bootstrap_power: bootstrap_exponent(params.alpha).ok(),
        })
    }

    pub fn s_fchi(&self) -> f64 {
        self.s_fchi
    }

    pub fn fresh_accumulators(&self) -> Accumulators {
        let sup = match self.exponents {
            Some((p1, _, p2, _)) => [
                p1.is_infinite(),
                p2.is_infinite(),
                p1.is_infinite(),
                p2.is_infinite(),
                false,
            ],
            None => [false; 5],
        };
        Accumulators::new(sup)
    }

    /// Integrands at `state`; an infinite exponent contributes the bare norm.
    pub fn integrands(&self, state: &State) -> Result<[f64; 5], DiagnosticsError> {
        let power = |norm: f64, p: f64| if p.is_infinite() { norm } else { norm.powf(p) };
        let needs_jacobian = self.exponents.is_some() || self.bootstrap_power.is_some();
        let grad_u = if needs_jacobian && !state.u.is_zero() {
            Some(frobenius(&jacobian(&state.u)))
        } else {
            None
        };
        let grad_u_norm = |q: f64| -> Result<f64, DiagnosticsError> {
            Ok(match &grad_u {
                Some(g) => lp_norm(g, q)?,
                None => 0.0,
            })
        };
        let mut out = [0.0; 5];
        if let Some((p1, q1, p2, q2)) = self.exponents {
            out[0] = power(lp_norm(&state.n, q1)?, p1);
            out[1] = power(vector_lp_norm(&state.u, q2)?, p2);
            out[2] = power(vector_lp_norm(&gradient(&state.c), q1)?, p1);
            out[3] = power(grad_u_norm(q2)?, p2);
        }
        if let Some(b) = self.bootstrap_power {
            out[4] = grad_u_norm(2.0)?.powf(b);
        }
        Ok(out)
    }

    /// Advances the accumulators to `state.t`.
    pub fn accumulate(&self, acc: &Accumulators, state: &State) -> Result<Accumulators, DiagnosticsError> {
        Ok(acc.advance(state.t, self.integrands(state)?))
    }

    /// Full record at `state`, given accumulators already advanced to `state.t`.
    pub fn record(&self, acc: &Accumulators, state: &State) -> Result<DiagnosticsRecord, DiagnosticsError> {
        let norms = self
            .config
            .norms
            .iter()
            .map(|s| Ok((*s, evaluate_norm(state, self.alpha, s)?)))
            .collect::<Result<Vec<_>, DiagnosticsError>>()?;
        let l2sq = |f: &Field| -> Result<f64, DiagnosticsError> { Ok(lp_norm(f, 2.0)?.powi(2)) };
        let bootstrap = match self.bootstrap_power {
            Some(_) => Some(bootstrap_quantity(
                state,
                self.alpha,
                self.s_fchi,
                acc.bootstrap_integral(),
            )?),
            None => None,
        };
        Ok(DiagnosticsRecord {
            t: state.t,
            norms,
            b1: acc.b1(),
            b2: acc.b2(),
            b1_grad_c: self.config.grad_c_variant.then(|| acc.b1_grad_c()),
            bootstrap,
            n_l2_sq: l2sq(&state.n)?,
            c_l2_sq: l2sq(&state.c)?,
            u_l2_sq: vector_lp_norm(&state.u, 2.0)?.powi(2),
            grad_c_l2_sq: hs_norm(&state.c, 1.0).powi(2),
            lambda_u_l2_sq: vector_hs_norm(&state.u, self.alpha).powi(2),
            n_min: state.n.min(),
            n_max: state.n.max(),
            c_min: state.c.min(),
            c_max: state.c.max(),
            mass_n: state.n.integral(),
            mass_c: state.c.integral(),
            accumulators: acc.clone(),
        })
    }

    /// Column names in output order: configured norms, then the standard set
    /// (optional columns only when they are produced).
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.config.norms.iter().map(|s| s.to_string()).collect();
        for c in STANDARD_COLUMNS {
            let present = match c {
                "B1_gradc" => self.config.grad_c_variant,
                "bootstrap" | "bootstrap_integral" => self.bootstrap_power.is_some(),
                _ => true,
            };
            if present {
                cols.push(c.to_string());
            }
        }
        cols
    }
}
