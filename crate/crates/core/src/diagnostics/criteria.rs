//! Admissible exponent pairs for the two regularity criteria.
//!
//! Pair 1 is shared: `2/p1 + 3/q1 <= 1`, `3 < q1 <= inf`. Pair 2 differs:
//!
//! * Prodi-Serrin type (`alpha > 3/4`):
//!   `2 alpha/p2 + 3/q2 <= 2 alpha - 1`, `max{3/2, 3/(2 alpha - 1)} < q2 <= inf`.
//! * Beirao da Veiga type (`alpha > 1/2`):
//!   `2 alpha/p2 + 3/q2 <= 2 alpha`, `max{1, 3/(2 alpha)} < q2 <= inf`.
//!
//! The range condition on `q` is checked first, so a pair that fails both is
//! reported by its range violation.

use std::fmt;
use std::str::FromStr;

use super::DiagnosticsError;

/// Relative slack on the scaling inequalities so that exact boundary pairs
/// are not lost to rounding.
pub const SCALING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    ProdiSerrin,
    BeiraoDaVeiga,
}

impl CriterionKind {
    pub fn short_name(self) -> &'static str {
        match self {
            CriterionKind::ProdiSerrin => "ps",
            CriterionKind::BeiraoDaVeiga => "bv",
        }
    }

    /// Smallest excluded `alpha`.
    pub fn alpha_bound(self) -> f64 {
        match self {
            CriterionKind::ProdiSerrin => 0.75,
            CriterionKind::BeiraoDaVeiga => 0.5,
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for CriterionKind {
    type Err = DiagnosticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ps" | "prodi-serrin" | "prodiserrin" => Ok(CriterionKind::ProdiSerrin),
            "bv" | "beirao-da-veiga" | "beiraodaveiga" => Ok(CriterionKind::BeiraoDaVeiga),
            other => Err(DiagnosticsError::Invalid(format!(
                "unknown criterion kind '{other}' (expected ps or bv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    /// `(p1, q1)` and optionally `(p2, q2)`; `f64::INFINITY` encodes `inf`.
    pub pairs: Vec<(f64, f64)>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairVerdict {
    Admissible,
    /// Names the first violated constraint.
    Violated(String),
}

impl PairVerdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, PairVerdict::Admissible)
    }
}

impl fmt::Display for PairVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairVerdict::Admissible => f.write_str("admissible"),
            PairVerdict::Violated(c) => write!(f, "violated \"{c}\""),
        }
    }
}

/// Exponent written as a decimal or `inf`.
pub fn parse_exponent(text: &str) -> Result<f64, DiagnosticsError> {
    let t = text.trim();
    let v = match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        _ => t
            .parse::<f64>()
            .map_err(|_| DiagnosticsError::Invalid(format!("cannot parse exponent '{t}'")))?,
    };
    if !(v > 0.0) {
        return Err(DiagnosticsError::Invalid(format!(
            "exponent {t} must lie in (0, inf]"
        )));
    }
    Ok(v)
}

pub fn format_exponent(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn scaling_ok(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + SCALING_SLACK * rhs.abs().max(1.0)
}

fn check_first(p: f64, q: f64) -> PairVerdict {
    if !(q > 3.0) {
        return PairVerdict::Violated("q₁ > 3".into());
    }
    if !scaling_ok(2.0 * inv(p) + 3.0 * inv(q), 1.0) {
        return PairVerdict::Violated("2/p₁ + 3/q₁ ≤ 1".into());
    }
    PairVerdict::Admissible
}

fn check_second(kind: CriterionKind, alpha: f64, p: f64, q: f64) -> PairVerdict {
    let (q_min, range_name, rhs, scaling_name) = match kind {
        CriterionKind::ProdiSerrin => (
            f64::max(1.5, 3.0 / (2.0 * alpha - 1.0)),
            "q₂ > max{3/2, 3/(2α−1)}",
            2.0 * alpha - 1.0,
            "2α/p₂ + 3/q₂ ≤ 2α−1",
        ),
        CriterionKind::BeiraoDaVeiga => (
            f64::max(1.0, 3.0 / (2.0 * alpha)),
            "q₂ > max{1, 3/(2α)}",
            2.0 * alpha,
            "2α/p₂ + 3/q₂ ≤ 2α",
        ),
    };
    if !(q > q_min) {
        return PairVerdict::Violated(format!("{range_name} = {q_min}"));
    }
    if !scaling_ok(2.0 * alpha * inv(p) + 3.0 * inv(q), rhs) {
        return PairVerdict::Violated(format!("{scaling_name} = {rhs}"));
    }
    PairVerdict::Admissible
}

/// Classifies each pair of `spec` in order.
pub fn check_pairs(spec: &CriterionSpec) -> Result<Vec<PairVerdict>, DiagnosticsError> {
    let alpha = spec.alpha;
    if !alpha.is_finite() || alpha <= spec.kind.alpha_bound() {
        return Err(DiagnosticsError::OutOfRange(format!(
            "{} criterion requires alpha > {}, got alpha = {alpha}",
            spec.kind,
            spec.kind.alpha_bound()
        )));
    }
    if spec.pairs.is_empty() || spec.pairs.len() > 2 {
        return Err(DiagnosticsError::Invalid(format!(
            "expected one or two (p, q) pairs, got {}",
            spec.pairs.len()
        )));
    }
    for &(p, q) in &spec.pairs {
        if !(p > 0.0 && q > 0.0) {
            return Err(DiagnosticsError::Invalid(format!(
                "exponents ({p}, {q}) must lie in (0, inf]"
            )));
        }
    }
    Ok(spec
        .pairs
        .iter()
        .enumerate()
        .map(|(i, &(p, q))| {
            if i == 0 {
                check_first(p, q)
            } else {
                check_second(spec.kind, alpha, p, q)
            }
        })
        .collect())
}
