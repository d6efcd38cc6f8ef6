use std::fmt;
use std::str::FromStr;

use super::ModelError;

/// Value and first two derivatives of a scalar function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Natural cubic spline through uniformly spaced samples on `[0, c_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    c_max: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(c_max: f64, values: Vec<f64>) -> Result<Self, ModelError> {
        if !(c_max.is_finite() && c_max > 0.0) {
            return Err(ModelError::Invalid(format!(
                "spline domain end {c_max} must be positive"
            )));
        }
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Invalid(
                "spline needs at least two finite samples".into(),
            ));
        }
        let n = values.len() - 1;
        let h = c_max / n as f64;
        // Tridiagonal solve for interior second derivatives (natural ends).
        let mut second = vec![0.0; n + 1];
        if n >= 2 {
            let m = n - 1;
            let mut diag = vec![4.0; m];
            let mut rhs: Vec<f64> = (1..n)
                .map(|i| 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h))
                .collect();
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            let mut x = vec![0.0; m];
            x[m - 1] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                x[i] = (rhs[i] - x[i + 1]) / diag[i];
            }
            second[1..n].copy_from_slice(&x);
        }
        Ok(Self {
            c_max,
            values,
            second,
        })
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    fn eval(&self, s: f64) -> Jet {
        let n = self.values.len() - 1;
        let h = self.c_max / n as f64;
        let i = ((s / h).floor().max(0.0) as usize).min(n - 1);
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        let (a, b) = ((x1 - s) / h, (s - x0) / h);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let value =
            a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0
            + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        Jet { value, d1, d2 }
    }
}

/// A scalar coefficient function (`chi` or `f`) with two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFunction {
    /// `a`
    Constant(f64),
    /// `a s`
    Linear(f64),
    /// `a s / (1 + s)`
    Saturating(f64),
    /// `sum_i c_i s^i`
    Polynomial(Vec<f64>),
    /// Natural cubic spline table on `[0, c_max]`.
    Spline(CubicSpline),
}

/// Relative overshoot of a spline's domain tolerated before evaluation fails.
const SPLINE_DOMAIN_SLACK: f64 = 1e-8;

impl ScalarFunction {
    /// Interval on which the function may be evaluated.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            ScalarFunction::Saturating(_) => (-1.0, f64::INFINITY),
            ScalarFunction::Spline(sp) => (
                -SPLINE_DOMAIN_SLACK * sp.c_max,
                sp.c_max * (1.0 + SPLINE_DOMAIN_SLACK),
            ),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn in_domain(&self, s: f64) -> bool {
        let (lo, hi) = self.domain();
        match self {
            ScalarFunction::Saturating(_) => s > lo,
            _ => s >= lo && s <= hi,
        }
    }

    pub fn jet(&self, s: f64) -> Result<Jet, ModelError> {
        if !self.in_domain(s) {
            let (lo, hi) = self.domain();
            return Err(ModelError::OutOfDomain {
                function: self.to_string(),
                min: s,
                max: s,
                lo,
                hi,
            });
        }
        Ok(self.jet_unchecked(s))
    }

    fn jet_unchecked(&self, s: f64) -> Jet {
        match self {
            ScalarFunction::Constant(a) => Jet {
                value: *a,
                d1: 0.0,
                d2: 0.0,
            },
            ScalarFunction::Linear(a) => Jet {
                value: a * s,
                d1: *a,
                d2: 0.0,
            },
            ScalarFunction::Saturating(a) => {
                let q = 1.0 + s;
                Jet {
                    value: a * s / q,
                    d1: a / (q * q),
                    d2: -2.0 * a / (q * q * q),
                }
            }
            ScalarFunction::Polynomial(c) => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                // Horner recurrences for p, p' and p''/2 (d2 doubled below).
                for &ci in c.iter().rev() {
                    d2 = d2 * s + d1;
                    d1 = d1 * s + v;
                    v = v * s + ci;
                }
                d2 *= 2.0;
                Jet { value: v, d1, d2 }
            }
            ScalarFunction::Spline(sp) => sp.eval(s),
        }
    }

    pub fn value(&self, s: f64) -> Result<f64, ModelError> {
        Ok(self.jet(s)?.value)
    }

    /// Pointwise values over a sample array. Fails naming the full offending
    /// range when any sample leaves the domain.
    pub fn eval_all(&self, samples: &[f64]) -> Result<Vec<f64>, ModelError> {
        if let ScalarFunction::Constant(a) = self {
            return Ok(vec![*a; samples.len()]);
        }
        if samples.iter().any(|&s| !self.in_domain(s)) {
            let (lo, hi) = self.domain();
            let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Err(ModelError::OutOfDomain {
                function: self.to_string(),
                min,
                max,
                lo,
                hi,
            });
        }
        Ok(samples
            .iter()
            .map(|&s| self.jet_unchecked(s).value)
            .collect())
    }

    /// `true` when the function vanishes identically (lets callers skip
    /// products).
    pub fn is_zero(&self) -> bool {
        match self {
            ScalarFunction::Constant(a)
            | ScalarFunction::Linear(a)
            | ScalarFunction::Saturating(a) => *a == 0.0,
            ScalarFunction::Polynomial(c) => c.iter().all(|&x| x == 0.0),
            ScalarFunction::Spline(sp) => sp.values.iter().all(|&x| x == 0.0),
        }
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFunction::Constant(a) => write!(f, "constant {a:?}"),
            ScalarFunction::Linear(a) => write!(f, "linear {a:?}"),
            ScalarFunction::Saturating(a) => write!(f, "saturating {a:?}"),
            ScalarFunction::Polynomial(c) => {
                write!(f, "poly")?;
                c.iter().try_for_each(|x| write!(f, " {x:?}"))
            }
            ScalarFunction::Spline(sp) => {
                write!(f, "spline {:?}", sp.c_max)?;
                sp.values.iter().try_for_each(|x| write!(f, " {x:?}"))
            }
        }
    }
}

impl FromStr for ScalarFunction {
    type Err = ModelError;

    /// Parses `constant A`, `linear A`, `saturating A`, `poly C0 C1 ...` or
    /// `spline CMAX V0 V1 ...`. The coefficient of the first three defaults
    /// to 1 when omitted.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut words = text.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| ModelError::Invalid("empty function spec".into()))?;
        let nums: Vec<f64> = words
            .map(|w| {
                w.parse::<f64>()
                    .map_err(|_| ModelError::Invalid(format!("'{w}' is not a number")))
            })
            .collect::<Result<_, _>>()?;
        let single = |nums: &[f64]| -> Result<f64, ModelError> {
            match nums {
                [] => Ok(1.0),
                [a] => Ok(*a),
                _ => Err(ModelError::Invalid(format!(
                    "'{kind}' takes at most one coefficient"
                ))),
            }
        };
        match kind {
            "constant" => Ok(ScalarFunction::Constant(single(&nums)?)),
            "linear" => Ok(ScalarFunction::Linear(single(&nums)?)),
            "saturating" => Ok(ScalarFunction::Saturating(single(&nums)?)),
            "poly" => {
                if nums.is_empty() {
                    return Err(ModelError::Invalid("poly needs coefficients".into()));
                }
                Ok(ScalarFunction::Polynomial(nums))
            }
            "spline" => {
                let (c_max, values) = nums
                    .split_first()
                    .ok_or_else(|| ModelError::Invalid("spline needs c_max".into()))?;
                Ok(ScalarFunction::Spline(CubicSpline::new(
                    *c_max,
                    values.to_vec(),
                )?))
            }
            other => Err(ModelError::Invalid(format!(
                "unknown function kind '{other}' (expected constant, linear, saturating, poly, spline)"
            ))),
        }
    }
}
