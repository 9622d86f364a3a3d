//! Scalar functions applied to symmetric matrices through their eigenvalues.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The function `φ` in `tr φ(L[A])`.
///
/// `BoxCox { lambda }` is `(x^λ - 1) / λ`, with `λ = 0` meaning `ln x`. It
/// gives log-submodular models for `λ ∈ [0, 1]` and log-supermodular models
/// for `λ ∈ [1, 2]`; other values are accepted but carry no such guarantee.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralFunction {
    Log,
    Affine { b: f64, c: f64 },
    Quadratic { a: f64, b: f64, c: f64 },
    BoxCox { lambda: f64 },
}

impl SpectralFunction {
    pub fn boxcox(lambda: f64) -> Self {
        SpectralFunction::BoxCox { lambda }
    }

    pub fn affine(b: f64, c: f64) -> Self {
        SpectralFunction::Affine { b, c }
    }

    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        SpectralFunction::Quadratic { a, b, c }
    }

    /// `φ(x)` for `x ≥ 0`; may be `-∞` at `x = 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain {
                phi: self.to_string(),
                x,
            });
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation for clamped, nonnegative eigenvalues.
    #[inline]
    pub(crate) fn value(&self, x: f64) -> f64 {
        match *self {
            SpectralFunction::Log => x.ln(),
            SpectralFunction::Affine { b, c } => b * x + c,
            SpectralFunction::Quadratic { a, b, c } => (a * x + b) * x + c,
            SpectralFunction::BoxCox { lambda } => {
                if lambda == 0.0 {
                    x.ln()
                } else {
                    // expm1 keeps (x^λ - 1)/λ accurate as λ → 0
                    (lambda * x.ln()).exp_m1() / lambda
                }
            }
        }
    }

    /// `φ'(x)`. Fails at `x = 0` when the derivative is unbounded there.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain {
                phi: self.to_string(),
                x,
            });
        }
        let d = match *self {
            SpectralFunction::Log => 1.0 / x,
            SpectralFunction::Affine { b, .. } => b,
            SpectralFunction::Quadratic { a, b, .. } => 2.0 * a * x + b,
            SpectralFunction::BoxCox { lambda } => {
                if lambda == 1.0 {
                    1.0
                } else {
                    x.powf(lambda - 1.0)
                }
            }
        };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::SingularDerivative(self.to_string()))
        }
    }

    /// Whether `φ(0)` is finite.
    pub fn finite_at_zero(&self) -> bool {
        self.value(0.0).is_finite()
    }

    /// Short lowercase variant name.
    pub fn kind(&self) -> &'static str {
        match self {
            SpectralFunction::Log => "log",
            SpectralFunction::Affine { .. } => "affine",
            SpectralFunction::Quadratic { .. } => "quadratic",
            SpectralFunction::BoxCox { .. } => "boxcox",
        }
    }
}

/// Formats as the descriptor body used in model files, e.g. `boxcox 0.5`.
impl fmt::Display for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpectralFunction::Log => write!(f, "log"),
            SpectralFunction::Affine { b, c } => write!(f, "affine {b} {c}"),
            SpectralFunction::Quadratic { a, b, c } => write!(f, "quadratic {a} {b} {c}"),
            SpectralFunction::BoxCox { lambda } => write!(f, "boxcox {lambda}"),
        }
    }
}

impl FromStr for SpectralFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut toks = s.split_whitespace();
        let kind = toks
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty phi descriptor".into()))?;
        let coeffs = toks
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad phi coefficient {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let arity = |n: usize| -> Result<()> {
            if coeffs.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "phi {kind} takes {n} coefficients, got {}",
                    coeffs.len()
                )))
            }
        };
        let phi = match kind {
            "log" => {
                arity(0)?;
                SpectralFunction::Log
            }
            "affine" => {
                arity(2)?;
                SpectralFunction::affine(coeffs[0], coeffs[1])
            }
            "quadratic" => {
                arity(3)?;
                SpectralFunction::quadratic(coeffs[0], coeffs[1], coeffs[2])
            }
            "boxcox" => {
                arity(1)?;
                SpectralFunction::boxcox(coeffs[0])
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown phi variant {other:?}"
                )))
            }
        };
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("phi coefficients"));
        }
        Ok(phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boxcox_values() {
        assert!((SpectralFunction::boxcox(2.0).eval(3.0).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(SpectralFunction::boxcox(0.0).eval(2.0).unwrap(), 2f64.ln());
        let near = SpectralFunction::boxcox(1e-9).eval(2.0).unwrap();
        assert!((near - 2f64.ln()).abs() < 1e-8);
        assert_eq!(SpectralFunction::affine(0.0, 0.0).eval(7.5).unwrap(), 0.0);
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(SpectralFunction::Log.eval(0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(
            SpectralFunction::boxcox(0.0).eval(0.0).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(SpectralFunction::boxcox(0.5).eval(0.0).unwrap(), -2.0);
        assert!(SpectralFunction::quadratic(1.0, 2.0, 3.0).finite_at_zero());
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(SpectralFunction::Log.eval(-1.0).is_err());
        assert!(SpectralFunction::boxcox(1.5).derivative(-0.1).is_err());
    }

    #[test]
    fn derivatives() {
        assert_eq!(SpectralFunction::Log.derivative(2.0).unwrap(), 0.5);
        assert_eq!(SpectralFunction::boxcox(2.0).derivative(3.0).unwrap(), 3.0);
        assert_eq!(SpectralFunction::boxcox(1.5).derivative(0.0).unwrap(), 0.0);
        assert_eq!(SpectralFunction::boxcox(1.0).derivative(0.0).unwrap(), 1.0);
        assert!(matches!(
            SpectralFunction::Log.derivative(0.0),
            Err(Error::SingularDerivative(_))
        ));
        assert!(SpectralFunction::boxcox(0.5).derivative(0.0).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        for phi in [
            SpectralFunction::Log,
            SpectralFunction::affine(1.0, -1.0),
            SpectralFunction::quadratic(1.0, 0.0, 0.25),
            SpectralFunction::boxcox(0.5),
        ] {
            assert_eq!(phi.to_string().parse::<SpectralFunction>().unwrap(), phi);
        }
        assert!("boxcox".parse::<SpectralFunction>().is_err());
        assert!("cubic 1".parse::<SpectralFunction>().is_err());
    }

    fn any_phi() -> impl Strategy<Value = SpectralFunction> {
        prop_oneof![
            Just(SpectralFunction::Log),
            (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(b, c)| SpectralFunction::affine(b, c)),
            (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
                .prop_map(|(a, b, c)| SpectralFunction::quadratic(a, b, c)),
            (0.0..2.0f64).prop_map(SpectralFunction::boxcox),
        ]
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(phi in any_phi(), x in 0.05..5.0f64) {
            let h = 1e-6;
            let fd = (phi.eval(x + h).unwrap() - phi.eval(x - h).unwrap()) / (2.0 * h);
            let d = phi.derivative(x).unwrap();
            prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "{phi}: {fd} vs {d}");
        }
    }
}
