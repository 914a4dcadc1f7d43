use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional order of the velocity law, restricted to `0 < alpha <= 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha <= 0.5 {
            Ok(Self(alpha))
        } else {
            Err(Error::AlphaOutOfRange(alpha))
        }
    }

    /// The SQG endpoint `alpha = 1/2`.
    pub fn sqg() -> Self {
        Self(0.5)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Exponent of `Lambda` in the velocity law, `-2 + 2 alpha`.
    #[inline]
    pub fn velocity_exponent(self) -> f64 {
        -2.0 + 2.0 * self.0
    }

    pub fn is_sqg(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for AlphaParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AlphaParam> for f64 {
    fn from(a: AlphaParam) -> f64 {
        a.0
    }
}

/// How the velocity is recovered from the scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityLaw {
    /// `u = grad_perp Lambda^{-2+2 alpha} theta`, divergence free.
    Perp,
    /// `u = grad Lambda^{-2+2 alpha} theta`, compressible.
    Grad,
}

impl FromStr for VelocityLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perp" => Ok(Self::Perp),
            "grad" => Ok(Self::Grad),
            other => Err(Error::InvalidParameter(format!(
                "unknown velocity law {other:?} (expected perp or grad)"
            ))),
        }
    }
}

impl fmt::Display for VelocityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Perp => "perp",
            Self::Grad => "grad",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_range() {
        assert!(AlphaParam::new(0.0).is_err());
        assert!(AlphaParam::new(-0.1).is_err());
        assert!(AlphaParam::new(0.7).is_err());
        assert!(AlphaParam::new(f64::NAN).is_err());
        assert_eq!(AlphaParam::new(0.5).unwrap(), AlphaParam::sqg());
        assert_eq!(AlphaParam::new(0.25).unwrap().velocity_exponent(), -1.5);
    }

    #[test]
    fn law_parses_case_insensitively() {
        assert_eq!("Perp".parse::<VelocityLaw>().unwrap(), VelocityLaw::Perp);
        assert_eq!("grad".parse::<VelocityLaw>().unwrap(), VelocityLaw::Grad);
        assert!("curl".parse::<VelocityLaw>().is_err());
    }
}
