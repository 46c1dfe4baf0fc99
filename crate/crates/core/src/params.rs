//! Scalar parameter types shared across modules: Lebesgue-type exponents in
//! `[1, ∞]`, compatibility orders that may be unbounded, and the anisotropy
//! parameter `T ∈ [−∞, 1)` of the index sets.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};

/// An exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(invalid(format!("exponent must lie in [1, ∞], got {p}")));
        }
        Ok(Exponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// The Hölder conjugate `p′` with `1/p + 1/p′ = 1`.
    pub fn conjugate(self) -> Exponent {
        let r = 1.0 - self.reciprocal();
        if r == 0.0 {
            Exponent::INFINITY
        } else {
            Exponent(1.0 / r)
        }
    }
}

/// `σ_{p,q} = (1/q − 1/p)_+`.
pub fn sigma(p: Exponent, q: Exponent) -> f64 {
    (q.reciprocal() - p.reciprocal()).max(0.0)
}

/// Order `s` of the compatibility condition; schemes that satisfy it for every
/// `s > 0` carry `Unbounded`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    Finite(f64),
    Unbounded,
}

impl Smoothness {
    pub fn exceeds(self, x: f64) -> bool {
        match self {
            Smoothness::Finite(s) => s > x,
            Smoothness::Unbounded => true,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Smoothness::Finite(s) => s,
            Smoothness::Unbounded => f64::INFINITY,
        }
    }

    pub fn min_with(self, x: f64) -> f64 {
        x.min(self.as_f64())
    }
}

/// The anisotropy parameter `T` of `Δ(n, T)`; `NegInfinity` is the full box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anisotropy {
    Finite(f64),
    NegInfinity,
}

impl Anisotropy {
    pub fn new(t: f64) -> Result<Self> {
        if t == f64::NEG_INFINITY {
            return Ok(Anisotropy::NegInfinity);
        }
        if !t.is_finite() || t >= 1.0 {
            return Err(invalid(format!("anisotropy T must satisfy T < 1, got {t}")));
        }
        Ok(Anisotropy::Finite(t))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Anisotropy::Finite(t) => t,
            Anisotropy::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

fn ser_extended<S: Serializer>(x: f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x == f64::INFINITY {
        s.serialize_str("inf")
    } else if x == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(x)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Extended {
    Num(f64),
    Text(String),
}

fn de_extended<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match Extended::deserialize(d)? {
        Extended::Num(x) => Ok(x),
        Extended::Text(t) => match t.trim() {
            "inf" | "+inf" | "infinity" | "∞" => Ok(f64::INFINITY),
            "-inf" | "-infinity" | "-∞" => Ok(f64::NEG_INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| serde::de::Error::custom(format!("not a number: `{other}`"))),
        },
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_extended(self.0, s)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Exponent::new(de_extended(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Smoothness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_extended(self.as_f64(), s)
    }
}

impl<'de> Deserialize<'de> for Smoothness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = de_extended(d)?;
        if x == f64::INFINITY {
            Ok(Smoothness::Unbounded)
        } else if x > 0.0 {
            Ok(Smoothness::Finite(x))
        } else {
            Err(serde::de::Error::custom(format!("compatibility order must be positive, got {x}")))
        }
    }
}

impl Serialize for Anisotropy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_extended(self.as_f64(), s)
    }
}

impl<'de> Deserialize<'de> for Anisotropy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Anisotropy::new(de_extended(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::ONE.conjugate(), Exponent::INFINITY);
        assert_eq!(Exponent::INFINITY.conjugate(), Exponent::ONE);
        assert!((Exponent::new(4.0).unwrap().conjugate().value() - 4.0 / 3.0).abs() < 1e-15);
        assert!(Exponent::new(0.5).is_err());
    }

    #[test]
    fn sigma_is_positive_part() {
        let p = Exponent::new(4.0).unwrap();
        assert_eq!(sigma(p, Exponent::TWO), 0.25);
        assert_eq!(sigma(Exponent::TWO, p), 0.0);
    }

    #[test]
    fn infinite_values_serialize_as_strings() {
        let json = serde_json::to_string(&(Exponent::INFINITY, Anisotropy::NegInfinity)).unwrap();
        assert_eq!(json, r#"["inf","-inf"]"#);
        let (p, t): (Exponent, Anisotropy) = serde_json::from_str(&json).unwrap();
        assert!(p.is_infinite());
        assert_eq!(t, Anisotropy::NegInfinity);
        assert!(serde_json::from_str::<Anisotropy>("1.0").is_err());
    }
}
