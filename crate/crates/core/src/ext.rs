//! Reals extended by ±∞ as explicit variants.
//!
//! Lyapunov exponents, energies and pressures can be genuinely infinite, and
//! the convention `0 · (−∞) = 0` has to be applied exactly, so infinities are
//! never encoded as IEEE sentinels inside these types.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    /// Maps IEEE infinities to the explicit variants. NaN is rejected.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_nan() {
            None
        } else if x == f64::INFINITY {
            Some(Self::PlusInfinity)
        } else if x == f64::NEG_INFINITY {
            Some(Self::MinusInfinity)
        } else {
            Some(Self::Finite(x))
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn is_minus_infinity(self) -> bool {
        matches!(self, Self::MinusInfinity)
    }

    pub fn is_plus_infinity(self) -> bool {
        matches!(self, Self::PlusInfinity)
    }

    /// Lossy conversion for plotting and comparisons.
    pub fn to_f64(self) -> f64 {
        match self {
            Self::Finite(x) => x,
            Self::PlusInfinity => f64::INFINITY,
            Self::MinusInfinity => f64::NEG_INFINITY,
        }
    }

    /// Multiplication by a non-negative real with `0 · (±∞) = 0`.
    pub fn scale(self, factor: f64) -> Self {
        debug_assert!(factor >= 0.0);
        match self {
            Self::Finite(x) => Self::Finite(x * factor),
            _ if factor == 0.0 => Self::ZERO,
            other => other,
        }
    }

    pub fn signum(self) -> f64 {
        match self {
            Self::Finite(x) if x > 0.0 => 1.0,
            Self::Finite(x) if x < 0.0 => -1.0,
            Self::Finite(_) => 0.0,
            Self::PlusInfinity => 1.0,
            Self::MinusInfinity => -1.0,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x).expect("NaN is not an extended real")
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (PlusInfinity, PlusInfinity) | (MinusInfinity, MinusInfinity) => Some(Ordering::Equal),
            (PlusInfinity, _) | (_, MinusInfinity) => Some(Ordering::Greater),
            (MinusInfinity, _) | (_, PlusInfinity) => Some(Ordering::Less),
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    /// `+∞ + −∞` has no value; it panics because no caller in this crate can
    /// produce it (entropies are finite whenever they are added to energies).
    fn add(self, rhs: Self) -> Self {
        use ExtendedReal::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (PlusInfinity, MinusInfinity) | (MinusInfinity, PlusInfinity) => {
                panic!("indeterminate sum +inf + -inf")
            }
            (PlusInfinity, _) | (_, PlusInfinity) => PlusInfinity,
            (MinusInfinity, _) | (_, MinusInfinity) => MinusInfinity,
        }
    }
}

impl Neg for ExtendedReal {
    type Output = ExtendedReal;

    fn neg(self) -> Self {
        match self {
            Self::Finite(x) => Self::Finite(-x),
            Self::PlusInfinity => Self::MinusInfinity,
            Self::MinusInfinity => Self::PlusInfinity,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(x) => write!(f, "{x}"),
            Self::PlusInfinity => f.write_str("inf"),
            Self::MinusInfinity => f.write_str("-inf"),
        }
    }
}

// JSON has no infinities, so they travel as the strings "inf" / "-inf".
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Finite(x) => serializer.serialize_f64(*x),
            Self::PlusInfinity => serializer.serialize_str("inf"),
            Self::MinusInfinity => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtendedReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                ExtendedReal::from_f64(v).ok_or_else(|| E::custom("NaN"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "inf" | "+inf" => Ok(ExtendedReal::PlusInfinity),
                    "-inf" => Ok(ExtendedReal::MinusInfinity),
                    other => Err(E::custom(format!("unexpected string {other:?}"))),
                }
            }
        }

        deserializer.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_times_minus_infinity_is_zero() {
        assert_eq!(ExtendedReal::MinusInfinity.scale(0.0), ExtendedReal::ZERO);
        assert_eq!(ExtendedReal::MinusInfinity.scale(0.5), ExtendedReal::MinusInfinity);
    }

    #[test]
    fn ordering_places_infinities_at_the_ends() {
        let mut v = vec![
            ExtendedReal::Finite(1.0),
            ExtendedReal::MinusInfinity,
            ExtendedReal::PlusInfinity,
            ExtendedReal::Finite(-3.0),
        ];
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(
            v,
            vec![
                ExtendedReal::PlusInfinity,
                ExtendedReal::Finite(1.0),
                ExtendedReal::Finite(-3.0),
                ExtendedReal::MinusInfinity
            ]
        );
    }

    #[test]
    fn minus_infinity_absorbs_finite_sums() {
        assert_eq!(ExtendedReal::Finite(2.0) + ExtendedReal::MinusInfinity, ExtendedReal::MinusInfinity);
    }
}
