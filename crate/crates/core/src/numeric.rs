//! Numeric back-ends for network evaluation: `f64` and exact `BigRational`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericMode {
    Float64,
    ExactRational,
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Signed
    + FromPrimitive
    + Send
    + Sync
    + 'static
{
    const MODE: NumericMode;

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integers embed in every scalar type")
    }

    fn from_ratio(num: i64, den: i64) -> Self;

    fn approx_f64(&self) -> f64;

    /// Appends a byte encoding that is equal for two scalars iff they compare
    /// equal. Used to group feature vectors into classes.
    fn key_bytes(&self, out: &mut Vec<u8>);

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float64;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn approx_f64(&self) -> f64 {
        *self
    }

    fn key_bytes(&self, out: &mut Vec<u8>) {
        // -0.0 == 0.0 must share a key
        let v = if *self == 0.0 { 0.0 } else { *self };
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(v: &Value) -> Result<Self> {
        v.as_f64()
            .ok_or_else(|| Error::Json(format!("expected a number, found {v}")))
    }
}

impl Scalar for BigRational {
    const MODE: NumericMode = NumericMode::ExactRational;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn key_bytes(&self, out: &mut Vec<u8>) {
        // BigRational is kept in lowest terms with a positive denominator
        let num = self.numer().to_signed_bytes_le();
        let den = self.denom().to_signed_bytes_le();
        out.extend_from_slice(&(num.len() as u32).to_le_bytes());
        out.extend_from_slice(&num);
        out.extend_from_slice(&den);
        out.push(0xff);
    }

    fn to_json(&self) -> Value {
        json!({ "num": self.numer().to_string(), "den": self.denom().to_string() })
    }

    fn from_json(v: &Value) -> Result<Self> {
        let part = |key: &str| -> Result<BigInt> {
            match v.get(key) {
                Some(Value::String(s)) => s
                    .parse::<BigInt>()
                    .map_err(|e| Error::Json(format!("bad {key} `{s}`: {e}"))),
                Some(Value::Number(n)) if n.is_i64() => Ok(BigInt::from(n.as_i64().unwrap())),
                _ => Err(Error::Json(format!("expected {{num, den}}, found {v}"))),
            }
        };
        let den = part("den")?;
        if den.is_zero() {
            return Err(Error::Json("zero denominator".into()));
        }
        Ok(BigRational::new(part("num")?, den))
    }
}

/// `sign` with the tie-break `sign(0) = -1`.
pub fn sign<S: Scalar>(x: &S) -> S {
    if *x > S::zero() {
        S::one()
    } else {
        -S::one()
    }
}

/// `min(max(0, x), 1)`.
pub fn truncated_relu<S: Scalar>(x: &S) -> S {
    if *x < S::zero() {
        S::zero()
    } else if *x > S::one() {
        S::one()
    } else {
        x.clone()
    }
}

pub fn relu<S: Scalar>(x: &S) -> S {
    if *x < S::zero() {
        S::zero()
    } else {
        x.clone()
    }
}

#[cfg(test)]
mod tests {
    use num_traits::One;

    use super::*;

    #[test]
    fn rational_json_round_trip() {
        let x = BigRational::from_ratio(-7, 3);
        let j = x.to_json();
        assert_eq!(j, json!({"num": "-7", "den": "3"}));
        assert_eq!(BigRational::from_json(&j).unwrap(), x);
        assert!(BigRational::from_json(&json!({"num": "1", "den": "0"})).is_err());
    }

    #[test]
    fn key_bytes_respect_equality() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        BigRational::from_ratio(2, 4).key_bytes(&mut a);
        BigRational::from_ratio(1, 2).key_bytes(&mut b);
        assert_eq!(a, b);
        let (mut z, mut nz) = (Vec::new(), Vec::new());
        0.0f64.key_bytes(&mut z);
        (-0.0f64).key_bytes(&mut nz);
        assert_eq!(z, nz);
    }

    #[test]
    fn activations() {
        assert_eq!(sign(&0.0), -1.0);
        assert_eq!(sign(&BigRational::from_ratio(1, 9)), BigRational::one());
        assert_eq!(truncated_relu(&1.5), 1.0);
        assert_eq!(truncated_relu(&-0.5), 0.0);
        assert_eq!(truncated_relu(&0.25), 0.25);
        assert_eq!(relu(&-2.0), 0.0);
    }
}
