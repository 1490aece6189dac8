//! Serde helpers for exponents that may be infinite.
//!
//! JSON has no infinity literal, so `p = ∞` is written as the string `"inf"`.
//! Finite values stay plain numbers.

use serde::{de, Deserialize, Deserializer, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Num(f64),
    Text(String),
}

fn parse(raw: Raw) -> Result<f64, String> {
    match raw {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| format!("expected a number or \"inf\", got {s:?}")),
        },
    }
}

pub mod exponent {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Raw::deserialize(d)?).map_err(de::Error::custom)
    }
}

pub mod exponent_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::exponent::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<Raw>::deserialize(d)?
            .map(parse)
            .transpose()
            .map_err(de::Error::custom)
    }
}

/// Serialize a float that may be non-finite (∞ ratios, NaN placeholders).
pub mod real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Text(t) if t == "nan" => Ok(f64::NAN),
            Raw::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            raw => parse(raw).map_err(de::Error::custom),
        }
    }
}
