//! Verdicts and extended reals shared by every check.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::operator::PrimalDualPair;

/// A real number or `+/-inf`. Infinities serialize as the strings
/// `"inf"` and `"-inf"` so reports stay valid JSON.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtReal(pub f64);

impl ExtReal {
    pub const INF: ExtReal = ExtReal(f64::INFINITY);

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            v if v == f64::INFINITY => f.write_str("inf"),
            v if v == f64::NEG_INFINITY => f.write_str("-inf"),
            v => write!(f, "{v}"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal(v)),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(ExtReal(f64::INFINITY)),
                "-inf" => Ok(ExtReal(f64::NEG_INFINITY)),
                "nan" => Ok(ExtReal(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}

/// Auxiliary report values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Detail {
    Flag(bool),
    Count(u64),
    Real(ExtReal),
    Text(String),
}

impl From<bool> for Detail {
    fn from(v: bool) -> Self {
        Detail::Flag(v)
    }
}

impl From<usize> for Detail {
    fn from(v: usize) -> Self {
        Detail::Count(v as u64)
    }
}

impl From<f64> for Detail {
    fn from(v: f64) -> Self {
        Detail::Real(ExtReal(v))
    }
}

impl From<ExtReal> for Detail {
    fn from(v: ExtReal) -> Self {
        Detail::Real(v)
    }
}

impl From<&str> for Detail {
    fn from(v: &str) -> Self {
        Detail::Text(v.to_string())
    }
}

/// Pass/fail verdict of a check.
///
/// `passed` holds exactly when `witness` is `None`. On failure the witness
/// lists the pairs at which the checked inequality is violated and `margin`
/// is the (non-positive) slack there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<PrimalDualPair>>,
    pub margin: ExtReal,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Detail>,
}

impl CheckReport {
    pub fn pass(margin: f64) -> Self {
        CheckReport {
            passed: true,
            witness: None,
            margin: ExtReal(margin),
            details: BTreeMap::new(),
        }
    }

    pub fn fail(witness: Vec<PrimalDualPair>, margin: f64) -> Self {
        CheckReport {
            passed: false,
            witness: Some(witness),
            margin: ExtReal(margin),
            details: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Detail>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn detail(&self, key: &str) -> Option<&Detail> {
        self.details.get(key)
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        match self.details.get(key) {
            Some(Detail::Real(v)) => Some(v.0),
            Some(Detail::Count(c)) => Some(*c as f64),
            _ => None,
        }
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        match self.details.get(key) {
            Some(Detail::Flag(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn count(&self, key: &str) -> Option<u64> {
        match self.details.get(key) {
            Some(Detail::Count(c)) => Some(*c),
            _ => None,
        }
    }
}
