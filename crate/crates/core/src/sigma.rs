//! Nonnegative functions `sigma: D(T) -> R+`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::linalg::approx_eq;

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    Constant(f64),
    /// Values keyed by domain point, matched to within `1e-12`.
    Table(Vec<(Vec<f64>, f64)>),
    Expression1D(Expr),
}

impl SigmaSpec {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma constant must be finite and >= 0, got {c}"
            )));
        }
        Ok(SigmaSpec::Constant(c))
    }

    pub fn table(entries: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        for (x, v) in &entries {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::NegativeSigma {
                    x: x.clone(),
                    value: *v,
                });
            }
        }
        Ok(SigmaSpec::Table(entries))
    }

    pub fn expression(source: &str) -> Result<Self> {
        Ok(SigmaSpec::Expression1D(parse_expression(source)?))
    }

    /// Checks that an expression sigma is nonnegative at every given point.
    pub fn validate_on<'a>(&self, points: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
        for x in points {
            sigma_value(self, x)?;
        }
        Ok(())
    }
}

/// Evaluates `sigma(x)`.
pub fn sigma_value(sigma: &SigmaSpec, x: &[f64]) -> Result<f64> {
    match sigma {
        SigmaSpec::Constant(c) => Ok(*c),
        SigmaSpec::Table(entries) => entries
            .iter()
            .find(|(k, _)| approx_eq(k, x))
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::MissingKey(x.to_vec())),
        SigmaSpec::Expression1D(e) => {
            if x.len() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: x.len(),
                });
            }
            let v = e.eval(x[0])?;
            if v < 0.0 {
                return Err(Error::NegativeSigma {
                    x: x.to_vec(),
                    value: v,
                });
            }
            Ok(v)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub x: Vec<f64>,
    pub sigma: f64,
}

/// JSON document form of a sigma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaDoc {
    Constant { c: f64 },
    Table { entries: Vec<SigmaEntry> },
    Expression { source: String },
}

impl TryFrom<SigmaDoc> for SigmaSpec {
    type Error = Error;
    fn try_from(doc: SigmaDoc) -> Result<Self> {
        match doc {
            SigmaDoc::Constant { c } => SigmaSpec::constant(c),
            SigmaDoc::Table { entries } => SigmaSpec::table(entries.into_iter().map(|e| (e.x, e.sigma)).collect()),
            SigmaDoc::Expression { source } => SigmaSpec::expression(&source),
        }
    }
}

impl From<&SigmaSpec> for SigmaDoc {
    fn from(s: &SigmaSpec) -> Self {
        match s {
            SigmaSpec::Constant(c) => SigmaDoc::Constant { c: *c },
            SigmaSpec::Table(entries) => SigmaDoc::Table {
                entries: entries
                    .iter()
                    .map(|(x, v)| SigmaEntry {
                        x: x.clone(),
                        sigma: *v,
                    })
                    .collect(),
            },
            SigmaSpec::Expression1D(e) => SigmaDoc::Expression {
                source: e.source().to_string(),
            },
        }
    }
}

impl SigmaSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SigmaDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}
