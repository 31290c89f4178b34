//! Operators `T: R^n -> 2^(R^n)` and their graphs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::linalg::{approx_eq, MATCH_TOL};

/// Default number of intervals used to discretize the `[0, 1]` image of
/// [`BuiltinKind::UnitInterval`].
pub const DEFAULT_UNIT_INTERVAL_RESOLUTION: usize = 16;

/// A point `(x, x*)` of `R^n x R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct PrimalDualPair {
    pub x: Vec<f64>,
    pub x_star: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPair {
    x: Vec<f64>,
    x_star: Vec<f64>,
}

impl TryFrom<RawPair> for PrimalDualPair {
    type Error = Error;
    fn try_from(raw: RawPair) -> Result<Self> {
        PrimalDualPair::new(raw.x, raw.x_star)
    }
}

impl PrimalDualPair {
    pub fn new(x: Vec<f64>, x_star: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("pair has dimension 0".into()));
        }
        if x.len() != x_star.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: x_star.len(),
            });
        }
        if x.iter().chain(&x_star).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("pair has a non-finite component".into()));
        }
        Ok(PrimalDualPair { x, x_star })
    }

    /// One-dimensional pair. Panics on non-finite input.
    pub fn scalar(x: f64, x_star: f64) -> Self {
        Self::new(vec![x], vec![x_star]).expect("finite scalar pair")
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// The duality pairing `<x*, x>`.
    pub fn pairing(&self) -> f64 {
        crate::linalg::dot(&self.x_star, &self.x)
    }

    /// Componentwise `lambda * self + (1 - lambda) * other`.
    pub fn combine(&self, other: &Self, lambda: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect()
        };
        PrimalDualPair {
            x: mix(&self.x, &other.x),
            x_star: mix(&self.x_star, &other.x_star),
        }
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        approx_eq(&self.x, &other.x) && approx_eq(&self.x_star, &other.x_star)
    }
}

/// A non-empty finite list of graph pairs sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGraph {
    dim: usize,
    points: Vec<PrimalDualPair>,
}

impl FiniteGraph {
    pub fn new(points: Vec<PrimalDualPair>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyGraph)?;
        let dim = first.dim();
        if let Some(bad) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(FiniteGraph { dim, points })
    }

    /// Builds a one-dimensional graph from `(y, y*)` tuples.
    pub fn from_scalar_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let points = pairs
            .iter()
            .map(|&(y, ys)| PrimalDualPair::new(vec![y], vec![ys]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[PrimalDualPair] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: n,
            });
        }
        Ok(())
    }

    /// All images `x*` with `(x, x*)` in the graph.
    pub fn images_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .filter(|p| approx_eq(&p.x, x))
            .map(|p| p.x_star.clone())
            .collect()
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.points.iter().any(|p| approx_eq(&p.x, x))
    }

    pub fn contains(&self, p: &PrimalDualPair) -> bool {
        self.points.iter().any(|q| q.approx_eq(p))
    }

    /// Distinct domain points in first-appearance order.
    pub fn domain(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for p in &self.points {
            if !out.iter().any(|d| approx_eq(d, &p.x)) {
                out.push(&p.x);
            }
        }
        out
    }

    pub fn is_subgraph_of(&self, other: &FiniteGraph) -> bool {
        self.dim == other.dim && self.points.iter().all(|p| other.contains(p))
    }
}

/// Built-in one-dimensional operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BuiltinKind {
    /// `max{1 - |x|, 0}`
    Triangular,
    /// `1 / (1 + x^2)`
    Normal,
    /// `[0, 1]` at every point, discretized as `{0, 1/m, ..., 1}`.
    UnitInterval {
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    Identity,
    /// `a x + b`
    Affine {
        a: f64,
        b: f64,
    },
}

fn default_resolution() -> usize {
    DEFAULT_UNIT_INTERVAL_RESOLUTION
}

impl BuiltinKind {
    pub fn unit_interval() -> Self {
        BuiltinKind::UnitInterval {
            resolution: DEFAULT_UNIT_INTERVAL_RESOLUTION,
        }
    }

    /// Parses a CLI name such as `normal`, `unit-interval`, `affine:1,1`.
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        let (head, args) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (lower.as_str(), None),
        };
        let nums = |a: Option<&str>| -> Result<Vec<f64>> {
            a.map(|s| {
                s.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidInput(format!("bad number '{t}' in '{name}'")))
                    })
                    .collect()
            })
            .unwrap_or_else(|| Ok(Vec::new()))
        };
        match head {
            "triangular" => Ok(BuiltinKind::Triangular),
            "normal" => Ok(BuiltinKind::Normal),
            "identity" => Ok(BuiltinKind::Identity),
            "unit-interval" | "unit_interval" => match nums(args)?.as_slice() {
                [] => Ok(BuiltinKind::unit_interval()),
                [m] if *m >= 1.0 && m.fract() == 0.0 => Ok(BuiltinKind::UnitInterval {
                    resolution: *m as usize,
                }),
                _ => Err(Error::InvalidInput(format!("bad resolution in '{name}'"))),
            },
            "affine" => match nums(args)?.as_slice() {
                [a, b] => Ok(BuiltinKind::Affine { a: *a, b: *b }),
                _ => Err(Error::InvalidInput("affine needs 'affine:a,b'".into())),
            },
            _ => Err(Error::UnsupportedKind(name.to_string())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BuiltinKind::Triangular => "triangular".into(),
            BuiltinKind::Normal => "normal".into(),
            BuiltinKind::UnitInterval { resolution } => format!("unit-interval:{resolution}"),
            BuiltinKind::Identity => "identity".into(),
            BuiltinKind::Affine { a, b } => format!("affine:{a},{b}"),
        }
    }

    /// Number of image elements per point.
    pub fn branch_count(&self) -> usize {
        match self {
            BuiltinKind::UnitInterval { resolution } => resolution + 1,
            _ => 1,
        }
    }

    fn image(&self, x: f64, branch: usize) -> f64 {
        match *self {
            BuiltinKind::Triangular => (1.0 - x.abs()).max(0.0),
            BuiltinKind::Normal => 1.0 / (1.0 + x * x),
            BuiltinKind::UnitInterval { resolution } => branch as f64 / resolution as f64,
            BuiltinKind::Identity => x,
            BuiltinKind::Affine { a, b } => a * x + b,
        }
    }
}

/// An operator in one of its supported representations.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    FiniteGraph(FiniteGraph),
    Tabulated1D { xs: Vec<f64>, value_sets: Vec<Vec<f64>> },
    Expression1D(Expr),
    Builtin(BuiltinKind),
}

/// The image `T(x)` as a finite list of vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSet {
    pub values: Vec<Vec<f64>>,
}

impl ValueSet {
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
}

impl OperatorSpec {
    pub fn tabulated(xs: Vec<f64>, value_sets: Vec<Vec<f64>>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyGraph);
        }
        if xs.len() != value_sets.len() {
            return Err(Error::InvalidInput(format!(
                "{} grid points but {} value sets",
                xs.len(),
                value_sets.len()
            )));
        }
        if xs.iter().chain(value_sets.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite tabulated value".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("tabulated grid must be strictly increasing".into()));
        }
        if value_sets.iter().any(|s| s.is_empty()) {
            return Err(Error::InvalidInput(
                "every tabulated value set must be non-empty".into(),
            ));
        }
        Ok(OperatorSpec::Tabulated1D { xs, value_sets })
    }

    pub fn expression(source: &str) -> Result<Self> {
        Ok(OperatorSpec::Expression1D(parse_expression(source)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::FiniteGraph(g) => g.dim(),
            _ => 1,
        }
    }

    /// True for expression and built-in operators, which are sampled on grids.
    pub fn is_continuous(&self) -> bool {
        matches!(self, OperatorSpec::Expression1D(_) | OperatorSpec::Builtin(_))
    }

    /// The stored graph of a finite or tabulated operator.
    pub fn as_finite_graph(&self) -> Option<FiniteGraph> {
        match self {
            OperatorSpec::FiniteGraph(g) => Some(g.clone()),
            OperatorSpec::Tabulated1D { xs, value_sets } => {
                let points = xs
                    .iter()
                    .zip(value_sets)
                    .flat_map(|(&x, set)| set.iter().map(move |&v| PrimalDualPair::scalar(x, v)))
                    .collect();
                FiniteGraph::new(points).ok()
            }
            _ => None,
        }
    }

    /// Number of image branches for a continuous operator.
    pub(crate) fn branch_count(&self) -> usize {
        match self {
            OperatorSpec::Builtin(k) => k.branch_count(),
            _ => 1,
        }
    }

    /// Image element `branch` of a continuous operator at `x`.
    pub(crate) fn continuous_image(&self, x: f64, branch: usize) -> Result<f64> {
        match self {
            OperatorSpec::Builtin(k) => Ok(k.image(x, branch)),
            OperatorSpec::Expression1D(e) => e.eval(x),
            _ => Err(Error::UnsupportedKind("operator is not continuous".into())),
        }
    }

    /// Samples the graph at `lo + i * (hi - lo) / n`, `i = 0..=n`, with
    /// `n = round((hi - lo) / step)`.
    pub fn sample_graph(&self, lo: f64, hi: f64, step: f64) -> Result<FiniteGraph> {
        if let Some(g) = self.as_finite_graph() {
            return Ok(g);
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi && step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad sampling range [{lo}, {hi}] with step {step}"
            )));
        }
        let n = ((hi - lo) / step).round().max(1.0) as usize;
        let mut points = Vec::with_capacity((n + 1) * self.branch_count());
        for i in 0..=n {
            let y = lo + (hi - lo) * (i as f64 / n as f64);
            for b in 0..self.branch_count() {
                points.push(PrimalDualPair::scalar(y, self.continuous_image(y, b)?));
            }
        }
        FiniteGraph::new(points)
    }
}

/// Evaluates `T(x)`.
pub fn evaluate_operator(op: &OperatorSpec, x: &[f64]) -> Result<ValueSet> {
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: x.len(),
        });
    }
    let values = match op {
        OperatorSpec::FiniteGraph(g) => g.images_at(x),
        OperatorSpec::Tabulated1D { xs, value_sets } => {
            let t = x[0];
            let idx = xs.partition_point(|&v| v < t);
            let nearest = [idx.checked_sub(1), Some(idx)]
                .into_iter()
                .flatten()
                .filter(|&i| i < xs.len())
                .min_by(|&a, &b| (xs[a] - t).abs().total_cmp(&(xs[b] - t).abs()));
            match nearest {
                Some(i) if (xs[i] - t).abs() <= MATCH_TOL => value_sets[i].iter().map(|&v| vec![v]).collect(),
                _ => Vec::new(),
            }
        }
        OperatorSpec::Expression1D(_) | OperatorSpec::Builtin(_) => (0..op.branch_count())
            .map(|b| op.continuous_image(x[0], b).map(|v| vec![v]))
            .collect::<Result<_>>()?,
    };
    Ok(ValueSet { values })
}

/// JSON document form of an operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorDoc {
    FiniteGraph {
        points: Vec<PrimalDualPair>,
    },
    Tabulated {
        xs: Vec<f64>,
        value_sets: Vec<Vec<f64>>,
    },
    Expression {
        source: String,
    },
    Builtin {
        #[serde(flatten)]
        builtin: BuiltinKind,
    },
}

impl TryFrom<OperatorDoc> for OperatorSpec {
    type Error = Error;
    fn try_from(doc: OperatorDoc) -> Result<Self> {
        match doc {
            OperatorDoc::FiniteGraph { points } => Ok(OperatorSpec::FiniteGraph(FiniteGraph::new(points)?)),
            OperatorDoc::Tabulated { xs, value_sets } => OperatorSpec::tabulated(xs, value_sets),
            OperatorDoc::Expression { source } => OperatorSpec::expression(&source),
            OperatorDoc::Builtin { builtin } => Ok(OperatorSpec::Builtin(builtin)),
        }
    }
}

impl From<&OperatorSpec> for OperatorDoc {
    fn from(op: &OperatorSpec) -> Self {
        match op {
            OperatorSpec::FiniteGraph(g) => OperatorDoc::FiniteGraph {
                points: g.points().to_vec(),
            },
            OperatorSpec::Tabulated1D { xs, value_sets } => OperatorDoc::Tabulated {
                xs: xs.clone(),
                value_sets: value_sets.clone(),
            },
            OperatorSpec::Expression1D(e) => OperatorDoc::Expression {
                source: e.source().to_string(),
            },
            OperatorSpec::Builtin(k) => OperatorDoc::Builtin { builtin: *k },
        }
    }
}

impl OperatorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: OperatorDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&OperatorDoc::from(self)).expect("operator document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_point_values() {
        let tri = OperatorSpec::Builtin(BuiltinKind::Triangular);
        assert_eq!(evaluate_operator(&tri, &[0.0]).unwrap().values, vec![vec![1.0]]);
        let ui = OperatorSpec::Builtin(BuiltinKind::UnitInterval { resolution: 2 });
        assert_eq!(
            evaluate_operator(&ui, &[5.0]).unwrap().values,
            vec![vec![0.0], vec![0.5], vec![1.0]]
        );
        let aff = OperatorSpec::Builtin(BuiltinKind::Affine { a: 2.0, b: -1.0 });
        assert_eq!(evaluate_operator(&aff, &[3.0]).unwrap().values, vec![vec![5.0]]);
    }

    #[test]
    fn finite_graph_lookup() {
        let g = FiniteGraph::from_scalar_pairs(&[(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)]).unwrap();
        let op = OperatorSpec::FiniteGraph(g);
        assert!(evaluate_operator(&op, &[2.0]).unwrap().is_empty());
        assert_eq!(evaluate_operator(&op, &[1.0 + 1e-13]).unwrap().len(), 2);
        assert!(matches!(
            evaluate_operator(&op, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn tabulated_lookup_and_validation() {
        let op = OperatorSpec::tabulated(vec![0.0, 1.0, 2.0], vec![vec![3.0], vec![4.0, 5.0], vec![6.0]]).unwrap();
        assert_eq!(
            evaluate_operator(&op, &[1.0]).unwrap().values,
            vec![vec![4.0], vec![5.0]]
        );
        assert_eq!(evaluate_operator(&op, &[2.0 - 1e-13]).unwrap().values, vec![vec![6.0]]);
        assert!(evaluate_operator(&op, &[1.5]).unwrap().is_empty());
        assert!(evaluate_operator(&op, &[9.0]).unwrap().is_empty());
        assert!(OperatorSpec::tabulated(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(OperatorSpec::tabulated(vec![0.0], vec![vec![]]).is_err());
        assert!(OperatorSpec::tabulated(vec![], vec![]).is_err());
    }

    #[test]
    fn graph_invariants() {
        assert!(matches!(FiniteGraph::new(vec![]), Err(Error::EmptyGraph)));
        let mixed = vec![
            PrimalDualPair::scalar(0.0, 0.0),
            PrimalDualPair::new(vec![0.0; 2], vec![0.0; 2]).unwrap(),
        ];
        assert!(matches!(FiniteGraph::new(mixed), Err(Error::DimensionMismatch { .. })));
        assert!(PrimalDualPair::new(vec![f64::NAN], vec![0.0]).is_err());
        assert!(PrimalDualPair::new(vec![0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn builtins_match_formulas_on_dense_grid() {
        let kinds = [
            (
                BuiltinKind::Triangular,
                (|x: f64| (1.0 - x.abs()).max(0.0)) as fn(f64) -> f64,
            ),
            (BuiltinKind::Normal, |x: f64| 1.0 / (1.0 + x * x)),
            (BuiltinKind::Identity, |x: f64| x),
            (BuiltinKind::Affine { a: 1.0, b: 1.0 }, |x: f64| x + 1.0),
        ];
        for (kind, f) in kinds {
            let op = OperatorSpec::Builtin(kind);
            for i in 0..10_000 {
                let x = -10.0 + 20.0 * i as f64 / 9_999.0;
                let v = evaluate_operator(&op, &[x]).unwrap().values[0][0];
                assert!((v - f(x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn expression_agrees_with_triangular_builtin() {
        let e = OperatorSpec::expression("max(1-abs(x),0)").unwrap();
        let b = OperatorSpec::Builtin(BuiltinKind::Triangular);
        for i in 0..10_000 {
            let x = -10.0 + 20.0 * i as f64 / 9_999.0;
            assert_eq!(
                evaluate_operator(&e, &[x]).unwrap(),
                evaluate_operator(&b, &[x]).unwrap()
            );
        }
    }

    #[test]
    fn json_documents() {
        let text = r#"{"kind":"builtin","name":"affine","a":1.0,"b":2.0}"#;
        let op = OperatorSpec::from_json(text).unwrap();
        assert_eq!(op, OperatorSpec::Builtin(BuiltinKind::Affine { a: 1.0, b: 2.0 }));
        let ui = OperatorSpec::from_json(r#"{"kind":"builtin","name":"unit_interval"}"#).unwrap();
        assert_eq!(ui, OperatorSpec::Builtin(BuiltinKind::unit_interval()));
        let g = OperatorSpec::from_json(r#"{"kind":"finite_graph","points":[{"x":[0],"x_star":[1]}]}"#).unwrap();
        assert_eq!(OperatorSpec::from_json(&g.to_json()).unwrap(), g);
        let e = OperatorSpec::from_json(r#"{"kind":"expression","source":"x^2"}"#).unwrap();
        assert_eq!(OperatorSpec::from_json(&e.to_json()).unwrap(), e);
        assert!(OperatorSpec::from_json(r#"{"kind":"finite_graph","points":[]}"#).is_err());
        assert!(OperatorSpec::from_json(r#"{"kind":"expression","source":"x +"}"#).is_err());
    }

    #[test]
    fn builtin_names() {
        assert_eq!(BuiltinKind::from_name("Normal").unwrap(), BuiltinKind::Normal);
        assert_eq!(
            BuiltinKind::from_name("unit-interval:2").unwrap(),
            BuiltinKind::UnitInterval { resolution: 2 }
        );
        assert_eq!(
            BuiltinKind::from_name("affine:1,-1").unwrap(),
            BuiltinKind::Affine { a: 1.0, b: -1.0 }
        );
        assert!(BuiltinKind::from_name("affine").is_err());
        assert!(matches!(
            BuiltinKind::from_name("cubic"),
            Err(Error::UnsupportedKind(_))
        ));
    }

    #[test]
    fn sampled_graph_hits_midpoint_exactly() {
        let g = OperatorSpec::Builtin(BuiltinKind::Triangular)
            .sample_graph(-3.0, 3.0, 0.01)
            .unwrap();
        assert_eq!(g.len(), 601);
        assert!(g.in_domain(&[0.0]));
        assert_eq!(g.images_at(&[0.0]), vec![vec![1.0]]);
    }
}
