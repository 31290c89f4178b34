//! Evaluation of the Fitzpatrick function
//!
//! ```text
//! F_T(x, x*) = sup { <x*, y> + <y*, x> - <y*, y> : (y, y*) in gr T }
//! ```
//!
//! exactly on finite graphs and on nested sampling windows for continuous
//! one-dimensional operators, plus the checks built on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{approx_eq, dist, dot, dot_diff, sup_norm};
use crate::operator::{evaluate_operator, BuiltinKind, FiniteGraph, OperatorSpec, PrimalDualPair};
use crate::report::{CheckReport, ExtReal};
use crate::sigma::{sigma_value, SigmaSpec};

/// Tolerance of the `F = <x*,x> - inf <y* - x*, y - x>` identity check.
pub const INF_IDENTITY_TOL: f64 = 1e-9;
/// Tolerance of the extension comparison `F_T <= F_S`.
pub const EXTENSION_TOL: f64 = 1e-12;

/// `<x*, y> + <y*, x> - <y*, y>` for `p = (x, x*)` and `q = (y, y*)`.
#[inline]
pub fn affine_term(p: &PrimalDualPair, q: &PrimalDualPair) -> f64 {
    dot(&p.x_star, &q.x) + dot(&q.x_star, &p.x) - dot(&q.x_star, &q.x)
}

#[inline]
fn affine_term_1d(x: f64, x_star: f64, y: f64, y_star: f64) -> f64 {
    x_star * y + y_star * x - y_star * y
}

/// One window of a sampled evaluation: the running supremum over every grid
/// up to `radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSup {
    pub radius: f64,
    pub sup: ExtReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum FitzValue {
    Finite {
        value: f64,
        /// The maximizing graph pair `(y, y*)`.
        witness: PrimalDualPair,
        stabilized: bool,
    },
    DivergentEvidence {
        growth_trace: Vec<WindowSup>,
    },
}

impl FitzValue {
    pub fn finite_value(&self) -> Option<f64> {
        match self {
            FitzValue::Finite { value, .. } => Some(*value),
            FitzValue::DivergentEvidence { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, FitzValue::DivergentEvidence { .. })
    }

    /// The value with divergence read as `+inf`.
    pub fn as_ext(&self) -> ExtReal {
        ExtReal(self.finite_value().unwrap_or(f64::INFINITY))
    }
}

/// Nested sampling windows `[-R_k, R_k]` for continuous operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub radii: Vec<f64>,
    pub samples_per_window: usize,
    pub growth_threshold: f64,
    pub tol: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            radii: (0..=12).map(|k| f64::from(1u32 << k)).collect(),
            samples_per_window: 4097,
            growth_threshold: 0.1,
            tol: 1e-9,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.len() < 4 {
            return Err(Error::InvalidInput("at least four window radii are required".into()));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "window radii must be positive and strictly increasing".into(),
            ));
        }
        if self.samples_per_window < 3 {
            return Err(Error::InvalidInput("samples_per_window must be at least 3".into()));
        }
        if !(self.growth_threshold > 0.0 && self.tol >= 0.0) {
            return Err(Error::InvalidInput("growth_threshold must be > 0 and tol >= 0".into()));
        }
        Ok(())
    }
}

/// Exact maximum over a finite graph; ties go to the lowest index.
pub fn fitz_exact_finite(graph: &FiniteGraph, p: &PrimalDualPair) -> Result<FitzValue> {
    graph.check_dim(p.dim())?;
    let (value, idx) = max_over(graph.points().iter().enumerate(), p).ok_or(Error::EmptyGraph)?;
    Ok(FitzValue::Finite {
        value,
        witness: graph.points()[idx].clone(),
        stabilized: true,
    })
}

fn max_over<'a>(points: impl Iterator<Item = (usize, &'a PrimalDualPair)>, p: &PrimalDualPair) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, q) in points {
        let v = affine_term(p, q);
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, i));
        }
    }
    best
}

struct Window {
    radius: f64,
    sup: f64,
    witness: Option<PrimalDualPair>,
}

fn windows(op: &OperatorSpec, p: &PrimalDualPair, cfg: &WindowConfig) -> Result<Vec<Window>> {
    cfg.validate()?;
    if let Some(graph) = op.as_finite_graph() {
        graph.check_dim(p.dim())?;
        return Ok(cfg
            .radii
            .iter()
            .map(|&r| {
                let inside = graph.points().iter().enumerate().filter(|(_, q)| sup_norm(&q.x) <= r);
                match max_over(inside, p) {
                    Some((sup, i)) => Window {
                        radius: r,
                        sup,
                        witness: Some(graph.points()[i].clone()),
                    },
                    None => Window {
                        radius: r,
                        sup: f64::NEG_INFINITY,
                        witness: None,
                    },
                }
            })
            .collect());
    }
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: p.dim(),
        });
    }
    let (x, x_star) = (p.x[0], p.x_star[0]);
    let n = cfg.samples_per_window - 1;
    let branches = op.branch_count();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut out = Vec::with_capacity(cfg.radii.len());
    for &r in &cfg.radii {
        for j in 0..=n {
            let y = -r + 2.0 * r * (j as f64 / n as f64);
            for b in 0..branches {
                let y_star = op.continuous_image(y, b)?;
                let v = affine_term_1d(x, x_star, y, y_star);
                if v > best.0 {
                    best = (v, y, y_star);
                }
            }
        }
        out.push(Window {
            radius: r,
            sup: best.0,
            witness: Some(PrimalDualPair::scalar(best.1, best.2)),
        });
    }
    Ok(out)
}

/// Windowed suprema, non-decreasing in the radius.
///
/// Continuous operators are sampled on `samples_per_window` uniform points
/// of each `[-R_k, R_k]` and the running maximum over all grids so far is
/// kept. Finite and tabulated operators use the graph pairs with
/// `||y||_inf <= R_k`.
pub fn windowed_sups(op: &OperatorSpec, p: &PrimalDualPair, cfg: &WindowConfig) -> Result<Vec<WindowSup>> {
    Ok(windows(op, p, cfg)?
        .into_iter()
        .map(|w| WindowSup {
            radius: w.radius,
            sup: ExtReal(w.sup),
        })
        .collect())
}

/// Sampled Fitzpatrick value with divergence evidence.
///
/// Finite and stabilized when the last three windowed sups agree within
/// `tol * (1 + |value|)`. Divergent when each of the last three increments is
/// at least `growth_threshold * R_k`. Otherwise the last value is returned with
/// `stabilized = false`.
pub fn fitz_sampled(op: &OperatorSpec, p: &PrimalDualPair, cfg: &WindowConfig) -> Result<FitzValue> {
    let mut ws = windows(op, p, cfg)?;
    let k = ws.len();
    let last = ws[k - 1].sup;
    if last == f64::NEG_INFINITY {
        return Err(Error::InvalidInput("no graph pair inside the largest window".into()));
    }
    let stabilized = last - ws[k - 3].sup <= cfg.tol * (1.0 + last.abs());
    let growing = (k - 3..k).all(|i| {
        let inc = ws[i].sup - ws[i - 1].sup;
        inc > 0.0 && inc >= cfg.growth_threshold * ws[i].radius
    });
    if !stabilized && growing {
        return Ok(FitzValue::DivergentEvidence {
            growth_trace: ws
                .iter()
                .map(|w| WindowSup {
                    radius: w.radius,
                    sup: ExtReal(w.sup),
                })
                .collect(),
        });
    }
    let witness = ws.pop().and_then(|w| w.witness).expect("finite window has a witness");
    Ok(FitzValue::Finite {
        value: last,
        witness,
        stabilized,
    })
}

/// Closed forms for the built-ins whose Fitzpatrick function is known.
///
/// * Identity: `(x + x*)^2 / 4`.
/// * Normal `1/(1+y^2)`: `+inf` unless `x* = 0`, then `1 / (2 (sqrt(x^2+1) - x))`.
/// * Triangular `max{1-|y|,0}`: `+inf` unless `x* = 0`, then `0` for `x <= -1`,
///   `(x+1)^2 / 4` on `[-1, 1]` and `x` for `x >= 1`. The sup of the
///   `[-1, 0]` branch sits at `y = (x-1)/2` only while that point lies in the
///   branch; outside it the sup moves to `y = -1` or `y = 0`.
pub fn fitz_closed_form(kind: &BuiltinKind, p: &PrimalDualPair) -> Result<ExtReal> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: p.dim(),
        });
    }
    let (x, xs) = (p.x[0], p.x_star[0]);
    let v = match kind {
        BuiltinKind::Identity => (x + xs) * (x + xs) / 4.0,
        BuiltinKind::Triangular if xs != 0.0 => f64::INFINITY,
        BuiltinKind::Triangular => {
            if x <= -1.0 {
                0.0
            } else if x >= 1.0 {
                x
            } else {
                (x + 1.0) * (x + 1.0) / 4.0
            }
        }
        BuiltinKind::Normal if xs != 0.0 => f64::INFINITY,
        BuiltinKind::Normal => 1.0 / (2.0 * ((x * x + 1.0).sqrt() - x)),
        other => return Err(Error::UnsupportedKind(other.label())),
    };
    Ok(ExtReal(v))
}

/// Where Fitzpatrick values come from in the verification routines.
#[derive(Debug, Clone)]
pub enum FitzSource {
    Exact(FiniteGraph),
    Sampled { op: OperatorSpec, cfg: WindowConfig },
    ClosedForm(BuiltinKind),
}

impl FitzSource {
    pub fn closed_form(kind: BuiltinKind) -> Result<Self> {
        match kind {
            BuiltinKind::Identity | BuiltinKind::Triangular | BuiltinKind::Normal => Ok(FitzSource::ClosedForm(kind)),
            other => Err(Error::UnsupportedKind(other.label())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FitzSource::Exact(g) => g.dim(),
            FitzSource::Sampled { op, .. } => op.dim(),
            FitzSource::ClosedForm(_) => 1,
        }
    }

    /// `F_T(p)`, with divergence evidence read as `+inf`.
    pub fn value(&self, p: &PrimalDualPair) -> Result<ExtReal> {
        match self {
            FitzSource::Exact(g) => Ok(fitz_exact_finite(g, p)?.as_ext()),
            FitzSource::Sampled { op, cfg } => Ok(fitz_sampled(op, p, cfg)?.as_ext()),
            FitzSource::ClosedForm(kind) => fitz_closed_form(kind, p),
        }
    }

    /// Whether `p` lies on the graph of the underlying operator.
    pub fn contains(&self, p: &PrimalDualPair) -> Result<bool> {
        let op = match self {
            FitzSource::Exact(g) => return Ok(g.contains(p)),
            FitzSource::Sampled { op, .. } => op.clone(),
            FitzSource::ClosedForm(kind) => OperatorSpec::Builtin(*kind),
        };
        Ok(evaluate_operator(&op, &p.x)?
            .values
            .iter()
            .any(|v| approx_eq(v, &p.x_star)))
    }
}

/// Checks `F_T(x, x*) >= <x*, x> - tol` at every point with a finite value.
///
/// Divergent points pass vacuously. When `sigma` is given, graph points with
/// `sigma(x) = 0` are expected to satisfy equality; the report counts how many
/// did (`equality_expected`, `equality_observed`) and how many off-graph points
/// came within `tol` of equality (`equality_off_graph`). Those counts do not
/// affect the verdict. `maximal_asserted` records the caller's claim that the
/// operator is maximal sigma-monotone, which is not verified here.
pub fn verify_fitz_inequality(
    source: &FitzSource,
    points: &[PrimalDualPair],
    sigma: Option<&SigmaSpec>,
    maximal_asserted: bool,
    tol: f64,
) -> Result<CheckReport> {
    let mut worst: Option<(f64, usize)> = None;
    let (mut finite, mut divergent) = (0usize, 0usize);
    let (mut expected, mut observed, mut off_graph_equal) = (0usize, 0usize, 0usize);
    for (i, p) in points.iter().enumerate() {
        let f = source.value(p)?;
        if !f.is_finite() {
            divergent += 1;
            continue;
        }
        finite += 1;
        let gap = f.value() - p.pairing();
        if worst.is_none_or(|(w, _)| gap < w) {
            worst = Some((gap, i));
        }
        let on_graph = source.contains(p)?;
        if on_graph {
            if let Some(s) = sigma {
                if sigma_value(s, &p.x)? == 0.0 {
                    expected += 1;
                    if gap.abs() <= tol {
                        observed += 1;
                    }
                }
            }
        } else if gap.abs() <= tol {
            off_graph_equal += 1;
        }
    }
    let margin = worst.map_or(f64::INFINITY, |(w, _)| w);
    let report = match worst {
        Some((gap, i)) if gap < -tol => CheckReport::fail(vec![points[i].clone()], gap),
        _ => CheckReport::pass(margin),
    };
    Ok(report
        .with("maximal_asserted", maximal_asserted)
        .with("finite_points", finite)
        .with("divergent_points", divergent)
        .with("equality_expected", expected)
        .with("equality_observed", observed)
        .with("equality_off_graph", off_graph_equal))
}

/// Checks `F_T(p) = <x*, x> - min_{(y,y*)} <y* - x*, y - x>` on a finite graph.
pub fn verify_fitz_inf_identity(graph: &FiniteGraph, p: &PrimalDualPair) -> Result<CheckReport> {
    let left = fitz_exact_finite(graph, p)?
        .finite_value()
        .expect("exact value is finite");
    let inf = graph
        .points()
        .iter()
        .map(|q| dot_diff(&q.x_star, &p.x_star, &q.x, &p.x))
        .fold(f64::INFINITY, f64::min);
    let right = p.pairing() - inf;
    let diff = (left - right).abs();
    let margin = INF_IDENTITY_TOL - diff;
    let report = if diff <= INF_IDENTITY_TOL {
        CheckReport::pass(margin)
    } else {
        CheckReport::fail(vec![p.clone()], margin)
    };
    Ok(report.with("sup_form", left).with("inf_form", right))
}

/// Checks `F_T <= F_S` at the test points when `gr T` is contained in `gr S`.
pub fn verify_extension_monotonicity(
    graph_t: &FiniteGraph,
    graph_s: &FiniteGraph,
    test_points: &[PrimalDualPair],
) -> Result<CheckReport> {
    if !graph_t.is_subgraph_of(graph_s) {
        return Err(Error::NotAnExtension);
    }
    let mut worst: Option<(f64, usize)> = None;
    for (i, p) in test_points.iter().enumerate() {
        let ft = fitz_exact_finite(graph_t, p)?.finite_value().expect("finite");
        let fs = fitz_exact_finite(graph_s, p)?.finite_value().expect("finite");
        let slack = fs - ft;
        if worst.is_none_or(|(w, _)| slack < w) {
            worst = Some((slack, i));
        }
    }
    Ok(match worst {
        Some((slack, i)) if slack < -EXTENSION_TOL => CheckReport::fail(vec![test_points[i].clone()], slack),
        Some((slack, _)) => CheckReport::pass(slack),
        None => CheckReport::pass(f64::INFINITY),
    }
    .with("points", test_points.len()))
}

/// `max_{y in D(T)} min{sigma(x), sigma(y)} ||x - y||`.
fn spread_bound(graph: &FiniteGraph, sigma: &SigmaSpec, x: &[f64]) -> Result<(f64, usize)> {
    let sx = sigma_value(sigma, x)?;
    let mut best = (0.0, 0usize);
    for (i, q) in graph.points().iter().enumerate() {
        let v = sx.min(sigma_value(sigma, &q.x)?) * dist(x, &q.x);
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(best)
}

/// Consistency check of the membership criterion
/// `x* in T(x) => <x*, x> + sup_y min{sigma(x), sigma(y)} ||x - y|| >= F_T(x, x*)`.
///
/// Reports `bound` (left side) and `fitz` (right side). Fails only when `p`
/// is on the graph and the bound is below `F - tol`; otherwise, a bound below
/// `F - tol` is recorded as `implies_not_in_graph`.
pub fn membership_bound_check(
    graph: &FiniteGraph,
    sigma: &SigmaSpec,
    p: &PrimalDualPair,
    tol: f64,
) -> Result<CheckReport> {
    let fitz = fitz_exact_finite(graph, p)?;
    let f = fitz.finite_value().expect("finite");
    let (spread, _) = spread_bound(graph, sigma, &p.x)?;
    let bound = p.pairing() + spread;
    let in_graph = graph.contains(p);
    let excluded = bound < f - tol;
    let report = if in_graph && excluded {
        let FitzValue::Finite { witness, .. } = fitz else {
            unreachable!()
        };
        CheckReport::fail(vec![p.clone(), witness], bound - f)
    } else {
        CheckReport::pass(bound - f)
    };
    Ok(report
        .with("bound", bound)
        .with("fitz", f)
        .with("in_graph", in_graph)
        .with("implies_not_in_graph", excluded))
}

/// `sup_{y in D(T)} min{sigma(x), sigma(y)} ||x - y||` for a graph pair `p`.
pub fn m_set_value(graph: &FiniteGraph, sigma: &SigmaSpec, p: &PrimalDualPair) -> Result<f64> {
    graph.check_dim(p.dim())?;
    if !graph.contains(p) {
        return Err(Error::NotInGraph);
    }
    Ok(spread_bound(graph, sigma, &p.x)?.0)
}

/// A convexity probe `(p, q, lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexTriple {
    pub p: PrimalDualPair,
    pub q: PrimalDualPair,
    pub lambda: f64,
}

/// Checks `F(lambda p + (1-lambda) q) <= lambda F(p) + (1-lambda) F(q) + tol`.
/// Triples with a non-finite evaluation are skipped and counted.
pub fn verify_convexity(source: &FitzSource, triples: &[ConvexTriple], tol: f64) -> Result<CheckReport> {
    let mut worst: Option<(f64, usize)> = None;
    let mut skipped = 0usize;
    for (i, t) in triples.iter().enumerate() {
        if !(0.0..=1.0).contains(&t.lambda) {
            return Err(Error::InvalidInput(format!("lambda {} outside [0, 1]", t.lambda)));
        }
        if t.p.dim() != t.q.dim() {
            return Err(Error::DimensionMismatch {
                expected: t.p.dim(),
                found: t.q.dim(),
            });
        }
        let mid = t.p.combine(&t.q, t.lambda);
        let (fp, fq, fm) = (source.value(&t.p)?, source.value(&t.q)?, source.value(&mid)?);
        if !(fp.is_finite() && fq.is_finite() && fm.is_finite()) {
            skipped += 1;
            continue;
        }
        let slack = t.lambda * fp.value() + (1.0 - t.lambda) * fq.value() - fm.value();
        if worst.is_none_or(|(w, _)| slack < w) {
            worst = Some((slack, i));
        }
    }
    let report = match worst {
        Some((slack, i)) if slack < -tol => {
            let t = &triples[i];
            CheckReport::fail(vec![t.p.clone(), t.q.clone(), t.p.combine(&t.q, t.lambda)], slack)
        }
        Some((slack, _)) => CheckReport::pass(slack),
        None => CheckReport::pass(f64::INFINITY),
    };
    Ok(report.with("triples", triples.len()).with("skipped", skipped))
}
