//! Sigma-monotonicity certificates, relatedness tests, `sigma_T` estimates and
//! candidate-based refutation of maximality.
//!
//! Every scan walks pairs in index-lexicographic order and keeps the first
//! minimizer, so witnesses are reproducible.

use crate::error::{Error, Result};
use crate::linalg::{approx_eq, dist, dot_diff};
use crate::operator::{FiniteGraph, PrimalDualPair};
use crate::report::CheckReport;
use crate::sigma::{sigma_value, SigmaSpec};

/// Default absolute tolerance for sigma-monotonicity inequalities.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Slack of `<x* - y*, x - y> >= -min{s_x, s_y} ||x - y||`.
#[inline]
pub fn sigma_slack(p: &PrimalDualPair, sp: f64, q: &PrimalDualPair, sq: f64) -> f64 {
    let lhs = dot_diff(&p.x_star, &q.x_star, &p.x, &q.x);
    lhs + sp.min(sq) * dist(&p.x, &q.x)
}

fn graph_sigmas(graph: &FiniteGraph, sigma: &SigmaSpec) -> Result<Vec<f64>> {
    graph.points().iter().map(|p| sigma_value(sigma, &p.x)).collect()
}

/// Minimum relatedness slack of `candidate` against the graph, with the
/// index of the first minimizing graph pair.
fn relatedness(candidate: &PrimalDualPair, s_candidate: f64, graph: &FiniteGraph, sigmas: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (j, (q, &sq)) in graph.points().iter().zip(sigmas).enumerate() {
        let slack = sigma_slack(candidate, s_candidate, q, sq);
        if slack < best.0 {
            best = (slack, j);
        }
    }
    best
}

/// Checks sigma-monotonicity of a finite graph over all pairs `i < j`.
pub fn check_sigma_monotone(graph: &FiniteGraph, sigma: &SigmaSpec, tol: f64) -> Result<CheckReport> {
    let sigmas = graph_sigmas(graph, sigma)?;
    let pts = graph.points();
    let mut worst = (f64::INFINITY, 0, 0);
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let slack = sigma_slack(&pts[i], sigmas[i], &pts[j], sigmas[j]);
            if slack < worst.0 {
                worst = (slack, i, j);
            }
        }
    }
    let (margin, i, j) = worst;
    let report = if margin >= -tol {
        CheckReport::pass(margin)
    } else {
        CheckReport::fail(vec![pts[i].clone(), pts[j].clone()], margin)
    };
    Ok(report.with("pairs", pts.len() * pts.len().saturating_sub(1) / 2))
}

/// Tests whether `candidate` is sigma-monotonically related to every pair of
/// the graph, using `sigma_ext` both on the graph and at the candidate.
pub fn is_sigma_related(
    candidate: &PrimalDualPair,
    graph: &FiniteGraph,
    sigma_ext: &SigmaSpec,
    tol: f64,
) -> Result<CheckReport> {
    graph.check_dim(candidate.dim())?;
    let sigmas = graph_sigmas(graph, sigma_ext)?;
    let s_candidate = sigma_value(sigma_ext, &candidate.x)?;
    let (margin, j) = relatedness(candidate, s_candidate, graph, &sigmas);
    Ok(if margin >= -tol {
        CheckReport::pass(margin)
    } else {
        CheckReport::fail(vec![candidate.clone(), graph.points()[j].clone()], margin)
    })
}

/// Smallest constant `a >= 0` with `<x* - y*, x - y> >= -a ||x - y||` for all
/// `x* in T(x)` and all graph pairs `(y, y*)` with `y != x`.
pub fn estimate_sigma_t(x: &[f64], graph: &FiniteGraph) -> Result<f64> {
    graph.check_dim(x.len())?;
    let images = graph.images_at(x);
    if images.is_empty() {
        return Err(Error::NotInDomain(x.to_vec()));
    }
    let mut worst: f64 = 0.0;
    for x_star in &images {
        for q in graph.points() {
            if approx_eq(&q.x, x) {
                continue;
            }
            let ratio = -dot_diff(x_star, &q.x_star, x, &q.x) / dist(x, &q.x);
            worst = worst.max(ratio);
        }
    }
    Ok(worst)
}

/// Largest `sigma_T` estimate over the graph domain.
pub fn max_sigma_t(graph: &FiniteGraph) -> f64 {
    graph
        .domain()
        .into_iter()
        .map(|x| estimate_sigma_t(x, graph).expect("domain point"))
        .fold(0.0, f64::max)
}

/// Searches `candidates` for a pair outside the graph that is sigma-related
/// to all of it, which refutes maximal sigma-monotonicity.
///
/// `passed == true` only means no candidate refuted maximality. A candidate
/// whose `x` already lies in the domain uses `sigma(x)`, since an extension
/// must agree with sigma there; otherwise the supplied value is used.
///
/// The margin of a candidate is `-(slack + tol)`, so a refuting candidate has
/// margin `<= 0`. The report margin is the minimum over off-graph candidates
/// (`+inf` when there are none).
pub fn refute_maximality(
    graph: &FiniteGraph,
    sigma: &SigmaSpec,
    candidates: &[PrimalDualPair],
    sigma_candidate_values: &[f64],
    tol: f64,
) -> Result<CheckReport> {
    if candidates.len() != sigma_candidate_values.len() {
        return Err(Error::InvalidInput(format!(
            "{} candidates but {} sigma values",
            candidates.len(),
            sigma_candidate_values.len()
        )));
    }
    if let Some(v) = sigma_candidate_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidInput(format!("candidate sigma value {v} is not in R+")));
    }
    let monotone = check_sigma_monotone(graph, sigma, tol)?;
    if !monotone.passed {
        return Err(Error::NotSigmaMonotone {
            margin: monotone.margin.value(),
        });
    }
    let sigmas = graph_sigmas(graph, sigma)?;
    let mut margin = f64::INFINITY;
    let mut on_graph = 0usize;
    for (c, &given) in candidates.iter().zip(sigma_candidate_values) {
        graph.check_dim(c.dim())?;
        if graph.contains(c) {
            on_graph += 1;
            continue;
        }
        let s_c = if graph.in_domain(&c.x) {
            sigma_value(sigma, &c.x)?
        } else {
            given
        };
        let (slack, _) = relatedness(c, s_c, graph, &sigmas);
        let m = -(slack + tol);
        if m <= 0.0 {
            return Ok(CheckReport::fail(vec![c.clone()], m)
                .with("candidates", candidates.len())
                .with("candidates_on_graph", on_graph)
                .with("relatedness_slack", slack));
        }
        margin = margin.min(m);
    }
    Ok(CheckReport::pass(margin)
        .with("candidates", candidates.len())
        .with("candidates_on_graph", on_graph))
}
