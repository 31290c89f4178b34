//! JSON run reports, CSV grid export and the built-in example reproductions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fitzpatrick::{fitz_closed_form, fitz_sampled, FitzValue, WindowConfig};
use crate::hilbert::{MinorantResult, ResolventSolution};
use crate::operator::{BuiltinKind, OperatorSpec, PrimalDualPair};
use crate::report::{CheckReport, ExtReal};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerance of the closed-form vs sampled comparisons in [`reproduce_examples`].
pub const REPRODUCTION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResultItem {
    Check {
        label: String,
        report: CheckReport,
    },
    Fitz {
        label: String,
        point: PrimalDualPair,
        value: FitzValue,
    },
    Value {
        label: String,
        value: ExtReal,
    },
    Resolvent {
        label: String,
        z: Vec<f64>,
        solution: ResolventSolution,
    },
    Minorant {
        label: String,
        result: MinorantResult,
    },
}

impl ResultItem {
    /// The verdict carried by the item, if any.
    pub fn check(&self) -> Option<&CheckReport> {
        match self {
            ResultItem::Check { report, .. } => Some(report),
            ResultItem::Minorant { result, .. } => Some(&result.report),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: serde_json::Value,
    pub results: Vec<ResultItem>,
    pub timing_ms: u64,
    pub version: String,
}

impl RunReport {
    pub fn new(command: &str, inputs: serde_json::Value) -> Self {
        RunReport {
            command: command.to_string(),
            inputs,
            results: Vec::new(),
            timing_ms: 0,
            version: VERSION.to_string(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().filter_map(ResultItem::check).all(|r| r.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `steps` evenly spaced points from `lo` to `hi`; a single point when `lo == hi`.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if lo == hi || steps < 2 {
        return vec![lo];
    }
    let n = (steps - 1) as f64;
    (0..steps).map(|i| lo + (hi - lo) * (i as f64 / n)).collect()
}

/// Writes `x,xstar,F,status,witness_y,witness_ystar` rows for the grid
/// `x` (outer) by `x*` (inner). Divergent points have `F = inf`, status
/// `inf` and empty witness columns; finite points that did not stabilize
/// have status `unstable`.
pub fn export_grid<W: Write>(
    op: &OperatorSpec,
    x_range: (f64, f64),
    xstar_range: (f64, f64),
    x_steps: usize,
    xstar_steps: usize,
    cfg: &WindowConfig,
    out: W,
) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "xstar", "F", "status", "witness_y", "witness_ystar"])?;
    let mut rows = 0;
    for x in linspace(x_range.0, x_range.1, x_steps) {
        for xs in linspace(xstar_range.0, xstar_range.1, xstar_steps) {
            let p = PrimalDualPair::new(vec![x], vec![xs])?;
            let record = match fitz_sampled(op, &p, cfg)? {
                FitzValue::Finite {
                    value,
                    witness,
                    stabilized,
                } => [
                    x.to_string(),
                    xs.to_string(),
                    value.to_string(),
                    if stabilized { "finite" } else { "unstable" }.to_string(),
                    witness.x[0].to_string(),
                    witness.x_star[0].to_string(),
                ],
                FitzValue::DivergentEvidence { .. } => [
                    x.to_string(),
                    xs.to_string(),
                    "inf".into(),
                    "inf".into(),
                    String::new(),
                    String::new(),
                ],
            };
            w.write_record(&record)?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

fn closed_form_case(kind: BuiltinKind, x: f64, cfg: &WindowConfig) -> Result<ResultItem> {
    let p = PrimalDualPair::scalar(x, 0.0);
    let op = OperatorSpec::Builtin(kind);
    let exact = fitz_closed_form(&kind, &p)?.value();
    let sampled = fitz_sampled(&op, &p, cfg)?;
    let mut report = match &sampled {
        FitzValue::Finite {
            value,
            stabilized: true,
            ..
        } if (value - exact).abs() <= REPRODUCTION_TOL => CheckReport::pass(REPRODUCTION_TOL - (value - exact).abs()),
        FitzValue::Finite { value, .. } => CheckReport::fail(vec![p.clone()], REPRODUCTION_TOL - (value - exact).abs()),
        FitzValue::DivergentEvidence { .. } => CheckReport::fail(vec![p.clone()], f64::NEG_INFINITY),
    };
    report = report
        .with("x", x)
        .with("xstar", 0.0)
        .with("closed_form", exact)
        .with("sampled", sampled.as_ext())
        .with("error", (sampled.as_ext().value() - exact).abs());
    if kind == BuiltinKind::Triangular {
        // value of the inner-branch parabola, which equals F only on [-1, 1]
        report = report.with("parabola_branch", (x + 1.0) * (x + 1.0) / 4.0);
    }
    Ok(ResultItem::Check {
        label: format!("{} closed form x={x} x*=0", kind.label()),
        report,
    })
}

fn divergence_case(kind: BuiltinKind, x: f64, xs: f64, cfg: &WindowConfig) -> Result<ResultItem> {
    let p = PrimalDualPair::scalar(x, xs);
    let v = fitz_sampled(&OperatorSpec::Builtin(kind), &p, cfg)?;
    let report = match &v {
        FitzValue::DivergentEvidence { growth_trace } => {
            let last = growth_trace.last().expect("non-empty trace");
            CheckReport::pass(0.0).with("largest_window_sup", last.sup)
        }
        FitzValue::Finite { value, .. } => CheckReport::fail(vec![p.clone()], -1.0).with("sampled", *value),
    };
    Ok(ResultItem::Check {
        label: format!("{} divergence x={x} x*={xs}", kind.label()),
        report: report.with("x", x).with("xstar", xs),
    })
}

/// Closed form vs sampled for the triangular and normal operators at `x* = 0`,
/// and divergence evidence for `x* != 0` and for the unit-interval operator.
pub fn reproduce_examples() -> Result<RunReport> {
    let cfg = WindowConfig::default();
    let mut report = RunReport::new("reproduce examples", serde_json::json!({ "window": cfg }));
    for x in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
        report.results.push(closed_form_case(BuiltinKind::Triangular, x, &cfg)?);
    }
    for xs in [-1.0, 0.5, 1.0] {
        report
            .results
            .push(divergence_case(BuiltinKind::Triangular, 0.0, xs, &cfg)?);
    }
    for x in [-1.0, 0.0, 1.0, 2.0] {
        report.results.push(closed_form_case(BuiltinKind::Normal, x, &cfg)?);
    }
    for xs in [-1.0, 0.5, 1.0] {
        report
            .results
            .push(divergence_case(BuiltinKind::Normal, 0.0, xs, &cfg)?);
    }
    let probes = linspace(-2.0, 2.0, 5);
    for &x in &probes {
        for &xs in &probes {
            report
                .results
                .push(divergence_case(BuiltinKind::unit_interval(), x, xs, &cfg)?);
        }
    }
    Ok(report)
}
