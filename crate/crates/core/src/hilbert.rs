//! Resolvents `(I + T)^{-1}` on `R^n` and the checks that use them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitzpatrick::FitzSource;
use crate::linalg::{dist, norm_sq};
use crate::operator::{FiniteGraph, OperatorSpec, PrimalDualPair};
use crate::report::CheckReport;
use crate::sigma::{sigma_value, SigmaSpec};
use crate::sigma_analysis::{check_sigma_monotone, is_sigma_related, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scan_range: f64,
    pub scan_points: usize,
    pub tol: f64,
    pub max_refine_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scan_range: 64.0,
            scan_points: (1 << 16) + 1,
            tol: 1e-8,
            max_refine_iters: 200,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.scan_points < 3
            || self.tol.is_nan()
            || self.tol <= 0.0
            || !self.scan_range.is_finite()
            || self.scan_range <= 0.0
        {
            return Err(Error::InvalidInput(
                "solver needs scan_points >= 3, tol > 0 and a positive finite scan_range".into(),
            ));
        }
        Ok(())
    }
}

/// A point `(x, x*)` of the graph with `x + x*` close to the target `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSolution {
    pub x: Vec<f64>,
    pub x_star: Vec<f64>,
    /// `||x + x* - z||`
    pub residual: f64,
    /// `residual <= tol`
    pub converged: bool,
}

impl ResolventSolution {
    pub fn pair(&self) -> PrimalDualPair {
        PrimalDualPair {
            x: self.x.clone(),
            x_star: self.x_star.clone(),
        }
    }
}

/// Solves `z in x + T(x)`.
///
/// Finite and tabulated operators return the graph pair minimizing
/// `||x + x* - z||` (first index on ties); `converged` tells whether it is
/// within `tol`. Continuous operators are scanned on a uniform grid over
/// `[-scan_range, scan_range]` for every image branch, each sign change of
/// `g(x) = x + T(x) - z` is bisected, and the smallest root with
/// `|g| <= tol` is returned.
pub fn resolvent_solve(op: &OperatorSpec, z: &[f64], cfg: &SolverConfig) -> Result<ResolventSolution> {
    cfg.validate()?;
    if let Some(graph) = op.as_finite_graph() {
        return solve_on_graph(&graph, z, cfg.tol);
    }
    if z.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: z.len(),
        });
    }
    let z = z[0];
    let mut best: Option<(f64, f64)> = None;
    let mut closest = (f64::INFINITY, 0.0);
    for branch in 0..op.branch_count() {
        let g = |x: f64| -> Result<(f64, f64)> {
            let v = op.continuous_image(x, branch)?;
            Ok((x + v - z, v))
        };
        if let Some(root) = first_root(&g, cfg, &mut closest)? {
            if best.is_none_or(|(x, _)| root.0 < x) {
                best = Some(root);
            }
        }
    }
    match best {
        Some((x, v)) => {
            let residual = (x + v - z).abs();
            Ok(ResolventSolution {
                x: vec![x],
                x_star: vec![v],
                residual,
                converged: true,
            })
        }
        None => Err(Error::NoSolutionInRange {
            best_residual: closest.0,
            at: closest.1,
        }),
    }
}

fn solve_on_graph(graph: &FiniteGraph, z: &[f64], tol: f64) -> Result<ResolventSolution> {
    graph.check_dim(z.len())?;
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in graph.points().iter().enumerate() {
        let r =
            p.x.iter()
                .zip(&p.x_star)
                .zip(z)
                .map(|((a, b), c)| (a + b - c) * (a + b - c))
                .sum::<f64>()
                .sqrt();
        if best.is_none_or(|(b, _)| r < b) {
            best = Some((r, i));
        }
    }
    let (residual, i) = best.ok_or(Error::EmptyGraph)?;
    let p = &graph.points()[i];
    Ok(ResolventSolution {
        x: p.x.clone(),
        x_star: p.x_star.clone(),
        residual,
        converged: residual <= tol,
    })
}

/// Smallest accepted root of one branch, as `(x, T(x))`.
fn first_root(
    g: &dyn Fn(f64) -> Result<(f64, f64)>,
    cfg: &SolverConfig,
    closest: &mut (f64, f64),
) -> Result<Option<(f64, f64)>> {
    let n = cfg.scan_points - 1;
    let r = cfg.scan_range;
    let at = |i: usize| -r + 2.0 * r * (i as f64 / n as f64);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let x = at(i);
        let (gx, v) = g(x)?;
        if gx.abs() < closest.0 {
            *closest = (gx.abs(), x);
        }
        if let Some((px, pg)) = prev {
            if (pg < 0.0 && gx > 0.0) || (pg > 0.0 && gx < 0.0) {
                let (root, rv, res) = bisect(g, px, pg, x, cfg.max_refine_iters)?;
                if res <= cfg.tol {
                    return Ok(Some((root, rv)));
                }
            }
        }
        // exact zeros and touching minima count as roots
        if gx.abs() <= cfg.tol {
            return Ok(Some((x, v)));
        }
        prev = Some((x, gx));
    }
    Ok(None)
}

fn bisect(
    g: &dyn Fn(f64) -> Result<(f64, f64)>,
    mut lo: f64,
    mut g_lo: f64,
    mut hi: f64,
    iters: usize,
) -> Result<(f64, f64, f64)> {
    let mut g_hi = g(hi)?.0;
    for _ in 0..iters {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        let (gm, vm) = g(mid)?;
        if gm == 0.0 {
            return Ok((mid, vm, 0.0));
        }
        if (gm < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    let x = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
    let (gx, v) = g(x)?;
    Ok((x, v, gx.abs()))
}

/// Sampling used to stand in for `gr T` in relatedness tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub solver: SolverConfig,
    pub graph_lo: f64,
    pub graph_hi: f64,
    pub graph_step: f64,
    /// Tolerance of the relatedness precondition.
    pub related_tol: f64,
    /// Tolerance of the distance checks on the resolvent solution.
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            solver: SolverConfig::default(),
            graph_lo: -10.0,
            graph_hi: 10.0,
            graph_step: 0.01,
            related_tol: DEFAULT_TOL,
            tol: 1e-8,
        }
    }
}

impl ProbeConfig {
    fn graph(&self, op: &OperatorSpec) -> Result<FiniteGraph> {
        op.sample_graph(self.graph_lo, self.graph_hi, self.graph_step)
    }
}

/// Checks the nearness bound for a pair `(y, y*)` sigma-related to the graph:
/// the resolvent point `(x, x*)` at `z = y + y*` satisfies
/// `||x* - y*|| = ||x - y|| <= sigma(x)`, and `(x, x*) = (y, y*)` when
/// `sigma(x) = 0`.
///
/// If `related` fails the relatedness precondition the check is skipped and
/// reported as passed with `precondition_related = false`.
pub fn verify_resolvent_bound(
    op: &OperatorSpec,
    sigma: &SigmaSpec,
    related: &PrimalDualPair,
    cfg: &ProbeConfig,
) -> Result<CheckReport> {
    let graph = cfg.graph(op)?;
    let pre = is_sigma_related(related, &graph, sigma, cfg.related_tol)?;
    if !pre.passed {
        return Ok(CheckReport::pass(f64::INFINITY)
            .with("precondition_related", false)
            .with("skipped", true));
    }
    let z: Vec<f64> = related.x.iter().zip(&related.x_star).map(|(a, b)| a + b).collect();
    let sol = resolvent_solve(op, &z, &cfg.solver)?;
    if !sol.converged {
        return Err(Error::NoSolutionInRange {
            best_residual: sol.residual,
            at: sol.x[0],
        });
    }
    let d_primal = dist(&sol.x, &related.x);
    let d_dual = dist(&sol.x_star, &related.x_star);
    let s = sigma_value(sigma, &sol.x)?;
    let mut margin = (cfg.tol - (d_dual - d_primal).abs()).min(s + cfg.tol - d_primal);
    let sigma_zero = s <= cfg.tol;
    if sigma_zero {
        margin = margin.min(cfg.tol - d_primal).min(cfg.tol - d_dual);
    }
    // y - x = x* - y* up to the solver residual
    let identity_gap = related
        .x
        .iter()
        .zip(&sol.x)
        .zip(sol.x_star.iter().zip(&related.x_star))
        .map(|((y, x), (xs, ys))| ((y - x) - (xs - ys)).powi(2))
        .sum::<f64>()
        .sqrt();
    let report = if margin >= 0.0 {
        CheckReport::pass(margin)
    } else {
        CheckReport::fail(vec![related.clone(), sol.pair()], margin)
    };
    Ok(report
        .with("precondition_related", true)
        .with("skipped", false)
        .with("solution_x", sol.x[0])
        .with("solution_x_star", sol.x_star[0])
        .with("residual", sol.residual)
        .with("primal_distance", d_primal)
        .with("dual_distance", d_dual)
        .with("sigma_at_solution", s)
        .with("sigma_zero_branch", sigma_zero)
        .with("identity_gap", identity_gap))
}

/// For a monotone operator, every candidate monotonically related to the
/// sampled graph should have its resolvent point at `z = y + y*` equal to
/// itself. Unrelated candidates are skipped and counted.
pub fn corollary_monotone_maximality_probe(
    op: &OperatorSpec,
    candidates: &[PrimalDualPair],
    cfg: &ProbeConfig,
) -> Result<CheckReport> {
    let graph = cfg.graph(op)?;
    let zero = SigmaSpec::Constant(0.0);
    let mono = check_sigma_monotone(&graph, &zero, cfg.related_tol)?;
    if !mono.passed {
        return Err(Error::NotSigmaMonotone {
            margin: mono.margin.value(),
        });
    }
    let mut skipped = 0usize;
    let mut worst: Option<(f64, Vec<PrimalDualPair>)> = None;
    for c in candidates {
        if !is_sigma_related(c, &graph, &zero, cfg.related_tol)?.passed {
            skipped += 1;
            continue;
        }
        let z: Vec<f64> = c.x.iter().zip(&c.x_star).map(|(a, b)| a + b).collect();
        let sol = resolvent_solve(op, &z, &cfg.solver)?;
        let slack = cfg.tol - dist(&sol.x, &c.x).max(dist(&sol.x_star, &c.x_star));
        if worst.as_ref().is_none_or(|(w, _)| slack < *w) {
            worst = Some((slack, vec![c.clone(), sol.pair()]));
        }
    }
    let related = candidates.len() - skipped;
    let report = match worst {
        Some((slack, w)) if slack < 0.0 => CheckReport::fail(w, slack),
        Some((slack, _)) => CheckReport::pass(slack),
        None => CheckReport::pass(f64::INFINITY),
    };
    Ok(report.with("related", related).with("skipped", skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantConfig {
    /// Search box `[lower, upper]^2` in `(x, x*)`.
    pub lower: f64,
    pub upper: f64,
    pub grid_points: usize,
    pub refine_steps: usize,
    pub verify_samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for MinorantConfig {
    fn default() -> Self {
        MinorantConfig {
            lower: -4.0,
            upper: 4.0,
            grid_points: 33,
            refine_steps: 40,
            verify_samples: 1000,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantResult {
    /// `v` in `F(p) + ||p||^2 / 2 >= ||p + v||^2 / 2`.
    pub shift: PrimalDualPair,
    /// Minimizer of `F(p) + ||p||^2 / 2` found by the search.
    pub argmin: PrimalDualPair,
    pub min_value: f64,
    pub report: CheckReport,
}

/// Minimizes `G(p) = F(p) + ||p||^2 / 2` over a grid with halving pattern
/// refinement, sets the shift to `-argmin`, and checks
/// `G(p) >= ||p + shift||^2 / 2 - tol` at `verify_samples` random points of the
/// box (points where `F = +inf` hold trivially and are counted as `infinite`).
pub fn quadratic_minorant_search(source: &FitzSource, cfg: &MinorantConfig) -> Result<MinorantResult> {
    if source.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: source.dim(),
        });
    }
    if cfg.grid_points < 2 || cfg.lower.partial_cmp(&cfg.upper) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidInput(
            "minorant search needs grid_points >= 2 and lower < upper".into(),
        ));
    }
    let g = |x: f64, xs: f64| -> Result<f64> {
        let p = PrimalDualPair::new(vec![x], vec![xs])?;
        let f = source.value(&p)?.value();
        Ok(f + 0.5 * (x * x + xs * xs))
    };
    let n = cfg.grid_points - 1;
    let at = |i: usize| cfg.lower + (cfg.upper - cfg.lower) * (i as f64 / n as f64);
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..=n {
        for j in 0..=n {
            let (x, xs) = (at(i), at(j));
            let v = g(x, xs)?;
            if v.is_finite() && best.is_none_or(|(b, _, _)| v < b) {
                best = Some((v, x, xs));
            }
        }
    }
    let (mut val, mut bx, mut bxs) = best.ok_or(Error::NowhereFinite)?;
    let mut step = (cfg.upper - cfg.lower) / n as f64;
    for _ in 0..cfg.refine_steps {
        step /= 2.0;
        let (cx, cxs) = (bx, bxs);
        for di in -2i32..=2 {
            for dj in -2i32..=2 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (x, xs) = (cx + f64::from(di) * step, cxs + f64::from(dj) * step);
                let v = g(x, xs)?;
                if v.is_finite() && v < val {
                    (val, bx, bxs) = (v, x, xs);
                }
            }
        }
    }
    let shift = PrimalDualPair::new(vec![-bx + 0.0], vec![-bxs + 0.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: Option<(f64, PrimalDualPair)> = None;
    let mut infinite = 0usize;
    for _ in 0..cfg.verify_samples {
        let x = rng.gen_range(cfg.lower..=cfg.upper);
        let xs = rng.gen_range(cfg.lower..=cfg.upper);
        let v = g(x, xs)?;
        if !v.is_finite() {
            infinite += 1;
            continue;
        }
        let rhs = 0.5 * norm_sq(&[x + shift.x[0], xs + shift.x_star[0]]);
        let margin = v - rhs;
        if worst.as_ref().is_none_or(|(w, _)| margin < *w) {
            worst = Some((margin, PrimalDualPair::scalar(x, xs)));
        }
    }
    let report = match worst {
        Some((m, p)) if m < -cfg.tol => CheckReport::fail(vec![p], m),
        Some((m, _)) => CheckReport::pass(m),
        None => CheckReport::pass(f64::INFINITY),
    }
    .with("samples", cfg.verify_samples)
    .with("infinite", infinite)
    .with("min_value", val);
    Ok(MinorantResult {
        shift,
        argmin: PrimalDualPair::scalar(bx, bxs),
        min_value: val,
        report,
    })
}
