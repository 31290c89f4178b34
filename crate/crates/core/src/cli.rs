//! The `fitz` command-line front end.
//!
//! Every subcommand except `grid` writes a [`RunReport`] as pretty JSON to
//! stdout or to `--out`. Exit codes: 0 when every check passed (or the
//! evaluation completed), 1 when a check failed, 2 on usage or input errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitzpatrick::{
    fitz_closed_form, fitz_sampled, m_set_value, membership_bound_check, verify_convexity,
    verify_extension_monotonicity, verify_fitz_inequality, verify_fitz_inf_identity, ConvexTriple, FitzSource,
    WindowConfig,
};
use crate::hilbert::{
    corollary_monotone_maximality_probe, quadratic_minorant_search, resolvent_solve, verify_resolvent_bound,
    MinorantConfig, ProbeConfig, SolverConfig,
};
use crate::operator::{BuiltinKind, FiniteGraph, OperatorSpec, PrimalDualPair};
use crate::reporting::{export_grid, reproduce_examples, ResultItem, RunReport};
use crate::sigma::SigmaSpec;
use crate::sigma_analysis::{
    check_sigma_monotone, estimate_sigma_t, is_sigma_related, max_sigma_t, refute_maximality, DEFAULT_TOL,
};

/// A comma-separated list of reals, e.g. `--x 1,-2.5`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Coords(pub Vec<f64>);

fn parse_coords(s: &str) -> std::result::Result<Coords, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", t.trim())))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Coords)
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "fitz", version, about = "Fitzpatrick functions of sigma-monotone operators")]
pub struct Cli {
    /// Write the report (or CSV for `grid`) here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
#[group(id = "operator", required = true, multiple = false)]
pub struct OpArgs {
    /// Operator JSON document.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Built-in operator: triangular, normal, unit-interval[:n], identity, affine:a,b.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Single-valued 1-D operator given as an expression in `x`.
    #[arg(long, allow_hyphen_values = true)]
    pub expr: Option<String>,
}

/// Discretization used when a continuous operator has to become a finite graph.
#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// Primal interval `lo,hi` sampled for continuous operators.
    #[arg(long, value_parser = parse_coords, default_value = "-10,10", allow_hyphen_values = true)]
    pub range: Coords,
    /// Primal step of that sampling.
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct WindowArgs {
    /// Increasing window radii, e.g. `1,2,4,8`.
    #[arg(long, value_parser = parse_coords)]
    pub window_radii: Option<Coords>,
    /// Samples per window.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Relative per-window growth that counts as divergence.
    #[arg(long)]
    pub growth_threshold: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PairArgs {
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    pub x: Coords,
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    pub xstar: Coords,
}

/// Test points: a JSON file, a single `--x/--xstar` pair, or `--random n`.
#[derive(Debug, Args, Serialize)]
pub struct PointsArgs {
    /// JSON array of `{ "x": [...], "x_star": [...] }`.
    #[arg(long, conflicts_with_all = ["x", "random"], required_unless_present_any = ["x", "random"])]
    pub points: Option<PathBuf>,
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true, requires = "xstar", conflicts_with = "random")]
    pub x: Option<Coords>,
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true, requires = "x")]
    pub xstar: Option<Coords>,
    /// Number of seeded random points in `[-box, box]^(2n)`.
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct RandomArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "box", default_value_t = 5.0)]
    pub half_width: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate F_T at one pair.
    Eval {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        window: WindowArgs,
        /// Use the closed form of a built-in operator.
        #[arg(long)]
        closed_form: bool,
    },
    /// Emit a CSV grid of F_T over x (outer) and x* (inner).
    Grid {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        window: WindowArgs,
        /// `lo,hi` for x.
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        x_range: Coords,
        /// `lo,hi` for x*, or a single value to fix x*.
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        xstar_range: Coords,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        /// Steps along x*; defaults to `--steps`.
        #[arg(long)]
        xstar_steps: Option<usize>,
    },
    #[command(subcommand)]
    Check(CheckCommand),
    /// Estimate sigma_T at `--x`, or its maximum over the domain.
    SigmaT {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        x: Option<Coords>,
    },
    /// Look for a candidate pair that refutes maximality.
    RefuteMax {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        /// JSON array of `{ "x": [...], "x_star": [...], "sigma": s }`.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Solve x + x* = z with x* in T(x), smallest x first.
    Resolvent {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
        z: Coords,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Search for a shift making F_T + q a quadratic minorant.
    Minorant {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        closed_form: bool,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        lower: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        upper: f64,
        #[arg(long, default_value_t = 33)]
        grid_points: usize,
        #[arg(long, default_value_t = 40)]
        refine_steps: usize,
        #[arg(long, default_value_t = 1000)]
        verify_samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    #[command(subcommand)]
    Reproduce(ReproduceCommand),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckCommand {
    /// Certify sigma-monotonicity of the graph.
    Sigma {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Test whether a pair is sigma-monotonically related to the graph.
    Related {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 64.0)]
    pub scan_range: f64,
    #[arg(long, default_value_t = (1 << 16) + 1)]
    pub scan_points: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCommand {
    /// F_T(x, x*) >= <x*, x> at the test points.
    Inequality {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        points: PointsArgs,
        #[command(flatten)]
        random: RandomArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        closed_form: bool,
        /// Sigma used to flag where equality is expected.
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<String>,
        /// Record that the operator is claimed to be maximal.
        #[arg(long)]
        maximal: bool,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// F_T <= F_S when the graph of S contains the graph of T.
    Extension {
        #[command(flatten)]
        op: OpArgs,
        /// Operator document of the extension S.
        #[arg(long)]
        extension: PathBuf,
        #[command(flatten)]
        points: PointsArgs,
        #[command(flatten)]
        random: RandomArgs,
    },
    /// Convexity of F_T along segments.
    Convexity {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        closed_form: bool,
        /// JSON array of `{ "p": pair, "q": pair, "lambda": l }`.
        #[arg(long, conflicts_with = "random")]
        triples: Option<PathBuf>,
        #[arg(long, required_unless_present = "triples")]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "box", default_value_t = 5.0)]
        half_width: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Sup form and inf form of F_T agree.
    InfIdentity {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Membership criterion via the spread bound.
    Membership {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Spread value of a graph pair.
    MSet {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Distance bounds between a related pair and the resolvent solution.
    ResolventBound {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Related candidates of a monotone operator lie on its graph.
    MonotoneProbe {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        points: PointsArgs,
        #[command(flatten)]
        random: RandomArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReproduceCommand {
    /// Closed-form and divergence reproductions for the built-in operators.
    Examples,
}

/// Entry of a candidates file.
#[derive(Debug, Clone, Deserialize)]
struct CandidateEntry {
    x: Vec<f64>,
    x_star: Vec<f64>,
    #[serde(default)]
    sigma: f64,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_operator(args: &OpArgs) -> Result<OperatorSpec> {
    if let Some(path) = &args.graph {
        OperatorSpec::from_json(&read_text(path)?)
    } else if let Some(name) = &args.builtin {
        Ok(OperatorSpec::Builtin(BuiltinKind::from_name(name)?))
    } else if let Some(src) = &args.expr {
        OperatorSpec::expression(src)
    } else {
        Err(Error::InvalidInput(
            "one of --graph, --builtin, --expr is required".into(),
        ))
    }
}

/// A constant, a path to a sigma document, or an expression in `x`.
fn load_sigma(text: &str) -> Result<SigmaSpec> {
    if let Ok(c) = text.trim().parse::<f64>() {
        return SigmaSpec::constant(c);
    }
    let path = Path::new(text);
    if path.is_file() {
        return SigmaSpec::from_json(&read_text(path)?);
    }
    SigmaSpec::expression(text)
}

fn finite_graph(op: &OperatorSpec, sample: &SampleArgs) -> Result<FiniteGraph> {
    if let Some(g) = op.as_finite_graph() {
        return Ok(g);
    }
    let [lo, hi] = range2(&sample.range, "--range")?;
    op.sample_graph(lo, hi, sample.step)
}

fn range2(c: &Coords, flag: &str) -> Result<[f64; 2]> {
    match c.0.as_slice() {
        &[lo, hi] if lo.is_finite() && hi.is_finite() && lo <= hi => Ok([lo, hi]),
        _ => Err(Error::InvalidInput(format!(
            "{flag} expects finite `lo,hi` with lo <= hi"
        ))),
    }
}

fn window_config(args: &WindowArgs) -> Result<WindowConfig> {
    let mut cfg = WindowConfig::default();
    if let Some(r) = &args.window_radii {
        cfg.radii = r.0.clone();
    }
    if let Some(s) = args.samples {
        cfg.samples_per_window = s;
    }
    if let Some(g) = args.growth_threshold {
        cfg.growth_threshold = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn solver_config(args: &SolverArgs) -> SolverConfig {
    SolverConfig {
        scan_range: args.scan_range,
        scan_points: args.scan_points,
        tol: args.tol,
        ..SolverConfig::default()
    }
}

fn probe_config(sample: &SampleArgs, solver: &SolverArgs) -> Result<ProbeConfig> {
    let [lo, hi] = range2(&sample.range, "--range")?;
    Ok(ProbeConfig {
        solver: solver_config(solver),
        graph_lo: lo,
        graph_hi: hi,
        graph_step: sample.step,
        tol: solver.tol,
        ..ProbeConfig::default()
    })
}

fn fitz_source(op: OperatorSpec, window: &WindowArgs, closed_form: bool) -> Result<FitzSource> {
    if closed_form {
        return match op {
            OperatorSpec::Builtin(kind) => FitzSource::closed_form(kind),
            _ => Err(Error::InvalidInput("--closed-form requires --builtin".into())),
        };
    }
    Ok(match op.as_finite_graph() {
        Some(g) => FitzSource::Exact(g),
        None => FitzSource::Sampled {
            op,
            cfg: window_config(window)?,
        },
    })
}

fn pair(args: &PairArgs) -> Result<PrimalDualPair> {
    PrimalDualPair::new(args.x.0.clone(), args.xstar.0.clone())
}

fn random_pairs(n: usize, dim: usize, args: &RandomArgs) -> Vec<PrimalDualPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let h = args.half_width;
    (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| rng.gen_range(-h..=h)).collect();
            let xs = (0..dim).map(|_| rng.gen_range(-h..=h)).collect();
            PrimalDualPair::new(x, xs).expect("finite coordinates")
        })
        .collect()
}

fn load_points(args: &PointsArgs, random: &RandomArgs, dim: usize) -> Result<Vec<PrimalDualPair>> {
    if let Some(path) = &args.points {
        Ok(serde_json::from_str(&read_text(path)?)?)
    } else if let (Some(x), Some(xs)) = (&args.x, &args.xstar) {
        Ok(vec![PrimalDualPair::new(x.0.clone(), xs.0.clone())?])
    } else if let Some(n) = args.random {
        Ok(random_pairs(n, dim, random))
    } else {
        Err(Error::InvalidInput(
            "one of --points, --x/--xstar, --random is required".into(),
        ))
    }
}

fn check_item(label: &str, report: crate::report::CheckReport) -> ResultItem {
    ResultItem::Check {
        label: label.to_string(),
        report,
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<Option<RunReport>> {
    let inputs = serde_json::to_value(&cli.command)?;
    let out = |name: &str| RunReport::new(name, inputs.clone());
    let report = match &cli.command {
        Command::Eval {
            op,
            pair: pa,
            window,
            closed_form,
        } => {
            let mut r = out("eval");
            let op = load_operator(op)?;
            let p = pair(pa)?;
            if *closed_form {
                let OperatorSpec::Builtin(kind) = op else {
                    return Err(Error::InvalidInput("--closed-form requires --builtin".into()));
                };
                let value = fitz_closed_form(&kind, &p)?;
                r.results.push(ResultItem::Value {
                    label: "closed_form".into(),
                    value,
                });
            } else {
                let value = match op.as_finite_graph() {
                    Some(g) => crate::fitzpatrick::fitz_exact_finite(&g, &p)?,
                    None => fitz_sampled(&op, &p, &window_config(window)?)?,
                };
                r.results.push(ResultItem::Fitz {
                    label: "fitzpatrick".into(),
                    point: p,
                    value,
                });
            }
            r
        }
        Command::Grid {
            op,
            window,
            x_range,
            xstar_range,
            steps,
            xstar_steps,
        } => {
            let op = load_operator(op)?;
            if op.dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: op.dim(),
                });
            }
            let xr = range2(x_range, "--x-range")?;
            let xsr = match xstar_range.0.as_slice() {
                &[v] if v.is_finite() => [v, v],
                _ => range2(xstar_range, "--xstar-range")?,
            };
            if *steps < 2 {
                return Err(Error::InvalidInput("--steps must be at least 2".into()));
            }
            let cfg = window_config(window)?;
            let xs_steps = xstar_steps.unwrap_or(*steps);
            let sink: Box<dyn Write + '_> = match &cli.out {
                Some(path) => {
                    Box::new(fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)
                }
                None => Box::new(stdout),
            };
            export_grid(&op, (xr[0], xr[1]), (xsr[0], xsr[1]), *steps, xs_steps, &cfg, sink)?;
            return Ok(None);
        }
        Command::Check(CheckCommand::Sigma { op, sample, sigma, tol }) => {
            let mut r = out("check sigma");
            let g = finite_graph(&load_operator(op)?, sample)?;
            let report = check_sigma_monotone(&g, &load_sigma(sigma)?, *tol)?;
            r.results.push(check_item("sigma_monotone", report));
            r
        }
        Command::Check(CheckCommand::Related {
            op,
            sample,
            sigma,
            pair: pa,
            tol,
        }) => {
            let mut r = out("check related");
            let g = finite_graph(&load_operator(op)?, sample)?;
            let report = is_sigma_related(&pair(pa)?, &g, &load_sigma(sigma)?, *tol)?;
            r.results.push(check_item("sigma_related", report));
            r
        }
        Command::SigmaT { op, sample, x } => {
            let mut r = out("sigma-t");
            let g = finite_graph(&load_operator(op)?, sample)?;
            let (label, v) = match x {
                Some(x) => ("sigma_t", estimate_sigma_t(&x.0, &g)?),
                None => ("max_sigma_t", max_sigma_t(&g)),
            };
            r.results.push(ResultItem::Value {
                label: label.into(),
                value: v.into(),
            });
            r
        }
        Command::RefuteMax {
            op,
            sample,
            sigma,
            candidates,
            tol,
        } => {
            let mut r = out("refute-max");
            let g = finite_graph(&load_operator(op)?, sample)?;
            let entries: Vec<CandidateEntry> = serde_json::from_str(&read_text(candidates)?)?;
            let mut pairs = Vec::with_capacity(entries.len());
            let mut sigmas = Vec::with_capacity(entries.len());
            for e in entries {
                pairs.push(PrimalDualPair::new(e.x, e.x_star)?);
                sigmas.push(e.sigma);
            }
            let report = refute_maximality(&g, &load_sigma(sigma)?, &pairs, &sigmas, *tol)?;
            r.results.push(check_item("maximality", report));
            r
        }
        Command::Verify(v) => verify(v, out("verify"))?,
        Command::Resolvent { op, z, solver } => {
            let mut r = out("resolvent");
            let op = load_operator(op)?;
            let solution = resolvent_solve(&op, &z.0, &solver_config(solver))?;
            r.results.push(ResultItem::Resolvent {
                label: "resolvent".into(),
                z: z.0.clone(),
                solution,
            });
            r
        }
        Command::Minorant {
            op,
            window,
            closed_form,
            lower,
            upper,
            grid_points,
            refine_steps,
            verify_samples,
            tol,
            seed,
        } => {
            let mut r = out("minorant");
            let source = fitz_source(load_operator(op)?, window, *closed_form)?;
            let cfg = MinorantConfig {
                lower: *lower,
                upper: *upper,
                grid_points: *grid_points,
                refine_steps: *refine_steps,
                verify_samples: *verify_samples,
                tol: *tol,
                seed: *seed,
            };
            let result = quadratic_minorant_search(&source, &cfg)?;
            r.results.push(ResultItem::Minorant {
                label: "minorant".into(),
                result,
            });
            r
        }
        Command::Reproduce(ReproduceCommand::Examples) => {
            let mut r = reproduce_examples()?;
            r.inputs = inputs.clone();
            r
        }
    };
    Ok(Some(report))
}

fn verify(cmd: &VerifyCommand, mut r: RunReport) -> Result<RunReport> {
    let (name, item) = match cmd {
        VerifyCommand::Inequality {
            op,
            points,
            random,
            window,
            closed_form,
            sigma,
            maximal,
            tol,
        } => {
            let source = fitz_source(load_operator(op)?, window, *closed_form)?;
            let pts = load_points(points, random, source.dim())?;
            let sigma = sigma.as_deref().map(load_sigma).transpose()?;
            let report = verify_fitz_inequality(&source, &pts, sigma.as_ref(), *maximal, *tol)?;
            ("verify inequality", check_item("fitz_inequality", report))
        }
        VerifyCommand::Extension {
            op,
            extension,
            points,
            random,
        } => {
            let t = load_operator(op)?
                .as_finite_graph()
                .ok_or_else(|| Error::InvalidInput("extension check needs finite graphs".into()))?;
            let s = OperatorSpec::from_json(&read_text(extension)?)?
                .as_finite_graph()
                .ok_or_else(|| Error::InvalidInput("extension check needs finite graphs".into()))?;
            let pts = load_points(points, random, t.dim())?;
            let report = verify_extension_monotonicity(&t, &s, &pts)?;
            ("verify extension", check_item("extension_monotone", report))
        }
        VerifyCommand::Convexity {
            op,
            window,
            closed_form,
            triples,
            random,
            seed,
            half_width,
            tol,
        } => {
            let source = fitz_source(load_operator(op)?, window, *closed_form)?;
            let triples: Vec<ConvexTriple> = match (triples, random) {
                (Some(path), _) => serde_json::from_str(&read_text(path)?)?,
                (None, Some(n)) => {
                    let rargs = RandomArgs {
                        seed: *seed,
                        half_width: *half_width,
                    };
                    let ends = random_pairs(2 * n, source.dim(), &rargs);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
                    ends.chunks(2)
                        .map(|c| ConvexTriple {
                            p: c[0].clone(),
                            q: c[1].clone(),
                            lambda: rng.gen_range(0.0..=1.0),
                        })
                        .collect()
                }
                (None, None) => return Err(Error::InvalidInput("--triples or --random is required".into())),
            };
            let report = verify_convexity(&source, &triples, *tol)?;
            ("verify convexity", check_item("convexity", report))
        }
        VerifyCommand::InfIdentity { op, sample, pair: pa } => {
            let g = finite_graph(&load_operator(op)?, sample)?;
            let report = verify_fitz_inf_identity(&g, &pair(pa)?)?;
            ("verify inf-identity", check_item("inf_identity", report))
        }
        VerifyCommand::Membership {
            op,
            sample,
            sigma,
            pair: pa,
            tol,
        } => {
            let g = finite_graph(&load_operator(op)?, sample)?;
            let report = membership_bound_check(&g, &load_sigma(sigma)?, &pair(pa)?, *tol)?;
            ("verify membership", check_item("membership_bound", report))
        }
        VerifyCommand::MSet {
            op,
            sample,
            sigma,
            pair: pa,
        } => {
            let g = finite_graph(&load_operator(op)?, sample)?;
            let v = m_set_value(&g, &load_sigma(sigma)?, &pair(pa)?)?;
            (
                "verify m-set",
                ResultItem::Value {
                    label: "m_set".into(),
                    value: v.into(),
                },
            )
        }
        VerifyCommand::ResolventBound {
            op,
            sample,
            sigma,
            pair: pa,
            solver,
        } => {
            let cfg = probe_config(sample, solver)?;
            let sigma = load_sigma(sigma)?;
            let p = pair(pa)?;
            let report = verify_resolvent_bound(&load_operator(op)?, &sigma, &p, &cfg)?;
            ("verify resolvent-bound", check_item("resolvent_bound", report))
        }
        VerifyCommand::MonotoneProbe {
            op,
            sample,
            points,
            random,
            solver,
        } => {
            let op = load_operator(op)?;
            let cfg = probe_config(sample, solver)?;
            let pts = load_points(points, random, op.dim())?;
            let report = corollary_monotone_maximality_probe(&op, &pts, &cfg)?;
            ("verify monotone-probe", check_item("related_on_graph", report))
        }
    };
    r.command = name.to_string();
    r.results.push(item);
    Ok(r)
}

fn emit(report: &RunReport, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = report.to_json();
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// [`run_command`] with explicit output streams.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    2
                }
            };
        }
    };
    let start = Instant::now();
    let outcome = execute(&cli, stdout).and_then(|report| match report {
        Some(mut r) => {
            r.timing_ms = start.elapsed().as_millis() as u64;
            emit(&r, cli.out.as_deref(), stdout)?;
            Ok(r.all_passed())
        }
        None => Ok(true),
    });
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
