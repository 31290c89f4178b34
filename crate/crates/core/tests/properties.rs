use fitz_core::fitzpatrick::EXTENSION_TOL;
use fitz_core::*;
use proptest::prelude::*;

fn pair1(x: f64, xs: f64) -> PrimalDualPair {
    PrimalDualPair::scalar(x, xs)
}

fn coord() -> impl Strategy<Value = f64> {
    -5.0..5.0f64
}

fn pair_n(n: usize) -> impl Strategy<Value = PrimalDualPair> {
    (prop::collection::vec(coord(), n), prop::collection::vec(coord(), n))
        .prop_map(|(x, xs)| PrimalDualPair::new(x, xs).unwrap())
}

/// Random graph of dimension 1 or 2 with 1..=12 points.
fn graph() -> impl Strategy<Value = FiniteGraph> {
    (1usize..=2)
        .prop_flat_map(|n| prop::collection::vec(pair_n(n), 1..=12).prop_map(|pts| FiniteGraph::new(pts).unwrap()))
}

/// Graph together with test points of matching dimension.
fn graph_and_points() -> impl Strategy<Value = (FiniteGraph, Vec<PrimalDualPair>)> {
    graph().prop_flat_map(|g| {
        let n = g.dim();
        (Just(g), prop::collection::vec(pair_n(n), 1..=6))
    })
}

/// Graph `T` and a graph `S` containing it.
fn nested_graphs() -> impl Strategy<Value = (FiniteGraph, FiniteGraph, Vec<PrimalDualPair>)> {
    graph().prop_flat_map(|g| {
        let n = g.dim();
        (
            Just(g),
            prop::collection::vec(pair_n(n), 0..=6),
            prop::collection::vec(pair_n(n), 1..=6),
        )
            .prop_map(|(t, extra, tests)| {
                let mut pts = t.points().to_vec();
                pts.extend(extra);
                (t, FiniteGraph::new(pts).unwrap(), tests)
            })
    })
}

fn brute_fitz(g: &FiniteGraph, p: &PrimalDualPair) -> f64 {
    g.points()
        .iter()
        .map(|q| affine_term(p, q))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn brute_sigma_t(x: &[f64], g: &FiniteGraph) -> f64 {
    let mut best: f64 = 0.0;
    for p in g.points().iter().filter(|p| p.x == x) {
        for q in g.points() {
            let d = dist(&p.x, &q.x);
            if d == 0.0 {
                continue;
            }
            let diff: Vec<f64> = p.x.iter().zip(&q.x).map(|(a, b)| a - b).collect();
            let ddiff: Vec<f64> = p.x_star.iter().zip(&q.x_star).map(|(a, b)| a - b).collect();
            best = best.max(-dot(&ddiff, &diff) / d);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pair_rejects_mismatch_and_non_finite(x in coord(), bad in prop::sample::select(vec![f64::NAN, f64::INFINITY, f64::NEG_INFINITY])) {
        prop_assert!(PrimalDualPair::new(vec![x], vec![x, x]).is_err());
        prop_assert!(PrimalDualPair::new(vec![bad], vec![x]).is_err());
        prop_assert!(PrimalDualPair::new(vec![x], vec![bad]).is_err());
    }

    #[test]
    fn expression_evaluation_is_deterministic(x in -10.0..10.0f64) {
        let src = "max(1-abs(x),0) + exp(-x^2)/2 - min(x, sqrt(abs(x)))";
        let a = parse_expression(src).unwrap();
        let b = parse_expression(src).unwrap();
        prop_assert_eq!(a.eval(x).unwrap().to_bits(), b.eval(x).unwrap().to_bits());
    }

    #[test]
    fn triangular_expression_matches_builtin(x in -10.0..10.0f64) {
        let e = OperatorSpec::expression("max(1-abs(x),0)").unwrap();
        let t = OperatorSpec::Builtin(BuiltinKind::Triangular);
        prop_assert_eq!(evaluate_operator(&e, &[x]).unwrap(), evaluate_operator(&t, &[x]).unwrap());
    }

    #[test]
    fn negative_sigma_is_rejected(c in -5.0..-1e-6f64, x in coord()) {
        prop_assert!(SigmaSpec::constant(c).is_err());
        let s = SigmaSpec::expression("x").unwrap();
        prop_assert!(sigma_value(&s, &[-(x.abs() + 1e-3)]).is_err());
    }

    #[test]
    fn check_report_witness_iff_failed(g in graph(), c in 0.0..2.0f64) {
        let r = check_sigma_monotone(&g, &SigmaSpec::constant(c).unwrap(), 1e-9).unwrap();
        prop_assert_eq!(r.passed, r.witness.is_none());
        if !r.passed {
            prop_assert!(r.margin.value() <= 0.0);
        }
    }

    #[test]
    fn sigma_check_passes_with_max_sigma_t(g in graph()) {
        let s = max_sigma_t(&g);
        let r = check_sigma_monotone(&g, &SigmaSpec::constant(s).unwrap(), 1e-9).unwrap();
        prop_assert!(r.passed, "sigma = {s}: {r:?}");
    }

    #[test]
    fn sigma_t_matches_brute_force_and_grows_under_extension((t, s, _) in nested_graphs()) {
        for x in t.domain() {
            let est = estimate_sigma_t(x, &t).unwrap();
            prop_assert!((est - brute_sigma_t(x, &t)).abs() <= 1e-12);
            prop_assert!(est <= estimate_sigma_t(x, &s).unwrap() + 1e-12);
        }
    }

    #[test]
    fn zero_sigma_check_is_classical_monotonicity(g in graph()) {
        let pts = g.points();
        let classical = (0..pts.len()).all(|i| (i + 1..pts.len()).all(|j| {
            let dx: Vec<f64> = pts[i].x.iter().zip(&pts[j].x).map(|(a, b)| a - b).collect();
            let dxs: Vec<f64> = pts[i].x_star.iter().zip(&pts[j].x_star).map(|(a, b)| a - b).collect();
            dot(&dxs, &dx) >= -1e-9
        }));
        prop_assert_eq!(check_sigma_monotone(&g, &SigmaSpec::constant(0.0).unwrap(), 1e-9).unwrap().passed, classical);
    }

    #[test]
    fn fitz_equal_pairing_forces_zero_sigma_t(g in graph()) {
        for x in g.domain() {
            let tight = g.images_at(x).iter().all(|xs| {
                let p = PrimalDualPair::new(x.to_vec(), xs.clone()).unwrap();
                (fitz_exact_finite(&g, &p).unwrap().finite_value().unwrap() - p.pairing()).abs() <= 1e-9
            });
            if tight {
                prop_assert!(estimate_sigma_t(x, &g).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn monotone_increasing_samples_are_tight(mut xs in prop::collection::vec(coord(), 2..10), slope in 0.0..3.0f64) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let g = FiniteGraph::from_scalar_pairs(&xs.iter().map(|&x| (x, slope * x + x.powi(3))).collect::<Vec<_>>()).unwrap();
        for p in g.points() {
            prop_assert!((fitz_exact_finite(&g, p).unwrap().finite_value().unwrap() - p.pairing()).abs() <= 1e-9);
            prop_assert!(estimate_sigma_t(&p.x, &g).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn exact_fitz_matches_brute_force_and_witness((g, pts) in graph_and_points()) {
        for p in &pts {
            let v = fitz_exact_finite(&g, p).unwrap();
            let FitzValue::Finite { value, witness, stabilized } = &v else { panic!("exact is finite") };
            prop_assert!(*stabilized);
            prop_assert_eq!(value.to_bits(), brute_fitz(&g, p).to_bits());
            prop_assert!((affine_term(p, witness) - value).abs() <= 1e-12);
            prop_assert!(g.contains(witness));
        }
    }

    #[test]
    fn sampled_equals_exact_on_finite_graphs((g, pts) in graph_and_points()) {
        let op = OperatorSpec::FiniteGraph(g.clone());
        let cfg = WindowConfig { radii: vec![8.0, 16.0, 32.0, 64.0], ..WindowConfig::default() };
        for p in &pts {
            let exact = fitz_exact_finite(&g, p).unwrap().finite_value().unwrap();
            let sampled = fitz_sampled(&op, p, &cfg).unwrap().finite_value().unwrap();
            prop_assert_eq!(exact.to_bits(), sampled.to_bits());
        }
    }

    #[test]
    fn graph_points_bound_pairing(g in graph()) {
        for p in g.points() {
            prop_assert!(fitz_exact_finite(&g, p).unwrap().finite_value().unwrap() >= p.pairing());
        }
    }

    #[test]
    fn inequality_holds_on_monotone_graph_points(mut xs in prop::collection::vec(coord(), 1..10)) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let g = FiniteGraph::from_scalar_pairs(&xs.iter().map(|&x| (x, x.exp() / 10.0)).collect::<Vec<_>>()).unwrap();
        let r = verify_fitz_inequality(&FitzSource::Exact(g.clone()), g.points(), None, false, 1e-9).unwrap();
        prop_assert!(r.passed);
    }

    #[test]
    fn inf_identity_holds((g, pts) in graph_and_points()) {
        for p in &pts {
            prop_assert!(verify_fitz_inf_identity(&g, p).unwrap().passed);
        }
    }

    #[test]
    fn extension_never_lowers_fitz((t, s, pts) in nested_graphs()) {
        let r = verify_extension_monotonicity(&t, &s, &pts).unwrap();
        prop_assert!(r.passed);
        prop_assert!(r.margin.value() >= -EXTENSION_TOL);
    }

    #[test]
    fn exact_fitz_is_convex((g, pts) in graph_and_points(), lambda in 0.0..=1.0f64) {
        let triples: Vec<ConvexTriple> = pts.windows(2).map(|w| ConvexTriple { p: w[0].clone(), q: w[1].clone(), lambda }).collect();
        prop_assert!(verify_convexity(&FitzSource::Exact(g), &triples, 1e-9).unwrap().passed);
    }

    #[test]
    fn membership_check_never_fails_on_sigma_monotone_graph(g in graph(), c in 0.0..2.0f64) {
        let sigma = SigmaSpec::constant(c.max(max_sigma_t(&g))).unwrap();
        for p in g.points() {
            let r = membership_bound_check(&g, &sigma, p, 1e-9).unwrap();
            prop_assert!(r.passed);
            prop_assert!(m_set_value(&g, &sigma, p).unwrap() >= 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn windowed_sups_are_non_decreasing(
        kind in prop::sample::select(vec![BuiltinKind::Triangular, BuiltinKind::Normal, BuiltinKind::Identity, BuiltinKind::unit_interval()]),
        x in -3.0..3.0f64,
        xs in -3.0..3.0f64,
    ) {
        let sups = windowed_sups(&OperatorSpec::Builtin(kind), &pair1(x, xs), &WindowConfig::default()).unwrap();
        prop_assert!(sups.windows(2).all(|w| w[0].sup <= w[1].sup));
    }

    #[test]
    fn divergence_evidence_shows_growth(
        kind in prop::sample::select(vec![BuiltinKind::Triangular, BuiltinKind::Normal, BuiltinKind::unit_interval()]),
        x in -3.0..3.0f64,
        xs in prop::sample::select(vec![-2.0, -0.5, 0.25, 1.5]),
    ) {
        let cfg = WindowConfig::default();
        let v = fitz_sampled(&OperatorSpec::Builtin(kind), &pair1(x, xs), &cfg).unwrap();
        let FitzValue::DivergentEvidence { growth_trace } = v else { panic!("expected divergence for {kind:?} at ({x}, {xs})") };
        let k = growth_trace.len();
        for i in k - 3..k {
            let inc = growth_trace[i].sup.value() - growth_trace[i - 1].sup.value();
            prop_assert!(inc > 0.0 && inc >= cfg.growth_threshold * growth_trace[i].radius);
        }
    }

    #[test]
    fn closed_form_matches_sampled(kind in prop::sample::select(vec![BuiltinKind::Triangular, BuiltinKind::Normal]), x in -3.0..3.0f64) {
        let p = pair1(x, 0.0);
        let closed = fitz_closed_form(&kind, &p).unwrap().value();
        let sampled = fitz_sampled(&OperatorSpec::Builtin(kind), &p, &WindowConfig::default()).unwrap();
        let FitzValue::Finite { value, witness, .. } = sampled else { panic!("finite expected") };
        prop_assert!((value - closed).abs() <= 1e-4, "{kind:?} x={x}: {value} vs {closed}");
        prop_assert!((affine_term(&p, &witness) - value).abs() <= 1e-12);
    }

    #[test]
    fn resolvent_round_trip_and_identity(
        kind in prop::sample::select(vec![BuiltinKind::Triangular, BuiltinKind::Normal, BuiltinKind::Identity, BuiltinKind::Affine { a: 2.0, b: -1.0 }]),
        y in -5.0..5.0f64,
    ) {
        let op = OperatorSpec::Builtin(kind);
        let ys = evaluate_operator(&op, &[y]).unwrap().values[0][0];
        let z = y + ys;
        let cfg = SolverConfig::default();
        let sol = resolvent_solve(&op, &[z], &cfg).unwrap();
        prop_assert!(sol.converged);
        prop_assert!(sol.residual <= cfg.tol);
        prop_assert!((sol.x[0] + sol.x_star[0] - z).abs() <= cfg.tol);
        prop_assert_eq!(&evaluate_operator(&op, &sol.x).unwrap().values[0], &sol.x_star);
        prop_assert!(((y - sol.x[0]) - (sol.x_star[0] - ys)).abs() <= 1e-12);
    }

    #[test]
    fn increasing_resolvent_is_unique(a in 0.1..3.0f64, b in -2.0..2.0f64, z in -20.0..20.0f64) {
        let op = OperatorSpec::Builtin(BuiltinKind::Affine { a, b });
        let cfg = SolverConfig::default();
        let fine = SolverConfig { scan_points: 2 * cfg.scan_points - 1, ..cfg.clone() };
        let s1 = resolvent_solve(&op, &[z], &cfg).unwrap();
        let s2 = resolvent_solve(&op, &[z], &fine).unwrap();
        prop_assert!((s1.x[0] - s2.x[0]).abs() <= cfg.tol);
        prop_assert!((s1.x[0] - (z - b) / (1.0 + a)).abs() <= cfg.tol);
    }

    #[test]
    fn minorant_margin_respects_tol(seed in any::<u64>()) {
        let cfg = MinorantConfig { seed, ..MinorantConfig::default() };
        let r = quadratic_minorant_search(&FitzSource::closed_form(BuiltinKind::Identity).unwrap(), &cfg).unwrap();
        prop_assert!(r.report.passed);
        prop_assert!(r.report.margin.value() >= -cfg.tol);
    }
}
