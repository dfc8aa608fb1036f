use hhinvex::bounds::{self, formulas, BoundParams, Segment, Theorem, VerifyOptions};
use hhinvex::expr::{BinOp, Expression, Func, Node};
use hhinvex::harness::{Campaign, CampaignConfig, DomainSpec, GridSpec, Tolerances};
use hhinvex::invex::{classify, pair_margin, ClassifyOptions, ConvexityClass, EtaMap, InvexDomain};
use hhinvex::multivar::{parse_function, EtaPath, PathAccumulator};
use hhinvex::quadrature::{integrate, QuadratureOptions};
use hhinvex::{DifferentiableFunction, RealFunction, ScalarFunction};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Node> {
    prop_oneof![
        (0u32..1000).prop_map(|k| Node::Const(k as f64 / 8.0)),
        (0usize..2).prop_map(Node::Var),
    ]
}

fn tree() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        let ops = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow)
        ];
        let unary = prop_oneof![
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Abs),
            Just(Func::Sqrt),
            Just(Func::Sign)
        ];
        let binary = prop_oneof![Just(Func::Min), Just(Func::Max)];
        prop_oneof![
            (ops, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Node::binary(op, a, b)),
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            (unary, inner.clone()).prop_map(|(f, a)| Node::Call(f, vec![a])),
            (binary, inner.clone(), inner).prop_map(|(f, a, b)| Node::Call(f, vec![a, b])),
        ]
    })
}

fn same_value(a: &Result<f64, hhinvex::expr::EvalError>, b: &Result<f64, hhinvex::expr::EvalError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// Smooth expressions of one variable built from exp, sin, cos and powers.
fn smooth() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        (1u32..5).prop_map(|k| format!("x^{k}")),
        Just("exp(x)".to_string()),
        Just("sin(x)".to_string()),
        Just("cos(x)".to_string()),
        (1u32..9).prop_map(|k| format!("{}", k as f64 / 4.0)),
    ];
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("exp(({a})/4)")),
            inner.prop_map(|a| format!("sin({a})")),
        ]
    })
}

fn exp_affine() -> impl Strategy<Value = (f64, f64)> {
    (prop_oneof![-2.0..-0.1f64, 0.1..2.0f64], -1.0..1.0f64)
}

fn exp_fn(alpha: f64, beta: f64) -> ScalarFunction {
    ScalarFunction::parse(&format!("exp(({alpha})*x + ({beta}))")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn render_then_parse_is_identity(node in tree()) {
        let e = Expression::from_node(node, &["x", "y"]).unwrap();
        let text = e.to_string();
        let back = Expression::parse(&text, &["x", "y"]).unwrap();
        prop_assert_eq!(back.root(), e.root(), "rendered as {}", text);
        for p in [[0.3, -1.7], [2.0, 0.5], [-0.25, 4.0]] {
            prop_assert!(same_value(&e.eval(&p), &back.eval(&p)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn derivative_matches_central_difference(src in smooth(), x in -1.5..1.5f64) {
        let f = ScalarFunction::parse(&src).unwrap();
        let h = 1e-5;
        let (fp, fm) = (f.value(x + h).unwrap(), f.value(x - h).unwrap());
        let fd = (fp - fm) / (2.0 * h);
        let d = f.derivative(x).unwrap();
        let scale = 1.0 + d.abs() + f.value(x).unwrap().abs();
        prop_assert!((d - fd).abs() <= 1e-5 * scale, "{src} at {x}: {d} vs {fd}");
    }

    #[test]
    fn quadrature_is_linear_and_additive(
        src in smooth(), a in -2.0..0.0f64, c in 0.1..2.0f64, s in 0.0..1.0f64,
        alpha in -3.0..3.0f64, beta in -3.0..3.0f64,
    ) {
        let f = ScalarFunction::parse(&src).unwrap();
        let g = |x: f64| Ok(x.cos() * (0.5 * x).exp());
        let tol = 1e-11;
        let fi = integrate(|x| f.value(x), a, c, tol).unwrap();
        let gi = integrate(g, a, c, tol).unwrap();
        let combo = integrate(|x| Ok(alpha * f.value(x)? + beta * g(x)?), a, c, tol).unwrap();
        let expect = alpha * fi.value + beta * gi.value;
        let budget = combo.error + alpha.abs() * fi.error + beta.abs() * gi.error
            + 1e-13 * (1.0 + combo.value.abs() + expect.abs());
        prop_assert!((combo.value - expect).abs() <= budget);

        let b = a + s * (c - a);
        prop_assume!(b > a && b < c);
        let left = integrate(|x| f.value(x), a, b, tol).unwrap();
        let right = integrate(|x| f.value(x), b, c, tol).unwrap();
        let budget = fi.error + left.error + right.error + 1e-13 * (1.0 + fi.value.abs());
        prop_assert!((left.value + right.value - fi.value).abs() <= budget);
    }

    #[test]
    fn class_margins_nest(fu in 1e-3..50.0f64, fv in 1e-3..50.0f64, fw in 1e-3..50.0f64, t in 0.0..=1.0f64) {
        let log = ConvexityClass::LogPreinvex.margin(fw, fu, fv, t);
        let pre = ConvexityClass::Preinvex.margin(fw, fu, fv, t);
        let quasi = ConvexityClass::Prequasiinvex.margin(fw, fu, fv, t);
        let slack = 1e-14;
        prop_assert!(pre <= log + slack);
        prop_assert!(quasi <= pre + slack);
    }

    #[test]
    fn relaxation_order(len in 1e-3..10.0f64, a in 0.0..20.0f64, b in 0.0..20.0f64, p in 1.01..20.0f64, q in 1.0..20.0f64) {
        let (t32, t33) = (formulas::t32(len, a, b, p), formulas::t33(len, a, b, p));
        let (t34, t35) = (formulas::t34(len, a, b, q), formulas::t35(len, a, b, q));
        prop_assert!(t32 <= t33 * (1.0 + 1e-12));
        prop_assert!(t34 <= t35 * (1.0 + 1e-12));
        prop_assert!(formulas::t31(len, a, b) <= t34 * (1.0 + 1e-12));
    }

    #[test]
    fn unit_exponent_reductions(len in 1e-3..10.0f64, a in 0.0..20.0f64, b in 0.0..20.0f64) {
        let t31 = formulas::t31(len, a, b);
        prop_assert!((formulas::t34(len, a, b, 1.0) - t31).abs() <= 1e-12 * t31);
        prop_assert!((formulas::t35(len, a, b, 1.0) - t31).abs() <= 1e-12 * t31);
        prop_assert!((formulas::t12(len, a, b) - t31).abs() <= 1e-12 * t31);
    }

    #[test]
    fn canonical_eta_matches_classical(
        (alpha, beta) in exp_affine(), a in -1.0..0.9f64, w in 0.05..1.0f64, p in 1.1..8.0f64,
    ) {
        let f = exp_fn(alpha, beta);
        let eta = EtaMap::canonical(1);
        let b = a + w;
        let opts = VerifyOptions::default();
        let pairs = [
            (Theorem::Tz, Theorem::Cq, BoundParams::none()),
            (Theorem::Tfd, Theorem::Cq1, BoundParams::p(p)),
            (Theorem::T31, Theorem::T12, BoundParams::none()),
        ];
        for (general, classical, params) in pairs {
            let g = bounds::verify(general, &f, &eta, a, b, &params, &opts).unwrap();
            let c = bounds::verify(classical, &f, &eta, a, b, &params, &opts).unwrap();
            prop_assert!((g.rhs - c.rhs).abs() <= 1e-12 * c.rhs);
            prop_assert!((g.lhs - c.lhs).abs() <= 1e-12 * c.lhs.abs().max(1e-300) + g.error_budget);
        }
    }

    #[test]
    fn margins_scale_with_stretch((alpha, beta) in exp_affine(), a in -1.0..0.5f64, w in 0.1..1.0f64, c in 0.2..5.0f64) {
        // f_c(x) = c f(a + (x − a)/c) on [a, a + c w]
        let f = exp_fn(alpha, beta);
        let fc = ScalarFunction::parse(&format!(
            "({c})*exp(({alpha})*(({a}) + (x - ({a}))/({c})) + ({beta}))"
        )).unwrap();
        let eta = EtaMap::canonical(1);
        let opts = VerifyOptions::default();
        for t in [Theorem::T31, Theorem::T34, Theorem::Tz] {
            let params = BoundParams::q(2.0);
            let base = bounds::verify(t, &f, &eta, a, a + w, &params, &opts).unwrap();
            let stretched = bounds::verify(t, &fc, &eta, a, a + c * w, &params, &opts).unwrap();
            let budget = c * base.error_budget + stretched.error_budget + 1e-12 * (c * base.rhs);
            prop_assert!((stretched.rhs - c * base.rhs).abs() <= 1e-12 * c * base.rhs);
            prop_assert!((stretched.margin - c * base.margin).abs() <= budget);
        }
    }

    #[test]
    fn log_mean_is_continuous_across_the_switch(a in 1e-3..1e3f64, k in -11.0..-6.0f64) {
        let d = 10f64.powf(k);
        let near = formulas::tz(1.0, a, a * (1.0 + d));
        let limit = a / 4.0;
        prop_assert!(near.is_finite());
        prop_assert!((near - limit).abs() <= limit * d);
        let r = formulas::log_mean_ratio(a, a * (1.0 + d), 2.0);
        prop_assert!(r.is_finite() && (r - a).abs() <= 2.0 * a * d);
    }

    #[test]
    fn accumulator_is_additive(
        c1 in -1.0..1.0f64, c2 in -1.0..1.0f64, t1 in 0.0..1.0f64, t2 in 0.0..1.0f64,
    ) {
        let path = EtaPath::new(
            parse_function("exp(z1*z2) + z1^2", 2).unwrap(),
            EtaMap::canonical(2),
            vec![c1, c2],
            vec![c2, 1.0],
        ).unwrap();
        let acc = PathAccumulator::new(&path, &QuadratureOptions::default()).unwrap();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let (p_lo, e_lo) = acc.evaluate(lo).unwrap();
        let (p_hi, e_hi) = acc.evaluate(hi).unwrap();
        let direct = integrate(|t| path.phi(t), lo, hi, 1e-12).unwrap();
        prop_assert!((p_hi - p_lo - direct.value).abs() <= e_lo + e_hi + direct.error + 1e-13);
        prop_assert_eq!(acc.derivative(lo).unwrap(), path.phi(lo).unwrap());
    }

    #[test]
    fn path_margins_agree_under_condition_c(
        x in prop::collection::vec(-1.0..1.0f64, 2), y in prop::collection::vec(-1.0..1.0f64, 2),
        t1 in 0.0..1.0f64, t2 in 0.0..1.0f64, lambda in 0.0..=1.0f64,
    ) {
        let path = EtaPath::new(
            parse_function("exp(z1^2 + z1*z2 + z2^2)", 2).unwrap(),
            EtaMap::canonical(2),
            x,
            y,
        ).unwrap();
        let pre = path.logpreinvex_margin(t1, t2, lambda).unwrap();
        let convex = path.logconvex_margin(t1, t2, lambda).unwrap();
        prop_assert!((pre - convex).abs() <= 1e-12);
        if pre.abs() > 1e-12 {
            prop_assert_eq!(pre > 0.0, convex > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn log_preinvex_certificates_nest((alpha, beta) in exp_affine(), curve in 0.0..0.5f64) {
        let f = ScalarFunction::parse(&format!("exp(({alpha})*x + ({beta}) + ({curve})*x^2)")).unwrap();
        let domain = InvexDomain::interval(-1.0, 1.0, EtaMap::canonical(1)).unwrap();
        let opts = ClassifyOptions { points: 24, t_points: 9, ..ClassifyOptions::default() };
        let log = classify(&f, &domain, ConvexityClass::LogPreinvex, &opts).unwrap();
        let pre = classify(&f, &domain, ConvexityClass::Preinvex, &opts).unwrap();
        let quasi = classify(&f, &domain, ConvexityClass::Prequasiinvex, &opts).unwrap();
        prop_assert!(log.certified());
        prop_assert!(pre.certified() && quasi.certified());
        prop_assert!(pre.worst_margin <= log.worst_margin + 1e-14);
    }

    #[test]
    fn preinvexity_agrees_with_midpoint_convexity(
        c in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        // cubics: convex on [-1, 1] iff f'' = 2c2 + 6c3 x ≥ 0 at both ends
        let src = format!("({}) + ({})*x + ({})*x^2 + ({})*x^3", c[0], c[1], c[2], c[3]);
        let f = ScalarFunction::parse(&src).unwrap();
        let convex = 2.0 * c[2] - 6.0 * c[3].abs() >= 0.0;
        let margin = 2.0 * c[2] - 6.0 * c[3].abs();
        prop_assume!(margin.abs() > 0.05);
        let domain = InvexDomain::interval(-1.0, 1.0, EtaMap::canonical(1)).unwrap();
        let opts = ClassifyOptions { points: 33, t_points: 17, ..ClassifyOptions::default() };
        let cert = classify(&f, &domain, ConvexityClass::Preinvex, &opts).unwrap();
        let xs: Vec<f64> = (0..65).map(|k| -1.0 + k as f64 / 32.0).collect();
        let mut midpoint_convex = true;
        for &u in &xs {
            for &v in &xs {
                let m = f.value(0.5 * (u + v)).unwrap() - 0.5 * (f.value(u).unwrap() + f.value(v).unwrap());
                midpoint_convex &= m <= 1e-12;
            }
        }
        prop_assert_eq!(cert.certified(), convex);
        prop_assert_eq!(midpoint_convex, convex);
    }

    #[test]
    fn certified_log_instances_satisfy_tz((alpha, beta) in exp_affine(), a in -1.0..0.9f64, w in 0.01..1.0f64) {
        let f = exp_fn(alpha, beta);
        let e = bounds::verify(Theorem::Tz, &f, &EtaMap::canonical(1), a, a + w, &BoundParams::none(), &VerifyOptions::default()).unwrap();
        prop_assert!(e.margin >= -e.error_budget);
        let kernel = e.kernel.unwrap();
        prop_assert!(e.lhs <= kernel + e.error_budget);
        prop_assert!((e.rhs - kernel).abs() <= 1e-9 * kernel);
    }

    #[test]
    fn kernel_sits_between_gap_and_every_bound(
        (alpha, beta) in exp_affine(), curve in 0.0..1.0f64, a in -1.0..0.9f64, w in 0.01..1.0f64,
        p in prop::sample::select(vec![1.1, 1.5, 2.0, 3.0, 5.0, 10.0]),
        q in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, 5.0, 10.0]),
    ) {
        // |f'| is convex unless f' changes sign, so some draws are filtered out
        let src = format!("exp(({alpha})*x + ({beta})) + ({curve})*x^2");
        let f = ScalarFunction::parse(&src).unwrap();
        let eta = EtaMap::canonical(1);
        let domain = InvexDomain::interval(-1.0, 1.0, eta.clone()).unwrap();
        let g = hhinvex::DerivativeMagnitude::new(&f, 1.0);
        let cert = classify(&g, &domain, ConvexityClass::Preinvex, &ClassifyOptions::default()).unwrap();
        let (along, _) = pair_margin(&g, &eta, a, a + w, ConvexityClass::Preinvex, 257).unwrap();
        prop_assume!(cert.certified() && along <= 1e-9);
        let v = VerifyOptions::default();
        for (t, params) in [
            (Theorem::T31, BoundParams::none()),
            (Theorem::T32, BoundParams::p(p)),
            (Theorem::T33, BoundParams::p(p)),
            (Theorem::T34, BoundParams::q(q)),
            (Theorem::T35, BoundParams::q(q)),
        ] {
            let e = bounds::verify(t, &f, &eta, a, a + w, &params, &v).unwrap();
            let kernel = e.kernel.unwrap();
            prop_assert!(e.lhs <= kernel + e.error_budget);
            prop_assert!(kernel <= e.rhs + e.error_budget + 1e-12 * e.rhs, "{t}: kernel {kernel} rhs {}", e.rhs);
        }
    }

    #[test]
    fn identity_residual_is_small(src in smooth(), a in -1.0..1.0f64, w in 0.01..1.5f64, s in 0.2..2.0f64) {
        let f = ScalarFunction::parse(&src).unwrap();
        let seg = Segment::with_length(a, a + w, s * w).unwrap();
        let r = bounds::hh_identity_residual(&f, &seg, &QuadratureOptions::default()).unwrap();
        prop_assert!(r.residual <= r.budget + 1e-12 * (1.0 + r.left.abs()));
    }
}

fn small_config(seed: u64) -> CampaignConfig {
    CampaignConfig {
        families: vec!["poly-convex".into(), "exp-convex".into(), "abs-kink".into()],
        theorems: vec!["T2.1".into(), "T3.2".into(), "T3.5".into(), "Tz".into()],
        trials: 24,
        seed,
        p_values: vec![1.5, 3.0],
        q_values: vec![1.0, 2.0],
        domain: DomainSpec { lo: -1.0, hi: 2.0 },
        eta: "v - u".into(),
        tolerances: Tolerances::default(),
        grid: GridSpec::default(),
        interval: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn campaigns_ignore_the_thread_schedule(seed in any::<u64>()) {
        let campaign = Campaign::new(small_config(seed)).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| campaign.run());
        let b = four.install(|| campaign.run());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.reports[7].clone(), campaign.run_trial(7));
    }
}
