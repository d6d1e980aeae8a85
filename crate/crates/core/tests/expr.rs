use pss_core::expr::{is_zero, parse, EquationContext, Expr, Jet, Point, Var, ZeroTest, ZeroVerdict};
use proptest::prelude::*;

fn p(s: &str) -> Expr {
    parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

#[test]
fn parse_grammar_cases() {
    let e = p("z1^2 + eta*sin(z0)");
    let Expr::Add(xs) = &e else { panic!("{e:?}") };
    assert_eq!(xs[0], Expr::z(1).pow(Expr::int(2)));
    assert_eq!(xs[1], Expr::Mul(vec![Expr::param("eta"), Expr::z(0).sin()].into()));

    let e = p("cos(z0/2)");
    assert_eq!(e, Expr::Div(Expr::z(0).into(), Expr::int(2).into()).cos());
}

#[test]
fn parse_errors_carry_offsets() {
    let err = parse("z1^").unwrap_err();
    assert_eq!(err.offset(), 3);
    let err = parse("z1 + foo").unwrap_err();
    assert_eq!(err.offset(), 5);
    assert!(err.to_string().contains("foo"));
    assert!(parse("(z0").is_err());
    assert!(parse("z0 z1").is_err());
}

#[test]
fn w0_is_z0() {
    assert_eq!(p("w0"), Expr::z(0));
    assert_eq!(p("u0_0"), Expr::z(0));
    assert_eq!(p("u2_0"), Expr::z(2));
    assert_eq!(p("u0_3"), Expr::w(3));
    assert_eq!(Var::w(0), Var::z(0));
}

#[test]
fn partial_examples() {
    let d = p("eta*sin(z0)").partial(&Var::z(0));
    assert_eq!(d, p("eta*cos(z0)").simplify());
    assert_eq!(p("z1^2").partial(&Var::z(1)), p("2*z1").simplify());
    assert!(p("x*t").partial(&Var::z(0)).is_literal_zero());
}

#[test]
fn total_derivative_examples() {
    let sg = EquationContext::hyperbolic(p("sin(z0)")).unwrap();
    assert_eq!(sg.total_x(&Expr::z(0)).unwrap(), Expr::z(1));
    assert_eq!(sg.total_x(&Expr::w(1)).unwrap(), p("sin(z0)").simplify());
    assert_eq!(sg.total_x(&p("x*z1")).unwrap(), p("z1 + x*z2").simplify());
    assert_eq!(sg.total_t(&Expr::z(0)).unwrap(), Expr::w(1));
    assert_eq!(sg.total_t(&Expr::z(1)).unwrap(), p("sin(z0)").simplify());

    let f = p("z2 + z0*z1");
    let evo = EquationContext::evolution(f.clone()).unwrap();
    assert_eq!(evo.total_t(&Expr::z(0)).unwrap(), f.simplify());
    // z1_t = D_x F
    let want = evo.total_x(&f).unwrap();
    assert_eq!(evo.total_t(&Expr::z(1)).unwrap(), want);
}

#[test]
fn depth_limit_is_enforced() {
    let sg = EquationContext::hyperbolic(p("sin(z0)")).unwrap().with_max_depth(1);
    assert!(sg.reduce_jet(Jet { x: 2, t: 2 }).is_err());
    assert!(sg.reduce_jet(Jet { x: 2, t: 1 }).is_ok());
}

#[test]
fn zero_tests() {
    assert!(is_zero(&p("sin(z0)^2 + cos(z0)^2 - 1")).unwrap().is_zero());
    assert_eq!(is_zero(&p("sin(z0)^2 + cos(z0)^2 - 1")).unwrap(), ZeroVerdict::ProvenZero);
    assert_eq!(is_zero(&p("cosh(z1)^2 - sinh(z1)^2 - 1")).unwrap(), ZeroVerdict::ProvenZero);
    match is_zero(&p("z1 - z0")).unwrap() {
        ZeroVerdict::NonZero(w) => {
            let v = p("z1 - z0").eval(&w).unwrap();
            assert!(v.abs() > 1e-9);
        }
        other => panic!("{other:?}"),
    }
    // needs sampling: exp(log) style identity not covered by rewriting
    let e = p("(z1 + 1)^2 - z1^2 - 2*z1 - 1");
    assert!(is_zero(&e).unwrap().is_zero());
    let e = p("sin(2*z0) - 2*sin(z0)*cos(z0)");
    assert!(is_zero(&e).unwrap().is_zero());
    let e = p("sqrt(z1^2 + 1)^2 - z1^2 - 1");
    assert!(is_zero(&e).unwrap().is_zero());
}

#[test]
fn zero_test_domain_predicates() {
    let e = p("sqrt(z1)^2 - z1");
    let zt = ZeroTest::default().with_domain([Expr::z(1)]);
    assert!(zt.check(&e).unwrap().is_zero());
    let e = p("log(z1 - 10)");
    let zt = ZeroTest { max_attempts: 100, ..ZeroTest::default() };
    assert!(zt.check(&e).is_err());
}

#[test]
fn simplify_rules() {
    assert_eq!(p("0*z1 + 1*z0 - 0").simplify(), Expr::z(0));
    assert_eq!(p("z0 + z0").simplify(), p("2*z0").simplify());
    assert_eq!(p("z0/z0").simplify(), Expr::one());
    assert_eq!(p("tan(z0)*cos(z0)/sin(z0)").simplify(), Expr::one());
    assert_eq!(p("2^3/4").simplify(), Expr::int(2));
    assert_eq!(p("sqrt(9/4)").simplify(), Expr::rat(3, 2));
    assert_eq!(p("-(-(z1))").simplify(), Expr::z(1));
    assert_eq!(p("exp(z0)*exp(-z0)").simplify(), Expr::one());
    assert_eq!(p("2*sin(z0/2)*cos(z0/2)").simplify(), p("sin(z0)").simplify());
}

#[test]
fn printer_examples() {
    assert_eq!(p("z1^2 + eta*sin(z0)").simplify().to_string(), "z1^2 + eta*sin(z0)");
    assert_eq!(p("z0 - 3*z1").simplify().to_string(), "z0 - 3*z1");
    assert_eq!(p("-z0/(2*z1)").simplify().to_string(), "-z0/(2*z1)");
    assert_eq!(p("sqrt(z1)").simplify().to_string(), "sqrt(z1)");
    assert_eq!(p("u1_1").to_string(), "u1_1");
}

#[test]
fn compiled_matches_tree_eval() {
    let e = p("eta*sin(z0)/(1 + z1^2) - exp(x*t) + sqrt(z2^2 + 1)").simplify();
    let c = pss_core::expr::Compiled::new(&e);
    let pt = Point::new()
        .with(Var::X, 0.3)
        .with(Var::T, -0.7)
        .with(Var::z(0), 1.1)
        .with(Var::z(1), -0.4)
        .with(Var::z(2), 0.9)
        .with_param("eta", 1.5);
    let a = e.eval(&pt).unwrap();
    let b = c.eval_point(&pt).unwrap();
    assert!((a - b).abs() < 1e-14);
}

// Random expression generator over a safe alphabet.
fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-5i64..6).prop_map(Expr::int),
        (1i64..5, 2i64..5).prop_map(|(a, b)| Expr::rat(a, b)),
        Just(Expr::z(0)),
        Just(Expr::z(1)),
        Just(Expr::z(2)),
        Just(Expr::w(1)),
        Just(Expr::x()),
        Just(Expr::t()),
        Just(Expr::param("eta")),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(vec![a, b].into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(vec![a, b].into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(vec![a, Expr::Neg(b.into())].into())),
            (inner.clone(), 0i64..4).prop_map(|(a, n)| a.pow(Expr::int(n))),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.arctan()),
            inner.clone().prop_map(|a| (a * Expr::rat(1, 3)).exp()),
            inner.clone().prop_map(|a| Expr::Div(a.into(), Expr::Add(vec![Expr::int(3), Expr::z(0).cos()].into()).into())),
        ]
    })
}

fn rand_point(vals: &[f64; 7]) -> Point {
    Point::new()
        .with(Var::z(0), vals[0])
        .with(Var::z(1), vals[1])
        .with(Var::z(2), vals[2])
        .with(Var::w(1), vals[3])
        .with(Var::X, vals[4])
        .with(Var::T, vals[5])
        .with_param("eta", vals[6])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let s = e.simplify();
        prop_assert_eq!(s.simplify(), s);
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let s = e.simplify();
        let text = s.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.simplify(), s, "printed: {}", text);
        // parse∘print∘parse = parse
        let again = parse(&parse(&text).unwrap().to_string()).unwrap().simplify();
        prop_assert_eq!(again, back.simplify());
    }

    #[test]
    fn simplify_preserves_value(e in arb_expr(), vals in prop::array::uniform7(-1.5f64..1.5)) {
        let pt = rand_point(&vals);
        if let (Ok(a), Ok(b)) = (e.eval(&pt), e.simplify().eval(&pt)) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn partial_matches_central_difference(e in arb_expr(), vals in prop::array::uniform7(-1.5f64..1.5), k in 0usize..6) {
        let vars = [Var::z(0), Var::z(1), Var::z(2), Var::w(1), Var::X, Var::T];
        let v = &vars[k];
        let d = e.partial(v);
        let pt = rand_point(&vals);
        let h = 1e-5;
        let x0 = pt.get(v).unwrap();
        let (Ok(fp), Ok(fm), Ok(dv)) = (
            e.eval(&pt.clone().with(v.clone(), x0 + h)),
            e.eval(&pt.clone().with(v.clone(), x0 - h)),
            d.eval(&pt),
        ) else { return Ok(()) };
        let fd = (fp - fm) / (2.0 * h);
        prop_assert!((fd - dv).abs() < 1e-5 * (1.0 + dv.abs()), "d/d{} {}: fd {} sym {}", v, e, fd, dv);
    }

    #[test]
    fn total_derivatives_commute(e in arb_expr()) {
        let ctx = EquationContext::hyperbolic(parse("sin(z0) + z1^2").unwrap()).unwrap();
        let xt = ctx.total_x(&ctx.total_t(&e).unwrap()).unwrap();
        let tx = ctx.total_t(&ctx.total_x(&e).unwrap()).unwrap();
        let zt = ZeroTest { samples: 16, jet_range: (-1.0, 1.0), xt_range: (-1.0, 1.0), ..ZeroTest::default() };
        match zt.check(&(xt - tx)) {
            Ok(v) => prop_assert!(v.is_zero(), "{}", v),
            Err(_) => {}
        }
    }

    #[test]
    fn total_derivatives_commute_evolution(e in arb_expr()) {
        let e = e.subst(&Var::w(1), &Expr::z(0));
        let ctx = EquationContext::evolution(parse("z2 + z0*z1").unwrap()).unwrap();
        let xt = ctx.total_x(&ctx.total_t(&e).unwrap()).unwrap();
        let tx = ctx.total_t(&ctx.total_x(&e).unwrap()).unwrap();
        let zt = ZeroTest { samples: 16, jet_range: (-1.0, 1.0), xt_range: (-1.0, 1.0), ..ZeroTest::default() };
        match zt.check(&(xt - tx)) {
            Ok(v) => prop_assert!(v.is_zero(), "{}", v),
            Err(_) => {}
        }
    }
}
