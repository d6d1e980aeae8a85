use std::collections::BTreeMap;

use proptest::prelude::*;
use pss_core::catalog::{build, FamilyId, FamilyParams, FamilySpec};
use pss_core::expr::{Expr, Point, Var, ZeroTest, ZeroVerdict};
use pss_core::forms::PssTriple;
use pss_core::sff::{
    closed_form, codazzi_residuals, finite_jet_obstruction, gauss_residual, strip_contains, universal_sff, BranchResult, DomainStrip,
    ImmersionParams, Outcome, Rule, SecondFundamentalForm, SffError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CLOSED: [FamilyId; 7] = [
    FamilyId::SgBasic,
    FamilyId::SgEta,
    FamilyId::HypIQa,
    FamilyId::EvoHlZero,
    FamilyId::HypIiiLambda,
    FamilyId::HypIiiXiTau,
    FamilyId::HypIGeneral,
];

fn spec(id: FamilyId) -> FamilySpec {
    let fp = if id == FamilyId::HypIGeneral { FamilyParams::new().set("B", 0.0) } else { FamilyParams::new() };
    build(id, &fp.set("eta", 1.3)).unwrap()
}

/// Two-form coefficient of `α∧β` in `dx∧dt`.
fn wedge(a: [&Expr; 2], b: [&Expr; 2]) -> Expr {
    a[0] * b[1] - a[1] * b[0]
}

/// Flatness of the connection: `dω31 − ω3∧ω32` and `dω32 + ω3∧ω31`, built from scratch.
fn codazzi_oracle(tr: &PssTriple, s: &SecondFundamentalForm) -> [Expr; 2] {
    let ctx = &tr.ctx;
    let comb = |u: &Expr, v: &Expr| [u * tr.f(1, 1) + v * tr.f(2, 1), u * tr.f(1, 2) + v * tr.f(2, 2)];
    let w31 = comb(&s.a, &s.b);
    let w32 = comb(&s.b, &s.c);
    let w3 = [tr.f(3, 1), tr.f(3, 2)];
    let d = |w: &[Expr; 2]| ctx.total_x(&w[1]).unwrap() - ctx.total_t(&w[0]).unwrap();
    let r1 = d(&w31) - wedge(w3, [&w32[0], &w32[1]]);
    let r2 = d(&w32) + wedge(w3, [&w31[0], &w31[1]]);
    [ctx.reduce(&r1).unwrap(), ctx.reduce(&r2).unwrap()]
}

fn holds(zt: &ZeroTest, e: &Expr) -> bool {
    zt.check(e).unwrap().is_zero()
}

#[test]
fn gauss_is_an_identity_for_the_jet_forms() {
    for id in [FamilyId::SgBasic, FamilyId::SgEta, FamilyId::HypIQa] {
        let sp = spec(id);
        for sign in [1.0, -1.0] {
            let s = closed_form(&sp, &ImmersionParams { sign, ..Default::default() }).unwrap();
            let v = sp.zero_test().check(&gauss_residual(&s)).unwrap();
            assert!(v.is_zero(), "{id}: {v}");
        }
    }
    let sg = closed_form(&spec(FamilyId::SgBasic), &ImmersionParams::default()).unwrap();
    assert_eq!(sp_check(&gauss_residual(&sg)), ZeroVerdict::ProvenZero);
}

fn sp_check(e: &Expr) -> ZeroVerdict {
    ZeroTest::default().check(e).unwrap()
}

#[test]
fn universal_gauss_on_strip_points() {
    for id in [FamilyId::EvoHlZero, FamilyId::HypIiiLambda, FamilyId::HypIiiXiTau] {
        let sp = spec(id);
        let s = closed_form(&sp, &ImmersionParams::default()).unwrap();
        assert!(s.is_universal());
        let zt = s.zero_test(&sp.triple()).unwrap();
        let g = gauss_residual(&s);
        for p in zt.sample_points(&[g.clone()], 50).unwrap() {
            assert!(g.eval(&p).unwrap().abs() < 1e-12, "{id} at {p}");
        }
    }
}

#[test]
fn codazzi_for_closed_forms_and_corruption() {
    for id in CLOSED {
        let sp = spec(id);
        let tr = sp.triple();
        for sign in [1.0, -1.0] {
            let s = closed_form(&sp, &ImmersionParams { sign, ..Default::default() }).unwrap();
            let zt = s.zero_test(&tr).unwrap();
            let lib = codazzi_residuals(&tr, &s).unwrap();
            let ora = codazzi_oracle(&tr, &s);
            for r in lib.iter().chain(ora.iter()) {
                assert!(holds(&zt, r), "{id} sign {sign}");
            }
            let bad = SecondFundamentalForm { a: (Expr::float(1.1) * &s.a).simplify(), ..s.clone() };
            let (worst, _) = zt.max_scaled(&codazzi_residuals(&tr, &bad).unwrap()[0]).unwrap();
            let (worst2, _) = zt.max_scaled(&codazzi_residuals(&tr, &bad).unwrap()[1]).unwrap();
            assert!(worst.max(worst2) > 1e-3, "{id}: corrupted a passes ({worst}, {worst2})");
        }
    }
}

#[test]
fn families_without_closed_form() {
    for id in [FamilyId::HypIiGammaNe1, FamilyId::HypIiGamma1, FamilyId::HypIiiZero, FamilyId::EvoHlNonzero] {
        assert_eq!(closed_form(&spec(id), &ImmersionParams::default()).unwrap_err(), SffError::NoImmersion(id));
    }
    let general = build(FamilyId::HypIGeneral, &FamilyParams::new().set("B", 0.5)).unwrap();
    assert!(matches!(closed_form(&general, &ImmersionParams::default()), Err(SffError::NoImmersion(_))));
}

fn strip_params(eta: f64, lambda: f64, l: f64, g: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([("eta".into(), eta), ("lambda".into(), lambda), ("l".into(), l), ("gamma_im".into(), g)])
}

#[test]
fn strip_bounds_example() {
    let strip = DomainStrip::universal(1.0, Expr::param("eta"), Expr::param("lambda"));
    let pm = strip_params(1.0, 1.0, 3.0, 1.0);
    let (lo, hi) = strip.bounds(&pm).unwrap();
    assert!((lo + 0.481_211_825).abs() < 1e-8 && (hi - 0.481_211_825).abs() < 1e-8, "{lo} {hi}");
    assert!(strip_contains(&strip, 0.1, 0.2, &pm).unwrap());
    assert!(!strip_contains(&strip, 0.3, 0.3, &pm).unwrap());
    assert!(matches!(strip.bounds(&strip_params(1.0, 1.0, 1.0, 1.0)), Err(SffError::InvalidStrip { .. })));
    let (lo, hi) = strip.bounds(&strip_params(1.0, 1.0, 2.0, 0.0)).unwrap();
    assert!((lo + 0.5 * 2f64.ln()).abs() < 1e-14 && hi.is_infinite());
    assert!(universal_sff(1.0, Expr::one(), Expr::one(), 1.0, 1.0).is_err());
}

fn xt_point(params: &BTreeMap<String, f64>, x: f64, t: f64) -> Point {
    let mut p = Point::new();
    for (k, v) in params {
        p.set(Var::param(k), *v);
    }
    p.set(Var::X, x);
    p.set(Var::T, t);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strip_is_where_a_is_real(eta in 0.3f64..2.0, lambda in -2.0f64..2.0, l in 0.5f64..5.0, g in 0.0f64..1.0, x in -1.5f64..1.5, t in -1.5f64..1.5) {
        prop_assume!(l * l > 4.0 * g * g * 1.01);
        let s = universal_sff(1.0, Expr::param("eta"), Expr::param("lambda"), l, g).unwrap();
        let pm = strip_params(eta, lambda, l, g);
        let strip = s.strip.clone().unwrap();
        let pt = xt_point(&pm, x, t);
        let big_l = (2.0 * (eta * x + lambda * t)).exp();
        let radicand = l * big_l - g * g * big_l * big_l - 1.0;
        prop_assume!(radicand.abs() > 1e-9);
        prop_assert_eq!(strip_contains(&strip, x, t, &pm).unwrap(), radicand > 0.0);
        if radicand > 0.0 {
            let v = |e: &Expr| e.eval(&pt).unwrap();
            let gauss = v(&s.a) * v(&s.c) - v(&s.b) * v(&s.b) + 1.0;
            prop_assert!(gauss.abs() < 1e-9 * (1.0 + v(&s.c).abs() * v(&s.a).abs()));
        }
    }

    #[test]
    fn scaling_by_minus_one_preserves_gauss(z in 0.2f64..2.9) {
        let s = closed_form(&spec(FamilyId::SgBasic), &ImmersionParams::default()).unwrap();
        let m = s.scaled(-1.0);
        let mut p = Point::new();
        p.set(Var::z(0), z);
        let g = |f: &SecondFundamentalForm| gauss_residual(f).eval(&p).unwrap();
        prop_assert!(g(&s).abs() < 1e-12 && g(&m).abs() < 1e-12);
    }
}

fn same_up_to_sign(zt: &ZeroTest, found: &SecondFundamentalForm, want: &SecondFundamentalForm) -> bool {
    [1.0, -1.0].into_iter().any(|k| {
        let w = want.scaled(k);
        let ok = found.components().into_iter().zip(w.components()).all(|(f, w)| holds(zt, &(f - w)));
        ok
    })
}

#[test]
fn obstruction_verdicts() {
    let expect = [
        (FamilyId::SgBasic, "ZeroJetFamily"),
        (FamilyId::SgEta, "ZeroJetFamily"),
        (FamilyId::EvoHlNonzero, "Inconsistent"),
        (FamilyId::EvoHlZero, "UniversalFamily"),
        (FamilyId::HypIQa, "ZeroJetFamily"),
        (FamilyId::HypIiGammaNe1, "Inconsistent"),
        (FamilyId::HypIiGamma1, "Inconsistent"),
        (FamilyId::HypIiiLambda, "UniversalFamily"),
        (FamilyId::HypIiiXiTau, "UniversalFamily"),
        (FamilyId::HypIiiZero, "Inconsistent"),
    ];
    for (id, kind) in expect {
        let sp = spec(id);
        let tr = sp.triple();
        for order in [0, 1] {
            let v = finite_jet_obstruction(&tr, order, &ImmersionParams::default()).unwrap();
            assert_eq!(v.kind(), kind, "{id} at order {order}");
            let Some(found) = v.sff() else { continue };
            let want = closed_form(&sp, &ImmersionParams::default()).unwrap();
            let zt = want.zero_test(&tr).unwrap();
            assert!(same_up_to_sign(&zt, found, &want), "{id} order {order}: {} {} {}", found.a, found.b, found.c);
            assert!(holds(&zt, &gauss_residual(found)), "{id}");
            for r in codazzi_residuals(&tr, found).unwrap() {
                assert!(holds(&zt, &r), "{id}");
            }
        }
    }
}

#[test]
fn sg_basic_is_tan_cot_and_zero_order() {
    let sp = spec(FamilyId::SgBasic);
    let v = finite_jet_obstruction(&sp.triple(), 1, &ImmersionParams::default()).unwrap();
    let Outcome::ZeroJetFamily(s) = &v.outcome else { panic!("{}", v.kind()) };
    assert_eq!(s.jet_order, 0);
    let h = Expr::rat(1, 2) * Expr::z(0);
    let want = SecondFundamentalForm::new(h.clone().tan(), Expr::zero(), -(h.clone().cos() / h.sin()));
    assert!(same_up_to_sign(&ZeroTest::default(), s, &want));
}

#[test]
fn hyp_i_general_with_b_is_obstructed() {
    for b in [0.5, -0.7] {
        let sp = build(FamilyId::HypIGeneral, &FamilyParams::new().set("B", b)).unwrap();
        for order in [0, 1] {
            let v = finite_jet_obstruction(&sp.triple(), order, &ImmersionParams::default()).unwrap();
            assert_eq!(v.kind(), "Inconsistent", "B = {b}, order {order}");
        }
    }
    let sp = spec(FamilyId::HypIGeneral);
    let v = finite_jet_obstruction(&sp.triple(), 0, &ImmersionParams::default()).unwrap();
    assert_eq!(v.kind(), "ZeroJetFamily");
}

#[test]
fn universal_fit_recovers_exponent() {
    let sp = build(FamilyId::HypIiiLambda, &FamilyParams::new().set("eta", 1.3).set("lambda", 1.0)).unwrap();
    let v = finite_jet_obstruction(&sp.triple(), 0, &ImmersionParams::default()).unwrap();
    let s = v.sff().unwrap();
    assert!(s.is_universal());
    let strip = s.strip.as_ref().unwrap();
    let p = strip.p.eval(&Point::new()).unwrap() * strip.sign;
    let q = strip.q.eval(&Point::new()).unwrap() * strip.sign;
    assert!((p - 1.3).abs() < 1e-12 && (q - 1.0 / 1.3).abs() < 1e-12, "{p} {q}");
    for c in s.components() {
        for j in 0..3 {
            assert!(c.partial(&Var::z(j)).simplify().is_literal_zero());
            assert!(c.partial(&Var::w(j)).simplify().is_literal_zero());
        }
    }
    assert!(v.trace.iter().any(|st| st.rule == Rule::PatternFit));
}

#[test]
fn negative_sign_universal_strip() {
    let sp = build(FamilyId::EvoHlZero, &FamilyParams::new().set("sign", -1.0).set("eta", 0.8)).unwrap();
    let v = finite_jet_obstruction(&sp.triple(), 0, &ImmersionParams::default()).unwrap();
    assert_eq!(v.kind(), "UniversalFamily");
    let want = closed_form(&sp, &ImmersionParams::default()).unwrap();
    let zt = want.zero_test(&sp.triple()).unwrap();
    assert!(same_up_to_sign(&zt, v.sff().unwrap(), &want));
}

#[test]
fn hyp_ii_trace_ends_in_a_failed_check() {
    for id in [FamilyId::HypIiGammaNe1, FamilyId::HypIiGamma1] {
        let v = finite_jet_obstruction(&spec(id).triple(), 1, &ImmersionParams::default()).unwrap();
        for (branch, r) in &v.branches {
            assert_ne!(*r, BranchResult::Solution, "{id} {branch}");
            assert_ne!(*r, BranchResult::Undetermined, "{id} {branch}");
        }
        let last = v.trace.iter().filter(|s| s.branch.starts_with('A')).last().unwrap();
        assert!(
            matches!(last.rule, Rule::Contradiction | Rule::CodazziCheck | Rule::JetDependence | Rule::NonzeroA),
            "{id}: {:?}",
            last.rule
        );
    }
}

#[test]
fn unsupported_order() {
    let tr = spec(FamilyId::SgEta).triple();
    assert_eq!(finite_jet_obstruction(&tr, 2, &ImmersionParams::default()).unwrap_err(), SffError::UnsupportedOrder(2));
}

#[test]
fn verdict_json_shape() {
    let v = finite_jet_obstruction(&spec(FamilyId::EvoHlZero).triple(), 0, &ImmersionParams::default()).unwrap();
    let j = v.to_json();
    assert_eq!(j["outcome"], "UniversalFamily");
    assert_eq!(j["order"], 0);
    assert!(j["sff"]["strip"]["form"].is_string());
    assert!(j["trace"].as_array().unwrap().iter().all(|s| s["rule"].is_string()));
    let text = serde_json::to_string(&j).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(back, j);
    let inc = finite_jet_obstruction(&spec(FamilyId::HypIiiZero).triple(), 0, &ImmersionParams::default()).unwrap();
    assert!(inc.to_json()["sff"].is_null());
}

#[test]
fn verdicts_stable_across_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for id in [FamilyId::SgEta, FamilyId::HypIiiXiTau, FamilyId::HypIiiZero] {
        for _ in 0..2 {
            let fp = pss_core::catalog::random_params(id, &mut rng);
            let sp = build(id, &fp).unwrap();
            let v = finite_jet_obstruction(&sp.triple(), 0, &ImmersionParams::default()).unwrap();
            assert_eq!(v.kind(), spec_kind(id), "{id} {:?}", sp.params);
        }
    }
}

fn spec_kind(id: FamilyId) -> &'static str {
    match id {
        FamilyId::SgEta => "ZeroJetFamily",
        FamilyId::HypIiiXiTau => "UniversalFamily",
        _ => "Inconsistent",
    }
}
