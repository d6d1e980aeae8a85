use pss_core::catalog::{build, generate_f, hlpm, random_params, validate_evolution_constraints, CatalogError, FKind, FamilyId, FamilyParams};
use pss_core::expr::{parse, Expr, Var};
use pss_core::forms::verify_family;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn assert_verifies(id: FamilyId, fp: &FamilyParams) {
    let spec = build(id, fp).unwrap_or_else(|err| panic!("{id}: {err}"));
    let rep = verify_family(&spec.triple());
    assert!(rep.passed(), "{id} {:?}: {rep:?}", spec.params);
}

#[test]
fn defaults_verify_for_every_family() {
    for id in FamilyId::ALL {
        assert_verifies(id, &FamilyParams::new());
    }
}

#[test]
fn both_sign_branches_verify() {
    for id in [FamilyId::EvoHlNonzero, FamilyId::EvoHlZero, FamilyId::HypIiGammaNe1, FamilyId::HypIiGamma1, FamilyId::HypIiiLambda] {
        for s in [1.0, -1.0] {
            assert_verifies(id, &FamilyParams::new().set("sign", s));
        }
    }
}

#[test]
fn random_draws_verify() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for id in FamilyId::ALL {
        for _ in 0..4 {
            assert_verifies(id, &random_params(id, &mut rng));
        }
    }
}

#[test]
fn hyp_i_every_representative() {
    for (a, b, kinds) in [(1.0, 0.5, &[FKind::Sin, FKind::Cos][..]), (0.5, 1.0, &[FKind::Sinh, FKind::Cosh, FKind::Exp, FKind::ExpNeg][..])] {
        for &k in kinds {
            let fp = FamilyParams::new().set("A", a).set("B", b).set("Q", 0.4).set("eta", 1.5).fkind(k);
            let spec = build(FamilyId::HypIGeneral, &fp).unwrap();
            let alpha = spec.param("alpha");
            assert!((alpha - 1.0 / (a * a - b * b)).abs() < 1e-14);
            let f = &spec.rhs;
            let ode = f.dz(0).dz(0) + Expr::param("alpha") * f;
            assert!(spec.zero_test().check(&ode).unwrap().is_zero(), "{k:?}");
            assert!(verify_family(&spec.triple()).passed(), "{k:?}");
        }
    }
}

#[test]
fn hyp_i_rejects_wrong_representative() {
    let fp = FamilyParams::new().set("A", 0.5).set("B", 1.0).fkind(FKind::Sin);
    assert!(matches!(build(FamilyId::HypIGeneral, &fp), Err(CatalogError::Constraint { .. })));
    let fp = FamilyParams::new().set("A", 1.0).set("B", 1.0);
    assert!(build(FamilyId::HypIGeneral, &fp).is_err());
}

#[test]
fn hyp_ii_constraint_is_enforced() {
    // A² − B² = 3 while (γ − 1)/δ² = 1
    let fp = FamilyParams::new().set("gamma", 2.0).set("delta", 1.0).set("A", 2.0).set("B", 1.0);
    let err = build(FamilyId::HypIiGammaNe1, &fp).unwrap_err();
    assert!(err.to_string().contains("A² − B² = (γ − 1)/δ²"), "{err}");
    let fp = FamilyParams::new().set("gamma", 2.0).set("delta", 1.0).set("A", 2.0);
    let spec = build(FamilyId::HypIiGammaNe1, &fp).unwrap();
    assert!((spec.param("B") - 3f64.sqrt()).abs() < 1e-12);
    let fp = FamilyParams::new().set("gamma", 1.0);
    assert!(build(FamilyId::HypIiGammaNe1, &fp).is_err());
}

#[test]
fn sg_eta_matches_hyp_i_qa_special_case() {
    let sg = build(FamilyId::SgEta, &FamilyParams::new().set("eta", 1.7)).unwrap();
    let qa = build(FamilyId::HypIQa, &FamilyParams::new().set("eta", 1.7).set("A", -1.0).set("Q", 0.0)).unwrap();
    let (ts, tq) = (sg.triple().bind_params(), qa.triple().bind_params());
    let zt = sg.zero_test();
    for i in 1..=3 {
        for j in 1..=2 {
            assert!(zt.check(&(ts.f(i, j) - tq.f(i, j))).unwrap().is_zero(), "f{i}{j}");
        }
    }
}

#[test]
fn xi_zero_branch_of_xi_tau() {
    let spec = build(FamilyId::HypIiiXiTau, &FamilyParams::new().set("xi", 0.0).set("tau", 2.0)).unwrap();
    assert!(spec.domain.is_empty());
    assert!(verify_family(&spec.triple()).passed());
    assert!(build(FamilyId::HypIiiXiTau, &FamilyParams::new().set("xi", 0.0).set("tau", 0.0)).is_err());
}

#[test]
fn zeta_is_an_alias_for_xi() {
    let spec = build(FamilyId::HypIiiLambda, &FamilyParams::new().set("zeta", 0.25)).unwrap();
    assert_eq!(spec.param("xi"), 0.25);
}

#[test]
fn evo_hl_nonzero_relations() {
    let fp = FamilyParams::new().set("alpha", 0.3).expr("f11", e("exp(z0)")).expr("f22", e("z0^2 + 1"));
    let spec = build(FamilyId::EvoHlNonzero, &fp).unwrap();
    let (q, _) = validate_evolution_constraints(&spec).unwrap();
    let zt = spec.zero_test();
    assert!(zt.check(&q.p).unwrap().is_zero());
    assert!(zt.check(&(&q.m + &q.l * &q.l / e("eta^2"))).unwrap().is_zero());
    assert!(!zt.check(&(&q.h * &q.l)).unwrap().is_zero());
    // F is linear in z2 with coefficient −s f22'/(η√(1 − α²) f11')
    let c2 = spec.rhs.dz(2);
    assert!(zt.check(&(c2 + e("2*z0/(eta*sqrt(1 - alpha^2)*exp(z0))"))).unwrap().is_zero());
    assert!(zt.check(&(&spec.rhs - generate_f(&spec))).unwrap().is_zero());
    assert!(spec.rhs.jets().iter().all(|j| j.t == 0 && j.x <= 2));
}

#[test]
fn evo_rejections() {
    let fp = FamilyParams::new().set("alpha", 1.0);
    assert!(build(FamilyId::EvoHlNonzero, &fp).is_err());
    let fp = FamilyParams::new().expr("f11", e("z0")).expr("f31", e("z0"));
    assert!(build(FamilyId::EvoHlNonzero, &fp).is_err());
    let fp = FamilyParams::new().expr("f12", e("z0^2"));
    let err = build(FamilyId::EvoHlZero, &fp).unwrap_err();
    assert!(err.to_string().contains("f12,z1"), "{err}");
    let fp = FamilyParams::new().expr("f22", e("3"));
    assert!(build(FamilyId::EvoHlNonzero, &fp).is_err());
    let sg = build(FamilyId::SgBasic, &FamilyParams::new()).unwrap();
    assert!(matches!(validate_evolution_constraints(&sg), Err(CatalogError::NotEvolution(_))));
}

#[test]
fn evo_hl_nonzero_accepts_consistent_f31() {
    let fp = FamilyParams::new().set("alpha", 0.0).set("eta", 2.0).expr("f31", e("2"));
    assert!(build(FamilyId::EvoHlNonzero, &fp).is_ok());
    let fp = FamilyParams::new().set("alpha", 0.0).set("eta", 2.0).set("sign", -1.0).expr("f31", e("2"));
    assert!(build(FamilyId::EvoHlNonzero, &fp).is_err());
}

#[test]
fn evo_hl_zero_has_vanishing_l() {
    let fp = FamilyParams::new().set("sign", -1.0).expr("f11", e("sinh(z0)")).expr("f12", e("z0*z1 + z1^3"));
    let spec = build(FamilyId::EvoHlZero, &fp).unwrap();
    let q = hlpm(&spec.f[0][0], &spec.f[2][0]);
    assert!(q.l.simplify().is_literal_zero() || spec.zero_test().check(&q.l).unwrap().is_zero());
    assert!(spec.rhs.depends_on(&Var::z(2)));
}

#[test]
fn family_names_round_trip() {
    for id in FamilyId::ALL {
        assert_eq!(id.name().parse::<FamilyId>().unwrap(), id);
        assert_eq!(id.cli_name().parse::<FamilyId>().unwrap(), id);
    }
    assert!("nope".parse::<FamilyId>().is_err());
}
