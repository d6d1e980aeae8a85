//! The classified families of equations and their 1-form coefficients.
//!
//! Tables keep parameters symbolic (`eta`, `A`, ...); [`FamilySpec::params`] carries
//! the numeric values, including derived ones such as `alpha` for the `F'' + αF = 0`
//! families. Sign choices are the parameter `sign = ±1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{ContextError, EquationContext, Expr, Var, ZeroError, ZeroTest};
use crate::forms::PssTriple;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FamilyId {
    SgBasic,
    SgEta,
    EvoHlNonzero,
    EvoHlZero,
    HypIGeneral,
    HypIQa,
    HypIiGammaNe1,
    HypIiGamma1,
    HypIiiZero,
    HypIiiLambda,
    HypIiiXiTau,
}

impl FamilyId {
    pub const ALL: [FamilyId; 11] = [
        FamilyId::SgBasic,
        FamilyId::SgEta,
        FamilyId::EvoHlNonzero,
        FamilyId::EvoHlZero,
        FamilyId::HypIGeneral,
        FamilyId::HypIQa,
        FamilyId::HypIiGammaNe1,
        FamilyId::HypIiGamma1,
        FamilyId::HypIiiZero,
        FamilyId::HypIiiLambda,
        FamilyId::HypIiiXiTau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::SgBasic => "SG_basic",
            FamilyId::SgEta => "SG_eta",
            FamilyId::EvoHlNonzero => "Evo_HLnonzero",
            FamilyId::EvoHlZero => "Evo_HLzero",
            FamilyId::HypIGeneral => "Hyp_i_general",
            FamilyId::HypIQa => "Hyp_i_QA",
            FamilyId::HypIiGammaNe1 => "Hyp_ii_gamma_ne1",
            FamilyId::HypIiGamma1 => "Hyp_ii_gamma1",
            FamilyId::HypIiiZero => "Hyp_iii_zero",
            FamilyId::HypIiiLambda => "Hyp_iii_lambda",
            FamilyId::HypIiiXiTau => "Hyp_iii_xi_tau",
        }
    }

    /// Short form used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            FamilyId::SgBasic => "sg-basic",
            FamilyId::SgEta => "sg-eta",
            FamilyId::EvoHlNonzero => "evo-hlnonzero",
            FamilyId::EvoHlZero => "evo-hlzero",
            FamilyId::HypIGeneral => "hyp-i",
            FamilyId::HypIQa => "hyp-i-qa",
            FamilyId::HypIiGammaNe1 => "hyp-ii",
            FamilyId::HypIiGamma1 => "hyp-ii-gamma1",
            FamilyId::HypIiiZero => "hyp-iii-zero",
            FamilyId::HypIiiLambda => "hyp-iii-lambda",
            FamilyId::HypIiiXiTau => "hyp-iii-xi-tau",
        }
    }

    pub fn is_evolution(self) -> bool {
        matches!(self, FamilyId::EvoHlNonzero | FamilyId::EvoHlZero)
    }

    /// Families with `f21 = η` a free parameter.
    pub fn is_eta_family(self) -> bool {
        self != FamilyId::SgBasic
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyId {
    type Err = CatalogError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = |x: &str| x.to_ascii_lowercase().replace('-', "_").replace('≠', "_ne").replace("=1", "1");
        let key = norm(s);
        let alias = match key.as_str() {
            "hyp_i" => Some(FamilyId::HypIGeneral),
            "hyp_ii" | "hyp_ii_gamma_ne_1" => Some(FamilyId::HypIiGammaNe1),
            "hyp_ii_gamma_1" => Some(FamilyId::HypIiGamma1),
            "hyp_iii_zeta_tau" => Some(FamilyId::HypIiiXiTau),
            _ => None,
        };
        if let Some(id) = alias {
            return Ok(id);
        }
        FamilyId::ALL
            .into_iter()
            .find(|id| norm(id.name()) == key || norm(id.cli_name()) == key)
            .ok_or_else(|| CatalogError::UnknownFamily(s.to_string()))
    }
}

/// Representative solution of `F'' + αF = 0`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FKind {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    ExpNeg,
}

impl FKind {
    pub fn needs_positive_alpha(self) -> bool {
        matches!(self, FKind::Sin | FKind::Cos)
    }

    pub fn name(self) -> &'static str {
        match self {
            FKind::Sin => "sin",
            FKind::Cos => "cos",
            FKind::Sinh => "sinh",
            FKind::Cosh => "cosh",
            FKind::Exp => "exp",
            FKind::ExpNeg => "expneg",
        }
    }

    /// `F(z0)` with `k = sqrt(|α|)` built from the symbolic `alpha`.
    pub fn rhs(self) -> Expr {
        let alpha = Expr::param("alpha");
        let kz = |k: Expr| k.sqrt() * Expr::z(0);
        match self {
            FKind::Sin => kz(alpha).sin(),
            FKind::Cos => kz(alpha).cos(),
            FKind::Sinh => kz(-alpha).sinh(),
            FKind::Cosh => kz(-alpha).cosh(),
            FKind::Exp => kz(-alpha).exp(),
            FKind::ExpNeg => (-kz(-alpha)).exp(),
        }
    }
}

impl FromStr for FKind {
    type Err = CatalogError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [FKind::Sin, FKind::Cos, FKind::Sinh, FKind::Cosh, FKind::Exp, FKind::ExpNeg]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CatalogError::InvalidInput(format!("unknown F representative `{s}`")))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("{family}: constraint violated: {relation}")]
    Constraint { family: FamilyId, relation: String },
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{0} is not an evolution family")]
    NotEvolution(FamilyId),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

/// User-facing parameter input. Missing values fall back to the family defaults.
#[derive(Clone, Debug, Default)]
pub struct FamilyParams {
    pub values: BTreeMap<String, f64>,
    /// Coefficient functions for evolution families (`f11`, `f22`, `f12`, optional `f31`).
    pub exprs: BTreeMap<String, Expr>,
    pub fkind: Option<FKind>,
}

impl FamilyParams {
    pub fn new() -> FamilyParams {
        FamilyParams::default()
    }

    pub fn set(mut self, name: &str, v: f64) -> FamilyParams {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn expr(mut self, name: &str, e: Expr) -> FamilyParams {
        self.exprs.insert(name.to_string(), e);
        self
    }

    pub fn fkind(mut self, k: FKind) -> FamilyParams {
        self.fkind = Some(k);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

/// A fully built family instance.
#[derive(Clone, Debug)]
pub struct FamilySpec {
    pub id: FamilyId,
    pub params: BTreeMap<String, f64>,
    pub fkind: Option<FKind>,
    /// Right-hand side `F` of the equation.
    pub rhs: Expr,
    pub f: [[Expr; 2]; 3],
    pub ctx: EquationContext,
    /// Expressions that must be positive where the forms are defined.
    pub domain: Vec<Expr>,
    /// Constraint notes gathered while building.
    pub report: Vec<String>,
}

impl FamilySpec {
    pub fn triple(&self) -> PssTriple {
        PssTriple::new(self.f.clone(), self.ctx.clone()).with_params(self.params.clone()).with_domain(self.domain.clone())
    }

    pub fn sign(&self) -> f64 {
        self.params.get("sign").copied().unwrap_or(1.0)
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn zero_test(&self) -> ZeroTest {
        ZeroTest::default().with_params(&self.params).with_domain(self.domain.iter().cloned())
    }

    /// Parameter values substituted into the right-hand side.
    pub fn bound_rhs(&self) -> Expr {
        self.rhs.bind_params(&self.params).simplify()
    }
}

fn p(name: &str) -> Expr {
    Expr::param(name)
}

struct Builder<'a> {
    id: FamilyId,
    input: &'a FamilyParams,
    params: BTreeMap<String, f64>,
    report: Vec<String>,
}

impl<'a> Builder<'a> {
    fn value(&mut self, name: &str, default: f64) -> f64 {
        let v = self.input.get(name).unwrap_or(default);
        self.params.insert(name.to_string(), v);
        v
    }

    fn fail<T>(&self, relation: impl Into<String>) -> Result<T, CatalogError> {
        Err(CatalogError::Constraint { family: self.id, relation: relation.into() })
    }

    fn nonzero(&mut self, name: &str, default: f64) -> Result<f64, CatalogError> {
        let v = self.value(name, default);
        if v == 0.0 || !v.is_finite() {
            return self.fail(format!("{name} ≠ 0"));
        }
        Ok(v)
    }

    fn sign(&mut self) -> Result<f64, CatalogError> {
        let s = self.value("sign", 1.0);
        if s != 1.0 && s != -1.0 {
            return self.fail("sign must be +1 or -1");
        }
        Ok(s)
    }

    fn user_expr(&self, name: &str, default: &str) -> Expr {
        self.input.exprs.get(name).cloned().unwrap_or_else(|| crate::expr::parse(default).expect("default expression")).simplify()
    }
}

fn only_vars(e: &Expr, allowed: &[Var]) -> bool {
    e.vars().iter().all(|v| matches!(v, Var::Param(_)) || allowed.contains(v))
}

/// Instantiate a family, validating its parameter constraints.
pub fn build(id: FamilyId, input: &FamilyParams) -> Result<FamilySpec, CatalogError> {
    let mut b = Builder { id, input, params: BTreeMap::new(), report: Vec::new() };
    let z0 = Expr::z(0);
    let z1 = Expr::z(1);
    let half = Expr::rat(1, 2);
    let mut domain = Vec::new();
    let mut fkind = None;
    let eta = p("eta");

    let (rhs, f): (Expr, [[Expr; 2]; 3]) = match id {
        FamilyId::SgBasic => {
            let c = (&half * &z0).cos();
            let s = (&half * &z0).sin();
            (z0.clone().sin(), [[c.clone(), c], [s.clone(), -s], [&half * &z1, -(&half * Expr::w(1))]])
        }
        FamilyId::SgEta => {
            b.nonzero("eta", 1.0)?;
            (z0.clone().sin(), [[Expr::zero(), z0.clone().sin() / &eta], [eta.clone(), z0.clone().cos() / &eta], [z1.clone(), Expr::zero()]])
        }
        FamilyId::HypIGeneral | FamilyId::HypIQa => {
            let e = b.nonzero("eta", 1.0)?;
            let a = b.nonzero("A", 1.0)?;
            let bb = if id == FamilyId::HypIQa {
                b.params.insert("B".into(), 0.0);
                0.0
            } else {
                b.value("B", 0.5)
            };
            let q = b.value("Q", 0.0);
            let d = a * a - bb * bb;
            if d == 0.0 {
                return b.fail("A² − B² ≠ 0");
            }
            let alpha = 1.0 / d;
            b.params.insert("alpha".into(), alpha);
            if q * q * alpha + e * e == 0.0 {
                return b.fail("Q²α + η² ≠ 0");
            }
            if alpha < 0.0 {
                b.report.push(format!("α = 1/(A² − B²) = {alpha} < 0"));
            }
            let kind = input.fkind.unwrap_or(if alpha > 0.0 { FKind::Sin } else { FKind::Sinh });
            if kind.needs_positive_alpha() != (alpha > 0.0) {
                return b.fail(format!("F = {} requires α {} 0, got α = {alpha}", kind.name(), if alpha > 0.0 { "<" } else { ">" }));
            }
            fkind = Some(kind);
            let big_f = kind.rhs();
            let fp = big_f.partial(&Var::z(0));
            let al = p("alpha");
            let (aa, qq, bs) = (p("A"), p("Q"), if id == FamilyId::HypIQa { Expr::zero() } else { p("B") });
            let den = &qq * &qq * &al + &eta * &eta;
            let g = (&qq * &fp - &eta * &big_f) / &den;
            (
                big_f.clone(),
                [
                    [-(&al * (&bs * &z1 - &aa * &qq)), &aa * &al * &g],
                    [eta.clone(), (&eta * &fp + &al * &qq * &big_f) / &den],
                    [-(&al * (&aa * &z1 - &bs * &qq)), &bs * &al * &g],
                ],
            )
        }
        FamilyId::HypIiGammaNe1 => {
            b.nonzero("eta", 1.0)?;
            let g = b.nonzero("gamma", 2.0)?;
            if g == 1.0 {
                return b.fail("γ ≠ 1 (γ = 1 is the Hyp_ii_gamma1 family)");
            }
            let d = b.nonzero("delta", 1.0)?;
            b.nonzero("nu", 1.0)?;
            b.value("beta", 1.0);
            let s = b.sign()?;
            let target = (g - 1.0) / (d * d);
            let (a, bb) = match (input.get("A"), input.get("B")) {
                (Some(a), Some(bb)) => (a, bb),
                (Some(a), None) => {
                    let r = a * a - target;
                    if r < 0.0 {
                        return b.fail(format!("A² − (γ − 1)/δ² ≥ 0 needed to solve for B, got {r}"));
                    }
                    (a, r.sqrt())
                }
                (None, Some(bb)) => {
                    let r = bb * bb + target;
                    if r < 0.0 {
                        return b.fail(format!("B² + (γ − 1)/δ² ≥ 0 needed to solve for A, got {r}"));
                    }
                    (r.sqrt(), bb)
                }
                (None, None) => {
                    let a = (target.max(0.0) + 1.0).sqrt();
                    (a, (a * a - target).sqrt())
                }
            };
            let lhs = a * a - bb * bb;
            if (lhs - target).abs() > 1e-9 * target.abs().max(1.0) {
                return b.fail(format!("A² − B² = (γ − 1)/δ² (A² − B² = {lhs}, (γ − 1)/δ² = {target})"));
            }
            b.params.insert("A".into(), a);
            b.params.insert("B".into(), bb);
            let sg = Expr::int(s as i64);
            let disc = p("beta") + p("gamma") * &z1 * &z1;
            domain.push(disc.clone());
            let root = disc.sqrt();
            let dl = p("delta");
            let ex = (&dl * &z0).exp();
            let k = &dl * &dl / (p("gamma") - 1);
            let top = &sg * &dl * p("nu") * &ex;
            (
                p("nu") * &ex * &root,
                [
                    [&eta * p("A") * &dl - (p("B") * &z1 - &sg * p("A") * &root) * &k, p("A") * &top],
                    [eta.clone(), &sg * p("nu") * &ex],
                    [&eta * p("B") * &dl - (p("A") * &z1 - &sg * p("B") * &root) * &k, p("B") * &top],
                ],
            )
        }
        FamilyId::HypIiGamma1 => {
            b.nonzero("eta", 1.0)?;
            b.nonzero("delta", 1.0)?;
            b.nonzero("nu", 1.0)?;
            b.nonzero("A", 1.0)?;
            let s = b.sign()?;
            b.params.insert("gamma".into(), 1.0);
            b.params.insert("beta".into(), 0.0);
            let sg = Expr::int(s as i64);
            // √(z1²) = s·z1 only on the half-space s·z1 > 0.
            domain.push(&sg * &z1);
            let (aa, dl) = (p("A"), p("delta"));
            let ex = (&dl * &z0).exp();
            let top = &aa * &dl * p("nu") * &ex;
            (
                p("nu") * &ex * (&z1 * &z1).sqrt(),
                [
                    [&half * (Expr::one() / &aa + &dl * &dl * &aa) * &z1 + &eta * &dl * &aa, &sg * &top],
                    [eta.clone(), &sg * p("nu") * &ex],
                    [&half * (-(Expr::one() / &aa) + &dl * &dl * &aa) * &z1 + &eta * &dl * &aa, &sg * &top],
                ],
            )
        }
        FamilyId::HypIiiZero => {
            b.nonzero("eta", 1.0)?;
            for k in ["lambda", "xi", "tau"] {
                b.params.insert(k.into(), 0.0);
            }
            let ez = z0.clone().exp();
            (Expr::zero(), [[z1.clone(), Expr::zero()], [eta.clone(), ez.clone()], [eta.clone(), ez]])
        }
        FamilyId::HypIiiLambda => {
            b.nonzero("eta", 1.0)?;
            b.nonzero("lambda", 1.0)?;
            b.nonzero("T", 1.0)?;
            let xi = input.get("xi").or_else(|| input.get("zeta")).unwrap_or(0.0);
            b.params.insert("xi".into(), xi);
            b.value("tau", 0.0);
            let s = b.sign()?;
            let sg = Expr::int(s as i64);
            let (lam, tt, tau) = (p("lambda"), p("T"), p("tau"));
            let f12 = &tt * &z0 + &tau * &tt / &lam;
            (
                &lam * &z0 + p("xi") * &z1 + &tau,
                [
                    [&sg * &eta * &tt * &z1 / &lam, f12.clone()],
                    [eta.clone(), &lam / &eta - &sg * p("xi")],
                    [&eta * &tt * &z1 / &lam, &sg * f12],
                ],
            )
        }
        FamilyId::HypIiiXiTau => {
            b.nonzero("eta", 1.0)?;
            b.params.insert("lambda".into(), 0.0);
            let xi = input.get("xi").or_else(|| input.get("zeta")).unwrap_or(1.0);
            b.params.insert("xi".into(), xi);
            let tau = b.value("tau", 1.0);
            if xi == 0.0 && tau == 0.0 {
                return b.fail("ξ² + τ² ≠ 0");
            }
            let lin = p("xi") * &z1 + p("tau");
            let prim = if xi != 0.0 {
                domain.push(lin.clone());
                lin.clone().log() / p("xi")
            } else {
                &z1 / p("tau")
            };
            let inv = Expr::one() / &eta;
            (lin, [[prim.clone(), inv.clone()], [eta.clone(), Expr::zero()], [prim, inv]])
        }
        FamilyId::EvoHlNonzero => {
            b.nonzero("eta", 1.0)?;
            let alpha = b.value("alpha", 0.0);
            if alpha * alpha >= 1.0 {
                return b.fail(format!("α² < 1 (α = {alpha})"));
            }
            let s = b.sign()?;
            let f11 = b.user_expr("f11", "z0");
            let f22 = b.user_expr("f22", "z0");
            for (n, e) in [("f11", &f11), ("f22", &f22)] {
                if !only_vars(e, &[Var::z(0)]) {
                    return b.fail(format!("{n} may depend on z0 only, got {e}"));
                }
            }
            let zt = ZeroTest::default().with_params(&b.params);
            if zt.check(&f11.dz(0))?.is_zero() {
                return b.fail("f11,z0 ≠ 0");
            }
            if zt.check(&f22.dz(0))?.is_zero() {
                return b.fail("f22,z0 ≠ 0");
            }
            let (f, rhs) = evo_hl_nonzero_table(&f11, &f22, s);
            if let Some(user31) = input.exprs.get("f31") {
                if !zt.check(&(user31 - &f[2][0]))?.is_zero() {
                    return b.fail(format!("f31 = αf11 ± η√(1 − α²), got f31 = {user31}"));
                }
            }
            (rhs, f)
        }
        FamilyId::EvoHlZero => {
            b.nonzero("eta", 1.0)?;
            b.value("lambda", 1.0);
            let s = b.sign()?;
            let f11 = b.user_expr("f11", "z0");
            let f12 = b.user_expr("f12", "z1");
            if !only_vars(&f11, &[Var::z(0)]) {
                return b.fail(format!("f11 may depend on z0 only, got {f11}"));
            }
            if !only_vars(&f12, &[Var::z(0), Var::z(1)]) {
                return b.fail(format!("f12 may depend on z0, z1 only, got {f12}"));
            }
            let zt = ZeroTest::default().with_params(&b.params);
            if zt.check(&f11.dz(0))?.is_zero() {
                return b.fail("f11,z0 ≠ 0");
            }
            if zt.check(&f12.dz(1))?.is_zero() {
                return b.fail("f12,z1 ≠ 0 (otherwise the equation is not of second order)");
            }
            let (f, rhs) = evo_hl_zero_table(&f11, &f12, s);
            (rhs, f)
        }
    };

    let rhs = rhs.simplify();
    let ctx = if id.is_evolution() { EquationContext::evolution(rhs.clone())? } else { EquationContext::hyperbolic(rhs.clone())? };
    let f = f.map(|row| row.map(|e| e.simplify()));
    let spec = FamilySpec { id, params: b.params, fkind, rhs, f, ctx, domain, report: b.report };
    if id.is_evolution() {
        let (_, notes) = validate_evolution_constraints(&spec)?;
        let mut spec = spec;
        spec.report.extend(notes);
        return Ok(spec);
    }
    Ok(spec)
}

fn sqrt_one_minus_alpha2() -> Expr {
    (Expr::one() - p("alpha") * p("alpha")).sqrt()
}

/// Coefficients and `F` for `HL ≠ 0` from `f11(z0)`, `f22(z0)`.
fn evo_hl_nonzero_table(f11: &Expr, f22: &Expr, s: f64) -> ([[Expr; 2]; 3], Expr) {
    let (eta, al) = (p("eta"), p("alpha"));
    let sg = Expr::int(s as i64);
    let r = sqrt_one_minus_alpha2();
    let z1 = Expr::z(1);
    let f31 = &al * f11 + &sg * &eta * &r;
    let f22p = f22.dz(0);
    let f12 = f11 * f22 / &eta - &sg * &f22p * &z1 / (&eta * &r);
    let f32 = &f31 * f22 / &eta - &sg * &al * &f22p * &z1 / (&eta * &r);
    let rhs = eet1(f11, f22, &f31, s);
    ([[f11.clone(), f12], [eta, f22.clone()], [f31, f32]], rhs)
}

fn eet1(f11: &Expr, f22: &Expr, f31: &Expr, s: f64) -> Expr {
    let (eta, al) = (p("eta"), p("alpha"));
    let sg = Expr::int(s as i64);
    let r = sqrt_one_minus_alpha2();
    let (z1, z2) = (Expr::z(1), Expr::z(2));
    let f11p = f11.dz(0);
    let f22p = f22.dz(0);
    let f22pp = f22p.dz(0);
    let lead = &eta * &r * &f11p;
    let bracket = (Expr::one() - &al * &al) * f11 - &sg * &al * &eta * &r;
    let lin = (&eta * &eta + f11 * f11 - f31 * f31) * &f22p / (&eta * bracket * &f11p) + f22 / &eta;
    (-(&sg * &f22p * z2 / &lead) - &sg * &f22pp * &z1 * &z1 / &lead + lin * &z1).simplify()
}

/// Coefficients and `F` for `f31 = ±f11` from `f11(z0)`, `f12(z0, z1)`.
fn evo_hl_zero_table(f11: &Expr, f12: &Expr, s: f64) -> ([[Expr; 2]; 3], Expr) {
    let sg = Expr::int(s as i64);
    let rhs = eet2(f11, f12, s);
    ([[f11.clone(), f12.clone()], [p("eta"), p("lambda")], [&sg * f11, &sg * f12]], rhs)
}

fn eet2(f11: &Expr, f12: &Expr, s: f64) -> Expr {
    let sg = Expr::int(s as i64);
    let f11p = f11.dz(0);
    (f12.dz(1) / &f11p * Expr::z(2) + f12.dz(0) / &f11p * Expr::z(1) - sg * (p("lambda") * f11 - p("eta") * f12) / &f11p).simplify()
}

/// Regenerate `F` from the coefficient table of a built family.
pub fn generate_f(spec: &FamilySpec) -> Expr {
    match spec.id {
        FamilyId::EvoHlNonzero => eet1(&spec.f[0][0], &spec.f[1][1], &spec.f[2][0], spec.sign()),
        FamilyId::EvoHlZero => eet2(&spec.f[0][0], &spec.f[0][1], spec.sign()),
        FamilyId::SgBasic | FamilyId::SgEta => Expr::z(0).sin(),
        FamilyId::HypIGeneral | FamilyId::HypIQa => spec.fkind.unwrap_or(FKind::Sin).rhs(),
        FamilyId::HypIiGammaNe1 | FamilyId::HypIiGamma1 => {
            let disc = if spec.id == FamilyId::HypIiGamma1 { Expr::z(1) * Expr::z(1) } else { p("beta") + p("gamma") * Expr::z(1) * Expr::z(1) };
            (p("nu") * (p("delta") * Expr::z(0)).exp() * disc.sqrt()).simplify()
        }
        FamilyId::HypIiiZero => Expr::zero(),
        FamilyId::HypIiiLambda => (p("lambda") * Expr::z(0) + p("xi") * Expr::z(1) + p("tau")).simplify(),
        FamilyId::HypIiiXiTau => (p("xi") * Expr::z(1) + p("tau")).simplify(),
    }
}

#[derive(Clone, Debug)]
pub struct HlpmQuantities {
    pub h: Expr,
    pub l: Expr,
    pub p: Expr,
    pub m: Expr,
}

/// `H = f11 f11' − f31 f31'`, `L = f11 f31' − f31 f11'`, `P = f11' f31'' − f31' f11''`,
/// `M = f31'² − f11'²` (primes are `∂/∂z0`).
pub fn hlpm(f11: &Expr, f31: &Expr) -> HlpmQuantities {
    let (a1, b1) = (f11.dz(0), f31.dz(0));
    let (a2, b2) = (a1.dz(0), b1.dz(0));
    HlpmQuantities {
        h: (f11 * &a1 - f31 * &b1).simplify(),
        l: (f11 * &b1 - f31 * &a1).simplify(),
        p: (&a1 * &b2 - &b1 * &a2).simplify(),
        m: (&b1 * &b1 - &a1 * &a1).simplify(),
    }
}

/// Check the defining relations of an evolution family and return `H, L, P, M`
/// with a list of the relations that were verified.
pub fn validate_evolution_constraints(spec: &FamilySpec) -> Result<(HlpmQuantities, Vec<String>), CatalogError> {
    if !spec.id.is_evolution() {
        return Err(CatalogError::NotEvolution(spec.id));
    }
    let zt = spec.zero_test();
    let fail = |relation: String| CatalogError::Constraint { family: spec.id, relation };
    let f = &spec.f;
    let (f11, f31) = (&f[0][0], &f[2][0]);
    let q = hlpm(f11, f31);
    let mut notes = Vec::new();

    // (NC1) and (NC2)
    for row in f {
        for e in row {
            if !zt.check(&e.dz(2))?.is_zero() {
                return Err(fail(format!("f_ij,z2 = 0 fails for {e}")));
            }
        }
    }
    for (n, e) in [("f11", f11), ("f31", f31), ("f22", &f[1][1])] {
        if !zt.check(&e.dz(1))?.is_zero() {
            return Err(fail(format!("{n},z1 = 0")));
        }
    }
    let nc2 = f11.dz(0).powi(2) + f31.dz(0).powi(2);
    if zt.check(&nc2)?.is_zero() {
        return Err(fail("f11,z0² + f31,z0² ≠ 0".into()));
    }
    notes.push("NC1, NC2 hold".into());

    let eta = p("eta");
    match spec.id {
        FamilyId::EvoHlNonzero => {
            let alpha = spec.param("alpha");
            if alpha * alpha >= 1.0 {
                return Err(fail(format!("α² < 1 (α = {alpha})")));
            }
            if zt.check(&(&q.h * &q.l))?.is_zero() {
                return Err(fail("HL ≠ 0".into()));
            }
            if !zt.check(&q.p)?.is_zero() {
                return Err(fail("P = 0".into()));
            }
            if !zt.check(&(&q.m + &q.l * &q.l / (&eta * &eta)))?.is_zero() {
                return Err(fail("M = −L²/η²".into()));
            }
            let s = spec.sign();
            let (want, _) = evo_hl_nonzero_table(f11, &f[1][1], s);
            for (i, j, name) in [(2, 0, "f31"), (0, 1, "f12"), (2, 1, "f32")] {
                if !zt.check(&(&f[i][j] - &want[i][j]))?.is_zero() {
                    return Err(fail(format!("{name} does not match its defining formula")));
                }
            }
            notes.push("HL ≠ 0, P = 0, M = −L²/η², α² < 1".into());
        }
        FamilyId::EvoHlZero => {
            let s = spec.sign();
            if !zt.check(&q.l)?.is_zero() {
                return Err(fail("L = 0".into()));
            }
            if !zt.check(&(f31 - Expr::int(s as i64) * f11))?.is_zero() {
                return Err(fail("f31 = ±f11".into()));
            }
            if zt.check(f11)?.is_zero() {
                return Err(fail("f11 ≠ 0".into()));
            }
            if !f[1][1].vars().iter().all(|v| matches!(v, Var::Param(_))) {
                return Err(fail("f22 = λ constant".into()));
            }
            if !zt.check(&(&f[2][1] - Expr::int(s as i64) * &f[0][1]))?.is_zero() {
                return Err(fail("f32 = ±f12".into()));
            }
            if zt.check(&f[0][1].dz(1))?.is_zero() {
                return Err(fail("f12,z1 ≠ 0 (the equation would not be of second order)".into()));
            }
            notes.push("L = 0, f22 = λ, f32 = ±f12".into());
        }
        _ => unreachable!(),
    }
    if !zt.check(&(&spec.rhs - generate_f(spec)))?.is_zero() {
        return Err(fail("F does not match the generated right-hand side".into()));
    }
    Ok((q, notes))
}

/// Random admissible parameters for a family, used by property sweeps.
pub fn random_params<R: Rng>(id: FamilyId, rng: &mut R) -> FamilyParams {
    let mut fp = FamilyParams::new();
    let nz = |rng: &mut R, lo: f64, hi: f64| -> f64 {
        let v: f64 = rng.gen_range(lo..hi);
        if rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    if id.is_eta_family() {
        fp = fp.set("eta", nz(rng, 0.5, 2.0));
    }
    let pick = |rng: &mut R, xs: &[&str]| crate::expr::parse(xs[rng.gen_range(0..xs.len())]).unwrap();
    match id {
        FamilyId::SgBasic | FamilyId::SgEta | FamilyId::HypIiiZero => {}
        FamilyId::EvoHlNonzero => {
            fp = fp
                .set("alpha", rng.gen_range(-0.8..0.8))
                .set("sign", sign)
                .expr("f11", pick(rng, &["z0", "exp(z0)", "z0^2 + 1", "sinh(z0)", "2*z0 + 1"]))
                .expr("f22", pick(rng, &["z0", "z0^2 + 1", "sin(z0)", "exp(z0/2)", "z0^3"]));
        }
        FamilyId::EvoHlZero => {
            fp = fp
                .set("lambda", rng.gen_range(-2.0..2.0))
                .set("sign", sign)
                .expr("f11", pick(rng, &["z0", "exp(z0)", "z0^2 + 1", "sinh(z0)"]))
                .expr("f12", pick(rng, &["z1", "z0*z1 + z1^2", "exp(z1)", "z1^3 + z0", "sin(z0)*z1"]));
        }
        FamilyId::HypIGeneral => loop {
            let a = nz(rng, 0.3, 2.0);
            let b = nz(rng, 0.0, 2.0);
            if (a * a - b * b).abs() > 0.25 {
                let alpha = 1.0 / (a * a - b * b);
                let kinds: &[FKind] = if alpha > 0.0 { &[FKind::Sin, FKind::Cos] } else { &[FKind::Sinh, FKind::Cosh, FKind::Exp, FKind::ExpNeg] };
                fp = fp.set("A", a).set("B", b).set("Q", rng.gen_range(-1.5..1.5)).fkind(kinds[rng.gen_range(0..kinds.len())]);
                break;
            }
        },
        FamilyId::HypIQa => {
            let k = if rng.gen_bool(0.5) { FKind::Sin } else { FKind::Cos };
            fp = fp.set("A", nz(rng, 0.5, 2.0)).set("Q", rng.gen_range(-1.5..1.5)).fkind(k);
        }
        FamilyId::HypIiGammaNe1 => loop {
            let g = if rng.gen_bool(0.5) { rng.gen_range(0.2..0.9) } else { rng.gen_range(1.1..2.5) };
            let d = nz(rng, 0.6, 1.5);
            let a = nz(rng, 0.5, 2.0);
            let r = a * a - (g - 1.0) / (d * d);
            if r > 0.05 {
                let b = if rng.gen_bool(0.5) { r.sqrt() } else { -r.sqrt() };
                fp = fp
                    .set("gamma", g)
                    .set("delta", d)
                    .set("A", a)
                    .set("B", b)
                    .set("nu", nz(rng, 0.5, 2.0))
                    .set("beta", rng.gen_range(0.2..2.0))
                    .set("sign", sign);
                break;
            }
        },
        FamilyId::HypIiGamma1 => {
            fp = fp.set("delta", nz(rng, 0.5, 1.5)).set("nu", nz(rng, 0.5, 2.0)).set("A", nz(rng, 0.5, 2.0)).set("sign", sign);
        }
        FamilyId::HypIiiLambda => {
            fp = fp
                .set("lambda", nz(rng, 0.3, 2.0))
                .set("xi", rng.gen_range(-2.0..2.0))
                .set("tau", rng.gen_range(-2.0..2.0))
                .set("T", nz(rng, 0.3, 2.0))
                .set("sign", sign);
        }
        FamilyId::HypIiiXiTau => {
            let xi = if rng.gen_bool(0.2) { 0.0 } else { nz(rng, 0.3, 2.0) };
            fp = fp.set("xi", xi).set("tau", nz(rng, 0.3, 2.0));
        }
    }
    fp
}
