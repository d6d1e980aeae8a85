//! Second fundamental forms `ω^3_1 = aω1 + bω2`, `ω^3_2 = bω1 + cω2`, the Gauss and
//! Codazzi equations, the known closed-form families and the finite-jet obstruction
//! analyzer.

mod obstruction;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{FamilyId, FamilySpec};
use crate::expr::{ContextError, Expr, Point, Var, ZeroError, ZeroTest};
use crate::forms::{delta, PssTriple};

pub use obstruction::{finite_jet_obstruction, BranchResult, ObstructionVerdict, Outcome, Rule, TraceStep};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SffError {
    #[error("{0} admits no local isometric immersion whose second fundamental form depends on a finite jet")]
    NoImmersion(FamilyId),
    #[error("invalid strip: need l > 0 and l² > 4γ² (l = {l}, γ = {gamma})")]
    InvalidStrip { l: f64, gamma: f64 },
    #[error("jet order {0} is not supported by the analyzer (only 0 and 1)")]
    UnsupportedOrder(u32),
    #[error("parameter `{0}` has no value")]
    MissingParam(String),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

/// Open strip `lower < sign·(p x + q t) < upper` where `a` is real.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainStrip {
    pub sign: f64,
    pub p: Expr,
    pub q: Expr,
    pub lower: Expr,
    pub upper: Expr,
}

impl DomainStrip {
    /// The strip of the universal family with exponent `2·sign·(p x + q t)`.
    pub fn universal(sign: f64, p: Expr, q: Expr) -> DomainStrip {
        let l = Expr::param("l");
        let g2 = Expr::param("gamma_im").powi(2);
        let root = (&l * &l - Expr::int(4) * &g2).sqrt();
        let bound = |r: Expr| ((&l + r) / (Expr::int(2) * &g2)).sqrt().log();
        DomainStrip { sign, p, q, lower: bound(-root.clone()), upper: bound(root) }
    }

    /// `sign·(p x + q t)` as an expression.
    pub fn linear_form(&self) -> Expr {
        (crate::expr::number(self.sign) * (&self.p * Expr::x() + &self.q * Expr::t())).simplify()
    }

    /// Numeric bounds; `γ = 0` gives `(−½ log l, ∞)`.
    pub fn bounds(&self, params: &BTreeMap<String, f64>) -> Result<(f64, f64), SffError> {
        let l = *params.get("l").ok_or_else(|| SffError::MissingParam("l".into()))?;
        let g = *params.get("gamma_im").ok_or_else(|| SffError::MissingParam("gamma_im".into()))?;
        check_strip(l, g)?;
        if g == 0.0 {
            return Ok((-0.5 * l.ln(), f64::INFINITY));
        }
        let root = (l * l - 4.0 * g * g).sqrt();
        let b = |r: f64| ((l + r) / (2.0 * g * g)).sqrt().ln();
        Ok((b(-root), b(root)))
    }

    fn pq(&self, params: &BTreeMap<String, f64>) -> Result<(f64, f64), SffError> {
        let pt = point_of(params);
        let ev = |e: &Expr, n: &str| e.eval(&pt).map_err(|_| SffError::MissingParam(n.into()));
        Ok((ev(&self.p, "p")?, ev(&self.q, "q")?))
    }

    /// Sampler drawing `(x, t)` inside the strip, away from its edges.
    pub fn sampler(&self, params: &BTreeMap<String, f64>, xt_range: (f64, f64)) -> Result<crate::expr::Sampler, SffError> {
        let (lo, hi) = self.bounds(params)?;
        let hi = if hi.is_finite() { hi } else { lo + 3.0 };
        let w = hi - lo;
        let (lo, hi) = (lo + 0.05 * w, hi - 0.05 * w);
        let (p, q) = self.pq(params)?;
        let sign = self.sign;
        Ok(Arc::new(move |rng| {
            let s = sign * rng.gen_range(lo..hi);
            let r = rng.gen_range(xt_range.0..xt_range.1);
            if q.abs() >= p.abs() {
                (r, (s - p * r) / q)
            } else {
                ((s - q * r) / p, r)
            }
        }))
    }
}

fn check_strip(l: f64, g: f64) -> Result<(), SffError> {
    if l > 0.0 && l * l > 4.0 * g * g {
        Ok(())
    } else {
        Err(SffError::InvalidStrip { l, gamma: g })
    }
}

fn point_of(params: &BTreeMap<String, f64>) -> Point {
    let mut p = Point::new();
    for (k, v) in params {
        p.set(Var::param(k), *v);
    }
    p
}

/// Whether `(x, t)` lies in the open strip.
pub fn strip_contains(strip: &DomainStrip, x: f64, t: f64, params: &BTreeMap<String, f64>) -> Result<bool, SffError> {
    let (lo, hi) = strip.bounds(params)?;
    let (p, q) = strip.pq(params)?;
    let s = strip.sign * (p * x + q * t);
    Ok(lo < s && s < hi)
}

#[derive(Clone, Debug)]
pub struct SecondFundamentalForm {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub jet_order: u32,
    pub strip: Option<DomainStrip>,
    /// Values of the immersion constants (`l`, `gamma_im`).
    pub params: BTreeMap<String, f64>,
}

impl SecondFundamentalForm {
    pub fn new(a: Expr, b: Expr, c: Expr) -> SecondFundamentalForm {
        let jet_order = [&a, &b, &c].iter().flat_map(|e| e.jets()).map(|j| j.x + j.t).max().unwrap_or(0);
        SecondFundamentalForm { a: a.simplify(), b: b.simplify(), c: c.simplify(), jet_order, strip: None, params: BTreeMap::new() }
    }

    pub fn with_strip(mut self, strip: DomainStrip, params: BTreeMap<String, f64>) -> SecondFundamentalForm {
        self.strip = Some(strip);
        self.params = params;
        self
    }

    /// `(a, b, c)` depend on `x, t` only.
    pub fn is_universal(&self) -> bool {
        [&self.a, &self.b, &self.c].iter().all(|e| e.jets().is_empty())
    }

    pub fn components(&self) -> [&Expr; 3] {
        [&self.a, &self.b, &self.c]
    }

    /// Replace `(a, b, c)` by `(ka, kb, kc)`.
    pub fn scaled(&self, k: f64) -> SecondFundamentalForm {
        let k = crate::expr::number(k);
        SecondFundamentalForm {
            a: (&k * &self.a).simplify(),
            b: (&k * &self.b).simplify(),
            c: (&k * &self.c).simplify(),
            ..self.clone()
        }
    }

    /// Zero test over the triple's parameters and domain, sampling inside the strip.
    pub fn zero_test(&self, tr: &PssTriple) -> Result<ZeroTest, SffError> {
        let mut zt = tr.zero_test().with_params(&self.params);
        if let Some(strip) = &self.strip {
            let mut all = tr.params.clone();
            all.extend(self.params.clone());
            let range = zt.xt_range;
            zt = zt.with_sampler(strip.sampler(&all, range)?);
        }
        Ok(zt)
    }
}

/// `a c − b² + 1`.
pub fn gauss_residual(s: &SecondFundamentalForm) -> Expr {
    (&s.a * &s.c - &s.b * &s.b + Expr::one()).simplify()
}

/// Codazzi residuals `(E1, E2)` with total derivatives taken on-shell.
pub fn codazzi_residuals(tr: &PssTriple, s: &SecondFundamentalForm) -> Result<[Expr; 2], SffError> {
    let ctx = &tr.ctx;
    let (a, b, c) = (&s.a, &s.b, &s.c);
    let (f11, f12, f21, f22) = (tr.f(1, 1), tr.f(1, 2), tr.f(2, 1), tr.f(2, 2));
    let d13 = delta(tr, 1, 3);
    let d23 = delta(tr, 2, 3);
    let (dta, dtb, dtc) = (ctx.total_t(a)?, ctx.total_t(b)?, ctx.total_t(c)?);
    let (dxa, dxb, dxc) = (ctx.total_x(a)?, ctx.total_x(b)?, ctx.total_x(c)?);
    let two = Expr::int(2);
    let e1 = f11 * &dta + f21 * &dtb - f12 * &dxa - f22 * &dxb - &two * b * &d13 + (a - c) * &d23;
    let e2 = f11 * &dtb + f21 * &dtc - f12 * &dxb - f22 * &dxc + (a - c) * &d13 + &two * b * &d23;
    Ok([ctx.reduce(&e1)?, ctx.reduce(&e2)?])
}

/// Immersion constants for the closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImmersionParams {
    /// Overall sign of `(a, b, c)` where the family allows both.
    pub sign: f64,
    pub l: f64,
    pub gamma_im: f64,
}

impl Default for ImmersionParams {
    fn default() -> Self {
        ImmersionParams { sign: 1.0, l: 3.0, gamma_im: 1.0 }
    }
}

fn p(name: &str) -> Expr {
    Expr::param(name)
}

/// `(a, b, c)` for `F'' + αF = 0` with `f11 = αAQ` and `f31 = −αA z1`.
fn oscillator_sff(s: f64, aa: Expr, al: Expr, q: Expr, eta: Expr, f: &Expr) -> SecondFundamentalForm {
    let sg = Expr::int(s as i64);
    let fp = f.dz(0);
    let den = &q * &q * &al + &eta * &eta;
    let ratio = &fp / f;
    let a = &sg * Expr::int(2) * &eta / (&aa * &den) * (&eta * &ratio / &al + &q);
    let b = -(&sg / &den) * (Expr::int(2) * &eta * &q * &ratio + &q * &q * &al - &eta * &eta);
    let c = &sg * Expr::int(2) * &q * &aa * &al / &den * (&q * &ratio - &eta);
    SecondFundamentalForm::new(a, b, c)
}

/// `b = γ L`, `a = √(l L − γ² L² − 1)`, `c = (b² − 1)/a` with `L = e^{2·sign·(p x + q t)}`.
pub fn universal_sff(sign: f64, pcoef: Expr, qcoef: Expr, l: f64, gamma_im: f64) -> Result<SecondFundamentalForm, SffError> {
    check_strip(l, gamma_im)?;
    let strip = DomainStrip::universal(sign, pcoef, qcoef);
    let big_l = (Expr::int(2) * strip.linear_form()).exp();
    let b = p("gamma_im") * &big_l;
    let a = (p("l") * &big_l - p("gamma_im").powi(2) * big_l.clone().powi(2) - Expr::one()).sqrt();
    let c = (b.clone().powi(2) - Expr::one()) / &a;
    let params = BTreeMap::from([("l".to_string(), l), ("gamma_im".to_string(), gamma_im)]);
    Ok(SecondFundamentalForm::new(a, b, c).with_strip(strip, params))
}

/// Closed-form `(a, b, c)` for the families that admit one.
pub fn closed_form(spec: &FamilySpec, imm: &ImmersionParams) -> Result<SecondFundamentalForm, SffError> {
    let s = if imm.sign < 0.0 { -1.0 } else { 1.0 };
    match spec.id {
        FamilyId::SgBasic => {
            let h = Expr::rat(1, 2) * Expr::z(0);
            Ok(SecondFundamentalForm::new(h.clone().tan(), Expr::zero(), -(h.clone().cos() / h.sin())).scaled(s))
        }
        FamilyId::SgEta => Ok(oscillator_sff(s, Expr::int(-1), Expr::one(), Expr::zero(), p("eta"), &spec.rhs)),
        FamilyId::HypIQa => Ok(oscillator_sff(s, p("A"), p("alpha"), p("Q"), p("eta"), &spec.rhs)),
        FamilyId::HypIGeneral if spec.param("B") == 0.0 => Ok(oscillator_sff(s, p("A"), p("alpha"), p("Q"), p("eta"), &spec.rhs)),
        FamilyId::EvoHlZero => universal_sff(spec.sign(), p("eta"), p("lambda"), imm.l, imm.gamma_im),
        FamilyId::HypIiiLambda => {
            let sf = spec.sign();
            universal_sff(sf, p("eta"), p("lambda") / p("eta") - crate::expr::number(sf) * p("xi"), imm.l, imm.gamma_im)
        }
        FamilyId::HypIiiXiTau => universal_sff(1.0, p("eta"), Expr::zero(), imm.l, imm.gamma_im),
        id => Err(SffError::NoImmersion(id)),
    }
}
