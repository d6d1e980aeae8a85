//! Triples of 1-forms `ω^i = f_i1 dx + f_i2 dt` and the structure equations
//! `dω1 = ω3∧ω2`, `dω2 = ω1∧ω3`, `dω3 = ω1∧ω2`.
//!
//! Orientation: `d(P dx + Q dt) = (D_x Q − D_t P) dx∧dt`, so the residuals are
//! `R1 = D_x f12 − D_t f11 − Δ32`, `R2 = D_x f22 − D_t f21 − Δ13`,
//! `R3 = D_x f32 − D_t f31 − Δ12`.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ContextError, EquationContext, Expr, ZeroError, ZeroTest, ZeroVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormsError {
    #[error("degenerate coframe: Δ12 vanishes identically")]
    Degenerate,
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub fx: Expr,
    pub ft: Expr,
}

impl OneForm {
    pub fn new(fx: Expr, ft: Expr) -> OneForm {
        OneForm { fx: fx.simplify(), ft: ft.simplify() }
    }

    /// Contract with a vector `v = v0 ∂_x + v1 ∂_t`.
    pub fn apply(&self, v: &[Expr; 2]) -> Expr {
        (&self.fx * &v[0] + &self.ft * &v[1]).simplify()
    }
}

/// Three 1-forms together with the equation they are meant to describe.
#[derive(Clone, Debug)]
pub struct PssTriple {
    pub forms: [OneForm; 3],
    pub ctx: EquationContext,
    /// Numeric values of the parameters appearing in the coefficients.
    pub params: BTreeMap<String, f64>,
    /// Expressions that must be positive where the forms are defined.
    pub domain: Vec<Expr>,
}

impl PssTriple {
    pub fn new(f: [[Expr; 2]; 3], ctx: EquationContext) -> PssTriple {
        let [[a, b], [c, d], [e, g]] = f;
        PssTriple {
            forms: [OneForm::new(a, b), OneForm::new(c, d), OneForm::new(e, g)],
            ctx,
            params: BTreeMap::new(),
            domain: Vec::new(),
        }
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> PssTriple {
        self.params = params;
        self
    }

    pub fn with_domain(mut self, domain: Vec<Expr>) -> PssTriple {
        self.domain = domain;
        self
    }

    /// Coefficient `f_ij` with 1-based indices, `j = 1` for `dx`, `j = 2` for `dt`.
    pub fn f(&self, i: usize, j: usize) -> &Expr {
        let w = &self.forms[i - 1];
        if j == 1 {
            &w.fx
        } else {
            &w.ft
        }
    }

    /// Replace one coefficient.
    pub fn with_f(mut self, i: usize, j: usize, e: Expr) -> PssTriple {
        let w = &mut self.forms[i - 1];
        if j == 1 {
            w.fx = e.simplify();
        } else {
            w.ft = e.simplify();
        }
        self
    }

    /// Zero test with this triple's parameters fixed and domain enforced.
    pub fn zero_test(&self) -> ZeroTest {
        ZeroTest::default().with_params(&self.params).with_domain(self.domain.iter().cloned())
    }

    /// Copy with the parameter values substituted into every coefficient.
    pub fn bind_params(&self) -> PssTriple {
        let mut out = self.clone();
        for w in out.forms.iter_mut() {
            w.fx = w.fx.bind_params(&self.params).simplify();
            w.ft = w.ft.bind_params(&self.params).simplify();
        }
        out.domain = self.domain.iter().map(|d| d.bind_params(&self.params).simplify()).collect();
        out
    }
}

/// `Δij = f_i1 f_j2 − f_j1 f_i2`.
pub fn delta(tr: &PssTriple, i: usize, j: usize) -> Expr {
    (tr.f(i, 1) * tr.f(j, 2) - tr.f(j, 1) * tr.f(i, 2)).simplify()
}

fn residuals_in(tr: &PssTriple, ctx: &EquationContext) -> Result<[Expr; 3], ContextError> {
    let r = |i: usize, a: usize, b: usize| -> Result<Expr, ContextError> {
        let dx = ctx.total_x(tr.f(i, 2))?;
        let dt = ctx.total_t(tr.f(i, 1))?;
        Ok((dx - dt - delta(tr, a, b)).simplify())
    };
    Ok([r(1, 3, 2)?, r(2, 1, 3)?, r(3, 1, 2)?])
}

/// Structure residuals with every jet independent (mixed derivatives kept as symbols).
pub fn structure_residuals(tr: &PssTriple) -> Result<[Expr; 3], ContextError> {
    residuals_in(tr, &EquationContext::free())
}

/// Structure residuals after rewriting through the triple's equation.
pub fn on_shell_residuals(tr: &PssTriple) -> Result<[Expr; 3], ContextError> {
    let off = structure_residuals(tr)?;
    Ok([tr.ctx.reduce(&off[0])?, tr.ctx.reduce(&off[1])?, tr.ctx.reduce(&off[2])?])
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub holds_mod_equation: bool,
    /// Some residual is nonzero before the equation is imposed.
    pub only_if: bool,
    pub nondegenerate: bool,
    /// Off-shell residuals that do not vanish identically.
    #[serde(serialize_with = "ser_exprs")]
    pub residual_factors: Vec<Expr>,
    pub on_shell: Vec<String>,
    pub off_shell: Vec<String>,
    pub error: Option<String>,
}

fn ser_exprs<S: serde::Serializer>(v: &[Expr], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|e| e.to_string()))
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.holds_mod_equation && self.only_if && self.nondegenerate && self.error.is_none()
    }
}

/// Check the structure equations on- and off-shell plus non-degeneracy.
pub fn verify_family(tr: &PssTriple) -> FamilyReport {
    verify_family_with(tr, &tr.zero_test())
}

pub fn verify_family_with(tr: &PssTriple, zt: &ZeroTest) -> FamilyReport {
    let mut rep = FamilyReport {
        holds_mod_equation: false,
        only_if: false,
        nondegenerate: false,
        residual_factors: Vec::new(),
        on_shell: Vec::new(),
        off_shell: Vec::new(),
        error: None,
    };
    let run = |rep: &mut FamilyReport| -> Result<(), FormsError> {
        let off = structure_residuals(tr)?;
        let mut any_off = false;
        for r in &off {
            let v = zt.check(r)?;
            if !v.is_zero() {
                any_off = true;
                rep.residual_factors.push(r.clone());
            }
            rep.off_shell.push(v.to_string());
        }
        rep.only_if = any_off;
        let mut all_on = true;
        for r in &off {
            let v = zt.check(&tr.ctx.reduce(r)?)?;
            all_on &= v.is_zero();
            rep.on_shell.push(v.to_string());
        }
        rep.holds_mod_equation = all_on;
        let d12 = zt.check(&delta(tr, 1, 2))?;
        let d13 = delta(tr, 1, 3);
        let d23 = delta(tr, 2, 3);
        let side = zt.check(&(&d13 * &d13 + &d23 * &d23))?;
        rep.nondegenerate = !d12.is_zero() && !side.is_zero();
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.error = Some(e.to_string());
    }
    rep
}

/// Frame dual to `(ω1, ω2)`, components in the `(∂_x, ∂_t)` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DualFrame {
    pub e1: [Expr; 2],
    pub e2: [Expr; 2],
}

/// `e1 = (f22, −f21)/Δ12`, `e2 = (−f12, f11)/Δ12`, with duality verified.
pub fn dual_frame(tr: &PssTriple) -> Result<DualFrame, FormsError> {
    let zt = tr.zero_test();
    let d12 = delta(tr, 1, 2);
    if zt.check(&d12)?.is_zero() {
        return Err(FormsError::Degenerate);
    }
    let e1 = [(tr.f(2, 2) / &d12).simplify(), (-tr.f(2, 1) / &d12).simplify()];
    let e2 = [(-tr.f(1, 2) / &d12).simplify(), (tr.f(1, 1) / &d12).simplify()];
    let frame = DualFrame { e1, e2 };
    for (i, w) in tr.forms[..2].iter().enumerate() {
        for (j, e) in [&frame.e1, &frame.e2].into_iter().enumerate() {
            let kron = if i == j { Expr::one() } else { Expr::zero() };
            let v = zt.check(&(w.apply(e) - kron))?;
            if let ZeroVerdict::NonZero(_) = v {
                return Err(FormsError::Degenerate);
            }
        }
    }
    Ok(frame)
}
