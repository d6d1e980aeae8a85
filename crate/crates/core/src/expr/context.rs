//! Equation contexts and total derivatives.
//!
//! A context decides which jets are canonical and rewrites the others through the
//! equation. Hyperbolic `u_xt = F(u, u_x)` keeps the pure jets `z_i`, `w_j`; evolution
//! `u_t = F(u, ..., u_{x^k})` keeps only `z_i`. The free context keeps every jet and
//! is used for off-shell computations.

use thiserror::Error;

use super::{Expr, Jet, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContextError {
    #[error("prolongation of {jet} needs depth {needed}, context allows {max}")]
    DepthExceeded { jet: String, needed: u32, max: u32 },
    #[error("invalid right-hand side: {0}")]
    InvalidRhs(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum EquationKind {
    Free,
    Evolution { order: u32 },
    Hyperbolic,
}

#[derive(Clone, Debug)]
pub struct EquationContext {
    kind: EquationKind,
    rhs: Expr,
    max_depth: u32,
}

pub const DEFAULT_MAX_DEPTH: u32 = 4;

impl EquationContext {
    /// Off-shell context: every jet is independent.
    pub fn free() -> EquationContext {
        EquationContext { kind: EquationKind::Free, rhs: Expr::zero(), max_depth: u32::MAX }
    }

    /// `u_xt = rhs` with `rhs` depending on `z0`, `z1` and parameters only.
    pub fn hyperbolic(rhs: Expr) -> Result<EquationContext, ContextError> {
        for v in rhs.vars() {
            match v {
                Var::Param(_) => {}
                Var::Jet(j) if j == Jet::z(0) || j == Jet::z(1) => {}
                other => {
                    return Err(ContextError::InvalidRhs(format!(
                        "hyperbolic right-hand side may use only z0, z1 and parameters, found {other}"
                    )))
                }
            }
        }
        Ok(EquationContext { kind: EquationKind::Hyperbolic, rhs: rhs.simplify(), max_depth: DEFAULT_MAX_DEPTH })
    }

    /// `u_t = rhs` with `rhs` over `z0..zk` and parameters.
    pub fn evolution(rhs: Expr) -> Result<EquationContext, ContextError> {
        let mut order = 0;
        for v in rhs.vars() {
            match v {
                Var::Param(_) => {}
                Var::Jet(j) if j.t == 0 => order = order.max(j.x),
                other => {
                    return Err(ContextError::InvalidRhs(format!(
                        "evolution right-hand side may use only z_i and parameters, found {other}"
                    )))
                }
            }
        }
        Ok(EquationContext { kind: EquationKind::Evolution { order }, rhs: rhs.simplify(), max_depth: DEFAULT_MAX_DEPTH })
    }

    pub fn with_max_depth(mut self, depth: u32) -> EquationContext {
        self.max_depth = depth;
        self
    }

    pub fn kind(&self) -> &EquationKind {
        &self.kind
    }

    pub fn rhs(&self) -> &Expr {
        &self.rhs
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn is_free(&self) -> bool {
        self.kind == EquationKind::Free
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.kind == EquationKind::Hyperbolic
    }

    pub fn is_evolution(&self) -> bool {
        matches!(self.kind, EquationKind::Evolution { .. })
    }

    /// Jets that remain free coordinates in this context.
    pub fn is_canonical(&self, j: Jet) -> bool {
        match self.kind {
            EquationKind::Free => true,
            EquationKind::Hyperbolic => j.x == 0 || j.t == 0,
            EquationKind::Evolution { .. } => j.t == 0,
        }
    }

    /// Rewrite a single jet into canonical coordinates.
    pub fn reduce_jet(&self, j: Jet) -> Result<Expr, ContextError> {
        if self.is_canonical(j) {
            return Ok(Expr::jet(j));
        }
        let depth = match self.kind {
            EquationKind::Hyperbolic => j.x + j.t - 2,
            _ => j.t,
        };
        if depth > self.max_depth {
            return Err(ContextError::DepthExceeded { jet: j.to_string(), needed: depth, max: self.max_depth });
        }
        match self.kind {
            EquationKind::Free => unreachable!(),
            EquationKind::Hyperbolic => {
                if j.x == 1 && j.t == 1 {
                    Ok(self.rhs.clone())
                } else if j.x > 1 {
                    self.total_x(&self.reduce_jet(Jet { x: j.x - 1, t: j.t })?)
                } else {
                    self.total_t(&self.reduce_jet(Jet { x: 1, t: j.t - 1 })?)
                }
            }
            EquationKind::Evolution { .. } => {
                let mut e = if j.t == 1 { self.rhs.clone() } else { self.total_t(&self.reduce_jet(Jet::w(j.t - 1))?)? };
                for _ in 0..j.x {
                    e = self.total_x(&e)?;
                }
                Ok(e)
            }
        }
    }

    /// Replace every non-canonical jet of `e`.
    pub fn reduce(&self, e: &Expr) -> Result<Expr, ContextError> {
        let mut subs: Vec<(Var, Expr)> = Vec::new();
        for j in e.jets() {
            if !self.is_canonical(j) {
                subs.push((Var::Jet(j), self.reduce_jet(j)?));
            }
        }
        if subs.is_empty() {
            return Ok(e.clone());
        }
        Ok(e.subst_with(&|v| subs.iter().find(|(w, _)| w == v).map(|(_, r)| r.clone())).simplify())
    }

    fn total(&self, e: &Expr, indep: Var, step: fn(Jet) -> Jet) -> Result<Expr, ContextError> {
        let mut terms = vec![e.partial(&indep)];
        for j in e.jets() {
            let de = e.partial(&Var::Jet(j));
            if de.is_literal_zero() {
                continue;
            }
            terms.push(de * self.reduce_jet(step(j))?);
        }
        Ok(Expr::sum(terms).simplify())
    }

    /// Total derivative `D_x`.
    pub fn total_x(&self, e: &Expr) -> Result<Expr, ContextError> {
        self.total(e, Var::X, |j| Jet { x: j.x + 1, t: j.t })
    }

    /// Total derivative `D_t`.
    pub fn total_t(&self, e: &Expr) -> Result<Expr, ContextError> {
        self.total(e, Var::T, |j| Jet { x: j.x, t: j.t + 1 })
    }
}
