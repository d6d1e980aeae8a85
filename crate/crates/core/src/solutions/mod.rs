//! Exact and numerical solutions `u(x, t)` of the catalog equations.

mod goursat;
mod grid;
mod wave;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{Compiled, EquationContext, EquationKind, Expr, Jet, Point, Var};

pub use goursat::{goursat_from_solution, goursat_solve, BLOWUP_BOUND};
pub use grid::{GridSpec, JetValues, SolutionGrid, STANDARD_JETS};
pub use wave::{traveling_wave, TravelingWave};

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("kink speed must be nonzero")]
    ZeroSpeed,
    #[error("wave speed c must be nonzero")]
    ZeroWaveSpeed,
    #[error("exponent rate p must be nonzero")]
    ZeroRate,
    #[error("no particular solution for λ = 0, ξ = 0, τ = {tau} ≠ 0")]
    NoParticular { tau: f64 },
    #[error("expected a hyperbolic equation u_xt = F(u, u_x)")]
    NotHyperbolic,
    #[error("`{0}` has no numeric value; bind parameters first")]
    Unbound(String),
    #[error("solution expression may depend on x and t only, found {0}")]
    NotExplicit(String),
    #[error("corner data disagree: φ(x0) = {phi}, ψ(t0) = {psi}")]
    CornerMismatch { phi: f64, psi: f64 },
    #[error("|u| exceeded {bound} at (x, t) = ({x}, {t}); {rows} complete rows kept")]
    BlowUp { x: f64, t: f64, bound: f64, rows: usize, partial: Box<SolutionGrid> },
    #[error("ODE stepper failed: {0}")]
    Stepper(String),
    #[error("jet {jet} is not available from this solution")]
    JetUnavailable { jet: Jet },
    #[error("({x}, {t}) lies outside the solution's domain")]
    OutsideDomain { x: f64, t: f64 },
    #[error("evaluation failed at ({x}, {t})")]
    Eval { x: f64, t: f64 },
    #[error("invalid grid `{0}`, expected x0:x1:t0:t1:h with h > 0")]
    InvalidGrid(String),
    #[error("grid file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Closed form `u(x, t)` with derivatives up to order two compiled ahead of time.
#[derive(Clone, Debug)]
struct ClosedForm {
    u: Expr,
    compiled: BTreeMap<Jet, Compiled>,
}

#[derive(Clone, Debug)]
enum Repr {
    Closed(ClosedForm),
    Wave(TravelingWave),
}

/// A solution that can be evaluated anywhere in its domain, together with the
/// equation it claims to solve.
#[derive(Clone, Debug)]
pub struct AnalyticSolution {
    pub name: String,
    ctx: EquationContext,
    repr: Repr,
}

const XT: [Var; 2] = [Var::X, Var::T];

fn jet_expr(u: &Expr, j: Jet) -> Expr {
    let mut e = u.clone();
    for _ in 0..j.x {
        e = e.partial(&Var::X);
    }
    for _ in 0..j.t {
        e = e.partial(&Var::T);
    }
    e
}

fn check_bound(e: &Expr) -> Result<(), SolutionError> {
    match e.params().into_iter().next() {
        Some(p) => Err(SolutionError::Unbound(p.to_string())),
        None => Ok(()),
    }
}

impl AnalyticSolution {
    /// Closed-form solution `u(x, t)`; `u` may use `x`, `t` and numbers only.
    pub fn from_expr(name: &str, u: Expr, ctx: EquationContext) -> Result<AnalyticSolution, SolutionError> {
        let u = u.simplify();
        if let Some(v) = u.vars().into_iter().find(|v| !matches!(v, Var::X | Var::T)) {
            return Err(match v {
                Var::Param(p) => SolutionError::Unbound(p.to_string()),
                other => SolutionError::NotExplicit(other.to_string()),
            });
        }
        check_bound(ctx.rhs())?;
        let compiled = STANDARD_JETS.iter().map(|&j| (j, Compiled::with_slots(&jet_expr(&u, j), &XT))).collect();
        Ok(AnalyticSolution { name: name.to_string(), ctx, repr: Repr::Closed(ClosedForm { u, compiled }) })
    }

    pub(crate) fn from_wave(name: &str, ctx: EquationContext, w: TravelingWave) -> AnalyticSolution {
        AnalyticSolution { name: name.to_string(), ctx, repr: Repr::Wave(w) }
    }

    pub fn equation(&self) -> &EquationContext {
        &self.ctx
    }

    /// The closed form, if this solution has one.
    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Closed(c) => Some(&c.u),
            Repr::Wave(_) => None,
        }
    }

    /// Whether `(x, t)` is inside the domain of definition.
    pub fn contains(&self, x: f64, t: f64) -> bool {
        match &self.repr {
            Repr::Closed(_) => true,
            Repr::Wave(w) => w.contains(x, t),
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<JetValues, SolutionError> {
        let g = |j: Jet| self.jet(j, x, t);
        Ok(JetValues {
            u: g(Jet::z(0))?,
            ux: g(Jet::z(1))?,
            ut: g(Jet::w(1))?,
            uxx: g(Jet::z(2))?,
            uxt: g(Jet { x: 1, t: 1 })?,
            utt: g(Jet::w(2))?,
        })
    }

    /// `∂^{j.x + j.t} u / ∂x^{j.x} ∂t^{j.t}` at `(x, t)`.
    pub fn jet(&self, j: Jet, x: f64, t: f64) -> Result<f64, SolutionError> {
        let v = match &self.repr {
            Repr::Closed(c) => match c.compiled.get(&j) {
                Some(f) => f.eval(&[x, t]),
                None => Compiled::with_slots(&jet_expr(&c.u, j), &XT).eval(&[x, t]),
            },
            Repr::Wave(w) => w.jet(j, x, t)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SolutionError::Eval { x, t })
        }
    }

    /// Values of every jet in `jets` at `(x, t)`, as a point for expression evaluation.
    pub fn point(&self, jets: &[Jet], x: f64, t: f64) -> Result<Point, SolutionError> {
        let mut p = Point::new().with(Var::X, x).with(Var::T, t);
        for &j in jets {
            p.set(Var::Jet(j), self.jet(j, x, t)?);
        }
        Ok(p)
    }

    /// `u_xt − F` or `u_t − F` at `(x, t)`.
    pub fn residual(&self, x: f64, t: f64) -> Result<f64, SolutionError> {
        let rhs = self.ctx.rhs();
        let jets: Vec<Jet> = rhs.jets().into_iter().collect();
        let f = rhs.eval(&self.point(&jets, x, t)?).map_err(|_| SolutionError::Eval { x, t })?;
        let lhs = match self.ctx.kind() {
            EquationKind::Hyperbolic => self.jet(Jet { x: 1, t: 1 }, x, t)?,
            EquationKind::Evolution { .. } => self.jet(Jet::w(1), x, t)?,
            EquationKind::Free => return Ok(0.0),
        };
        Ok(lhs - f)
    }

    /// Largest `|residual| / (1 + |u|)` over `n` random points of `[lo, hi]²` in the domain.
    pub fn max_residual(&self, n: usize, range: (f64, f64), seed: u64) -> Result<f64, SolutionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut found = 0;
        let mut attempts = 0;
        while found < n && attempts < 100 * n.max(1) {
            attempts += 1;
            let (x, t) = (rng.gen_range(range.0..range.1), rng.gen_range(range.0..range.1));
            if !self.contains(x, t) {
                continue;
            }
            let u = self.jet(Jet::z(0), x, t)?;
            worst = worst.max(self.residual(x, t)?.abs() / (1.0 + u.abs()));
            found += 1;
        }
        Ok(worst)
    }

    /// Sample the standard jets, plus any of `extra`, on `grid`.
    pub fn sample(&self, grid: &GridSpec, extra: &[Jet]) -> Result<SolutionGrid, SolutionError> {
        let mut jets: Vec<Jet> = STANDARD_JETS.to_vec();
        jets.extend(extra.iter().filter(|j| !STANDARD_JETS.contains(j)));
        let mut fields = BTreeMap::new();
        for j in jets {
            let evaluator: Box<dyn Fn(f64, f64) -> Result<f64, SolutionError>> = match &self.repr {
                Repr::Closed(c) if !c.compiled.contains_key(&j) => {
                    let f = Compiled::with_slots(&jet_expr(&c.u, j), &XT);
                    Box::new(move |x, t| {
                        let v = f.eval(&[x, t]);
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(SolutionError::Eval { x, t })
                        }
                    })
                }
                _ => Box::new(move |x, t| self.jet(j, x, t)),
            };
            let mut v = Vec::with_capacity(grid.len());
            for k in 0..grid.nt {
                for i in 0..grid.nx {
                    let (x, t) = (grid.x(i), grid.t(k));
                    if !self.contains(x, t) {
                        return Err(SolutionError::OutsideDomain { x, t });
                    }
                    v.push(evaluator(x, t)?);
                }
            }
            fields.insert(j, v);
        }
        SolutionGrid::from_fields(*grid, fields)
    }
}

/// Sine-Gordon kink `u = 4·arctan(exp(a·x + t/a))` of `u_xt = sin u`.
pub fn sg_kink(a: f64) -> Result<AnalyticSolution, SolutionError> {
    if a == 0.0 || !a.is_finite() {
        return Err(SolutionError::ZeroSpeed);
    }
    let ka = crate::expr::number(a);
    let theta = &ka * Expr::x() + Expr::t() / &ka;
    let u = Expr::int(4) * theta.exp().arctan();
    let ctx = EquationContext::hyperbolic(Expr::z(0).sin()).expect("sin z0 is a valid right-hand side");
    AnalyticSolution::from_expr(&format!("kink(a={a})"), u, ctx)
}

/// `u = C·e^{p x + q t} + u_p` for `u_xt = λu + ξu_x + τ`, with `q = (λ + ξp)/p`.
///
/// `u_p = −τ/λ`, or `−τx/ξ` when `λ = 0`.
pub fn linear_solution(lambda: f64, xi: f64, tau: f64, p: f64, amplitude: f64) -> Result<AnalyticSolution, SolutionError> {
    if p == 0.0 {
        return Err(SolutionError::ZeroRate);
    }
    let n = crate::expr::number;
    let q = (lambda + xi * p) / p;
    let up = if lambda != 0.0 {
        n(-tau / lambda)
    } else if tau == 0.0 {
        Expr::zero()
    } else if xi != 0.0 {
        n(-tau / xi) * Expr::x()
    } else {
        return Err(SolutionError::NoParticular { tau });
    };
    let u = n(amplitude) * (n(p) * Expr::x() + n(q) * Expr::t()).exp() + up;
    let rhs = n(lambda) * Expr::z(0) + n(xi) * Expr::z(1) + n(tau);
    let ctx = EquationContext::hyperbolic(rhs).expect("linear right-hand side is valid");
    AnalyticSolution::from_expr(&format!("linear(λ={lambda},ξ={xi},τ={tau},p={p})"), u, ctx)
}
