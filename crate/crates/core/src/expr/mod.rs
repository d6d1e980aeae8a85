//! Expression engine over jet coordinates.
//!
//! Jets are stored as `u_{x^i t^j}` pairs. `z_i` is `(i, 0)`, `w_i` is `(0, i)`, and
//! `z_0 = w_0 = u` share the same representation, so `w0` never appears as a separate
//! variable.

mod context;
mod diff;
mod eval;
mod parse;
mod print;
mod simplify;
mod zero;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

pub use context::{ContextError, EquationContext, EquationKind};
pub use eval::{Compiled, EvalError, Point};
pub use parse::{parse, parse_with, ParseError, DEFAULT_PARAMS};
pub use zero::{is_zero, Sampler, ZeroError, ZeroTest, ZeroVerdict};

/// Exact rational constant.
pub type Rational = Ratio<i64>;

/// A mixed jet coordinate `∂^{x+t} u / ∂x^x ∂t^t`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Jet {
    pub x: u32,
    pub t: u32,
}

impl Jet {
    pub const fn z(i: u32) -> Jet {
        Jet { x: i, t: 0 }
    }

    pub const fn w(i: u32) -> Jet {
        Jet { x: 0, t: i }
    }

    pub const fn order(&self) -> u32 {
        self.x + self.t
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x, self.t) {
            (i, 0) => write!(f, "z{i}"),
            (0, j) => write!(f, "w{j}"),
            (i, j) => write!(f, "u{i}_{j}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    T,
    Jet(Jet),
    Param(Arc<str>),
}

impl Var {
    pub fn param(name: &str) -> Var {
        Var::Param(Arc::from(name))
    }

    pub fn z(i: u32) -> Var {
        Var::Jet(Jet::z(i))
    }

    pub fn w(i: u32) -> Var {
        Var::Jet(Jet::w(i))
    }

    pub fn jet(&self) -> Option<Jet> {
        match self {
            Var::Jet(j) => Some(*j),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => f.write_str("x"),
            Var::T => f.write_str("t"),
            Var::Jet(j) => j.fmt(f),
            Var::Param(p) => f.write_str(p),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Arctan,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Arctan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Arctan => "arctan",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }
}

/// Symbolic expression. Cheap to clone; children are shared.
///
/// Subtraction and division exist only as input forms; [`Expr::simplify`] rewrites
/// `a - b` to `a + (-1)*b` and `a / b` to `a * b^-1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Rat(Rational),
    Float(f64),
    Var(Var),
    Neg(Arc<Expr>),
    Func(Func, Arc<Expr>),
    Add(Arc<[Expr]>),
    Mul(Arc<[Expr]>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rat(Rational::from_integer(n))
    }

    pub fn rat(p: i64, q: i64) -> Expr {
        Expr::Rat(Rational::new(p, q))
    }

    pub fn float(v: f64) -> Expr {
        Expr::Float(v)
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn z(i: u32) -> Expr {
        Expr::Var(Var::z(i))
    }

    pub fn w(i: u32) -> Expr {
        Expr::Var(Var::w(i))
    }

    pub fn jet(j: Jet) -> Expr {
        Expr::Var(Var::Jet(j))
    }

    pub fn param(name: &str) -> Expr {
        Expr::Var(Var::param(name))
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Arc::new(arg))
    }

    pub fn exp(self) -> Expr {
        Expr::func(Func::Exp, self)
    }
    pub fn log(self) -> Expr {
        Expr::func(Func::Log, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::func(Func::Sqrt, self)
    }
    pub fn sin(self) -> Expr {
        Expr::func(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::func(Func::Cos, self)
    }
    pub fn tan(self) -> Expr {
        Expr::func(Func::Tan, self)
    }
    pub fn sinh(self) -> Expr {
        Expr::func(Func::Sinh, self)
    }
    pub fn cosh(self) -> Expr {
        Expr::func(Func::Cosh, self)
    }
    pub fn arctan(self) -> Expr {
        Expr::func(Func::Arctan, self)
    }

    pub fn pow(self, e: Expr) -> Expr {
        Expr::Pow(Arc::new(self), Arc::new(e))
    }

    pub fn powi(self, n: i64) -> Expr {
        self.pow(Expr::int(n))
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let v: Vec<Expr> = terms.into_iter().collect();
        match v.len() {
            0 => Expr::zero(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Add(v.into()),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let v: Vec<Expr> = factors.into_iter().collect();
        match v.len() {
            0 => Expr::one(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Mul(v.into()),
        }
    }

    pub fn as_rat(&self) -> Option<Rational> {
        match self {
            Expr::Rat(r) => Some(*r),
            _ => None,
        }
    }

    pub fn is_literal_zero(&self) -> bool {
        match self {
            Expr::Rat(r) => *r == Rational::from_integer(0),
            Expr::Float(v) => *v == 0.0,
            _ => false,
        }
    }

    pub fn is_literal_one(&self) -> bool {
        matches!(self, Expr::Rat(r) if *r == Rational::from_integer(1))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Expr::Rat(_) | Expr::Float(_))
    }

    /// Every variable occurring in the expression.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Rat(_) | Expr::Float(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Func(_, a) => a.collect_vars(out),
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().for_each(|e| e.collect_vars(out)),
            Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn jets(&self) -> BTreeSet<Jet> {
        self.vars().into_iter().filter_map(|v| v.jet()).collect()
    }

    pub fn params(&self) -> BTreeSet<Arc<str>> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Param(p) => Some(p),
                _ => None,
            })
            .collect()
    }

    pub fn depends_on(&self, v: &Var) -> bool {
        match self {
            Expr::Rat(_) | Expr::Float(_) => false,
            Expr::Var(w) => w == v,
            Expr::Neg(a) | Expr::Func(_, a) => a.depends_on(v),
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().any(|e| e.depends_on(v)),
            Expr::Div(a, b) | Expr::Pow(a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    /// Replace variables according to `f`; variables mapped to `None` are kept.
    pub fn subst_with(&self, f: &dyn Fn(&Var) -> Option<Expr>) -> Expr {
        match self {
            Expr::Rat(_) | Expr::Float(_) => self.clone(),
            Expr::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(Arc::new(a.subst_with(f))),
            Expr::Func(g, a) => Expr::Func(*g, Arc::new(a.subst_with(f))),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|e| e.subst_with(f)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|e| e.subst_with(f)).collect()),
            Expr::Div(a, b) => Expr::Div(Arc::new(a.subst_with(f)), Arc::new(b.subst_with(f))),
            Expr::Pow(a, b) => Expr::Pow(Arc::new(a.subst_with(f)), Arc::new(b.subst_with(f))),
        }
    }

    pub fn subst(&self, v: &Var, by: &Expr) -> Expr {
        self.subst_with(&|w| (w == v).then(|| by.clone()))
    }

    /// Substitute numeric values for parameters, keeping exact rationals where the
    /// value is a small-denominator rational.
    pub fn bind_params(&self, values: &std::collections::BTreeMap<String, f64>) -> Expr {
        self.subst_with(&|v| match v {
            Var::Param(p) => values.get(&**p).map(|&val| number(val)),
            _ => None,
        })
    }

    /// Node count, used to bound work in heuristics.
    pub fn size(&self) -> usize {
        match self {
            Expr::Rat(_) | Expr::Float(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Func(_, a) => 1 + a.size(),
            Expr::Add(xs) | Expr::Mul(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Expr::Div(a, b) | Expr::Pow(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Expr::Rat(_) => 0,
            Expr::Float(_) => 1,
            Expr::Var(_) => 2,
            Expr::Pow(..) => 3,
            Expr::Mul(_) => 4,
            Expr::Add(_) => 5,
            Expr::Func(..) => 6,
            Expr::Neg(_) => 7,
            Expr::Div(..) => 8,
        }
    }

    /// Total structural order used for canonical sorting.
    pub fn structural_cmp(&self, other: &Expr) -> Ordering {
        use Expr::*;
        match (self, other) {
            (Rat(a), Rat(b)) => a.cmp(b),
            (Float(a), Float(b)) => a.total_cmp(b),
            (Var(a), Var(b)) => a.cmp(b),
            (Neg(a), Neg(b)) => a.structural_cmp(b),
            (Func(f, a), Func(g, b)) => f.cmp(g).then_with(|| a.structural_cmp(b)),
            (Add(a), Add(b)) | (Mul(a), Mul(b)) => slice_cmp(a, b),
            (Div(a, b), Div(c, d)) | (Pow(a, b), Pow(c, d)) => {
                a.structural_cmp(c).then_with(|| b.structural_cmp(d))
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

fn slice_cmp(a: &[Expr], b: &[Expr]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.structural_cmp(y);
        if c != Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

/// Numeric literal: exact when `v` is an integer or a rational with denominator up
/// to 64, otherwise a float.
pub fn number(v: f64) -> Expr {
    if v.is_finite() {
        for q in 1..=64i64 {
            let p = v * q as f64;
            if p.abs() < 1e12 && (p - p.round()).abs() < 1e-12 * p.abs().max(1.0) {
                return Expr::Rat(Rational::new(p.round() as i64, q));
            }
        }
    }
    Expr::Float(v)
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $build:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$m(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                std::ops::$tr::$m(self.clone(), rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$m(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                std::ops::$tr::$m(self, Expr::int(rhs))
            }
        }
        impl std::ops::$tr<i64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                std::ops::$tr::$m(self.clone(), Expr::int(rhs))
            }
        }
    };
}

binop!(Add, add, |a, b| simplify::add2(a, b));
binop!(Sub, sub, |a, b| simplify::add2(a, simplify::neg1(b)));
binop!(Mul, mul, |a, b| simplify::mul2(a, b));
binop!(Div, div, |a, b| simplify::div2(a, b));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        simplify::neg1(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        simplify::neg1(self.clone())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, f)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
