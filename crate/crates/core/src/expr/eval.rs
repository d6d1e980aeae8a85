//! Numeric evaluation: tree-walking with domain guards, and a compiled stack form
//! for hot loops.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use super::simplify::rat_to_f64;
use super::{Expr, Func, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("variable `{0}` has no value")]
    Unassigned(String),
    #[error("{func} evaluated outside its domain (argument {arg})")]
    Domain { func: &'static str, arg: f64 },
    #[error("denominator {0:e} is too close to zero")]
    NearZero(f64),
    #[error("non-finite intermediate value")]
    NonFinite,
}

/// Assignment of values to variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point {
    values: BTreeMap<Var, f64>,
}

impl Point {
    pub fn new() -> Point {
        Point::default()
    }

    pub fn set(&mut self, v: Var, value: f64) {
        self.values.insert(v, value);
    }

    pub fn with(mut self, v: Var, value: f64) -> Point {
        self.set(v, value);
        self
    }

    pub fn with_param(self, name: &str, value: f64) -> Point {
        self.with(Var::param(name), value)
    }

    pub fn get(&self, v: &Var) -> Option<f64> {
        self.values.get(v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &f64)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.values {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.values.len()))?;
        for (k, v) in &self.values {
            m.serialize_entry(&k.to_string(), v)?;
        }
        m.end()
    }
}

pub(crate) fn apply_func(f: Func, v: f64) -> f64 {
    match f {
        Func::Exp => v.exp(),
        Func::Log => v.ln(),
        Func::Sqrt => v.sqrt(),
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Tan => v.tan(),
        Func::Sinh => v.sinh(),
        Func::Cosh => v.cosh(),
        Func::Arctan => v.atan(),
    }
}

fn checked_func(f: Func, v: f64, guard: f64) -> Result<f64, EvalError> {
    match f {
        Func::Log if v <= guard => return Err(EvalError::Domain { func: "log", arg: v }),
        Func::Sqrt if v < 0.0 => return Err(EvalError::Domain { func: "sqrt", arg: v }),
        Func::Tan if v.cos().abs() < guard => return Err(EvalError::NearZero(v.cos())),
        _ => {}
    }
    let r = apply_func(f, v);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn checked_pow(b: f64, e: f64, guard: f64) -> Result<f64, EvalError> {
    let integral = e.fract() == 0.0;
    if e < 0.0 && b.abs() < guard.max(f64::MIN_POSITIVE) {
        return Err(EvalError::NearZero(b));
    }
    if !integral && b < 0.0 {
        return Err(EvalError::Domain { func: "pow", arg: b });
    }
    let r = if integral && e.abs() <= 64.0 { b.powi(e as i32) } else { b.powf(e) };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    /// Evaluate at `p`. Division by an exact zero and real-domain violations are errors.
    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        self.eval_mag(p, 0.0).map(|(v, _)| v)
    }

    /// Evaluate, also rejecting denominators (and log arguments) with magnitude
    /// below `guard`.
    pub fn eval_guarded(&self, p: &Point, guard: f64) -> Result<f64, EvalError> {
        self.eval_mag(p, guard).map(|(v, _)| v)
    }

    /// Value together with an absolute-magnitude bound: sums add magnitudes, so
    /// the bound measures the size of terms that may have cancelled.
    pub fn eval_mag(&self, p: &Point, guard: f64) -> Result<(f64, f64), EvalError> {
        let r = match self {
            Expr::Rat(r) => {
                let v = rat_to_f64(*r);
                (v, v.abs())
            }
            Expr::Float(v) => (*v, v.abs()),
            Expr::Var(v) => {
                let x = p.get(v).ok_or_else(|| EvalError::Unassigned(v.to_string()))?;
                (x, x.abs())
            }
            Expr::Neg(a) => {
                let (v, m) = a.eval_mag(p, guard)?;
                (-v, m)
            }
            Expr::Func(f, a) => {
                let (v, _) = a.eval_mag(p, guard)?;
                let r = checked_func(*f, v, guard)?;
                (r, r.abs())
            }
            Expr::Add(xs) => {
                let mut s = 0.0;
                let mut m = 0.0;
                for x in xs.iter() {
                    let (v, mm) = x.eval_mag(p, guard)?;
                    s += v;
                    m += mm;
                }
                (s, m)
            }
            Expr::Mul(xs) => {
                let mut s = 1.0;
                let mut m = 1.0;
                for x in xs.iter() {
                    let (v, mm) = x.eval_mag(p, guard)?;
                    s *= v;
                    m *= mm;
                }
                (s, m)
            }
            Expr::Div(a, b) => {
                let (va, ma) = a.eval_mag(p, guard)?;
                let (vb, _) = b.eval_mag(p, guard)?;
                if vb.abs() <= guard || vb == 0.0 {
                    return Err(EvalError::NearZero(vb));
                }
                (va / vb, ma / vb.abs())
            }
            Expr::Pow(b, e) => {
                let (vb, mb) = b.eval_mag(p, guard)?;
                let (ve, _) = e.eval_mag(p, guard)?;
                let r = checked_pow(vb, ve, guard)?;
                // Magnitude of a power of a cancelled sum follows the sum's bound.
                let m = if ve > 0.0 && ve.fract() == 0.0 { mb.powf(ve) } else { r.abs() };
                (r, m)
            }
        };
        if r.0.is_finite() {
            Ok(r)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Load(usize),
    Neg,
    Func(Func),
    Add(usize),
    Mul(usize),
    Div,
    PowI(i32),
    Pow,
}

/// Expression compiled to a stack program over a fixed slot layout.
/// Domain violations produce NaN instead of errors.
#[derive(Clone, Debug)]
pub struct Compiled {
    ops: Vec<Op>,
    slots: Vec<Var>,
    depth: usize,
}

impl Compiled {
    pub fn new(e: &Expr) -> Compiled {
        let slots: Vec<Var> = e.vars().into_iter().collect();
        Compiled::with_slots(e, &slots)
    }

    /// Compile against a caller-provided slot layout; every variable of `e` must
    /// appear in `slots`.
    pub fn with_slots(e: &Expr, slots: &[Var]) -> Compiled {
        let mut ops = Vec::new();
        emit(e, slots, &mut ops);
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Load(_) => depth += 1,
                Op::Add(n) | Op::Mul(n) => depth -= n - 1,
                Op::Div | Op::Pow => depth -= 1,
                _ => {}
            }
            max = max.max(depth);
        }
        Compiled { ops, slots: slots.to_vec(), depth: max }
    }

    pub fn slots(&self) -> &[Var] {
        &self.slots
    }

    pub fn eval(&self, vals: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Load(i) => stack.push(vals[i]),
                Op::Neg => {
                    let v = stack.last_mut().unwrap();
                    *v = -*v;
                }
                Op::Func(f) => {
                    let v = stack.last_mut().unwrap();
                    *v = apply_func(f, *v);
                }
                Op::Add(n) => {
                    let start = stack.len() - n;
                    let s: f64 = stack[start..].iter().sum();
                    stack.truncate(start);
                    stack.push(s);
                }
                Op::Mul(n) => {
                    let start = stack.len() - n;
                    let s: f64 = stack[start..].iter().product();
                    stack.truncate(start);
                    stack.push(s);
                }
                Op::Div => {
                    let b = stack.pop().unwrap();
                    let a = stack.last_mut().unwrap();
                    *a /= b;
                }
                Op::PowI(n) => {
                    let v = stack.last_mut().unwrap();
                    *v = v.powi(n);
                }
                Op::Pow => {
                    let e = stack.pop().unwrap();
                    let b = stack.last_mut().unwrap();
                    *b = b.powf(e);
                }
            }
        }
        stack.pop().unwrap_or(f64::NAN)
    }

    pub fn eval_point(&self, p: &Point) -> Result<f64, EvalError> {
        let vals: Vec<f64> = self
            .slots
            .iter()
            .map(|v| p.get(v).ok_or_else(|| EvalError::Unassigned(v.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(self.eval(&vals))
    }
}

fn emit(e: &Expr, slots: &[Var], ops: &mut Vec<Op>) {
    match e {
        Expr::Rat(r) => ops.push(Op::Const(rat_to_f64(*r))),
        Expr::Float(v) => ops.push(Op::Const(*v)),
        Expr::Var(v) => {
            let i = slots.iter().position(|s| s == v).unwrap_or_else(|| panic!("variable {v} missing from slot layout"));
            ops.push(Op::Load(i));
        }
        Expr::Neg(a) => {
            emit(a, slots, ops);
            ops.push(Op::Neg);
        }
        Expr::Func(f, a) => {
            emit(a, slots, ops);
            ops.push(Op::Func(*f));
        }
        Expr::Add(xs) | Expr::Mul(xs) => {
            for x in xs.iter() {
                emit(x, slots, ops);
            }
            ops.push(if matches!(e, Expr::Add(_)) { Op::Add(xs.len()) } else { Op::Mul(xs.len()) });
        }
        Expr::Div(a, b) => {
            emit(a, slots, ops);
            emit(b, slots, ops);
            ops.push(Op::Div);
        }
        Expr::Pow(b, p) => {
            emit(b, slots, ops);
            match &**p {
                Expr::Rat(r) if r.is_integer() && r.numer().abs() <= 64 => ops.push(Op::PowI(*r.numer() as i32)),
                _ => {
                    emit(p, slots, ops);
                    ops.push(Op::Pow);
                }
            }
        }
    }
}
