//! Rewrite simplification.
//!
//! Canonical form: no `Neg`, `Div` or `sqrt`/`tan` nodes; sums and products are flat,
//! sorted, with like terms (sums) and like bases (products) merged and at most one
//! leading numeric constant.

use std::sync::Arc;

use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

use super::{Expr, Func, Rational};

const MAX_PASSES: usize = 12;
const MAX_EXACT_POW: i64 = 64;

impl Expr {
    /// Simplify to the canonical form. Idempotent.
    pub fn simplify(&self) -> Expr {
        let mut cur = simp(self);
        for _ in 0..MAX_PASSES {
            let next = simp(&cur);
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }

    /// Distribute products and small integer powers over sums, then simplify.
    /// Gives up (returning the plain simplification) when the result would exceed
    /// `max_terms` summands.
    pub fn expand(&self, max_terms: usize) -> Expr {
        let s = self.simplify();
        match expand_rec(&s, max_terms) {
            Some(e) => e.simplify(),
            None => s,
        }
    }
}

fn simp(e: &Expr) -> Expr {
    match e {
        Expr::Rat(_) | Expr::Var(_) => e.clone(),
        Expr::Float(v) => {
            if *v == 0.0 {
                Expr::zero()
            } else {
                e.clone()
            }
        }
        Expr::Neg(a) => neg1(simp(a)),
        Expr::Func(f, a) => func1(*f, simp(a)),
        Expr::Add(xs) => add_n(xs.iter().map(simp).collect()),
        Expr::Mul(xs) => mul_n(xs.iter().map(simp).collect()),
        Expr::Div(a, b) => div2(simp(a), simp(b)),
        Expr::Pow(a, b) => pow2(simp(a), simp(b)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Num {
    R(Rational),
    F(f64),
}

pub(crate) fn rat_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Num {
    fn one() -> Num {
        Num::R(Rational::one())
    }

    fn to_f64(self) -> f64 {
        match self {
            Num::R(r) => rat_to_f64(r),
            Num::F(v) => v,
        }
    }

    fn add(self, o: Num) -> Num {
        match (self, o) {
            (Num::R(a), Num::R(b)) => a.checked_add(&b).map(Num::R).unwrap_or_else(|| Num::F(rat_to_f64(a) + rat_to_f64(b))),
            _ => Num::F(self.to_f64() + o.to_f64()),
        }
    }

    fn mul(self, o: Num) -> Num {
        match (self, o) {
            (Num::R(a), Num::R(b)) => a.checked_mul(&b).map(Num::R).unwrap_or_else(|| Num::F(rat_to_f64(a) * rat_to_f64(b))),
            _ => Num::F(self.to_f64() * o.to_f64()),
        }
    }

    fn neg(self) -> Num {
        self.mul(Num::R(-Rational::one()))
    }

    fn is_zero(self) -> bool {
        match self {
            Num::R(r) => r.is_zero(),
            Num::F(v) => v == 0.0,
        }
    }

    fn is_one(self) -> bool {
        matches!(self, Num::R(r) if r.is_one())
    }

    fn to_expr(self) -> Expr {
        match self {
            Num::R(r) => Expr::Rat(r),
            Num::F(v) => Expr::Float(v),
        }
    }

    fn of(e: &Expr) -> Option<Num> {
        match e {
            Expr::Rat(r) => Some(Num::R(*r)),
            Expr::Float(v) => Some(Num::F(*v)),
            _ => None,
        }
    }
}

pub(crate) fn neg1(a: Expr) -> Expr {
    mul_n(vec![Expr::int(-1), a])
}

pub(crate) fn add2(a: Expr, b: Expr) -> Expr {
    add_n(vec![a, b])
}

pub(crate) fn mul2(a: Expr, b: Expr) -> Expr {
    mul_n(vec![a, b])
}

pub(crate) fn div2(a: Expr, b: Expr) -> Expr {
    mul_n(vec![a, pow2(b, Expr::int(-1))])
}

/// Split a canonical term into numeric coefficient and the remaining product.
fn split_coef(e: Expr) -> (Num, Expr) {
    if let Expr::Mul(xs) = &e {
        if let Some(c) = Num::of(&xs[0]) {
            let rest: Vec<Expr> = xs[1..].to_vec();
            return (c, Expr::product(rest));
        }
    }
    (Num::one(), e)
}

fn with_coef(c: Num, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut v = vec![c.to_expr()];
    match rest {
        Expr::Mul(xs) => v.extend(xs.iter().cloned()),
        other => v.push(other),
    }
    Expr::Mul(v.into())
}

pub(crate) fn add_n(input: Vec<Expr>) -> Expr {
    if input.len() == 1 && !matches!(input[0], Expr::Add(_) | Expr::Neg(_) | Expr::Div(..)) {
        return input.into_iter().next().unwrap();
    }
    let mut constant = Num::R(Rational::zero());
    let mut terms: Vec<(Num, Expr)> = Vec::with_capacity(input.len());
    let mut stack = input;
    while let Some(t) = stack.pop() {
        match t {
            Expr::Rat(r) => constant = constant.add(Num::R(r)),
            Expr::Float(v) => constant = constant.add(Num::F(v)),
            Expr::Add(xs) => stack.extend(xs.iter().cloned()),
            Expr::Neg(a) => stack.push(neg1((*a).clone())),
            Expr::Div(a, b) => stack.push(div2((*a).clone(), (*b).clone())),
            other => terms.push(split_coef(other)),
        }
    }
    terms.sort_by(|a, b| a.1.structural_cmp(&b.1));
    let mut merged: Vec<(Num, Expr)> = Vec::with_capacity(terms.len());
    for (c, r) in terms {
        match merged.last_mut() {
            Some((c0, r0)) if *r0 == r => *c0 = c0.add(c),
            _ => merged.push((c, r)),
        }
    }
    merged.retain(|(c, _)| !c.is_zero());

    if let Some(extra) = pythagorean(&mut merged) {
        let mut all: Vec<Expr> = merged.into_iter().map(|(c, r)| with_coef(c, r)).collect();
        all.push(constant.to_expr());
        all.extend(extra);
        return add_n(all);
    }

    let mut out: Vec<Expr> = Vec::with_capacity(merged.len() + 1);
    if !constant.is_zero() {
        out.push(constant.to_expr());
    }
    out.extend(merged.into_iter().map(|(c, r)| with_coef(c, r)));
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::Add(out.into()),
    }
}

/// Factors of a canonical product.
fn factors_of(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Mul(xs) => xs.to_vec(),
        Expr::Rat(r) if r.is_one() => vec![],
        other => vec![other.clone()],
    }
}

fn square_of(e: &Expr, f: Func) -> Option<&Expr> {
    if let Expr::Pow(b, p) = e {
        if let (Expr::Func(g, arg), Expr::Rat(r)) = (&**b, &**p) {
            if *g == f && *r == Rational::from_integer(2) {
                return Some(arg);
            }
        }
    }
    None
}

/// Apply `c·R·sin²u + c·R·cos²u → c·R` and `c·R·cosh²u − c·R·sinh²u → c·R` once.
/// Returns the replacement terms when a pair was merged.
fn pythagorean(terms: &mut Vec<(Num, Expr)>) -> Option<Vec<Expr>> {
    let rules = [(Func::Sin, Func::Cos, false), (Func::Cosh, Func::Sinh, true)];
    for i in 0..terms.len() {
        let fs = factors_of(&terms[i].1);
        for (k, fac) in fs.iter().enumerate() {
            for &(first, second, negate) in &rules {
                let Some(arg) = square_of(fac, first) else { continue };
                let mut other: Vec<Expr> = fs.clone();
                other.remove(k);
                let mut target_f = other.clone();
                target_f.push(pow2(Expr::func(second, arg.clone()), Expr::int(2)));
                let target = mul_n(target_f);
                let want = if negate { terms[i].0.neg() } else { terms[i].0 };
                if let Some(j) = terms.iter().position(|(c, r)| *r == target && *c == want) {
                    let c = terms[i].0;
                    let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                    terms.remove(hi);
                    terms.remove(lo);
                    return Some(vec![with_coef(c, mul_n(other))]);
                }
            }
        }
    }
    None
}

fn split_pow(e: Expr) -> (Expr, Expr) {
    match e {
        Expr::Pow(b, p) => ((*b).clone(), (*p).clone()),
        other => (other, Expr::one()),
    }
}

pub(crate) fn mul_n(input: Vec<Expr>) -> Expr {
    let mut coef = Num::one();
    let mut factors: Vec<Expr> = Vec::with_capacity(input.len());
    let mut stack = input;
    while let Some(f) = stack.pop() {
        match f {
            Expr::Rat(r) => coef = coef.mul(Num::R(r)),
            Expr::Float(v) => coef = coef.mul(Num::F(v)),
            Expr::Mul(xs) => stack.extend(xs.iter().cloned()),
            Expr::Neg(a) => {
                coef = coef.neg();
                stack.push((*a).clone());
            }
            Expr::Div(a, b) => {
                stack.push((*a).clone());
                stack.push(pow2((*b).clone(), Expr::int(-1)));
            }
            other => factors.push(other),
        }
    }
    if coef.is_zero() {
        return Expr::zero();
    }
    if factors.is_empty() {
        return coef.to_expr();
    }
    if factors.len() == 1 && !matches!(factors[0], Expr::Pow(..) | Expr::Func(..)) {
        return with_coef(coef, factors.pop().unwrap());
    }

    let mut pairs: Vec<(Expr, Expr)> = Vec::with_capacity(factors.len());
    let mut exp_args: Vec<Expr> = Vec::new();
    for f in factors {
        let (b, p) = split_pow(f);
        if let Expr::Func(Func::Exp, a) = &b {
            exp_args.push(mul_n(vec![(**a).clone(), p]));
        } else {
            pairs.push((b, p));
        }
    }
    pairs.sort_by(|a, b| a.0.structural_cmp(&b.0));
    let mut grouped: Vec<(Expr, Vec<Expr>)> = Vec::with_capacity(pairs.len());
    for (b, p) in pairs {
        match grouped.last_mut() {
            Some((b0, ps)) if *b0 == b => ps.push(p),
            _ => grouped.push((b, vec![p])),
        }
    }
    let mut out: Vec<Expr> = Vec::with_capacity(grouped.len() + 1);
    let mut renormalize = false;
    for (b, ps) in grouped {
        let p = if ps.len() == 1 { ps.into_iter().next().unwrap() } else { add_n(ps) };
        let f = pow2(b, p);
        renormalize |= matches!(f, Expr::Rat(_) | Expr::Float(_) | Expr::Mul(_));
        out.push(f);
    }
    if !exp_args.is_empty() {
        let s = if exp_args.len() == 1 { exp_args.pop().unwrap() } else { add_n(exp_args) };
        let f = func1(Func::Exp, s);
        renormalize |= f.is_constant();
        out.push(f);
    }
    if let Some(folded) = double_angle(&mut out) {
        out.push(folded);
        renormalize = true;
    }
    if renormalize {
        out.push(coef.to_expr());
        return mul_n(out);
    }
    out.sort_by(|a, b| a.structural_cmp(b));
    if out.len() == 1 {
        return with_coef(coef, out.pop().unwrap());
    }
    if !coef.is_one() {
        out.insert(0, coef.to_expr());
    }
    Expr::Mul(out.into())
}

/// `sin(v)·cos(v) → sin(2v)/2` for a single pair of first-power factors.
fn double_angle(out: &mut Vec<Expr>) -> Option<Expr> {
    let si = out.iter().position(|f| matches!(f, Expr::Func(Func::Sin, _)))?;
    let Expr::Func(_, v) = &out[si] else { return None };
    let v = (**v).clone();
    let ci = out.iter().position(|f| matches!(f, Expr::Func(Func::Cos, a) if **a == v))?;
    let (hi, lo) = if si > ci { (si, ci) } else { (ci, si) };
    out.remove(hi);
    out.remove(lo);
    Some(mul_n(vec![Expr::rat(1, 2), func1(Func::Sin, mul_n(vec![Expr::int(2), v]))]))
}

fn int_of(r: &Rational) -> Option<i64> {
    r.is_integer().then(|| *r.numer())
}

fn rat_powi(b: Rational, n: i64) -> Option<Rational> {
    if n.abs() > MAX_EXACT_POW {
        return None;
    }
    if n < 0 && b.is_zero() {
        return None;
    }
    let mut acc = Rational::one();
    for _ in 0..n.abs() {
        acc = acc.checked_mul(&b)?;
    }
    Some(if n < 0 { acc.recip() } else { acc })
}

fn exact_root(n: i64, q: i64) -> Option<i64> {
    if n < 0 || q <= 0 || q > 8 {
        return None;
    }
    let r = (n as f64).powf(1.0 / q as f64).round() as i64;
    for cand in [r - 1, r, r + 1] {
        if cand >= 0 && cand.checked_pow(q as u32) == Some(n) {
            return Some(cand);
        }
    }
    None
}

pub(crate) fn pow2(b: Expr, p: Expr) -> Expr {
    if p.is_literal_zero() {
        return Expr::one();
    }
    if p.is_literal_one() {
        return b;
    }
    if b.is_literal_one() {
        return Expr::one();
    }
    match (&b, &p) {
        (Expr::Rat(r), Expr::Rat(e)) => {
            if r.is_zero() && e.is_positive() {
                return Expr::zero();
            }
            if let Some(n) = int_of(e) {
                if let Some(v) = rat_powi(*r, n) {
                    return Expr::Rat(v);
                }
            } else if !r.is_negative() {
                let (num, den) = (*e.numer(), *e.denom());
                if let (Some(a), Some(c)) = (exact_root(*r.numer(), den), exact_root(*r.denom(), den)) {
                    if let Some(v) = rat_powi(Rational::new(a, c), num) {
                        return Expr::Rat(v);
                    }
                }
            }
        }
        (Expr::Float(_), _) | (_, Expr::Float(_)) if b.is_constant() && p.is_constant() => {
            let v = Num::of(&b).unwrap().to_f64().powf(Num::of(&p).unwrap().to_f64());
            if v.is_finite() {
                return Expr::Float(v);
            }
        }
        (Expr::Pow(b2, e2), Expr::Rat(e)) if e.is_integer() => {
            return pow2((**b2).clone(), mul_n(vec![(**e2).clone(), p.clone()]));
        }
        (Expr::Mul(xs), Expr::Rat(e)) if e.is_integer() => {
            return mul_n(xs.iter().map(|f| pow2(f.clone(), p.clone())).collect());
        }
        (Expr::Func(Func::Exp, a), _) => {
            return func1(Func::Exp, mul_n(vec![(**a).clone(), p.clone()]));
        }
        _ => {}
    }
    Expr::Pow(Arc::new(b), Arc::new(p))
}

fn negative_lead(e: &Expr) -> bool {
    match e {
        Expr::Rat(r) => r.is_negative(),
        Expr::Float(v) => *v < 0.0,
        Expr::Mul(xs) => negative_lead(&xs[0]),
        _ => false,
    }
}

pub(crate) fn func1(f: Func, a: Expr) -> Expr {
    match f {
        Func::Sqrt => return pow2(a, Expr::rat(1, 2)),
        Func::Tan => {
            return mul_n(vec![
                func1(Func::Sin, a.clone()),
                pow2(func1(Func::Cos, a), Expr::int(-1)),
            ])
        }
        _ => {}
    }
    if a.is_literal_zero() {
        return match f {
            Func::Exp | Func::Cos | Func::Cosh => Expr::one(),
            Func::Sin | Func::Sinh | Func::Arctan => Expr::zero(),
            _ => Expr::func(f, a),
        };
    }
    if f == Func::Log && a.is_literal_one() {
        return Expr::zero();
    }
    if let Expr::Float(v) = a {
        let r = super::eval::apply_func(f, v);
        if r.is_finite() {
            return Expr::Float(r);
        }
    }
    match (&a, f) {
        (Expr::Func(Func::Exp, inner), Func::Log) => return (**inner).clone(),
        (Expr::Func(Func::Log, inner), Func::Exp) => return (**inner).clone(),
        _ => {}
    }
    if negative_lead(&a) {
        let pos = neg1(a.clone());
        match f {
            Func::Sin | Func::Sinh | Func::Arctan => return neg1(Expr::func(f, pos)),
            Func::Cos | Func::Cosh => return Expr::func(f, pos),
            _ => {}
        }
    }
    Expr::func(f, a)
}

fn expand_rec(e: &Expr, max_terms: usize) -> Option<Expr> {
    match e {
        Expr::Add(xs) => {
            let mut out = Vec::new();
            for x in xs.iter() {
                match expand_rec(x, max_terms)? {
                    Expr::Add(ys) => out.extend(ys.iter().cloned()),
                    y => out.push(y),
                }
                if out.len() > max_terms {
                    return None;
                }
            }
            Some(add_n(out))
        }
        Expr::Mul(xs) => {
            let mut acc: Vec<Expr> = vec![Expr::one()];
            for x in xs.iter() {
                let terms = match expand_rec(x, max_terms)? {
                    Expr::Add(ys) => ys.to_vec(),
                    y => vec![y],
                };
                if acc.len() * terms.len() > max_terms {
                    return None;
                }
                let mut next = Vec::with_capacity(acc.len() * terms.len());
                for a in &acc {
                    for t in &terms {
                        next.push(mul_n(vec![a.clone(), t.clone()]));
                    }
                }
                acc = next;
            }
            Some(add_n(acc))
        }
        Expr::Pow(b, p) => {
            let base = expand_rec(b, max_terms)?;
            match (&base, &**p) {
                (Expr::Add(_), Expr::Rat(r)) if r.is_integer() && (2..=4).contains(r.numer()) => {
                    let n = r.to_i64()?;
                    let factors = vec![base.clone(); n as usize];
                    expand_rec(&Expr::Mul(factors.into()), max_terms)
                }
                _ => Some(pow2(base, (**p).clone())),
            }
        }
        Expr::Func(f, a) => Some(func1(*f, expand_rec(a, max_terms)?)),
        _ => Some(e.clone()),
    }
}
