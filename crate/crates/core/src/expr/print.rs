//! Printer emitting the same grammar the parser accepts.

use std::fmt;

use num_traits::{One, Signed};

use super::{Expr, Rational};

const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_POW: u8 = 3;
const P_ATOM: u8 = 4;

pub(crate) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str(&render(e).0)
}

fn float_str(v: f64) -> String {
    // Debug keeps a decimal point or exponent, so the literal re-parses as a float.
    format!("{v:?}")
}

fn wrap(e: &Expr, min: u8) -> String {
    let (s, p) = render(e);
    if p < min {
        format!("({s})")
    } else {
        s
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e {
        Expr::Rat(r) => r.is_negative(),
        Expr::Float(v) => *v < 0.0,
        Expr::Mul(xs) => is_negative_term(&xs[0]),
        Expr::Neg(_) => true,
        _ => false,
    }
}

fn render(e: &Expr) -> (String, u8) {
    match e {
        Expr::Rat(r) => {
            if r.is_integer() {
                let p = if r.is_negative() { P_MUL } else { P_ATOM };
                (r.numer().to_string(), p)
            } else {
                (format!("{}/{}", r.numer(), r.denom()), P_MUL)
            }
        }
        Expr::Float(v) => (float_str(*v), if *v < 0.0 { P_MUL } else { P_ATOM }),
        Expr::Var(v) => (v.to_string(), P_ATOM),
        Expr::Neg(a) => (format!("-{}", wrap(a, P_POW)), P_MUL),
        Expr::Func(func, a) => (format!("{}({})", func.name(), render(a).0), P_ATOM),
        Expr::Add(xs) => {
            let mut s = String::new();
            for (i, x) in xs.iter().enumerate() {
                let body = wrap(x, P_ADD);
                if i == 0 {
                    s.push_str(&body);
                } else if is_negative_term(x) && body.starts_with('-') {
                    s.push_str(" - ");
                    s.push_str(&body[1..]);
                } else {
                    s.push_str(" + ");
                    s.push_str(&body);
                }
            }
            (s, P_ADD)
        }
        Expr::Mul(xs) => render_mul(xs),
        Expr::Div(a, b) => (format!("{}/{}", wrap(a, P_MUL), wrap(b, P_POW)), P_MUL),
        Expr::Pow(b, p) => match &**p {
            Expr::Rat(r) if *r == Rational::new(1, 2) => (format!("sqrt({})", render(b).0), P_ATOM),
            Expr::Rat(r) if r.is_negative() => (format!("1/{}", denominator(b, -*r)), P_MUL),
            _ => (format!("{}^{}", wrap(b, P_ATOM), wrap(p, P_ATOM)), P_POW),
        },
    }
}

fn denominator(b: &Expr, r: Rational) -> String {
    let (s, p) = if r.is_one() { render(b) } else { render(&Expr::Pow(b.clone().into(), Expr::Rat(r).into())) };
    if p < P_POW {
        format!("({s})")
    } else {
        s
    }
}

fn render_mul(xs: &[Expr]) -> (String, u8) {
    let mut negative = false;
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    let mut den_atomic = true;
    for x in xs {
        match x {
            Expr::Rat(r) => {
                negative ^= r.is_negative();
                let n = r.numer().abs();
                if n != 1 {
                    num.push(n.to_string());
                }
                if *r.denom() != 1 {
                    den.push(r.denom().to_string());
                }
            }
            Expr::Float(v) => {
                negative ^= *v < 0.0;
                if v.abs() != 1.0 {
                    num.push(float_str(v.abs()));
                }
            }
            Expr::Pow(b, p) if matches!(&**p, Expr::Rat(r) if r.is_negative()) => {
                let Expr::Rat(r) = &**p else { unreachable!() };
                den.push(denominator(b, -*r));
            }
            Expr::Neg(a) => {
                negative = !negative;
                num.push(wrap(a, P_POW));
            }
            other => num.push(wrap(other, P_POW)),
        }
    }
    if den.len() > 1 {
        den_atomic = false;
    }
    let mut s = String::new();
    if negative {
        s.push('-');
    }
    if num.is_empty() {
        s.push('1');
    } else {
        s.push_str(&num.join("*"));
    }
    if !den.is_empty() {
        s.push('/');
        if den_atomic {
            s.push_str(&den[0]);
        } else {
            s.push('(');
            s.push_str(&den.join("*"));
            s.push(')');
        }
    }
    (s, P_MUL)
}
