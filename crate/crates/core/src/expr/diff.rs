use super::simplify::{add_n, func1, mul_n, neg1, pow2};
use super::{Expr, Func, Var};

impl Expr {
    /// Partial derivative with respect to `v`, all other variables held fixed.
    pub fn partial(&self, v: &Var) -> Expr {
        d(self, v).simplify()
    }

    /// Partial derivative with respect to jet `z_i`.
    pub fn dz(&self, i: u32) -> Expr {
        self.partial(&Var::z(i))
    }
}

fn d(e: &Expr, v: &Var) -> Expr {
    if !e.depends_on(v) {
        return Expr::zero();
    }
    match e {
        Expr::Rat(_) | Expr::Float(_) => Expr::zero(),
        Expr::Var(w) => {
            if w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Neg(a) => neg1(d(a, v)),
        Expr::Add(xs) => add_n(xs.iter().map(|x| d(x, v)).collect()),
        Expr::Mul(xs) => {
            let mut terms = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                if !x.depends_on(v) {
                    continue;
                }
                let mut fs: Vec<Expr> = xs.to_vec();
                fs[i] = d(x, v);
                terms.push(mul_n(fs));
            }
            add_n(terms)
        }
        Expr::Div(a, b) => {
            // (a'b - ab') / b^2
            let num = add_n(vec![
                mul_n(vec![d(a, v), (**b).clone()]),
                neg1(mul_n(vec![(**a).clone(), d(b, v)])),
            ]);
            mul_n(vec![num, pow2((**b).clone(), Expr::int(-2))])
        }
        Expr::Pow(b, p) => {
            let (b, p) = (&**b, &**p);
            if !p.depends_on(v) {
                // p b^(p-1) b'
                let pm1 = add_n(vec![p.clone(), Expr::int(-1)]);
                mul_n(vec![p.clone(), pow2(b.clone(), pm1), d(b, v)])
            } else {
                // b^p (p' log b + p b'/b)
                let inner = add_n(vec![
                    mul_n(vec![d(p, v), func1(Func::Log, b.clone())]),
                    mul_n(vec![p.clone(), d(b, v), pow2(b.clone(), Expr::int(-1))]),
                ]);
                mul_n(vec![e.clone(), inner])
            }
        }
        Expr::Func(f, a) => {
            let da = d(a, v);
            let a = (**a).clone();
            let outer = match f {
                Func::Exp => func1(Func::Exp, a),
                Func::Log => pow2(a, Expr::int(-1)),
                Func::Sqrt => mul_n(vec![Expr::rat(1, 2), pow2(a, Expr::rat(-1, 2))]),
                Func::Sin => func1(Func::Cos, a),
                Func::Cos => neg1(func1(Func::Sin, a)),
                Func::Tan => pow2(func1(Func::Cos, a), Expr::int(-2)),
                Func::Sinh => func1(Func::Cosh, a),
                Func::Cosh => func1(Func::Sinh, a),
                Func::Arctan => pow2(add_n(vec![Expr::one(), pow2(a, Expr::int(2))]), Expr::int(-1)),
            };
            mul_n(vec![outer, da])
        }
    }
}
