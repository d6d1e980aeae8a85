//! Rule-based elimination deciding whether a triple admits `(a, b, c)` depending on a
//! jet of order `ℓ ≤ 1`.
//!
//! Branches, tried in order and all traced:
//! - `A+`, `A−`: `c + r²a + 2rb = 0` with `r = f11/f21`, so `b = σ − r a` and
//!   `c = r² a − 2σ r`. Codazzi becomes linear in `a` and its partials; differentiating
//!   in the jets `a` cannot depend on and eliminating the partials solves for `a`.
//! - `B-universal`: `a, b, c` depend on `x, t` only. Codazzi is then linear in
//!   `(a_x, a_t, b_x, b_t, c_x, c_t, a, b, c)` with jet-dependent coefficients; the
//!   relations come from the null space of sampled coefficient rows.
//! - `B-case2±` (`ℓ = 1`, hyperbolic): `b = σ − r a`, `c = r² a − 2σ r` with
//!   `r = f12/f22`, allowed only when `r` does not depend on `z0`.
//!
//! Every candidate is checked against the full Gauss and Codazzi equations.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use super::{codazzi_residuals, gauss_residual, universal_sff, ImmersionParams, SecondFundamentalForm, SffError};
use crate::expr::{number, EquationContext, Expr, Jet, Var, ZeroTest};
use crate::forms::{delta, PssTriple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    TopJetCoefficient,
    BranchFactor,
    RatioSubstitution,
    Prolong,
    Eliminate,
    SolveA,
    Contradiction,
    NonzeroA,
    JetDependence,
    CodazziCheck,
    Case2Condition,
    JetIndependence,
    LinearRelation,
    GaussIncompatible,
    PatternFit,
    Unresolved,
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub branch: String,
    pub rule: Rule,
    /// Derived constraint, read as `expr = 0`.
    pub expr: Expr,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchResult {
    Solution,
    Inconsistent,
    Skipped,
    Undetermined,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    UniversalFamily(SecondFundamentalForm),
    ZeroJetFamily(SecondFundamentalForm),
    Inconsistent,
}

#[derive(Clone, Debug)]
pub struct ObstructionVerdict {
    pub order: u32,
    pub outcome: Outcome,
    pub branches: Vec<(String, BranchResult)>,
    pub trace: Vec<TraceStep>,
}

impl ObstructionVerdict {
    pub fn kind(&self) -> &'static str {
        match self.outcome {
            Outcome::UniversalFamily(_) => "UniversalFamily",
            Outcome::ZeroJetFamily(_) => "ZeroJetFamily",
            Outcome::Inconsistent => "Inconsistent",
        }
    }

    pub fn sff(&self) -> Option<&SecondFundamentalForm> {
        match &self.outcome {
            Outcome::UniversalFamily(s) | Outcome::ZeroJetFamily(s) => Some(s),
            Outcome::Inconsistent => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let sff = self.sff().map(|s| {
            json!({
                "a": s.a.to_string(),
                "b": s.b.to_string(),
                "c": s.c.to_string(),
                "jet_order": s.jet_order,
                "strip": s.strip.as_ref().map(|st| json!({
                    "form": st.linear_form().to_string(),
                    "lower": st.lower.to_string(),
                    "upper": st.upper.to_string(),
                })),
                "params": s.params,
            })
        });
        json!({
            "order": self.order,
            "outcome": self.kind(),
            "sff": sff,
            "branches": self.branches.iter().map(|(id, r)| json!({"id": id, "result": r})).collect::<Vec<_>>(),
            "trace": self.trace.iter().map(|s| json!({
                "branch": s.branch,
                "rule": s.rule,
                "expr": s.expr.to_string(),
                "note": s.note,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Coefficient vector over `[∂a/∂deps..., a, 1]`.
type Row = Vec<Expr>;

struct Analyzer<'a> {
    tr: &'a PssTriple,
    ctx: &'a EquationContext,
    zt: ZeroTest,
    imm: ImmersionParams,
    trace: Vec<TraceStep>,
}

fn sym(name: &str) -> Expr {
    Expr::param(name)
}

fn deriv_name(v: &Var) -> String {
    match v {
        Var::X => "a_x".into(),
        Var::T => "a_t".into(),
        other => format!("a_{other}"),
    }
}

fn scale(r: &[Expr], k: &Expr) -> Row {
    r.iter().map(|e| e * k).collect()
}

fn add(r: &[Expr], s: &[Expr]) -> Row {
    r.iter().zip(s).map(|(a, b)| a + b).collect()
}

fn unit(n: usize, i: usize) -> Row {
    (0..n).map(|k| if k == i { Expr::one() } else { Expr::zero() }).collect()
}

pub fn finite_jet_obstruction(tr: &PssTriple, order: u32, imm: &ImmersionParams) -> Result<ObstructionVerdict, SffError> {
    if order > 1 {
        return Err(SffError::UnsupportedOrder(order));
    }
    let mut an = Analyzer { tr, ctx: &tr.ctx, zt: tr.zero_test(), imm: *imm, trace: Vec::new() };
    an.preamble(order);

    let deps = an.deps(order);
    let r = (tr.f(1, 1) / tr.f(2, 1)).simplify();
    let mut branches = Vec::new();
    let mut outcome = None;
    for sigma in [1i64, -1] {
        let id = format!("A{}", if sigma > 0 { "+" } else { "-" });
        let (res, sff) = an.ratio_branch(&id, &r, sigma, &deps)?;
        branches.push((id, res));
        if outcome.is_none() {
            outcome = sff;
        }
    }
    let (res, sff) = an.universal_branch("B-universal")?;
    branches.push(("B-universal".into(), res));
    if outcome.is_none() {
        outcome = sff;
    }
    if order == 1 && an.ctx.is_hyperbolic() {
        let cond = an.case2_condition()?;
        for sigma in [1i64, -1] {
            let id = format!("B-case2{}", if sigma > 0 { "+" } else { "-" });
            let (res, sff) = match &cond {
                Some(r2) => an.ratio_branch(&id, r2, sigma, &[Var::X, Var::T, Var::z(1)])?,
                None => (BranchResult::Skipped, None),
            };
            branches.push((id, res));
            if outcome.is_none() {
                outcome = sff;
            }
        }
    }
    let outcome = match outcome {
        Some(s) if s.is_universal() => Outcome::UniversalFamily(s),
        Some(s) => Outcome::ZeroJetFamily(s),
        None => Outcome::Inconsistent,
    };
    Ok(ObstructionVerdict { order, outcome, branches, trace: an.trace })
}

impl<'a> Analyzer<'a> {
    fn step(&mut self, branch: &str, rule: Rule, expr: Expr, note: impl Into<String>) {
        self.trace.push(TraceStep { branch: branch.into(), rule, expr, note: note.into() });
    }

    fn zero(&self, e: &Expr) -> Result<bool, SffError> {
        if e.is_literal_zero() {
            return Ok(true);
        }
        Ok(self.zt.check(e)?.is_zero())
    }

    fn deps(&self, order: u32) -> Vec<Var> {
        let mut d = vec![Var::X, Var::T, Var::z(0)];
        if order == 1 {
            d.push(Var::z(1));
            if self.ctx.is_hyperbolic() {
                d.push(Var::w(1));
            }
        }
        d
    }

    /// The top-jet constraints shared by every branch, recorded symbolically.
    fn preamble(&mut self, order: u32) {
        let top = if self.ctx.is_hyperbolic() { Jet::w(order) } else { Jet::z(order) };
        let (aw, bw, cw) = (sym(&format!("a_{top}")), sym(&format!("b_{top}")), sym(&format!("c_{top}")));
        let (f11, f21) = (self.tr.f(1, 1).clone(), self.tr.f(2, 1).clone());
        self.step("*", Rule::TopJetCoefficient, (&f11 * &aw + &f21 * &bw).simplify(), "coefficient of the first prolonged jet in E1");
        self.step("*", Rule::TopJetCoefficient, (&f11 * &bw + &f21 * &cw).simplify(), "coefficient of the first prolonged jet in E2");
        let r = (&f11 / &f21).simplify();
        let bracket = sym("c") + &r * &r * sym("a") + Expr::int(2) * &r * sym("b");
        self.step("*", Rule::BranchFactor, (bracket * aw).simplify(), "branch A: bracket vanishes; branch B: top-jet derivative vanishes");
    }

    fn row_expr(names: &[String], row: &[Expr]) -> Expr {
        let n = names.len();
        let mut terms: Vec<Expr> = names.iter().zip(row).map(|(nm, c)| c * sym(nm)).collect();
        terms.push(&row[n] * sym("a"));
        terms.push(row[n + 1].clone());
        Expr::sum(terms).simplify()
    }

    /// Codazzi rows after `b = σ − r a`, `c = r² a − 2σ r`.
    fn ratio_rows(&self, r: &Expr, sigma: i64, deps: &[Var]) -> Result<[Row; 2], SffError> {
        let ctx = self.ctx;
        let n = deps.len();
        let w = n + 2;
        let av = unit(w, n);
        let one = unit(w, n + 1);
        let mut dxa = vec![Expr::zero(); w];
        let mut dta = vec![Expr::zero(); w];
        for (i, d) in deps.iter().enumerate() {
            dxa[i] = ctx.total_x(&Expr::var(d.clone()))?;
            dta[i] = ctx.total_t(&Expr::var(d.clone()))?;
        }
        let sg = Expr::int(sigma);
        let r2 = (r * r).simplify();
        let (drx, drt) = (ctx.total_x(r)?, ctx.total_t(r)?);
        let (dr2x, dr2t) = (ctx.total_x(&r2)?, ctx.total_t(&r2)?);
        let b = add(&scale(&av, &-r), &scale(&one, &sg));
        let c = add(&scale(&av, &r2), &scale(&one, &(Expr::int(-2) * &sg * r)));
        let db = |dr: &Expr, da: &Row| add(&scale(&av, &-dr), &scale(da, &-r));
        let dc = |dr2: &Expr, dr: &Expr, da: &Row| add(&add(&scale(&av, dr2), &scale(da, &r2)), &scale(&one, &(Expr::int(-2) * &sg * dr)));
        let (dxb, dtb) = (db(&drx, &dxa), db(&drt, &dta));
        let (dxc, dtc) = (dc(&dr2x, &drx, &dxa), dc(&dr2t, &drt, &dta));
        let tr = self.tr;
        let (f11, f12, f21, f22) = (tr.f(1, 1), tr.f(1, 2), tr.f(2, 1), tr.f(2, 2));
        let d13 = delta(tr, 1, 3);
        let d23 = delta(tr, 2, 3);
        let amc = add(&av, &scale(&c, &Expr::int(-1)));
        let two = Expr::int(2);
        let e1 = [
            scale(&dta, f11),
            scale(&dtb, f21),
            scale(&dxa, &-f12),
            scale(&dxb, &-f22),
            scale(&b, &(-(&two * &d13))),
            scale(&amc, &d23),
        ];
        let e2 = [
            scale(&dtb, f11),
            scale(&dtc, f21),
            scale(&dxb, &-f12),
            scale(&dxc, &-f22),
            scale(&amc, &d13),
            scale(&b, &(&two * &d23)),
        ];
        let fold = |parts: &[Row]| -> Result<Row, SffError> {
            let mut acc = vec![Expr::zero(); w];
            for p in parts {
                acc = add(&acc, p);
            }
            acc.iter().map(|e| Ok(ctx.reduce(&e.simplify())?)).collect()
        };
        Ok([fold(&e1)?, fold(&e2)?])
    }

    fn ratio_branch(&mut self, id: &str, r: &Expr, sigma: i64, deps: &[Var]) -> Result<(BranchResult, Option<SecondFundamentalForm>), SffError> {
        let sg = Expr::int(sigma);
        let (a, b, c) = (sym("a"), sym("b"), sym("c"));
        self.step(id, Rule::RatioSubstitution, (&b - (&sg - r * &a)).simplify(), "b = σ − r a");
        self.step(id, Rule::RatioSubstitution, (&c - (r * r * &a - Expr::int(2) * &sg * r)).simplify(), "c = r² a − 2σ r");

        let names: Vec<String> = deps.iter().map(deriv_name).collect();
        let n = deps.len();
        let base = self.ratio_rows(r, sigma, deps)?;
        let dep_jets: BTreeSet<Jet> = deps.iter().filter_map(|v| v.jet()).collect();
        let mut free: BTreeSet<Jet> = BTreeSet::new();
        for row in &base {
            for e in row {
                free.extend(e.jets().into_iter().filter(|j| !dep_jets.contains(j)));
            }
        }
        let free: Vec<Var> = free.into_iter().map(Var::Jet).collect();

        for level in 1..=2 {
            let mut rows: Vec<Row> = base.to_vec();
            let mut frontier: Vec<Row> = base.to_vec();
            for _ in 0..level {
                let mut next = Vec::new();
                for row in &frontier {
                    for v in &free {
                        let d: Row = row.iter().map(|e| e.partial(v)).collect();
                        if d.iter().any(|e| !e.is_literal_zero()) {
                            next.push(d);
                        }
                    }
                }
                rows.extend(next.iter().cloned());
                frontier = next;
            }
            let names_free: Vec<String> = free.iter().map(|v| v.to_string()).collect();
            self.step(id, Rule::Prolong, Expr::zero(), format!("{} equations from E1, E2 and their derivatives of order ≤ {level} in {}", rows.len(), names_free.join(", ")));

            let rows = self.eliminate(id, &names, rows, n)?;
            match self.solve_for_a(id, &rows, n)? {
                Solved::Value(a_expr) => return self.check_ratio_candidate(id, r, sigma, a_expr, &free),
                Solved::Contradiction => return Ok((BranchResult::Inconsistent, None)),
                Solved::Undetermined if level == 2 => {
                    self.step(id, Rule::Unresolved, Expr::zero(), "a is not determined by the derived equations");
                    return Ok((BranchResult::Undetermined, None));
                }
                Solved::Undetermined => {}
            }
        }
        unreachable!()
    }

    /// Gaussian elimination of the derivative unknowns by cross multiplication.
    fn eliminate(&mut self, id: &str, names: &[String], mut rows: Vec<Row>, n: usize) -> Result<Vec<Row>, SffError> {
        for row in rows.iter_mut() {
            for e in row.iter_mut() {
                *e = e.simplify();
            }
        }
        for k in 0..n {
            let mut pivot: Option<(usize, usize)> = None;
            for (i, row) in rows.iter_mut().enumerate() {
                if row[k].is_literal_zero() {
                    continue;
                }
                if self.zt.check(&row[k])?.is_zero() {
                    row[k] = Expr::zero();
                    continue;
                }
                let size = row.iter().map(Expr::size).sum::<usize>();
                if pivot.is_none_or(|(_, s)| size < s) {
                    pivot = Some((i, size));
                }
            }
            let Some((pi, _)) = pivot else { continue };
            let prow = rows.remove(pi);
            self.step(id, Rule::Eliminate, Self::row_expr(names, &prow), format!("pivot for {}", names[k]));
            let pk = prow[k].clone();
            for row in rows.iter_mut() {
                if row[k].is_literal_zero() {
                    continue;
                }
                let qk = row[k].clone();
                *row = row.iter().zip(&prow).map(|(x, y)| (&pk * x - &qk * y).simplify()).collect();
                row[k] = Expr::zero();
            }
        }
        // drop rows that vanish identically
        let mut out = Vec::new();
        for row in rows {
            let mut nz = false;
            for e in &row[n..] {
                if !self.zero(e)? {
                    nz = true;
                    break;
                }
            }
            if nz {
                out.push(row);
            }
        }
        Ok(out)
    }

    fn solve_for_a(&mut self, id: &str, rows: &[Row], n: usize) -> Result<Solved, SffError> {
        for row in rows {
            if !self.zero(&row[n])? {
                let a = (-(&row[n + 1]) / &row[n]).simplify();
                self.step(id, Rule::SolveA, (sym("a") - &a).simplify(), "derivative-free relation");
                return Ok(Solved::Value(a));
            }
        }
        if let Some(row) = rows.first() {
            self.step(id, Rule::Contradiction, row[n + 1].clone(), "nonzero relation free of a");
            return Ok(Solved::Contradiction);
        }
        Ok(Solved::Undetermined)
    }

    fn check_ratio_candidate(
        &mut self,
        id: &str,
        r: &Expr,
        sigma: i64,
        a: Expr,
        free: &[Var],
    ) -> Result<(BranchResult, Option<SecondFundamentalForm>), SffError> {
        for v in free {
            let d = a.partial(v);
            if !self.zero(&d)? {
                self.step(id, Rule::JetDependence, d, format!("a would depend on {v}"));
                return Ok((BranchResult::Inconsistent, None));
            }
        }
        if self.zero(&a)? {
            self.step(id, Rule::NonzeroA, a, "a vanishes identically");
            return Ok((BranchResult::Inconsistent, None));
        }
        let a = self.compact(a)?;
        let sg = Expr::int(sigma);
        let b = &sg - r * &a;
        let c = r * r * &a - Expr::int(2) * &sg * r;
        let s = SecondFundamentalForm::new(a, b, c);
        let g = gauss_residual(&s);
        let [e1, e2] = codazzi_residuals(self.tr, &s)?;
        for (name, e) in [("Gauss", g), ("E1", e1), ("E2", e2)] {
            if !self.zero(&e)? {
                self.step(id, Rule::CodazziCheck, e, format!("{name} fails for the candidate"));
                return Ok((BranchResult::Inconsistent, None));
            }
        }
        self.step(id, Rule::CodazziCheck, Expr::zero(), "Gauss and Codazzi hold");
        Ok((BranchResult::Solution, Some(s)))
    }

    /// Shorter form of a candidate: parameters bound and every jet it does not
    /// actually depend on pinned to a constant, kept only if it agrees with the original.
    fn compact(&self, a: Expr) -> Result<Expr, SffError> {
        const VALUES: [i64; 5] = [1, 2, 3, 5, 7];
        let bound = a.bind_params(&self.tr.params).simplify();
        let mut best = if self.zero(&(&bound - &a))? { bound } else { a.clone() };
        let mut idle = Vec::new();
        for j in best.jets() {
            let v = Var::Jet(j);
            if self.zero(&best.partial(&v))? {
                idle.push(v);
            }
        }
        if idle.is_empty() {
            return Ok(best);
        }
        for k in 0..VALUES.len() {
            let cand = best
                .subst_with(&|v| idle.iter().position(|w| w == v).map(|i| Expr::int(VALUES[(i + k) % VALUES.len()])))
                .simplify();
            if cand.size() < best.size() && self.zt.check(&(&cand - &a)).is_ok_and(|v| v.is_zero()) {
                best = cand;
                break;
            }
        }
        Ok(best)
    }

    /// `r = f12/f22` when `f12, f22 ≢ 0` and `∂r/∂z0 ≡ 0`.
    fn case2_condition(&mut self) -> Result<Option<Expr>, SffError> {
        let (f12, f22) = (self.tr.f(1, 2).clone(), self.tr.f(2, 2).clone());
        if self.zero(&f22)? || self.zero(&f12)? {
            self.step("B-case2", Rule::Case2Condition, Expr::zero(), "f12 or f22 vanishes; branch empty");
            return Ok(None);
        }
        let r = (&f12 / &f22).simplify();
        let d = r.dz(0);
        if !self.zero(&d)? {
            self.step("B-case2", Rule::Case2Condition, d, "(f12/f22)_z0 ≠ 0; branch empty");
            return Ok(None);
        }
        self.step("B-case2", Rule::Case2Condition, d, "(f12/f22)_z0 = 0");
        Ok(Some(r))
    }

    /// Codazzi coefficients over `[a_x, a_t, b_x, b_t, c_x, c_t, a, b, c]`.
    fn universal_table(&self) -> [[Expr; 9]; 2] {
        let tr = self.tr;
        let (f11, f12, f21, f22) = (tr.f(1, 1).clone(), tr.f(1, 2).clone(), tr.f(2, 1).clone(), tr.f(2, 2).clone());
        let d13 = delta(tr, 1, 3);
        let d23 = delta(tr, 2, 3);
        let z = Expr::zero;
        let two = Expr::int(2);
        [
            [-&f12, f11.clone(), -&f22, f21.clone(), z(), z(), d23.clone(), -(&two * &d13), -&d23],
            [z(), z(), -&f12, f11, -&f22, f21, d13.clone(), &two * &d23, -&d13],
        ]
    }

    fn universal_branch(&mut self, id: &str) -> Result<(BranchResult, Option<SecondFundamentalForm>), SffError> {
        const NAMES: [&str; 9] = ["a_x", "a_t", "b_x", "b_t", "c_x", "c_t", "a", "b", "c"];
        self.step(id, Rule::JetIndependence, Expr::zero(), "a, b, c depend on x, t only");
        let table = self.universal_table();
        let all: Vec<Expr> = table.iter().flatten().map(|e| e.simplify()).collect();
        let pts = self.zt.sample_points(&all, 40)?;
        let mut rows: Vec<[f64; 9]> = Vec::new();
        for p in &pts {
            let mut p = p.clone();
            p.set(Var::X, 0.31);
            p.set(Var::T, -0.17);
            for eq in 0..2 {
                let mut row = [0.0; 9];
                let mut ok = true;
                for k in 0..9 {
                    match all[eq * 9 + k].eval_guarded(&p, self.zt.den_guard) {
                        Ok(v) => row[k] = v,
                        Err(_) => ok = false,
                    }
                }
                if ok {
                    rows.push(row);
                }
            }
        }
        let m = DMatrix::from_fn(rows.len(), 9, |i, j| rows[i][j]);
        let rref = row_space_rref(&m);
        for row in &rref {
            let e = Expr::sum(row.iter().zip(NAMES).map(|(c, nm)| number(snap(*c)) * sym(nm))).simplify();
            self.step(id, Rule::LinearRelation, e, "");
        }

        // algebraic relations among (a, b, c)
        let alg: Vec<[f64; 3]> = rref.iter().filter(|r| r[..6].iter().all(|v| v.abs() < 1e-9)).map(|r| [r[6], r[7], r[8]]).collect();
        if !gauss_compatible(&alg) {
            self.step(id, Rule::GaussIncompatible, gauss_residual_symbolic(), "no (a, b, c) obeying the algebraic relations satisfies ac − b² + 1 = 0");
            return Ok((BranchResult::Inconsistent, None));
        }

        let Some((pc, qc, resid)) = fit_exponential(&m) else {
            self.step(id, Rule::PatternFit, Expr::zero(), "relations do not fix an exponential strip solution");
            return Ok((BranchResult::Inconsistent, None));
        };
        if resid > 1e-7 || (pc.abs() < 1e-12 && qc.abs() < 1e-12) {
            self.step(id, Rule::PatternFit, Expr::zero(), format!("no solution of the form b = γ e^(2(px + qt)) (fit residual {resid:.3e})"));
            return Ok((BranchResult::Inconsistent, None));
        }
        let (pe, qe) = (number(snap(pc)), number(snap(qc)));
        let s = universal_sff(1.0, pe.clone(), qe.clone(), self.imm.l, self.imm.gamma_im)?;
        self.step(id, Rule::PatternFit, (sym("b") - &s.b).simplify(), format!("a_x = p(a − c), b_x = 2pb, a_t = q(a − c), b_t = 2qb with p = {pe}, q = {qe}"));
        let zt = s.zero_test(self.tr)?;
        let [e1, e2] = codazzi_residuals(self.tr, &s)?;
        for (name, e) in [("Gauss", gauss_residual(&s)), ("E1", e1), ("E2", e2)] {
            if !zt.check(&e)?.is_zero() {
                self.step(id, Rule::CodazziCheck, e, format!("{name} fails on the strip"));
                return Ok((BranchResult::Inconsistent, None));
            }
        }
        self.step(id, Rule::CodazziCheck, Expr::zero(), "Gauss and Codazzi hold on the strip");
        Ok((BranchResult::Solution, Some(s)))
    }
}

enum Solved {
    Value(Expr),
    Contradiction,
    Undetermined,
}

fn gauss_residual_symbolic() -> Expr {
    (sym("a") * sym("c") - sym("b").powi(2) + Expr::one()).simplify()
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Reduced row echelon basis of the row space, columns in the given order.
fn row_space_rref(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let n = m.row(i).norm();
        if n > 0.0 {
            m[(i, j)] / n
        } else {
            0.0
        }
    });
    let svd = scaled.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9 * smax.max(1e-300)).count();
    let ncol = m.ncols();
    let mut basis: Vec<Vec<f64>> = (0..rank)
        .map(|i| {
            let idx = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > 1e-9 * smax).nth(i).unwrap();
            (0..ncol).map(|j| vt[(idx, j)]).collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut row = 0;
    for col in 0..ncol {
        if row >= basis.len() {
            break;
        }
        let (best, val) = (row..basis.len()).map(|i| (i, basis[i][col].abs())).fold((row, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if val < 1e-8 {
            continue;
        }
        basis.swap(row, best);
        let pv = basis[row][col];
        for v in basis[row].iter_mut() {
            *v /= pv;
        }
        for i in 0..basis.len() {
            if i != row {
                let f = basis[i][col];
                if f != 0.0 {
                    for j in 0..ncol {
                        basis[i][j] -= f * basis[row][j];
                    }
                }
            }
        }
        row += 1;
    }
    for r in basis.into_iter().take(row) {
        out.push(r.into_iter().map(|v| if v.abs() < 1e-10 { 0.0 } else { v }).collect());
    }
    out
}

/// Does `ac − b² = −1` have a solution in the null space of `alg`?
fn gauss_compatible(alg: &[[f64; 3]]) -> bool {
    let m = DMatrix::from_fn(alg.len().max(3), 3, |i, j| alg.get(i).map_or(0.0, |r| r[j]));
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut sv = [0.0; 3];
    for (k, s) in svd.singular_values.iter().enumerate() {
        sv[k] = *s;
    }
    let null: Vec<[f64; 3]> = (0..3).filter(|&k| sv[k] < 1e-8).map(|k| [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]]).collect();
    // quadratic form q(v) = v_a v_c − v_b² restricted to the null space
    let q = |u: &[f64; 3], v: &[f64; 3]| 0.5 * (u[0] * v[2] + u[2] * v[0]) - u[1] * v[1];
    let k = null.len();
    if k == 0 {
        return false;
    }
    let g = DMatrix::from_fn(k, k, |i, j| q(&null[i], &null[j]));
    g.symmetric_eigenvalues().iter().any(|&e| e < -1e-9)
}

/// Least-squares fit of `a_x = p(a − c)`, `b_x = 2pb`, `a_t = q(a − c)`, `b_t = 2qb`
/// (with `c = (b² − 1)/a`) to the sampled Codazzi rows.
fn fit_exponential(m: &DMatrix<f64>) -> Option<(f64, f64, f64)> {
    let samples = [(0.7, 0.4), (1.3, -1.1), (-0.9, 1.7), (2.1, 0.2), (0.5, -0.6)];
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for &(a, b) in &samples {
        let c = (b * b - 1.0) / a;
        let amc = a - c;
        // derivatives of c from Gauss: c_x = (2 b b_x − c a_x)/a
        let cx = (4.0 * b * b - c * amc) / a;
        let wx = [amc, 0.0, 2.0 * b, 0.0, cx, 0.0, 0.0, 0.0, 0.0];
        let wt = [0.0, amc, 0.0, 2.0 * b, 0.0, cx, 0.0, 0.0, 0.0];
        let w0 = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, a, b, c];
        for i in 0..m.nrows() {
            let n = m.row(i).norm().max(1e-300);
            let dot = |w: &[f64; 9]| (0..9).map(|j| m[(i, j)] * w[j]).sum::<f64>() / n;
            lhs.push([dot(&wx), dot(&wt)]);
            rhs.push(-dot(&w0));
        }
    }
    let a = DMatrix::from_fn(lhs.len(), 2, |i, j| lhs[i][j]);
    let b = DVector::from_vec(rhs.clone());
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-12).ok()?;
    let resid = (&a * &sol - &b).norm() / b.norm().max(1.0);
    Some((sol[0], sol[1], resid))
}
