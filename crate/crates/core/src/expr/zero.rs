//! Zero testing: rewrite simplification first, then randomized evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Expr, Point, Var};

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    ProvenZero,
    NumericallyZero,
    NonZero(Point),
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero(_))
    }

    pub fn witness(&self) -> Option<&Point> {
        match self {
            ZeroVerdict::NonZero(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for ZeroVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZeroVerdict::ProvenZero => f.write_str("proven zero"),
            ZeroVerdict::NumericallyZero => f.write_str("numerically zero"),
            ZeroVerdict::NonZero(p) => write!(f, "nonzero at {p}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZeroError {
    #[error("only {found} of {wanted} sample points landed inside the evaluation domain after {attempts} draws")]
    DomainExhausted { found: usize, wanted: usize, attempts: usize },
}

/// Draws `(x, t)` for a sample point, e.g. to stay inside a strip.
pub type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> (f64, f64) + Send + Sync>;

/// Randomized zero-test configuration.
///
/// Jets and `x`, `t` are drawn uniformly from `[-2, 2]`; parameters without a fixed
/// value from `[0.5, 2]`. A draw is rejected when a denominator or log argument is
/// within `den_guard` of zero, a real-domain rule fails, or a `domain` predicate is
/// not strictly positive.
#[derive(Clone)]
pub struct ZeroTest {
    pub samples: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub jet_range: (f64, f64),
    pub xt_range: (f64, f64),
    pub param_range: (f64, f64),
    pub params: BTreeMap<String, f64>,
    pub den_guard: f64,
    pub max_attempts: usize,
    pub domain: Vec<Expr>,
    pub xt_sampler: Option<Sampler>,
    /// Term budget for the expansion attempt before falling back to sampling.
    pub expand_terms: usize,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest {
            samples: 64,
            rel_tol: 1e-9,
            seed: 0x5eed,
            jet_range: (-2.0, 2.0),
            xt_range: (-2.0, 2.0),
            param_range: (0.5, 2.0),
            params: BTreeMap::new(),
            den_guard: 1e-3,
            max_attempts: 64 * 200,
            domain: Vec::new(),
            xt_sampler: None,
            expand_terms: 256,
        }
    }
}

impl fmt::Debug for ZeroTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZeroTest")
            .field("samples", &self.samples)
            .field("rel_tol", &self.rel_tol)
            .field("seed", &self.seed)
            .field("params", &self.params)
            .field("domain", &self.domain.len())
            .finish_non_exhaustive()
    }
}

/// Zero test with the default configuration.
pub fn is_zero(e: &Expr) -> Result<ZeroVerdict, ZeroError> {
    ZeroTest::default().check(e)
}

impl ZeroTest {
    pub fn with_params(mut self, params: &BTreeMap<String, f64>) -> Self {
        self.params.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }

    pub fn with_domain(mut self, preds: impl IntoIterator<Item = Expr>) -> Self {
        self.domain.extend(preds);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sampler(mut self, s: Sampler) -> Self {
        self.xt_sampler = Some(s);
        self
    }

    fn draw(&self, vars: &[Var], rng: &mut ChaCha8Rng, widen: f64) -> Point {
        let mut p = Point::new();
        let (x, t) = match &self.xt_sampler {
            Some(s) => s(rng),
            None => (rng.gen_range(self.xt_range.0..self.xt_range.1), rng.gen_range(self.xt_range.0..self.xt_range.1)),
        };
        for v in vars {
            let val = match v {
                Var::X => x,
                Var::T => t,
                Var::Jet(_) => rng.gen_range(self.jet_range.0 * widen..self.jet_range.1 * widen),
                Var::Param(name) => match self.params.get(&**name) {
                    Some(&val) => val,
                    None => rng.gen_range(self.param_range.0..self.param_range.1),
                },
            };
            p.set(v.clone(), val);
        }
        p
    }

    fn admissible(&self, p: &Point) -> bool {
        self.domain.iter().all(|d| matches!(d.eval_guarded(p, self.den_guard), Ok(v) if v > 0.0))
    }

    /// Draw `n` admissible points for the variables of `exprs`, rejecting those where
    /// any expression fails to evaluate. The jet range doubles after each quarter of the
    /// attempt budget so that domains like `τ + ξ z1 > 0` far from the origin are reached.
    pub fn sample_points(&self, exprs: &[Expr], n: usize) -> Result<Vec<Point>, ZeroError> {
        let mut vars = std::collections::BTreeSet::new();
        for e in exprs.iter().chain(self.domain.iter()) {
            vars.extend(e.vars());
        }
        let vars: Vec<Var> = vars.into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n {
            if attempts >= self.max_attempts {
                return Err(ZeroError::DomainExhausted { found: out.len(), wanted: n, attempts });
            }
            let widen = f64::from(1u32 << (4 * attempts / self.max_attempts.max(1)).min(3));
            attempts += 1;
            let p = self.draw(&vars, &mut rng, widen);
            if self.admissible(&p) && exprs.iter().all(|e| e.eval_guarded(&p, self.den_guard).is_ok()) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Largest scaled residual `|e| / max(1, magnitude)` over the sample points.
    pub fn max_scaled(&self, e: &Expr) -> Result<(f64, Option<Point>), ZeroError> {
        let s = e.simplify();
        let pts = self.sample_points(std::slice::from_ref(&s), self.samples)?;
        let mut worst = (0.0, None);
        for p in pts {
            let (v, m) = s.eval_mag(&p, self.den_guard).expect("sample point was pre-validated");
            let r = v.abs() / m.max(1.0);
            if r > worst.0 || worst.1.is_none() {
                worst = (r, Some(p));
            }
        }
        Ok(worst)
    }

    pub fn check(&self, e: &Expr) -> Result<ZeroVerdict, ZeroError> {
        let s = e.simplify();
        if s.is_literal_zero() {
            return Ok(ZeroVerdict::ProvenZero);
        }
        if s.size() < 4 * self.expand_terms && s.expand(self.expand_terms).is_literal_zero() {
            return Ok(ZeroVerdict::ProvenZero);
        }
        if let Ok(c) = s.eval(&Point::new()) {
            return Ok(if c.abs() < self.rel_tol { ZeroVerdict::NumericallyZero } else { ZeroVerdict::NonZero(Point::new()) });
        }
        let (worst, p) = self.max_scaled(&s)?;
        if worst < self.rel_tol {
            Ok(ZeroVerdict::NumericallyZero)
        } else {
            Ok(ZeroVerdict::NonZero(p.unwrap_or_default()))
        }
    }
}
