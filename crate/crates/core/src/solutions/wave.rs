//! Traveling waves `u = φ(x + c t)` of `u_xt = F(u, u_x)`, i.e. `c φ'' = F(φ, φ')`.

use ode_solvers::{Dopri5, OutputType, System, Vector2};

use super::{AnalyticSolution, SolutionError};
use crate::expr::{Compiled, EquationContext, Jet, Var};

const RTOL: f64 = 1e-13;
const ATOL: f64 = 1e-13;
/// Step cap; accepted steps become the interpolation nodes.
const MAX_STEP: f64 = 1.0 / 128.0;

struct Profile<'a> {
    f: &'a Compiled,
    c: f64,
}

impl System<f64, Vector2<f64>> for Profile<'_> {
    fn system(&self, _s: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = self.f.eval(&[y[0], y[1]]) / self.c;
    }
}

/// Tabulated profile with quintic Hermite interpolation from `(φ, φ', φ'')` at nodes.
#[derive(Clone, Debug)]
pub struct TravelingWave {
    pub c: f64,
    s: Vec<f64>,
    y: Vec<[f64; 3]>,
}

fn integrate(f: &Compiled, c: f64, y0: [f64; 2], end: f64) -> Result<(Vec<f64>, Vec<[f64; 2]>), SolutionError> {
    if end == 0.0 {
        return Ok((vec![0.0], vec![y0]));
    }
    let mut solver = Dopri5::from_param(
        Profile { f, c },
        0.0,
        end,
        0.0,
        Vector2::new(y0[0], y0[1]),
        RTOL,
        ATOL,
        0.9,
        0.04,
        0.2,
        10.0,
        MAX_STEP,
        0.0,
        1_000_000,
        1000,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| SolutionError::Stepper(e.to_string()))?;
    let mut xs = vec![0.0];
    let mut ys = vec![y0];
    for (x, v) in solver.x_out().iter().zip(solver.y_out()) {
        if *x != 0.0 {
            xs.push(*x);
            ys.push([v[0], v[1]]);
        }
    }
    if ys.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(SolutionError::Stepper("profile left the finite range".into()));
    }
    Ok((xs, ys))
}

impl TravelingWave {
    pub fn range(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().unwrap())
    }

    fn contains_s(&self, s: f64) -> bool {
        let (lo, hi) = self.range();
        lo - 1e-12 <= s && s <= hi + 1e-12
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        self.contains_s(x + self.c * t)
    }

    /// `(φ, φ', φ'')` at `s`.
    pub fn profile(&self, s: f64) -> Option<[f64; 3]> {
        if !self.contains_s(s) {
            return None;
        }
        let k = self.s.partition_point(|&v| v <= s).clamp(1, self.s.len() - 1) - 1;
        if self.s.len() == 1 {
            return Some(self.y[0]);
        }
        let (s0, s1) = (self.s[k], self.s[k + 1]);
        let h = s1 - s0;
        let (a, b) = (self.y[k], self.y[k + 1]);
        let c0 = a[0];
        let c1 = h * a[1];
        let c2 = h * h * a[2] / 2.0;
        let p = b[0] - (c0 + c1 + c2);
        let d = h * b[1] - (c1 + 2.0 * c2);
        let q = h * h * b[2] - 2.0 * c2;
        let c3 = 10.0 * p - 4.0 * d + q / 2.0;
        let c4 = -15.0 * p + 7.0 * d - q;
        let c5 = 6.0 * p - 3.0 * d + q / 2.0;
        let r = (s - s0) / h;
        let v = c0 + r * (c1 + r * (c2 + r * (c3 + r * (c4 + r * c5))));
        let dv = c1 + r * (2.0 * c2 + r * (3.0 * c3 + r * (4.0 * c4 + r * 5.0 * c5)));
        let ddv = 2.0 * c2 + r * (6.0 * c3 + r * (12.0 * c4 + r * 20.0 * c5));
        Some([v, dv / h, ddv / (h * h)])
    }

    /// Jets of `u = φ(x + c t)` up to order two.
    pub fn jet(&self, j: Jet, x: f64, t: f64) -> Result<f64, SolutionError> {
        if j.order() > 2 {
            return Err(SolutionError::JetUnavailable { jet: j });
        }
        let y = self.profile(x + self.c * t).ok_or(SolutionError::OutsideDomain { x, t })?;
        Ok(y[j.order() as usize] * self.c.powi(j.t as i32))
    }
}

/// Solve `c φ'' = F(φ, φ')` with `φ(0) = u0`, `φ'(0) = du0` over `s ∈ range` (extended
/// to contain 0) and expose `u(x, t) = φ(x + c t)`.
pub fn traveling_wave(ctx: &EquationContext, c: f64, u0: f64, du0: f64, range: (f64, f64)) -> Result<AnalyticSolution, SolutionError> {
    if c == 0.0 || !c.is_finite() {
        return Err(SolutionError::ZeroWaveSpeed);
    }
    if !ctx.is_hyperbolic() {
        return Err(SolutionError::NotHyperbolic);
    }
    super::check_bound(ctx.rhs())?;
    let f = Compiled::with_slots(ctx.rhs(), &[Var::z(0), Var::z(1)]);
    let (lo, hi) = (range.0.min(0.0), range.1.max(0.0));
    let (sb, yb) = integrate(&f, c, [u0, du0], lo)?;
    let (sf, yf) = integrate(&f, c, [u0, du0], hi)?;
    let mut s = Vec::with_capacity(sb.len() + sf.len());
    let mut y = Vec::with_capacity(sb.len() + sf.len());
    let push = |s: &mut Vec<f64>, y: &mut Vec<[f64; 3]>, si: f64, yi: [f64; 2]| {
        if s.last().is_some_and(|&l| si <= l + 1e-14) {
            return;
        }
        s.push(si);
        y.push([yi[0], yi[1], f.eval(&[yi[0], yi[1]]) / c]);
    };
    for (si, yi) in sb.iter().zip(&yb).rev() {
        push(&mut s, &mut y, *si, *yi);
    }
    for (si, yi) in sf.iter().zip(&yf) {
        push(&mut s, &mut y, *si, *yi);
    }
    let w = TravelingWave { c, s, y };
    Ok(AnalyticSolution::from_wave(&format!("wave(c={c})"), ctx.clone(), w))
}
