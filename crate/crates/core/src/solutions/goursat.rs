//! Characteristic-rectangle scheme for the Goursat problem of `u_xt = F(u, u_x)`.
//!
//! `u` is advanced cell by cell from
//! `u(i+1,j+1) = u(i+1,j) + u(i,j+1) − u(i,j) + ∬F`, with the cell integral taken by
//! the trapezoidal rule. `p = u_x` and `q = u_t` are carried along with it by
//! integrating `p_t = F` in `t` and `q_x = F` in `x`, again by trapezoids. The corner
//! value of `F` is predicted by `F(i+1,j) + F(i,j+1) − F(i,j)` and corrected once.

use std::collections::BTreeMap;

use super::{AnalyticSolution, GridSpec, SolutionError, SolutionGrid};
use crate::expr::{Compiled, EquationContext, Jet, Var};

/// Largest `|u|` accepted before the solve is cut off.
pub const BLOWUP_BOUND: f64 = 1e6;

struct State {
    spec: GridSpec,
    u: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    f: Vec<f64>,
}

/// Derivative along a line of samples: central inside, second-order one-sided at the ends.
fn differentiate(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![(v[1] - v[0]) / h; 2],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
                } else if k == n - 1 {
                    (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
                } else {
                    (v[k + 1] - v[k - 1]) / (2.0 * h)
                }
            })
            .collect(),
    }
}

impl State {
    /// Grid from the first `rows` rows.
    fn finish(&self, rows: usize) -> Result<SolutionGrid, SolutionError> {
        let spec = GridSpec { nt: rows, ..self.spec };
        let n = spec.len();
        let (nx, nt) = (spec.nx, spec.nt);
        let mut uxx = vec![0.0; n];
        let mut utt = vec![0.0; n];
        for k in 0..nt {
            let d = differentiate(&self.p[k * nx..(k + 1) * nx], spec.hx);
            uxx[k * nx..(k + 1) * nx].copy_from_slice(&d);
        }
        for i in 0..nx {
            let col: Vec<f64> = (0..nt).map(|k| self.q[spec.index(i, k)]).collect();
            for (k, v) in differentiate(&col, spec.ht).into_iter().enumerate() {
                utt[spec.index(i, k)] = v;
            }
        }
        let fields = BTreeMap::from([
            (Jet::z(0), self.u[..n].to_vec()),
            (Jet::z(1), self.p[..n].to_vec()),
            (Jet::w(1), self.q[..n].to_vec()),
            (Jet::z(2), uxx),
            (Jet { x: 1, t: 1 }, self.f[..n].to_vec()),
            (Jet::w(2), utt),
        ]);
        SolutionGrid::from_fields(spec, fields)
    }
}

fn solve(ctx: &EquationContext, grid: &GridSpec, phi: &[[f64; 2]], psi: &[[f64; 2]]) -> Result<SolutionGrid, SolutionError> {
    if !ctx.is_hyperbolic() {
        return Err(SolutionError::NotHyperbolic);
    }
    super::check_bound(ctx.rhs())?;
    let rhs = Compiled::with_slots(ctx.rhs(), &[Var::z(0), Var::z(1)]);
    let big_f = |u: f64, p: f64| rhs.eval(&[u, p]);
    let (nx, nt) = (grid.nx, grid.nt);
    let n = grid.len();
    let mut st = State { spec: *grid, u: vec![0.0; n], p: vec![0.0; n], q: vec![0.0; n], f: vec![0.0; n] };
    if n == 0 {
        return st.finish(0);
    }
    let (phi0, psi0) = (phi[0][0], psi[0][0]);
    if (phi0 - psi0).abs() > 1e-10 * (1.0 + phi0.abs()) {
        return Err(SolutionError::CornerMismatch { phi: phi0, psi: psi0 });
    }
    let (hx, ht) = (grid.hx, grid.ht);
    let blow = |st: &State, i: usize, k: usize, v: f64| -> Result<(), SolutionError> {
        if v.is_finite() && v.abs() <= BLOWUP_BOUND {
            return Ok(());
        }
        Err(SolutionError::BlowUp { x: grid.x(i), t: grid.t(k), bound: BLOWUP_BOUND, rows: k, partial: Box::new(st.finish(k)?) })
    };

    for i in 0..nx {
        let [u, p] = phi[i];
        st.u[i] = u;
        st.p[i] = p;
        st.f[i] = big_f(u, p);
        blow(&st, i, 0, u)?;
    }
    st.q[0] = psi[0][1];
    for i in 1..nx {
        st.q[i] = st.q[i - 1] + hx / 2.0 * (st.f[i - 1] + st.f[i]);
    }

    for k in 1..nt {
        let (row, prev) = (k * nx, (k - 1) * nx);
        let [u, q] = psi[k];
        let fp = st.f[prev];
        let p_pred = st.p[prev] + ht * fp;
        let p = st.p[prev] + ht / 2.0 * (fp + big_f(u, p_pred));
        st.u[row] = u;
        st.q[row] = q;
        st.p[row] = p;
        st.f[row] = big_f(u, p);
        blow(&st, 0, k, u)?;
        for i in 0..nx - 1 {
            let (a, b, c, d) = (prev + i, prev + i + 1, row + i, row + i + 1);
            let base = st.u[b] + st.u[c] - st.u[a];
            let area = hx * ht / 4.0;
            let mut fd = st.f[b] + st.f[c] - st.f[a];
            let mut u = 0.0;
            let mut p = 0.0;
            for _ in 0..2 {
                u = base + area * (st.f[a] + st.f[b] + st.f[c] + fd);
                p = st.p[b] + ht / 2.0 * (st.f[b] + fd);
                fd = big_f(u, p);
            }
            st.u[d] = u;
            st.p[d] = p;
            st.f[d] = fd;
            st.q[d] = st.q[c] + hx / 2.0 * (st.f[c] + fd);
            blow(&st, i + 1, k, u)?;
        }
    }
    st.finish(nt)
}

/// Solve `u_xt = F(u, u_x)` on `grid` from `u(x, t0) = φ(x)` and `u(x0, t) = ψ(t)`.
/// `phi` and `psi` return the value and its derivative.
pub fn goursat_solve(
    ctx: &EquationContext,
    phi: impl Fn(f64) -> (f64, f64),
    psi: impl Fn(f64) -> (f64, f64),
    grid: &GridSpec,
) -> Result<SolutionGrid, SolutionError> {
    let ph: Vec<[f64; 2]> = (0..grid.nx).map(|i| phi(grid.x(i))).map(|(a, b)| [a, b]).collect();
    let ps: Vec<[f64; 2]> = (0..grid.nt).map(|k| psi(grid.t(k))).map(|(a, b)| [a, b]).collect();
    solve(ctx, grid, &ph, &ps)
}

/// Goursat solve with characteristic data taken from `sol`.
pub fn goursat_from_solution(sol: &AnalyticSolution, grid: &GridSpec) -> Result<SolutionGrid, SolutionError> {
    let ph = (0..grid.nx)
        .map(|i| Ok([sol.jet(Jet::z(0), grid.x(i), grid.t0)?, sol.jet(Jet::z(1), grid.x(i), grid.t0)?]))
        .collect::<Result<Vec<_>, SolutionError>>()?;
    let ps = (0..grid.nt)
        .map(|k| Ok([sol.jet(Jet::z(0), grid.x0, grid.t(k))?, sol.jet(Jet::w(1), grid.x0, grid.t(k))?]))
        .collect::<Result<Vec<_>, SolutionError>>()?;
    solve(sol.equation(), grid, &ph, &ps)
}
