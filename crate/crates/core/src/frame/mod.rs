//! Moving-frame integration of the immersion `X: U → R³` along a sampled solution.
//!
//! Frame equations, with rows `(X, e1, e2, e3)`:
//!
//! ```text
//! dX  =  ω1 e1 + ω2 e2
//! de1 =            ω3 e2 + ω31 e3
//! de2 = −ω3 e1           + ω32 e3
//! de3 = −ω31 e1 − ω32 e2
//! ```
//!
//! with `ω31 = aω1 + bω2` and `ω32 = bω1 + cω2`. The convention `ω^2_1 = ω3` is the one
//! under which the two edge orders of every cell agree for the sine-Gordon kink.

mod mesh;
mod surface;

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{Matrix3, Matrix4, Matrix4x3, SMatrix, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Compiled, Jet, Var};
use crate::forms::PssTriple;
use crate::sff::{strip_contains, DomainStrip, SecondFundamentalForm, SffError};
use crate::solutions::{GridSpec, SolutionGrid};

pub use mesh::{export_mesh, ExportSummary, SurfaceMesh};
pub use surface::{validate_surface, SurfaceDiagnostics, SurfaceTolerances};

/// Relative degeneracy threshold: nodes with `|Δ12| ≤ 0.1·max|Δ12|` are masked.
pub const DEFAULT_EPS_DEG: f64 = 0.1;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("seed frame is not a right-handed orthonormal frame (error {0:.3e})")]
    NotOrthonormal(f64),
    #[error("degenerate coframe at ({x}, {t}): |Δ12| = {delta:.3e}")]
    Degenerate { x: f64, t: f64, delta: f64 },
    #[error("({x}, {t}) lies outside the strip of the second fundamental form")]
    OutsideStrip { x: f64, t: f64 },
    #[error("coefficients are not finite at ({x}, {t})")]
    NonFinite { x: f64, t: f64 },
    #[error("solution grid has no {0} field")]
    MissingJet(Jet),
    #[error("`{0}` has no numeric value; bind parameters first")]
    Unbound(String),
    #[error("node ({i}, {j}) is outside the {nx}×{nt} grid")]
    NodeOutOfRange { i: usize, j: usize, nx: usize, nt: usize },
    #[error(transparent)]
    Sff(#[from] SffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Position and orthonormal frame at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameState {
    pub x: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub e3: Vector3<f64>,
}

impl Default for FrameState {
    fn default() -> FrameState {
        FrameState::identity()
    }
}

impl FrameState {
    /// `X = 0` with the standard basis.
    pub fn identity() -> FrameState {
        FrameState { x: Vector3::zeros(), e1: Vector3::x(), e2: Vector3::y(), e3: Vector3::z() }
    }

    fn matrix(&self) -> Matrix4x3<f64> {
        Matrix4x3::from_rows(&[self.x.transpose(), self.e1.transpose(), self.e2.transpose(), self.e3.transpose()])
    }

    fn from_matrix(m: &Matrix4x3<f64>) -> FrameState {
        let r = |k: usize| m.row(k).transpose();
        FrameState { x: r(0), e1: r(1), e2: r(2), e3: r(3) }
    }

    /// `max |eᵢ·eⱼ − δᵢⱼ|`.
    pub fn orthonormality_error(&self) -> f64 {
        let e = [self.e1, self.e2, self.e3];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((e[i].dot(&e[j]) - want).abs());
            }
        }
        worst
    }

    /// `|e3 − e1×e2|`.
    pub fn handedness_error(&self) -> f64 {
        (self.e3 - self.e1.cross(&self.e2)).norm()
    }

    /// Gram–Schmidt on `e1, e2`, then `e3 = e1×e2`.
    pub fn reorthonormalize(&mut self) {
        self.e1 = self.e1.normalize();
        self.e2 = (self.e2 - self.e1 * self.e1.dot(&self.e2)).normalize();
        self.e3 = self.e1.cross(&self.e2);
    }
}

/// Coefficients of the frame system at one node: `ω_i = omega[i][0] dx + omega[i][1] dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameCoefficients {
    pub omega: [[f64; 2]; 3],
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FrameCoefficients {
    pub fn delta12(&self) -> f64 {
        self.omega[0][0] * self.omega[1][1] - self.omega[1][0] * self.omega[0][1]
    }

    pub fn omega31(&self) -> [f64; 2] {
        let w = &self.omega;
        [self.a * w[0][0] + self.b * w[1][0], self.a * w[0][1] + self.b * w[1][1]]
    }

    pub fn omega32(&self) -> [f64; 2] {
        let w = &self.omega;
        [self.b * w[0][0] + self.c * w[1][0], self.b * w[0][1] + self.c * w[1][1]]
    }

    /// Connection matrix `Ω` with `d e_i = Σ_j Ω_ij e_j` along direction `d` (0 = x, 1 = t).
    pub fn connection(&self, d: usize) -> Matrix3<f64> {
        let (w3, w31, w32) = (self.omega[2][d], self.omega31()[d], self.omega32()[d]);
        Matrix3::new(0.0, w3, w31, -w3, 0.0, w32, -w31, -w32, 0.0)
    }

    /// Generator acting on the rows `(X, e1, e2, e3)`.
    fn generator(&self, d: usize) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m[(0, 1)] = self.omega[0][d];
        m[(0, 2)] = self.omega[1][d];
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(&self.connection(d));
        m
    }

    /// The linear system `Y' = M Y` for `Y = (X, e1, e2, e3)` stacked as a 12-vector.
    pub fn system_matrix(&self, d: usize) -> SMatrix<f64, 12, 12> {
        self.generator(d).kronecker(&Matrix3::identity())
    }

    /// `(g11, g12, g22)` of `ω1² + ω2²`.
    pub fn metric(&self) -> [f64; 3] {
        let w = &self.omega;
        [
            w[0][0] * w[0][0] + w[1][0] * w[1][0],
            w[0][0] * w[0][1] + w[1][0] * w[1][1],
            w[0][1] * w[0][1] + w[1][1] * w[1][1],
        ]
    }

    fn is_finite(&self) -> bool {
        self.omega.iter().flatten().chain([&self.a, &self.b, &self.c]).all(|v| v.is_finite())
    }
}

/// Compiled `f_ij` and `(a, b, c)` with parameters bound, evaluated from grid jets.
struct Evaluator {
    f: Vec<Compiled>,
    abc: Vec<Compiled>,
    jets: Vec<Jet>,
    strip: Option<(DomainStrip, BTreeMap<String, f64>)>,
}

impl Evaluator {
    fn new(tr: &PssTriple, s: &SecondFundamentalForm) -> Result<Evaluator, FrameError> {
        let tr = tr.bind_params();
        let mut params = tr.params.clone();
        params.extend(s.params.clone());
        let mut exprs = Vec::with_capacity(9);
        for i in 1..=3 {
            for j in 1..=2 {
                exprs.push(tr.f(i, j).clone());
            }
        }
        for e in s.components() {
            exprs.push(e.bind_params(&params).simplify());
        }
        if let Some(p) = exprs.iter().flat_map(|e| e.params()).next() {
            return Err(FrameError::Unbound(p.to_string()));
        }
        let jets: Vec<Jet> = exprs.iter().flat_map(|e| e.jets()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let mut slots = vec![Var::X, Var::T];
        slots.extend(jets.iter().map(|&j| Var::Jet(j)));
        let compiled: Vec<Compiled> = exprs.iter().map(|e| Compiled::with_slots(e, &slots)).collect();
        let strip = s.strip.clone().map(|st| (st, params));
        Ok(Evaluator { f: compiled[..6].to_vec(), abc: compiled[6..].to_vec(), jets, strip })
    }

    fn check_grid(&self, grid: &SolutionGrid) -> Result<(), FrameError> {
        match self.jets.iter().find(|&&j| grid.field(j).is_none()) {
            Some(&j) => Err(FrameError::MissingJet(j)),
            None => Ok(()),
        }
    }

    fn in_strip(&self, x: f64, t: f64) -> Result<bool, FrameError> {
        match &self.strip {
            Some((st, params)) => Ok(strip_contains(st, x, t, params)?),
            None => Ok(true),
        }
    }

    /// Coefficients at node `(i, j)`; the grid is assumed to carry every needed jet.
    fn at(&self, grid: &SolutionGrid, i: usize, j: usize) -> FrameCoefficients {
        let spec = &grid.spec;
        let k = spec.index(i, j);
        let mut vals = vec![spec.x(i), spec.t(j)];
        vals.extend(self.jets.iter().map(|&jet| grid.field(jet).map_or(f64::NAN, |f| f[k])));
        let f: Vec<f64> = self.f.iter().map(|c| c.eval(&vals)).collect();
        let abc: Vec<f64> = self.abc.iter().map(|c| c.eval(&vals)).collect();
        FrameCoefficients { omega: [[f[0], f[1]], [f[2], f[3]], [f[4], f[5]]], a: abc[0], b: abc[1], c: abc[2] }
    }
}

/// Frame system coefficients at node `(i, j)` of `grid`.
///
/// Fails when the node is outside the strip of `s`, the coefficients are not finite,
/// or `|Δ12| ≤ eps_deg`.
pub fn frame_ode_coefficients(
    tr: &PssTriple,
    s: &SecondFundamentalForm,
    grid: &SolutionGrid,
    node: (usize, usize),
    eps_deg: f64,
) -> Result<FrameCoefficients, FrameError> {
    let spec = grid.spec;
    let (i, j) = node;
    if i >= spec.nx || j >= spec.nt {
        return Err(FrameError::NodeOutOfRange { i, j, nx: spec.nx, nt: spec.nt });
    }
    let ev = Evaluator::new(tr, s)?;
    ev.check_grid(grid)?;
    let (x, t) = (spec.x(i), spec.t(j));
    if !ev.in_strip(x, t)? {
        return Err(FrameError::OutsideStrip { x, t });
    }
    let c = ev.at(grid, i, j);
    if !c.is_finite() {
        return Err(FrameError::NonFinite { x, t });
    }
    if c.delta12().abs() <= eps_deg {
        return Err(FrameError::Degenerate { x, t, delta: c.delta12() });
    }
    Ok(c)
}

#[derive(Clone, Debug)]
pub struct FrameOptions {
    /// Mask nodes with `|Δ12| ≤ eps_deg·max|Δ12|`.
    pub eps_deg: f64,
    pub seed: FrameState,
    /// Defaults to the valid node nearest the centre of the grid.
    pub seed_node: Option<(usize, usize)>,
}

impl Default for FrameOptions {
    fn default() -> FrameOptions {
        FrameOptions { eps_deg: DEFAULT_EPS_DEG, seed: FrameState::identity(), seed_node: None }
    }
}

/// Integrated frame over the seed's connected component of valid nodes.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub spec: GridSpec,
    /// Per node; `None` outside the seed's component.
    pub states: Vec<Option<FrameState>>,
    /// Per node; `None` where the node is masked.
    pub coefficients: Vec<Option<FrameCoefficients>>,
    pub seed_node: Option<(usize, usize)>,
    /// Absolute `|Δ12|` threshold that was applied.
    pub delta_threshold: f64,
    /// Per cell `(i, j)` at index `j·(nx−1) + i`: `max |path₁ − path₂| / (hx·ht)` over the
    /// rows `X, e1, e2, e3`, where the paths go x-then-t and t-then-x around the cell.
    pub cell_residuals: Vec<Option<f64>>,
    /// Largest orthonormality error seen before a re-projection.
    pub max_drift: f64,
}

impl FrameField {
    pub fn state(&self, i: usize, j: usize) -> Option<&FrameState> {
        self.states[self.spec.index(i, j)].as_ref()
    }

    pub fn coefficients_at(&self, i: usize, j: usize) -> Option<&FrameCoefficients> {
        self.coefficients[self.spec.index(i, j)].as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.component_size() == 0
    }

    pub fn component_size(&self) -> usize {
        self.states.iter().filter(|s| s.is_some()).count()
    }

    pub fn valid_count(&self) -> usize {
        self.coefficients.iter().filter(|c| c.is_some()).count()
    }

    /// Fraction of grid nodes that carry an integrated frame.
    pub fn mask_fraction(&self) -> f64 {
        if self.spec.is_empty() {
            0.0
        } else {
            self.component_size() as f64 / self.spec.len() as f64
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.cell_residuals.iter().flatten().fold(0.0, |m, &v| m.max(v))
    }

    pub fn mean_residual(&self) -> f64 {
        let v: Vec<f64> = self.cell_residuals.iter().flatten().copied().collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

/// One RK4 step of `Y' = M(s) Y` across an edge, with `M` linear between the end nodes.
fn rk4(y: &Matrix4x3<f64>, c0: &FrameCoefficients, c1: &FrameCoefficients, d: usize, h: f64) -> Matrix4x3<f64> {
    let (m0, m1) = (c0.generator(d), c1.generator(d));
    let mm = (m0 + m1) * 0.5;
    let k1 = m0 * y;
    let k2 = mm * (y + k1 * (h / 2.0));
    let k3 = mm * (y + k2 * (h / 2.0));
    let k4 = m1 * (y + k3 * h);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn mask(ev: &Evaluator, grid: &SolutionGrid, eps_deg: f64) -> Result<(Vec<Option<FrameCoefficients>>, f64), FrameError> {
    let spec = grid.spec;
    let inside: Vec<bool> = (0..spec.len())
        .map(|k| ev.in_strip(spec.x(k % spec.nx), spec.t(k / spec.nx)))
        .collect::<Result<_, _>>()?;
    let raw: Vec<Option<FrameCoefficients>> = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let c = ev.at(grid, k % spec.nx, k / spec.nx);
            (inside[k] && c.is_finite()).then_some(c)
        })
        .collect();
    let peak = raw.iter().flatten().fold(0.0f64, |m, c| m.max(c.delta12().abs()));
    let threshold = eps_deg * peak;
    let coeffs = raw.into_iter().map(|c| c.filter(|c| c.delta12().abs() > threshold && c.delta12() != 0.0)).collect();
    Ok((coeffs, threshold))
}

fn pick_seed(spec: &GridSpec, coeffs: &[Option<FrameCoefficients>]) -> Option<(usize, usize)> {
    let (cx, ct) = ((spec.nx as f64 - 1.0) / 2.0, (spec.nt as f64 - 1.0) / 2.0);
    let mut best: Option<(f64, usize)> = None;
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_none() {
            continue;
        }
        let (i, j) = ((k % spec.nx) as f64, (k / spec.nx) as f64);
        let d = ((i - cx) * spec.hx).powi(2) + ((j - ct) * spec.ht).powi(2);
        if best.is_none_or(|(bd, _)| d < bd - 1e-12) {
            best = Some((d, k));
        }
    }
    best.map(|(_, k)| (k % spec.nx, k / spec.nx))
}

/// Integrate the frame over the connected valid component containing the seed node.
///
/// Nodes are reached breadth-first from the seed, each by one RK4 step across a grid
/// edge, with the frame re-orthonormalized after every step.
pub fn integrate_frame(
    tr: &PssTriple,
    s: &SecondFundamentalForm,
    grid: &SolutionGrid,
    opts: &FrameOptions,
) -> Result<FrameField, FrameError> {
    let seed = opts.seed;
    let err = seed.orthonormality_error().max(seed.handedness_error());
    if !(err < 1e-9) {
        return Err(FrameError::NotOrthonormal(err));
    }
    let spec = grid.spec;
    let ev = Evaluator::new(tr, s)?;
    let empty = |delta_threshold| FrameField {
        spec,
        states: vec![None; spec.len()],
        coefficients: vec![None; spec.len()],
        seed_node: None,
        delta_threshold,
        cell_residuals: vec![None; spec.nx.saturating_sub(1) * spec.nt.saturating_sub(1)],
        max_drift: 0.0,
    };
    if spec.is_empty() {
        return Ok(empty(0.0));
    }
    ev.check_grid(grid)?;
    let (coeffs, threshold) = mask(&ev, grid, opts.eps_deg)?;
    let seed_node = match opts.seed_node {
        Some((i, j)) if i >= spec.nx || j >= spec.nt => return Err(FrameError::NodeOutOfRange { i, j, nx: spec.nx, nt: spec.nt }),
        Some((i, j)) => {
            let c = ev.at(grid, i, j);
            if coeffs[spec.index(i, j)].is_none() {
                return Err(FrameError::Degenerate { x: spec.x(i), t: spec.t(j), delta: c.delta12() });
            }
            Some((i, j))
        }
        None => pick_seed(&spec, &coeffs),
    };
    let Some((si, sj)) = seed_node else {
        let mut f = empty(threshold);
        f.coefficients = coeffs;
        return Ok(f);
    };

    let mut states: Vec<Option<FrameState>> = vec![None; spec.len()];
    states[spec.index(si, sj)] = Some(seed);
    let mut queue = VecDeque::from([(si, sj)]);
    let mut max_drift: f64 = 0.0;
    while let Some((i, j)) = queue.pop_front() {
        let k0 = spec.index(i, j);
        let (y0, c0) = (states[k0].unwrap().matrix(), coeffs[k0].unwrap());
        let next = [
            (j + 1 < spec.nt).then(|| (i, j + 1, 1, spec.ht)),
            (j > 0).then(|| (i, j - 1, 1, -spec.ht)),
            (i + 1 < spec.nx).then(|| (i + 1, j, 0, spec.hx)),
            (i > 0).then(|| (i - 1, j, 0, -spec.hx)),
        ];
        for (ni, nj, d, h) in next.into_iter().flatten() {
            let k1 = spec.index(ni, nj);
            let Some(c1) = coeffs[k1] else { continue };
            if states[k1].is_some() {
                continue;
            }
            let mut st = FrameState::from_matrix(&rk4(&y0, &c0, &c1, d, h));
            max_drift = max_drift.max(st.orthonormality_error());
            st.reorthonormalize();
            states[k1] = Some(st);
            queue.push_back((ni, nj));
        }
    }

    let (cx, ct) = (spec.nx.saturating_sub(1), spec.nt.saturating_sub(1));
    let cell_residuals: Vec<Option<f64>> = (0..cx * ct)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell % cx, cell / cx);
            let ks = [spec.index(i, j), spec.index(i + 1, j), spec.index(i, j + 1), spec.index(i + 1, j + 1)];
            if ks.iter().any(|&k| states[k].is_none()) {
                return None;
            }
            let [c00, c10, c01, c11] = ks.map(|k| coeffs[k].unwrap());
            let y = states[ks[0]].unwrap().matrix();
            let p1 = rk4(&rk4(&y, &c00, &c10, 0, spec.hx), &c10, &c11, 1, spec.ht);
            let p2 = rk4(&rk4(&y, &c00, &c01, 1, spec.ht), &c01, &c11, 0, spec.hx);
            let diff = p1 - p2;
            let worst = (0..4).map(|r| diff.row(r).norm()).fold(0.0, f64::max);
            Some(worst / (spec.hx * spec.ht))
        })
        .collect();

    Ok(FrameField { spec, states, coefficients: coeffs, seed_node, delta_threshold: threshold, cell_residuals, max_drift })
}
