//! Checks on an integrated surface: first fundamental form, angle-defect curvature and
//! the Gauss map.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use super::FrameField;

/// Per-node diagnostics; `None` where the stencil leaves the integrated component.
/// Tangents use the five-point stencil in each direction.
pub(crate) struct NodeDiagnostics {
    pub curvature: Vec<Option<f64>>,
    pub metric: Vec<Option<f64>>,
    pub gauss_map: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceDiagnostics {
    pub nodes: usize,
    pub valid_nodes: usize,
    pub component_nodes: usize,
    pub mask_fraction: f64,
    /// Vertices with a complete one-ring, where `K` is measured.
    pub curvature_vertices: usize,
    pub mean_k: f64,
    pub mean_k_error: f64,
    pub max_k_error: f64,
    pub metric_nodes: usize,
    /// Componentwise `|dX·dX − (ω1² + ω2²)| / max(g11, g22)`.
    pub max_metric_error: f64,
    pub mean_metric_error: f64,
    pub max_gauss_map_error: f64,
    pub cells: usize,
    pub max_path_residual: f64,
    pub mean_path_residual: f64,
    pub max_drift: f64,
}

/// Acceptance limits for [`SurfaceDiagnostics::failures`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceTolerances {
    pub mean_k_error: f64,
    pub max_metric_error: f64,
    pub max_path_residual: f64,
}

impl Default for SurfaceTolerances {
    fn default() -> SurfaceTolerances {
        SurfaceTolerances { mean_k_error: 1e-2, max_metric_error: 1e-3, max_path_residual: 1e-3 }
    }
}

impl SurfaceDiagnostics {
    /// Human-readable reasons the surface fails `tol`; empty when it passes.
    pub fn failures(&self, tol: &SurfaceTolerances) -> Vec<String> {
        let mut out = Vec::new();
        if self.curvature_vertices == 0 {
            out.push("no interior vertices to measure curvature".to_string());
        } else if !(self.mean_k_error < tol.mean_k_error) {
            out.push(format!("mean |K+1| = {:.3e} exceeds {:.1e}", self.mean_k_error, tol.mean_k_error));
        }
        if !(self.max_metric_error < tol.max_metric_error) && self.metric_nodes > 0 {
            out.push(format!("metric error {:.3e} exceeds {:.1e}", self.max_metric_error, tol.max_metric_error));
        }
        if !(self.max_path_residual < tol.max_path_residual) && self.cells > 0 {
            out.push(format!("path residual {:.3e} exceeds {:.1e}", self.max_path_residual, tol.max_path_residual));
        }
        out
    }
}

/// The two triangles of cell `(i, j)`, split along `(i, j)–(i+1, j+1)`, counterclockwise in `(x, t)`.
pub(crate) fn cell_triangles(i: usize, j: usize) -> [[(usize, usize); 3]; 2] {
    [[(i, j), (i + 1, j), (i + 1, j + 1)], [(i, j), (i + 1, j + 1), (i, j + 1)]]
}

fn angle(at: &Vector3<f64>, p: &Vector3<f64>, q: &Vector3<f64>) -> f64 {
    let (u, v) = (p - at, q - at);
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Fourth-order central difference `(X₋₂ − 8X₋₁ + 8X₊₁ − X₊₂) / 12h`.
fn tangent(m2: Vector3<f64>, m1: Vector3<f64>, p1: Vector3<f64>, p2: Vector3<f64>, h: f64) -> Vector3<f64> {
    (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h)
}

pub(crate) fn node_diagnostics(field: &FrameField) -> NodeDiagnostics {
    let spec = field.spec;
    let (nx, nt) = (spec.nx, spec.nt);
    let pos = |i: usize, j: usize| field.state(i, j).map(|s| s.x);
    let per_node: Vec<(Option<f64>, Option<f64>, Option<f64>)> = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if field.states[k].is_none() || i == 0 || j == 0 || i + 1 >= nx || j + 1 >= nt {
                return (None, None, None);
            }
            let around = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)].map(|(a, b)| pos(a, b));
            let [Some(xm), Some(xp), Some(tm), Some(tp)] = around else {
                return (None, None, None);
            };
            let st = field.states[k].unwrap();
            let co = field.coefficients[k].unwrap();
            let wide = [(i.wrapping_sub(2), j), (i + 2, j), (i, j.wrapping_sub(2)), (i, j + 2)]
                .map(|(a, b)| if a < nx && b < nt { pos(a, b) } else { None });
            let (metric, gauss) = match wide {
                [Some(xm2), Some(xp2), Some(tm2), Some(tp2)] => {
                    let xx = tangent(xm2, xm, xp, xp2, spec.hx);
                    let xt = tangent(tm2, tm, tp, tp2, spec.ht);
                    let g = co.metric();
                    let scale = g[0].max(g[2]);
                    let err = [xx.dot(&xx) - g[0], xx.dot(&xt) - g[1], xt.dot(&xt) - g[2]].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let n = xx.cross(&xt).normalize();
                    (Some(err / scale), Some((n - st.e3 * co.delta12().signum()).norm()))
                }
                _ => (None, None),
            };

            let mut defect = 2.0 * PI;
            let mut area = 0.0;
            let mut complete = true;
            'quads: for (ci, cj) in [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)] {
                for tri in cell_triangles(ci, cj) {
                    let Some(slot) = tri.iter().position(|&v| v == (i, j)) else { continue };
                    let p: Vec<Vector3<f64>> = tri.iter().filter_map(|&(a, b)| pos(a, b)).collect();
                    if p.len() < 3 {
                        complete = false;
                        break 'quads;
                    }
                    let (a, b, c) = (p[slot], p[(slot + 1) % 3], p[(slot + 2) % 3]);
                    defect -= angle(&a, &b, &c);
                    area += (b - a).cross(&(c - a)).norm() / 2.0;
                }
            }
            let curvature = (complete && area > 0.0).then(|| defect / (area / 3.0));
            (curvature, metric, gauss)
        })
        .collect();
    NodeDiagnostics {
        curvature: per_node.iter().map(|v| v.0).collect(),
        metric: per_node.iter().map(|v| v.1).collect(),
        gauss_map: per_node.iter().map(|v| v.2).collect(),
    }
}

fn stats(values: impl Iterator<Item = f64>) -> (usize, f64, f64) {
    let (mut n, mut sum, mut max) = (0usize, 0.0, 0.0f64);
    for v in values {
        n += 1;
        sum += v;
        max = max.max(v);
    }
    (n, if n == 0 { f64::NAN } else { sum / n as f64 }, max)
}

/// Metric, curvature, Gauss-map and path-independence summaries of an integrated field.
pub fn validate_surface(field: &FrameField) -> SurfaceDiagnostics {
    let nd = node_diagnostics(field);
    let (curvature_vertices, mean_k_error, max_k_error) = stats(nd.curvature.iter().flatten().map(|k| (k + 1.0).abs()));
    let (_, mean_k, _) = stats(nd.curvature.iter().flatten().copied());
    let (metric_nodes, mean_metric_error, max_metric_error) = stats(nd.metric.iter().flatten().copied());
    let (_, _, max_gauss_map_error) = stats(nd.gauss_map.iter().flatten().copied());
    let (cells, mean_path_residual, max_path_residual) = stats(field.cell_residuals.iter().flatten().copied());
    SurfaceDiagnostics {
        nodes: field.spec.len(),
        valid_nodes: field.valid_count(),
        component_nodes: field.component_size(),
        mask_fraction: field.mask_fraction(),
        curvature_vertices,
        mean_k,
        mean_k_error,
        max_k_error,
        metric_nodes,
        max_metric_error,
        mean_metric_error,
        max_gauss_map_error,
        cells,
        max_path_residual,
        mean_path_residual,
        max_drift: field.max_drift,
    }
}
