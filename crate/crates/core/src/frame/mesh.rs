//! Triangle mesh of an integrated field and its OBJ export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::surface::{cell_triangles, node_diagnostics};
use super::{FrameError, FrameField, SurfaceDiagnostics};

/// Vertices are the integrated nodes in grid order; triangles use 0-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    pub positions: Vec<[f64; 3]>,
    pub nodes: Vec<(usize, usize)>,
    pub triangles: Vec<[usize; 3]>,
    /// Angle-defect curvature, where the vertex has a complete one-ring.
    pub curvature: Vec<Option<f64>>,
    pub metric_error: Vec<Option<f64>>,
}

impl SurfaceMesh {
    pub fn from_field(field: &FrameField) -> SurfaceMesh {
        let spec = field.spec;
        let nd = node_diagnostics(field);
        let mut index = HashMap::new();
        let mut mesh = SurfaceMesh { positions: vec![], nodes: vec![], triangles: vec![], curvature: vec![], metric_error: vec![] };
        for j in 0..spec.nt {
            for i in 0..spec.nx {
                let k = spec.index(i, j);
                if let Some(s) = &field.states[k] {
                    index.insert((i, j), mesh.positions.len());
                    mesh.positions.push([s.x[0], s.x[1], s.x[2]]);
                    mesh.nodes.push((i, j));
                    mesh.curvature.push(nd.curvature[k]);
                    mesh.metric_error.push(nd.metric[k]);
                }
            }
        }
        for j in 0..spec.nt.saturating_sub(1) {
            for i in 0..spec.nx.saturating_sub(1) {
                for tri in cell_triangles(i, j) {
                    if let [Some(&a), Some(&b), Some(&c)] = tri.map(|v| index.get(&v)) {
                        mesh.triangles.push([a, b, c]);
                    }
                }
            }
        }
        mesh
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn to_obj(&self) -> String {
        let mut s = format!("# pss surface mesh\n# vertices {} triangles {}\n", self.positions.len(), self.triangles.len());
        for p in &self.positions {
            let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExportSummary {
    pub obj: PathBuf,
    pub report: PathBuf,
    pub vertices: usize,
    pub triangles: usize,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    vertices: usize,
    triangles: usize,
    diagnostics: &'a SurfaceDiagnostics,
    warnings: &'a [String],
}

/// Write `path` as OBJ and a JSON diagnostics report next to it (`<stem>.diagnostics.json`).
pub fn export_mesh(mesh: &SurfaceMesh, diagnostics: &SurfaceDiagnostics, path: &Path) -> Result<ExportSummary, FrameError> {
    let mut warnings = Vec::new();
    if mesh.is_empty() {
        log::warn!("exporting an empty mesh to {}", path.display());
        warnings.push("empty field: no vertices were integrated".to_string());
    }
    std::fs::write(path, mesh.to_obj())?;
    let report = path.with_extension("diagnostics.json");
    let body = Report { vertices: mesh.positions.len(), triangles: mesh.triangles.len(), diagnostics, warnings: &warnings };
    std::fs::write(&report, serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(ExportSummary { obj: path.to_path_buf(), report, vertices: mesh.positions.len(), triangles: mesh.triangles.len(), warnings })
}
