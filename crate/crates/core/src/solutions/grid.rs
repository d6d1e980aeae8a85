//! Rectangular grids of jet values and their file formats.
//!
//! CSV: two `#` header lines (`# pss-grid v1`, then `# x0=..,t0=..,hx=..,ht=..,nx=..,nt=..`)
//! followed by a table with columns `x,t` and one column per stored jet.
//!
//! Binary: one text line
//! `pss-grid v1 binary f64-le x0=.. t0=.. hx=.. ht=.. nx=.. nt=.. fields=z0,z1,..\n`
//! followed by each field in turn as `nx·nt` little-endian `f64`, row-major with `t`
//! as the slow index.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::SolutionError;
use crate::expr::Jet;

/// Uniform grid `x_i = x0 + i·hx`, `t_j = t0 + j·ht`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub x0: f64,
    pub t0: f64,
    pub hx: f64,
    pub ht: f64,
    pub nx: usize,
    pub nt: usize,
}

impl GridSpec {
    /// Grid covering `[x0, x1] × [t0, t1]` with spacing `h` in both directions.
    pub fn new(x0: f64, x1: f64, t0: f64, t1: f64, h: f64) -> Result<GridSpec, SolutionError> {
        if !(h > 0.0) || !(x1 >= x0) || !(t1 >= t0) || ![x0, x1, t0, t1, h].iter().all(|v| v.is_finite()) {
            return Err(SolutionError::InvalidGrid(format!("{x0}:{x1}:{t0}:{t1}:{h}")));
        }
        let count = |a: f64, b: f64| ((b - a) / h + 1e-9).floor() as usize + 1;
        Ok(GridSpec { x0, t0, hx: h, ht: h, nx: count(x0, x1), nt: count(t0, t1) })
    }

    pub fn from_counts(x0: f64, t0: f64, hx: f64, ht: f64, nx: usize, nt: usize) -> GridSpec {
        GridSpec { x0, t0, hx, ht, nx, nt }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.ht
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Same extent with the spacing halved.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            hx: self.hx / 2.0,
            ht: self.ht / 2.0,
            nx: if self.nx == 0 { 0 } else { 2 * self.nx - 1 },
            nt: if self.nt == 0 { 0 } else { 2 * self.nt - 1 },
            ..*self
        }
    }
}

/// `x0:x1:t0:t1:h`.
impl FromStr for GridSpec {
    type Err = SolutionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| SolutionError::InvalidGrid(s.to_string()))?;
        match v[..] {
            [x0, x1, t0, t1, h] => GridSpec::new(x0, x1, t0, t1, h),
            _ => Err(SolutionError::InvalidGrid(s.to_string())),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x0={},t0={},hx={},ht={},nx={},nt={}", self.x0, self.t0, self.hx, self.ht, self.nx, self.nt)
    }
}

/// `u` and its derivatives up to order two at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct JetValues {
    pub u: f64,
    pub ux: f64,
    pub ut: f64,
    pub uxx: f64,
    pub uxt: f64,
    pub utt: f64,
}

impl JetValues {
    pub fn get(&self, j: Jet) -> Option<f64> {
        Some(match (j.x, j.t) {
            (0, 0) => self.u,
            (1, 0) => self.ux,
            (0, 1) => self.ut,
            (2, 0) => self.uxx,
            (1, 1) => self.uxt,
            (0, 2) => self.utt,
            _ => return None,
        })
    }
}

const UXT: Jet = Jet { x: 1, t: 1 };

/// The six jets every grid carries.
pub const STANDARD_JETS: [Jet; 6] = [Jet::z(0), Jet::z(1), Jet::w(1), Jet::z(2), UXT, Jet::w(2)];

/// Jet values sampled on a [`GridSpec`]. Always holds `u` and all derivatives up to
/// order two; higher jets may be added.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionGrid {
    pub spec: GridSpec,
    fields: BTreeMap<Jet, Vec<f64>>,
}

fn parse_jet(s: &str) -> Option<Jet> {
    let s = s.trim();
    if let Some(r) = s.strip_prefix('z') {
        return r.parse().ok().map(Jet::z);
    }
    if let Some(r) = s.strip_prefix('w') {
        return r.parse().ok().map(Jet::w);
    }
    let (a, b) = s.strip_prefix('u')?.split_once('_')?;
    Some(Jet { x: a.parse().ok()?, t: b.parse().ok()? })
}

fn format_err(msg: impl Into<String>) -> SolutionError {
    SolutionError::Format(msg.into())
}

fn parse_header(text: &str) -> Result<(GridSpec, Option<Vec<Jet>>), SolutionError> {
    let mut kv = BTreeMap::new();
    let (text, fields) = match text.split_once("fields=") {
        Some((head, f)) => (head, Some(f.trim())),
        None => (text, None),
    };
    for tok in text.split([',', ' ']).filter(|t| t.contains('=')) {
        let (k, v) = tok.split_once('=').unwrap();
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let num = |k: &str| -> Result<f64, SolutionError> {
        kv.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| format_err(format!("header is missing `{k}`")))
    };
    let spec = GridSpec::from_counts(num("x0")?, num("t0")?, num("hx")?, num("ht")?, num("nx")? as usize, num("nt")? as usize);
    let fields = match fields {
        Some(f) => Some(f.split(',').map(|n| parse_jet(n).ok_or_else(|| format_err(format!("unknown field `{n}`")))).collect::<Result<_, _>>()?),
        None => None,
    };
    Ok((spec, fields))
}

impl SolutionGrid {
    /// Grid from explicit fields; each must have `nx·nt` entries and the standard
    /// jets must all be present.
    pub fn from_fields(spec: GridSpec, fields: BTreeMap<Jet, Vec<f64>>) -> Result<SolutionGrid, SolutionError> {
        for j in STANDARD_JETS {
            if !fields.contains_key(&j) {
                return Err(format_err(format!("missing field {j}")));
            }
        }
        if let Some((j, v)) = fields.iter().find(|(_, v)| v.len() != spec.len()) {
            return Err(format_err(format!("field {j} has {} values, grid has {}", v.len(), spec.len())));
        }
        Ok(SolutionGrid { spec, fields })
    }

    pub fn field(&self, j: Jet) -> Option<&[f64]> {
        self.fields.get(&j).map(|v| v.as_slice())
    }

    pub fn jets(&self) -> impl Iterator<Item = Jet> + '_ {
        self.fields.keys().copied()
    }

    pub fn u(&self) -> &[f64] {
        &self.fields[&Jet::z(0)]
    }

    pub fn value(&self, j: Jet, i: usize, k: usize) -> Option<f64> {
        self.fields.get(&j).map(|v| v[self.spec.index(i, k)])
    }

    pub fn jets_at(&self, i: usize, k: usize) -> JetValues {
        let n = self.spec.index(i, k);
        let g = |j: Jet| self.fields[&j][n];
        JetValues {
            u: g(Jet::z(0)),
            ux: g(Jet::z(1)),
            ut: g(Jet::w(1)),
            uxx: g(Jet::z(2)),
            uxt: g(UXT),
            utt: g(Jet::w(2)),
        }
    }

    /// Largest gap between a stored derivative and the central difference of the
    /// field one order lower, over interior nodes.
    pub fn derivative_consistency(&self) -> f64 {
        let s = self.spec;
        let mut worst: f64 = 0.0;
        let pairs = [
            (Jet::z(0), Jet::z(1), true),
            (Jet::z(0), Jet::w(1), false),
            (Jet::z(1), Jet::z(2), true),
            (Jet::w(1), Jet::w(2), false),
            (Jet::z(1), UXT, false),
        ];
        for (base, d, along_x) in pairs {
            let (b, dv) = (&self.fields[&base], &self.fields[&d]);
            for k in 1..s.nt.saturating_sub(1) {
                for i in 1..s.nx.saturating_sub(1) {
                    let fd = if along_x {
                        (b[s.index(i + 1, k)] - b[s.index(i - 1, k)]) / (2.0 * s.hx)
                    } else {
                        (b[s.index(i, k + 1)] - b[s.index(i, k - 1)]) / (2.0 * s.ht)
                    };
                    worst = worst.max((fd - dv[s.index(i, k)]).abs());
                }
            }
        }
        worst
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SolutionError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# pss-grid v1")?;
        writeln!(out, "# {}", self.spec)?;
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["x".to_string(), "t".to_string()];
        head.extend(self.fields.keys().map(|j| j.to_string()));
        w.write_record(&head)?;
        for k in 0..self.spec.nt {
            for i in 0..self.spec.nx {
                let n = self.spec.index(i, k);
                let mut row = vec![self.spec.x(i).to_string(), self.spec.t(k).to_string()];
                row.extend(self.fields.values().map(|v| v[n].to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<SolutionGrid, SolutionError> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        let header = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .find(|l| l.contains("nx="))
            .ok_or_else(|| format_err("missing grid header line"))?;
        let (spec, _) = parse_header(header)?;
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let cols: Vec<Jet> = r
            .headers()?
            .iter()
            .skip(2)
            .map(|n| parse_jet(n).ok_or_else(|| format_err(format!("unknown column `{n}`"))))
            .collect::<Result<_, _>>()?;
        let mut fields: BTreeMap<Jet, Vec<f64>> = cols.iter().map(|j| (*j, Vec::with_capacity(spec.len()))).collect();
        for rec in r.records() {
            let rec = rec?;
            for (j, cell) in cols.iter().zip(rec.iter().skip(2)) {
                let v: f64 = cell.trim().parse().map_err(|_| format_err(format!("bad number `{cell}`")))?;
                fields.get_mut(j).unwrap().push(v);
            }
        }
        SolutionGrid::from_fields(spec, fields)
    }

    pub fn write_binary(&self, path: &Path) -> Result<(), SolutionError> {
        let mut out = BufWriter::new(File::create(path)?);
        let names: Vec<String> = self.fields.keys().map(|j| j.to_string()).collect();
        writeln!(out, "pss-grid v1 binary f64-le {} fields={}", self.spec.to_string().replace(',', " "), names.join(","))?;
        for v in self.fields.values() {
            for x in v {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<SolutionGrid, SolutionError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if !line.starts_with("pss-grid v1 binary f64-le") {
            return Err(format_err("not a binary pss grid"));
        }
        let (spec, names) = parse_header(&line)?;
        let names = names.ok_or_else(|| format_err("binary header lists no fields"))?;
        let mut fields = BTreeMap::new();
        let mut buf = [0u8; 8];
        for j in names {
            let mut v = Vec::with_capacity(spec.len());
            for _ in 0..spec.len() {
                r.read_exact(&mut buf).map_err(|_| format_err("truncated binary grid"))?;
                v.push(f64::from_le_bytes(buf));
            }
            fields.insert(j, v);
        }
        SolutionGrid::from_fields(spec, fields)
    }
}
