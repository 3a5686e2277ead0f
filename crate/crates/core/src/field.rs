//! Uniform node grids and the scalar fields sampled on them.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Node lattice `origin + h * (i, j, k)`. Planar grids carry `dims[2] == 1`.
///
/// Node storage is x-fastest: `idx = i + nx * (j + ny * k)`. `upper` is
/// the far corner of the integration box, normally the last node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Point,
    pub h: f64,
    pub dims: [usize; 3],
    pub dim: usize,
    pub upper: Point,
}

impl Grid {
    /// Grid whose integration box ends at the last node.
    pub fn new(origin: Point, h: f64, dims: [usize; 3], dim: usize) -> Grid {
        let mut upper = origin;
        for a in 0..dim {
            upper[a] = origin[a] + h * (dims[a] - 1) as f64;
        }
        Grid { origin, h, dims, dim, upper }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn position(&self, c: [usize; 3]) -> Point {
        [
            self.origin[0] + self.h * c[0] as f64,
            self.origin[1] + self.h * c[1] as f64,
            self.origin[2] + self.h * c[2] as f64,
        ]
    }

    pub fn node_position(&self, idx: usize) -> Point {
        self.position(self.coords(idx))
    }

    /// Nearest node to `p`, clamped into the grid.
    pub fn nearest(&self, p: Point) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.h).round();
            c[a] = f.clamp(0.0, (self.dims[a] - 1) as f64) as usize;
        }
        c
    }

    /// Quadrature weight (without the `h^dim` factor): the fraction of the
    /// node's cell `[x - h/2, x + h/2]` inside the integration box. This is
    /// the trapezoidal rule when the box ends on a node.
    #[inline]
    pub fn trapezoid_weight(&self, c: [usize; 3]) -> f64 {
        let mut w = 1.0;
        for a in 0..self.dim {
            if self.dims[a] < 2 {
                continue;
            }
            let end = crate::environment::cells_along(self.upper[a] - self.origin[a], self.h);
            let i = c[a] as f64;
            w *= ((i + 0.5).min(end) - (i - 0.5).max(0.0)).max(0.0);
        }
        w
    }

    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dims == other.dims
            && self.dim == other.dim
            && (0..3).all(|a| (self.upper[a] - other.upper[a]).abs() <= 1e-12 * self.h.max(1.0))
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (0..3).all(|a| (self.origin[a] - other.origin[a]).abs() <= 1e-12 * self.h.max(1.0))
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "dims {:?} h {} vs dims {:?} h {}",
                self.dims, self.h, other.dims, other.h
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldRole {
    Environment,
    Coverage,
    Weight,
    Count,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub role: FieldRole,
}

impl ScalarField {
    pub fn filled(grid: Grid, value: f64, role: FieldRole) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
            role,
        }
    }

    pub fn get(&self, c: [usize; 3]) -> f64 {
        self.values[self.grid.index(c[0], c[1], c[2])]
    }

    /// Multilinear interpolation at an arbitrary point (clamped into the grid).
    pub fn interpolate(&self, p: Point) -> f64 {
        let g = &self.grid;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            if g.dims[a] == 1 {
                continue;
            }
            let f = ((p[a] - g.origin[a]) / g.h).clamp(0.0, (g.dims[a] - 1) as f64);
            let b = (f.floor() as usize).min(g.dims[a] - 2);
            base[a] = b;
            frac[a] = f - b as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8usize {
            let mut w = 1.0;
            let mut c = base;
            for a in 0..3 {
                let bit = (corner >> a) & 1;
                if g.dims[a] == 1 {
                    if bit == 1 {
                        w = 0.0;
                    }
                    continue;
                }
                c[a] += bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * self.get(c);
            }
        }
        acc
    }

    /// Nearest-node resampling onto another grid.
    pub fn resample_nearest(&self, target: &Grid) -> ScalarField {
        if self.grid.same_as(target) {
            return self.clone();
        }
        let values = (0..target.len())
            .map(|idx| {
                let p = target.node_position(idx);
                self.get(self.grid.nearest(p))
            })
            .collect();
        ScalarField {
            grid: *target,
            values,
            role: self.role,
        }
    }

    /// Delimited-text dump: one header line, then one row per grid line
    /// along x (planar slices stacked in z order).
    pub fn to_grid_text(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        let _ = write!(out, "# role {} origin", role_name(self.role));
        for a in 0..g.dim {
            let _ = write!(out, " {}", g.origin[a]);
        }
        let _ = write!(out, " h {} nodes", g.h);
        for a in 0..g.dim {
            let _ = write!(out, " {}", g.dims[a]);
        }
        out.push('\n');
        for k in 0..g.dims[2] {
            for j in 0..g.dims[1] {
                let row = &self.values[g.index(0, j, k)..g.index(0, j, k) + g.dims[0]];
                let mut first = true;
                for v in row {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    let _ = write!(out, "{v}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_grid_text(text: &str) -> Result<ScalarField> {
        let bad = |m: &str| Error::Config(format!("grid dump: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let toks: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
        let pos = |key: &str| toks.iter().position(|t| *t == key).ok_or_else(|| bad(&format!("missing `{key}`")));
        let (p_origin, p_h, p_nodes) = (pos("origin")?, pos("h")?, pos("nodes")?);
        let dim = p_h - p_origin - 1;
        if !(2..=3).contains(&dim) || toks.len() != p_nodes + 1 + dim {
            return Err(bad("malformed header"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        let mut origin = [0.0; 3];
        let mut dims = [1usize; 3];
        for a in 0..dim {
            origin[a] = num(toks[p_origin + 1 + a])?;
            dims[a] = toks[p_nodes + 1 + a].parse().map_err(|_| bad("bad node count"))?;
        }
        let h = num(toks[p_h + 1])?;
        let role = match toks.get(1).copied() {
            Some("environment") => FieldRole::Environment,
            Some("coverage") => FieldRole::Coverage,
            Some("count") => FieldRole::Count,
            _ => FieldRole::Weight,
        };
        let values = lines
            .flat_map(|l| l.split_whitespace())
            .map(num)
            .collect::<Result<Vec<_>>>()?;
        let grid = Grid::new(origin, h, dims, dim);
        if values.len() != grid.len() {
            return Err(bad(&format!("expected {} values, found {}", grid.len(), values.len())));
        }
        Ok(ScalarField { grid, values, role })
    }

    /// Binary 8-bit greymap; values are mapped linearly from `[lo, hi]`.
    /// Rows are written top (max y) first; 3D slices are stacked vertically.
    pub fn to_pgm(&self, lo: f64, hi: f64) -> Vec<u8> {
        let g = &self.grid;
        let (w, rows) = (g.dims[0], g.dims[1] * g.dims[2]);
        let mut out = format!("P5\n{w} {rows}\n255\n").into_bytes();
        let span = if hi > lo { hi - lo } else { 1.0 };
        for k in 0..g.dims[2] {
            for j in (0..g.dims[1]).rev() {
                for i in 0..w {
                    let v = self.values[g.index(i, j, k)];
                    let t = ((v - lo) / span).clamp(0.0, 1.0);
                    out.push((t * 255.0).round() as u8);
                }
            }
        }
        out
    }

    pub fn write_grid_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_grid_text()).map_err(|e| Error::io(path, e))
    }

    pub fn write_pgm(&self, path: &Path, lo: f64, hi: f64) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pgm(lo, hi)).map_err(|e| Error::io(path, e))
    }
}

fn role_name(role: FieldRole) -> &'static str {
    match role {
        FieldRole::Environment => "environment",
        FieldRole::Coverage => "coverage",
        FieldRole::Weight => "weight",
        FieldRole::Count => "count",
    }
}
