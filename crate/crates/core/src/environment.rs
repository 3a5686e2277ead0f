//! Monitored domain, obstacles, the signed-distance field ψ and boundary
//! parameterizations used by sensors that slide along walls.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldRole, Grid, ScalarField};
use crate::geometry::{self, Point};

/// Number of cells along a side, snapped to the nearest integer when
/// within rounding error of it.
pub(crate) fn cells_along(side: f64, h: f64) -> f64 {
    let cells = side / h;
    if (cells - cells.round()).abs() <= 1e-9 * cells.max(1.0) {
        cells.round()
    } else {
        cells
    }
}

/// Axis-aligned computational box with uniform node spacing `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Point,
    pub upper: Point,
    pub h: f64,
    pub dim: usize,
}

impl Domain {
    pub fn new(lower: &[f64], upper: &[f64], h: f64) -> Result<Domain> {
        let dim = lower.len();
        if !(2..=3).contains(&dim) || upper.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "corners must both have 2 or 3 components (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidDomain(format!("grid spacing must be positive, got {h}")));
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..dim {
            lo[a] = lower[a];
            hi[a] = upper[a];
            let side = hi[a] - lo[a];
            if !(side > 0.0) {
                return Err(Error::InvalidDomain(format!("empty extent along axis {a}")));
            }
        }
        Ok(Domain { lower: lo, upper: hi, h, dim })
    }

    /// Node grid from the lower corner. A side that is not a multiple of
    /// `h` gets one extra node past the upper corner; quadrature clips the
    /// node cells to the box.
    pub fn grid(&self) -> Grid {
        let mut dims = [1usize; 3];
        for a in 0..self.dim {
            dims[a] = (cells_along(self.upper[a] - self.lower[a], self.h).ceil() as usize) + 1;
        }
        Grid {
            origin: self.lower,
            h: self.h,
            dims,
            dim: self.dim,
            upper: self.upper,
        }
    }

    pub fn diagonal(&self) -> f64 {
        geometry::dist(self.upper, self.lower)
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12 * self.diagonal();
        (0..self.dim).all(|a| p[a] >= self.lower[a] - tol && p[a] <= self.upper[a] + tol)
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.upper[a] - self.lower[a]).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    /// Simple polygon, stored counterclockwise.
    Polygon(Vec<[f64; 2]>),
    /// Axis-aligned box.
    Cuboid { lower: Point, upper: Point },
}

impl Obstacle {
    fn validate(self, index: usize, dim: usize) -> Result<Obstacle> {
        let bad = |reason: &str| Error::InvalidObstacle {
            index,
            reason: reason.to_string(),
        };
        match self {
            Obstacle::Polygon(mut v) => {
                if dim != 2 {
                    return Err(bad("polygon obstacles need a planar domain"));
                }
                if v.len() < 3 {
                    return Err(bad("polygon needs at least 3 vertices"));
                }
                if !geometry::polygon_is_simple(&v) {
                    return Err(bad("polygon is not simple"));
                }
                let area = geometry::signed_area(&v);
                if area == 0.0 {
                    return Err(bad("polygon has zero area"));
                }
                if area < 0.0 {
                    v.reverse();
                }
                Ok(Obstacle::Polygon(v))
            }
            Obstacle::Cuboid { lower, upper } => {
                if dim != 3 {
                    return Err(bad("box obstacles need a 3D domain"));
                }
                if (0..3).any(|a| !(upper[a] > lower[a])) {
                    return Err(bad("box upper corner must exceed lower corner"));
                }
                Ok(Obstacle::Cuboid { lower, upper })
            }
        }
    }

    /// Exact signed distance to this obstacle alone (negative inside).
    pub fn signed_distance(&self, p: Point) -> f64 {
        match self {
            Obstacle::Polygon(v) => {
                let q = [p[0], p[1]];
                let n = v.len();
                let d = (0..n)
                    .map(|i| geometry::point_segment_distance(q, v[i], v[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                if d > 0.0 && geometry::point_in_polygon(q, v) {
                    -d
                } else {
                    d
                }
            }
            Obstacle::Cuboid { lower, upper } => {
                let mut outside = 0.0f64;
                let mut inside = f64::NEG_INFINITY;
                for a in 0..3 {
                    let c = 0.5 * (lower[a] + upper[a]);
                    let half = 0.5 * (upper[a] - lower[a]);
                    let q = (p[a] - c).abs() - half;
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                if inside < 0.0 {
                    inside
                } else {
                    outside.sqrt()
                }
            }
        }
    }

    fn perimeter_lengths(v: &[[f64; 2]]) -> Vec<f64> {
        let n = v.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let l = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cum.push(cum[i] + l);
        }
        cum
    }
}

/// Which boundary a sliding sensor lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryId {
    /// Closed counterclockwise loop of polygon obstacle `i`.
    Obstacle(usize),
    /// Domain edge of a planar scene: 0 bottom, 1 right, 2 top, 3 left.
    Wall(usize),
    /// Face `face` (= 2·axis + side) of box obstacle `obstacle`.
    ObstacleFace { obstacle: usize, face: usize },
    /// Face `face` (= 2·axis + side) of a 3D domain.
    DomainFace(usize),
}

impl fmt::Display for BoundaryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryId::Obstacle(i) => write!(f, "obstacle:{i}"),
            BoundaryId::Wall(w) => write!(f, "wall:{w}"),
            BoundaryId::ObstacleFace { obstacle, face } => write!(f, "obstacle:{obstacle}:face:{face}"),
            BoundaryId::DomainFace(face) => write!(f, "domain-face:{face}"),
        }
    }
}

impl FromStr for BoundaryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<BoundaryId> {
        let bad = || Error::InvalidBoundary(format!("cannot parse boundary id `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["obstacle", i] => Ok(BoundaryId::Obstacle(num(i)?)),
            ["wall", w] => Ok(BoundaryId::Wall(num(w)?)),
            ["obstacle", i, "face", f] => Ok(BoundaryId::ObstacleFace {
                obstacle: num(i)?,
                face: num(f)?,
            }),
            ["domain-face", f] => Ok(BoundaryId::DomainFace(num(f)?)),
            _ => Err(bad()),
        }
    }
}

/// Position on a boundary: arc length `s` (loops and walls) or surface
/// coordinates `(s, t)` on a rectangular face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParam {
    pub boundary: BoundaryId,
    pub s: f64,
    pub t: f64,
}

impl BoundaryParam {
    pub fn new(boundary: BoundaryId, s: f64) -> Self {
        Self { boundary, s, t: 0.0 }
    }

    pub fn on_face(boundary: BoundaryId, s: f64, t: f64) -> Self {
        Self { boundary, s, t }
    }
}

#[derive(Debug, Clone)]
pub struct Environment {
    pub domain: Domain,
    pub obstacles: Vec<Obstacle>,
    perimeters: Vec<Vec<f64>>,
}

impl Environment {
    pub fn new(domain: Domain, obstacles: Vec<Obstacle>) -> Result<Environment> {
        let obstacles = obstacles
            .into_iter()
            .enumerate()
            .map(|(i, o)| o.validate(i, domain.dim))
            .collect::<Result<Vec<_>>>()?;
        let perimeters = obstacles
            .iter()
            .map(|o| match o {
                Obstacle::Polygon(v) => Obstacle::perimeter_lengths(v),
                Obstacle::Cuboid { .. } => Vec::new(),
            })
            .collect();
        Ok(Environment {
            domain,
            obstacles,
            perimeters,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn grid(&self) -> Grid {
        self.domain.grid()
    }

    /// Cap on |ψ|: the domain diagonal.
    pub fn psi_cap(&self) -> f64 {
        self.domain.diagonal()
    }

    /// Exact signed distance to the obstacle union boundary at any point,
    /// capped at the domain diagonal.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let cap = self.psi_cap();
        let mut outside = cap;
        let mut inside = 0.0f64;
        for o in &self.obstacles {
            let d = o.signed_distance(p);
            if d < 0.0 {
                inside = inside.max(-d);
            } else {
                outside = outside.min(d);
            }
        }
        if inside > 0.0 {
            -inside.min(cap)
        } else {
            outside.min(cap)
        }
    }

    /// Sampled ψ on the domain grid (exact geometric distances, no PDE).
    pub fn build_signed_distance(&self) -> ScalarField {
        let grid = self.grid();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| self.signed_distance(grid.node_position(idx)))
            .collect();
        ScalarField {
            grid,
            values,
            role: FieldRole::Environment,
        }
    }

    fn check_boundary(&self, id: BoundaryId) -> Result<()> {
        let ok = match id {
            BoundaryId::Obstacle(i) => matches!(self.obstacles.get(i), Some(Obstacle::Polygon(_))),
            BoundaryId::Wall(w) => self.dim() == 2 && w < 4,
            BoundaryId::ObstacleFace { obstacle, face } => {
                face < 6 && matches!(self.obstacles.get(obstacle), Some(Obstacle::Cuboid { .. }))
            }
            BoundaryId::DomainFace(face) => self.dim() == 3 && face < 6,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBoundary(format!("no boundary `{id}` in this environment")))
        }
    }

    /// Whether the boundary is a closed loop (coordinates wrap) or a
    /// segment/face (coordinates clamp).
    pub fn is_closed(&self, id: BoundaryId) -> bool {
        matches!(id, BoundaryId::Obstacle(_))
    }

    /// Length of the arc coordinate `s` and the extent of `t` (zero for curves).
    pub fn boundary_extent(&self, id: BoundaryId) -> Result<[f64; 2]> {
        self.check_boundary(id)?;
        let d = &self.domain;
        Ok(match id {
            BoundaryId::Obstacle(i) => [*self.perimeters[i].last().unwrap(), 0.0],
            BoundaryId::Wall(w) => {
                let axis = if w % 2 == 0 { 0 } else { 1 };
                [d.upper[axis] - d.lower[axis], 0.0]
            }
            BoundaryId::ObstacleFace { obstacle, face } => {
                let Obstacle::Cuboid { lower, upper } = &self.obstacles[obstacle] else {
                    unreachable!()
                };
                let (b, c) = face_axes(face);
                [upper[b] - lower[b], upper[c] - lower[c]]
            }
            BoundaryId::DomainFace(face) => {
                let (b, c) = face_axes(face);
                [d.upper[b] - d.lower[b], d.upper[c] - d.lower[c]]
            }
        })
    }

    /// Wrap (loops) or clamp (walls, faces) the coordinates into range.
    pub fn normalize(&self, bp: BoundaryParam) -> Result<BoundaryParam> {
        let [ls, lt] = self.boundary_extent(bp.boundary)?;
        if !bp.s.is_finite() || !bp.t.is_finite() {
            return Err(Error::InvalidBoundary("non-finite boundary coordinate".into()));
        }
        let mut out = bp;
        if self.is_closed(bp.boundary) {
            out.s = bp.s.rem_euclid(ls);
            if out.s >= ls {
                out.s = 0.0;
            }
            out.t = 0.0;
        } else {
            out.s = bp.s.clamp(0.0, ls);
            out.t = if lt > 0.0 { bp.t.clamp(0.0, lt) } else { 0.0 };
        }
        Ok(out)
    }

    /// Slide along the boundary by `ds`: modulo the perimeter on obstacle
    /// loops, clamped to the segment on domain walls.
    pub fn move_along_boundary(&self, bp: BoundaryParam, ds: f64) -> Result<BoundaryParam> {
        self.normalize(BoundaryParam { s: bp.s + ds, ..bp })
    }

    /// Shift one surface coordinate (0 → `s`, 1 → `t`).
    pub fn shift_boundary(&self, bp: BoundaryParam, coordinate: usize, delta: f64) -> Result<BoundaryParam> {
        let mut out = bp;
        if coordinate == 0 {
            out.s += delta;
        } else {
            out.t += delta;
        }
        self.normalize(out)
    }

    /// Point at the boundary coordinate and the unit normal pointing into
    /// free space. At polygon vertices the edge starting at that vertex
    /// supplies the normal.
    pub fn boundary_point(&self, bp: BoundaryParam) -> Result<(Point, Point)> {
        let bp = self.normalize(bp)?;
        let d = &self.domain;
        Ok(match bp.boundary {
            BoundaryId::Obstacle(i) => {
                let Obstacle::Polygon(v) = &self.obstacles[i] else { unreachable!() };
                let cum = &self.perimeters[i];
                let n = v.len();
                let e = match cum.binary_search_by(|c| c.total_cmp(&bp.s)) {
                    Ok(k) => k.min(n - 1),
                    Err(k) => (k - 1).min(n - 1),
                };
                let (a, b) = (v[e], v[(e + 1) % n]);
                let len = cum[e + 1] - cum[e];
                let t = ((bp.s - cum[e]) / len).clamp(0.0, 1.0);
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0];
                let normal = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len, 0.0];
                (p, normal)
            }
            BoundaryId::Wall(w) => {
                let (lo, hi) = (d.lower, d.upper);
                match w {
                    0 => ([lo[0] + bp.s, lo[1], 0.0], [0.0, 1.0, 0.0]),
                    1 => ([hi[0], lo[1] + bp.s, 0.0], [-1.0, 0.0, 0.0]),
                    2 => ([hi[0] - bp.s, hi[1], 0.0], [0.0, -1.0, 0.0]),
                    _ => ([lo[0], hi[1] - bp.s, 0.0], [1.0, 0.0, 0.0]),
                }
            }
            BoundaryId::ObstacleFace { obstacle, face } => {
                let Obstacle::Cuboid { lower, upper } = &self.obstacles[obstacle] else {
                    unreachable!()
                };
                face_point(*lower, *upper, face, bp.s, bp.t, false)
            }
            BoundaryId::DomainFace(face) => face_point(d.lower, d.upper, face, bp.s, bp.t, true),
        })
    }

    /// Every boundary a sensor may slide on.
    pub fn boundaries(&self) -> Vec<BoundaryId> {
        let mut out = Vec::new();
        for (i, o) in self.obstacles.iter().enumerate() {
            match o {
                Obstacle::Polygon(_) => out.push(BoundaryId::Obstacle(i)),
                Obstacle::Cuboid { .. } => {
                    out.extend((0..6).map(|face| BoundaryId::ObstacleFace { obstacle: i, face }))
                }
            }
        }
        if self.dim() == 2 {
            out.extend((0..4).map(BoundaryId::Wall));
        } else {
            out.extend((0..6).map(BoundaryId::DomainFace));
        }
        out
    }
}

fn face_axes(face: usize) -> (usize, usize) {
    match face / 2 {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn face_point(lower: Point, upper: Point, face: usize, s: f64, t: f64, inward: bool) -> (Point, Point) {
    let axis = face / 2;
    let upper_side = face % 2 == 1;
    let (b, c) = face_axes(face);
    let mut p = [0.0; 3];
    p[axis] = if upper_side { upper[axis] } else { lower[axis] };
    p[b] = lower[b] + s;
    p[c] = lower[c] + t;
    let mut n = [0.0; 3];
    let outward = if upper_side { 1.0 } else { -1.0 };
    n[axis] = if inward { -outward } else { outward };
    (p, n)
}
