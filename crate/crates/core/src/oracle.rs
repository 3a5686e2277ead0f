//! Brute-force visibility by exact segment tests, independent of ψ, the
//! sweep and the smoothed Heaviside. Used to validate the level-set pipeline.

use rayon::prelude::*;

use crate::environment::{Environment, Obstacle};
use crate::error::Result;
use crate::field::{FieldRole, Grid, ScalarField};
use crate::geometry::{self, Point};
use crate::visibility::{sector_indicator, ResolvedSensor, Sector};

/// True iff the closed segment `[x, y]` avoids the open interior of every
/// obstacle. Grazing contact with a vertex, edge or face is visible.
pub fn ray_visible(env: &Environment, x: Point, y: Point) -> bool {
    env.obstacles.iter().all(|o| match o {
        Obstacle::Polygon(v) => !segment_enters_polygon([x[0], x[1]], [y[0], y[1]], v),
        Obstacle::Cuboid { lower, upper } => !geometry::segment_hits_open_box(x, y, *lower, *upper),
    })
}

/// Split the segment at every edge crossing and test the midpoint of each
/// piece for strict interior membership.
fn segment_enters_polygon(p: [f64; 2], q: [f64; 2], v: &[[f64; 2]]) -> bool {
    let mut ts = geometry::segment_polygon_crossings(p, q, v);
    ts.push(0.0);
    ts.push(1.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let scale = v.iter().fold(1.0f64, |m, a| m.max(a[0].abs()).max(a[1].abs()));
    ts.windows(2).any(|w| {
        if w[1] - w[0] < 1e-14 {
            return false;
        }
        let t = 0.5 * (w[0] + w[1]);
        let m = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        geometry::point_in_polygon(m, v) && !geometry::on_polygon_boundary(m, v, 1e-12 * scale)
    })
}

/// Definitional coverage: free, within range, inside the sector and visible.
pub fn oracle_covered(env: &Environment, sensor: &ResolvedSensor, y: Point) -> bool {
    geometry::dist(y, sensor.position) <= sensor.range
        && sector_indicator(sensor, y) > 0.0
        && env.signed_distance(y) > 0.0
        && ray_visible(env, sensor.position, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub agree: usize,
    pub disagree: usize,
    /// Free nodes within the boundary band, where neither method is asserted.
    pub excluded: usize,
    /// 1 on disagreeing nodes, 0 elsewhere.
    pub mask: ScalarField,
    /// Hard-count area of the oracle-covered set on this grid.
    pub area: f64,
    /// Measure of the excluded band: a bound on the area uncertainty.
    pub half_width: f64,
}

impl OracleReport {
    pub fn total(&self) -> usize {
        self.agree + self.disagree + self.excluded
    }

    pub fn agreement(&self) -> f64 {
        let n = self.agree + self.disagree;
        if n == 0 {
            1.0
        } else {
            self.agree as f64 / n as f64
        }
    }
}

/// Distance from `y` to the lateral boundary of the sector.
fn sector_edge_distance(sensor: &ResolvedSensor, y: Point) -> f64 {
    let x = sensor.position;
    let d = geometry::sub(y, x);
    let len = geometry::norm(d);
    match sensor.sector {
        Sector::Planar { width, .. } if width >= std::f64::consts::TAU => f64::INFINITY,
        Sector::Planar { start, width } => {
            let reach = |a: f64| [x[0] + sensor.range * a.cos(), x[1] + sensor.range * a.sin()];
            let p = [y[0], y[1]];
            let o = [x[0], x[1]];
            geometry::point_segment_distance(p, o, reach(start))
                .min(geometry::point_segment_distance(p, o, reach(start + width)))
        }
        Sector::Cone { half_angle, .. } if half_angle >= std::f64::consts::PI => f64::INFINITY,
        Sector::Cone { axis, half_angle } => {
            if len == 0.0 {
                return 0.0;
            }
            let ang = (geometry::dot(d, axis) / len).clamp(-1.0, 1.0).acos();
            let off = (ang - half_angle).abs();
            if off >= std::f64::consts::FRAC_PI_2 {
                len
            } else {
                len * off.sin()
            }
        }
    }
}

/// Offsets of radius `rad` used to detect a visibility change near a node.
fn probe_offsets(dim: usize, rad: f64) -> Vec<Point> {
    let mut out = Vec::new();
    if dim == 2 {
        for k in 0..16 {
            let a = std::f64::consts::TAU * k as f64 / 16.0;
            out.push([rad * a.cos(), rad * a.sin(), 0.0]);
        }
    } else {
        for sx in [-1.0f64, 0.0, 1.0] {
            for sy in [-1.0, 0.0, 1.0] {
                for sz in [-1.0, 0.0, 1.0] {
                    let n = (sx * sx + sy * sy + sz * sz).sqrt();
                    if n > 0.0 {
                        out.push([rad * sx / n, rad * sy / n, rad * sz / n]);
                    }
                }
            }
        }
    }
    out
}

enum NodeClass {
    Blocked,
    Excluded,
    Agree,
    Disagree,
}

/// Compare `sign(φ) > 0` against the oracle on every free node, excluding
/// the `2h` band around the range sphere, the sector sides, obstacle
/// boundaries and shadow edges (where visibility changes within `2h`).
pub fn oracle_coverage_check(env: &Environment, sensor: &ResolvedSensor, phi: &ScalarField) -> Result<OracleReport> {
    let grid = env.grid();
    grid.check_same(&phi.grid)?;
    let band = 2.0 * grid.h;
    let offsets = probe_offsets(grid.dim, band);
    let x = sensor.position;
    let classes: Vec<NodeClass> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let y = grid.node_position(idx);
            let sd = env.signed_distance(y);
            if sd <= 0.0 {
                return NodeClass::Blocked;
            }
            let len = geometry::dist(x, y);
            let visible = ray_visible(env, x, y);
            let near_shadow = offsets.iter().any(|o| {
                let z = geometry::add(y, *o);
                ray_visible(env, x, z) != visible
            });
            if (len - sensor.range).abs() <= band
                || sector_edge_distance(sensor, y) <= band
                || sd <= band
                || near_shadow
            {
                return NodeClass::Excluded;
            }
            let truth = visible && len <= sensor.range && sector_indicator(sensor, y) > 0.0;
            if truth == (phi.values[idx] > 0.0) {
                NodeClass::Agree
            } else {
                NodeClass::Disagree
            }
        })
        .collect();
    let mut mask = ScalarField::filled(grid, 0.0, FieldRole::Count);
    let (mut agree, mut disagree, mut excluded) = (0, 0, 0);
    let (mut area, mut band_area) = (0.0, 0.0);
    let cell = grid.cell_measure();
    for (idx, c) in classes.iter().enumerate() {
        let w = grid.trapezoid_weight(grid.coords(idx)) * cell;
        match c {
            NodeClass::Blocked => continue,
            NodeClass::Excluded => {
                excluded += 1;
                band_area += w;
            }
            NodeClass::Agree => agree += 1,
            NodeClass::Disagree => {
                disagree += 1;
                mask.values[idx] = 1.0;
            }
        }
        if oracle_covered(env, sensor, grid.node_position(idx)) {
            area += w;
        }
    }
    Ok(OracleReport {
        agree,
        disagree,
        excluded,
        mask,
        area,
        half_width: band_area,
    })
}

/// Hard-count area of the union of the sensors' covered sets on the grid
/// refined `m` times, with trapezoidal weights.
pub fn oracle_area(env: &Environment, sensors: &[ResolvedSensor], m: usize) -> f64 {
    let base = env.grid();
    let m = m.max(1);
    let mut dims = [1usize; 3];
    for a in 0..base.dim {
        dims[a] = (base.dims[a] - 1) * m + 1;
    }
    let fine = Grid {
        origin: base.origin,
        h: base.h / m as f64,
        dims,
        dim: base.dim,
        upper: base.upper,
    };
    let cell = fine.cell_measure();
    (0..fine.len())
        .into_par_iter()
        .map(|idx| {
            let y = fine.node_position(idx);
            if sensors.iter().any(|s| oracle_covered(env, s, y)) {
                fine.trapezoid_weight(fine.coords(idx)) * cell
            } else {
                0.0
            }
        })
        .sum()
}
