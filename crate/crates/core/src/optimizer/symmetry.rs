//! Mirror-symmetric sensor triples on every edge of a polygonal obstacle.

use serde::{Deserialize, Serialize};

use crate::environment::{BoundaryId, BoundaryParam, Environment, Obstacle};
use crate::error::{Error, Result};
use crate::visibility::{Location, Sensor};

/// Per-edge template: a centre sensor looking along the edge normal and a
/// mirrored pair at `centre ± s_off` whose directions are `normal ± v_off`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTemplate {
    pub obstacle: usize,
    pub range: f64,
    pub width: f64,
    pub failure: f64,
    pub s_off: f64,
    pub v_off: f64,
}

struct Edge {
    start: f64,
    length: f64,
    normal_angle: f64,
}

fn edges(env: &Environment, obstacle: usize) -> Result<Vec<Edge>> {
    let Some(Obstacle::Polygon(v)) = env.obstacles.get(obstacle) else {
        return Err(Error::Symmetry(format!("obstacle {obstacle} is not a polygon")));
    };
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    let mut start = 0.0;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let length = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        // polygons are stored counter-clockwise, so the outward normal is (dy, -dx)
        let normal_angle = (-(b[0] - a[0])).atan2(b[1] - a[1]);
        out.push(Edge { start, length, normal_angle });
        start += length;
    }
    Ok(out)
}

impl SymmetryTemplate {
    /// Largest legal offset: half of the shortest edge.
    pub fn max_offset(&self, env: &Environment) -> Result<f64> {
        let e = edges(env, self.obstacle)?;
        Ok(e.iter().map(|e| e.length).fold(f64::INFINITY, f64::min) * 0.5)
    }

    /// Expand `(s_off, v_off)` into three sensors per edge, ordered
    /// edge by edge as (lower arc position, centre, upper arc position).
    pub fn expand(&self, env: &Environment) -> Result<Vec<Sensor>> {
        let e = edges(env, self.obstacle)?;
        let half = self.max_offset(env)?;
        if !(self.s_off.abs() <= half * (1.0 + 1e-12)) {
            return Err(Error::Symmetry(format!(
                "offset {} exceeds half the edge length {half}",
                self.s_off
            )));
        }
        let boundary = BoundaryId::Obstacle(self.obstacle);
        let mut out = Vec::with_capacity(3 * e.len());
        for edge in &e {
            let mid = edge.start + 0.5 * edge.length;
            let v_n = edge.normal_angle - 0.5 * self.width;
            for (ds, dv) in [(-self.s_off, self.v_off), (0.0, 0.0), (self.s_off, -self.v_off)] {
                let mut s = Sensor::planar(
                    Location::OnBoundary(BoundaryParam::new(boundary, mid + ds)),
                    self.range,
                    v_n + dv,
                    self.width,
                )
                .with_failure(self.failure);
                s.direction_adjustable = false;
                s.location_adjustable = false;
                out.push(s);
            }
        }
        Ok(out)
    }
}
