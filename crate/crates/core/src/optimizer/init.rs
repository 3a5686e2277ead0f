//! Random initial placements on the allowed boundaries.

use std::f64::consts::TAU;

use rand::Rng;

use crate::environment::{BoundaryId, BoundaryParam, Environment};
use crate::error::{Error, Result};
use crate::visibility::{Aim, Location, Sensor};

const MAX_DRAWS: usize = 1000;

/// A boundary, optionally restricted to an interval of its `s` coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub boundary: BoundaryId,
    pub s_range: Option<[f64; 2]>,
}

impl From<BoundaryId> for Span {
    fn from(boundary: BoundaryId) -> Span {
        Span { boundary, s_range: None }
    }
}

impl Span {
    fn interval(&self, env: &Environment) -> Result<([f64; 2], f64)> {
        let [ls, lt] = env.boundary_extent(self.boundary)?;
        let [a, b] = self.s_range.unwrap_or([0.0, ls]);
        if !(a <= b) {
            return Err(Error::Config(format!("empty arc range [{a}, {b}] on {}", self.boundary)));
        }
        Ok(([a, b], lt))
    }
}

/// Sample a boundary point uniformly by length (area for 3D faces) over
/// `allowed` and a viewing direction uniformly over the circle or sphere.
/// Draws that resolve infeasibly are repeated.
pub fn random_on_boundary<R: Rng>(
    env: &Environment,
    allowed: &[Span],
    template: &Sensor,
    index: usize,
    rng: &mut R,
) -> Result<Sensor> {
    if allowed.is_empty() {
        return Err(Error::Config(format!("sensor {index}: no boundary to place it on")));
    }
    let intervals = allowed.iter().map(|a| a.interval(env)).collect::<Result<Vec<_>>>()?;
    let sizes: Vec<f64> = intervals
        .iter()
        .map(|([a, b], lt)| if env.dim() == 3 { (b - a) * lt } else { b - a })
        .collect();
    let total: f64 = sizes.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Config(format!("sensor {index}: allowed boundaries have zero size")));
    }
    for _ in 0..MAX_DRAWS {
        let mut u = rng.random::<f64>() * total;
        let mut pick = allowed.len() - 1;
        for (i, s) in sizes.iter().enumerate() {
            if u < *s {
                pick = i;
                break;
            }
            u -= s;
        }
        let id = allowed[pick].boundary;
        let ([a, b], lt) = intervals[pick];
        let s = a + rng.random::<f64>() * (b - a);
        let t = if env.dim() == 3 { rng.random::<f64>() * lt } else { 0.0 };
        let bp = BoundaryParam::on_face(id, s, t);
        let aim = match template.aim {
            Aim::Planar { .. } => Aim::Planar {
                angle: rng.random::<f64>() * TAU,
            },
            Aim::Axis { .. } => {
                let z = 2.0 * rng.random::<f64>() - 1.0;
                Aim::Axis {
                    azimuth: rng.random::<f64>() * TAU,
                    polar: z.clamp(-1.0, 1.0).acos(),
                }
            }
        };
        let sensor = Sensor {
            location: Location::OnBoundary(bp),
            aim,
            ..*template
        };
        if sensor.resolve(env, index).is_ok() {
            return Ok(sensor);
        }
    }
    Err(Error::Infeasible {
        index,
        reason: "no feasible random boundary position found".into(),
    })
}

/// Planar start angle that centres a sector of width `width` on `centre`.
pub fn start_angle_for_centre(centre: f64, width: f64) -> f64 {
    (centre - 0.5 * width).rem_euclid(TAU)
}
