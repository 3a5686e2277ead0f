use std::f64::consts::{PI, TAU};

use crate::environment::{BoundaryId, Environment};
use crate::error::{Error, Result};
use crate::visibility::{Aim, Location, ResolvedSensor, Sensor};

use super::symmetry::SymmetryTemplate;

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Identity,
    Symmetry(SymmetryTemplate),
}

/// One coordinate of the free-parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParam {
    /// Planar start angle (component 0) or cone azimuth/polar (0/1).
    Angle { sensor: usize, component: usize },
    /// Boundary arc coordinate `s` (0) or surface coordinate `t` (1).
    Boundary { sensor: usize, component: usize },
    SymmetryOffset,
    SymmetryAngle,
}

impl FreeParam {
    pub fn is_angular(self) -> bool {
        matches!(self, FreeParam::Angle { .. } | FreeParam::SymmetryAngle)
    }

    /// The only sensor this coordinate moves, if any single one.
    pub fn sensor(self) -> Option<usize> {
        match self {
            FreeParam::Angle { sensor, .. } | FreeParam::Boundary { sensor, .. } => Some(sensor),
            _ => None,
        }
    }
}

/// The optimizer's decision variable: the full sensor list plus the map
/// from free parameters to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub sensors: Vec<Sensor>,
    pub constraint: Constraint,
}

fn surface_boundary(id: BoundaryId) -> bool {
    matches!(id, BoundaryId::ObstacleFace { .. } | BoundaryId::DomainFace(_))
}

impl Placement {
    pub fn new(sensors: Vec<Sensor>) -> Placement {
        Placement {
            sensors,
            constraint: Constraint::Identity,
        }
    }

    pub fn symmetric(env: &Environment, template: SymmetryTemplate) -> Result<Placement> {
        Ok(Placement {
            sensors: template.expand(env)?,
            constraint: Constraint::Symmetry(template),
        })
    }

    pub fn free_params(&self) -> Vec<FreeParam> {
        if let Constraint::Symmetry(_) = self.constraint {
            return vec![FreeParam::SymmetryOffset, FreeParam::SymmetryAngle];
        }
        let mut out = Vec::new();
        for (i, s) in self.sensors.iter().enumerate() {
            if s.direction_adjustable {
                let n = match s.aim {
                    Aim::Planar { .. } => 1,
                    Aim::Axis { .. } => 2,
                };
                out.extend((0..n).map(|component| FreeParam::Angle { sensor: i, component }));
            }
            if s.can_move() {
                let Location::OnBoundary(bp) = s.location else { unreachable!() };
                let n = if surface_boundary(bp.boundary) { 2 } else { 1 };
                out.extend((0..n).map(|component| FreeParam::Boundary { sensor: i, component }));
            }
        }
        out
    }

    pub fn get(&self, p: FreeParam) -> f64 {
        match p {
            FreeParam::Angle { sensor, component } => match self.sensors[sensor].aim {
                Aim::Planar { angle } => angle,
                Aim::Axis { azimuth, polar } => {
                    if component == 0 {
                        azimuth
                    } else {
                        polar
                    }
                }
            },
            FreeParam::Boundary { sensor, component } => match self.sensors[sensor].location {
                Location::OnBoundary(bp) => {
                    if component == 0 {
                        bp.s
                    } else {
                        bp.t
                    }
                }
                Location::Fixed(_) => unreachable!(),
            },
            FreeParam::SymmetryOffset => self.template().s_off,
            FreeParam::SymmetryAngle => self.template().v_off,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        self.free_params().into_iter().map(|p| self.get(p)).collect()
    }

    fn template(&self) -> &SymmetryTemplate {
        match &self.constraint {
            Constraint::Symmetry(t) => t,
            Constraint::Identity => panic!("placement has no symmetry template"),
        }
    }

    /// Move one coordinate by `delta` (wrapping loops, clamping walls and
    /// the symmetry offset) and return the new placement together with the
    /// displacement actually applied. Fails when the moved sensors become
    /// infeasible.
    pub fn step(&self, env: &Environment, p: FreeParam, delta: f64) -> Result<(Placement, f64)> {
        let mut out = self.clone();
        let actual = match p {
            FreeParam::Angle { sensor, component } => {
                let s = &mut out.sensors[sensor];
                s.aim = match s.aim {
                    Aim::Planar { angle } => Aim::Planar { angle: angle + delta },
                    Aim::Axis { azimuth, polar } if component == 0 => Aim::Axis {
                        azimuth: azimuth + delta,
                        polar,
                    },
                    Aim::Axis { azimuth, polar } => Aim::Axis {
                        azimuth,
                        polar: polar + delta,
                    },
                };
                delta
            }
            FreeParam::Boundary { sensor, component } => {
                let s = &mut out.sensors[sensor];
                let Location::OnBoundary(bp) = s.location else { unreachable!() };
                let moved = env.shift_boundary(bp, component, delta)?;
                s.location = Location::OnBoundary(moved);
                if env.is_closed(bp.boundary) {
                    delta
                } else if component == 0 {
                    moved.s - bp.s
                } else {
                    moved.t - bp.t
                }
            }
            FreeParam::SymmetryOffset | FreeParam::SymmetryAngle => {
                let mut t = *self.template();
                let actual = if p == FreeParam::SymmetryOffset {
                    let old = t.s_off;
                    t.s_off = (old + delta).clamp(0.0, t.max_offset(env)?);
                    t.s_off - old
                } else {
                    t.v_off += delta;
                    delta
                };
                out.sensors = t.expand(env)?;
                out.constraint = Constraint::Symmetry(t);
                actual
            }
        };
        match p.sensor() {
            Some(i) => {
                out.sensors[i].resolve(env, i)?;
            }
            None => {
                out.resolve(env)?;
            }
        }
        Ok((out, actual))
    }

    pub fn resolve(&self, env: &Environment) -> Result<Vec<ResolvedSensor>> {
        self.sensors.iter().enumerate().map(|(i, s)| s.resolve(env, i)).collect()
    }

    /// Bring angles into canonical ranges without changing any sector:
    /// planar angles to `[0, 2π)`, cone polar angles reflected into `[0, π]`.
    pub fn canonicalize(&mut self) {
        for s in &mut self.sensors {
            s.aim = canonical_aim(s.aim);
        }
        if let Constraint::Symmetry(t) = &mut self.constraint {
            let v = (t.v_off + PI).rem_euclid(TAU) - PI;
            t.v_off = v;
        }
    }

    /// True when every planar angle is already canonical.
    pub fn is_canonical(&self) -> bool {
        self.sensors.iter().all(|s| canonical_aim(s.aim) == s.aim)
    }

    pub fn validate(&self, env: &Environment) -> Result<()> {
        if let Constraint::Symmetry(t) = &self.constraint {
            if t.expand(env)? != self.sensors {
                return Err(Error::Symmetry("sensor list does not match its template".into()));
            }
        }
        self.resolve(env).map(|_| ())
    }
}

fn canonical_aim(aim: Aim) -> Aim {
    match aim {
        Aim::Planar { angle } => Aim::Planar {
            angle: angle.rem_euclid(TAU),
        },
        Aim::Axis { azimuth, polar } => {
            let mut polar = polar.rem_euclid(TAU);
            let mut azimuth = azimuth;
            if polar > PI {
                polar = TAU - polar;
                azimuth += PI;
            }
            Aim::Axis {
                azimuth: azimuth.rem_euclid(TAU),
                polar,
            }
        }
    }
}
