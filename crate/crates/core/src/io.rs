//! Placement files: one `[[sensor]]` record per sensor, in TOML.
//!
//! ```toml
//! [[sensor]]
//! id = 0
//! kind = "boundary"
//! boundary = "wall:3"
//! s = 0.4375
//! point = [0.01, 0.4375]   # sensing point, informational
//! angle = 5.759586531581287
//! range = 0.6
//! width = 1.0471975511965976
//! failure = 0.0
//! direction_adjustable = true
//! location_adjustable = true
//! ```
//!
//! A placement produced under the symmetry constraint also carries a
//! `[symmetry]` table; the reader rebuilds the sensors from it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::{BoundaryParam, Environment};
use crate::error::{Error, Result};
use crate::optimizer::{Constraint, Placement, SymmetryTemplate};
use crate::visibility::{Aim, Location, Sensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Fixed,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorRecord {
    pub id: usize,
    pub kind: SensorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Fixed location, or the evaluated sensing point of a boundary sensor.
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar: Option<f64>,
    pub range: f64,
    pub width: f64,
    pub failure: f64,
    pub direction_adjustable: bool,
    pub location_adjustable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryTemplate>,
    #[serde(default)]
    pub sensor: Vec<SensorRecord>,
}

fn record(env: &Environment, id: usize, s: &Sensor) -> Result<SensorRecord> {
    let dim = env.dim();
    let point = s.position(env)?[..dim].to_vec();
    let (kind, boundary, arc, surf) = match s.location {
        Location::Fixed(_) => (SensorKind::Fixed, None, None, None),
        Location::OnBoundary(bp) => (
            SensorKind::Boundary,
            Some(bp.boundary.to_string()),
            Some(bp.s),
            (dim == 3).then_some(bp.t),
        ),
    };
    let (angle, azimuth, polar) = match s.aim {
        Aim::Planar { angle } => (Some(angle), None, None),
        Aim::Axis { azimuth, polar } => (None, Some(azimuth), Some(polar)),
    };
    Ok(SensorRecord {
        id,
        kind,
        boundary,
        s: arc,
        t: surf,
        point,
        angle,
        azimuth,
        polar,
        range: s.range,
        width: s.width,
        failure: s.failure,
        direction_adjustable: s.direction_adjustable,
        location_adjustable: s.location_adjustable,
    })
}

pub fn placement_to_file(env: &Environment, placement: &Placement) -> Result<PlacementFile> {
    let sensor = placement
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| record(env, i, s))
        .collect::<Result<Vec<_>>>()?;
    let symmetry = match &placement.constraint {
        Constraint::Symmetry(t) => Some(*t),
        Constraint::Identity => None,
    };
    Ok(PlacementFile { symmetry, sensor })
}

pub fn write_placement(env: &Environment, placement: &Placement) -> Result<String> {
    let file = placement_to_file(env, placement)?;
    toml::to_string(&file).map_err(|e| Error::Config(format!("cannot serialize placement: {e}")))
}

fn sensor_from_record(env: &Environment, r: &SensorRecord) -> Result<Sensor> {
    let dim = env.dim();
    let field = |name: &str| format!("sensor {}: {name}", r.id);
    let location = match r.kind {
        SensorKind::Fixed => {
            if r.point.len() != dim {
                return Err(Error::Config(format!("{} needs {dim} coordinates", field("point"))));
            }
            let mut p = [0.0; 3];
            p[..dim].copy_from_slice(&r.point);
            Location::Fixed(p)
        }
        SensorKind::Boundary => {
            let id = r
                .boundary
                .as_deref()
                .ok_or_else(|| Error::Config(format!("{} is missing", field("boundary"))))?
                .parse()?;
            let s = r.s.ok_or_else(|| Error::Config(format!("{} is missing", field("s"))))?;
            Location::OnBoundary(env.normalize(BoundaryParam::on_face(id, s, r.t.unwrap_or(0.0)))?)
        }
    };
    let aim = match (dim, r.angle, r.azimuth, r.polar) {
        (2, Some(angle), None, None) => Aim::Planar { angle },
        (3, None, Some(azimuth), Some(polar)) => Aim::Axis { azimuth, polar },
        _ => {
            return Err(Error::Config(format!(
                "sensor {}: give `angle` in 2D or `azimuth` and `polar` in 3D",
                r.id
            )))
        }
    };
    Ok(Sensor {
        location,
        range: r.range,
        aim,
        width: r.width,
        failure: r.failure,
        direction_adjustable: r.direction_adjustable,
        location_adjustable: r.location_adjustable,
    })
}

/// Parse a placement file and check every sensor against the scene.
pub fn read_placement(env: &Environment, text: &str) -> Result<Placement> {
    let file: PlacementFile = toml::from_str(text).map_err(|e| crate::scenario::syntax_error(text, e))?;
    let placement = match file.symmetry {
        Some(t) => Placement::symmetric(env, t)?,
        None => {
            let sensors = file
                .sensor
                .iter()
                .map(|r| sensor_from_record(env, r))
                .collect::<Result<Vec<_>>>()?;
            Placement::new(sensors)
        }
    };
    placement.validate(env)?;
    Ok(placement)
}

pub fn load_placement(env: &Environment, path: &Path) -> Result<Placement> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_placement(env, &text)
}

/// Write `contents` to `path`, reporting failures as I/O errors.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
