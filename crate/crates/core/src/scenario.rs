//! Scenario files: a TOML description of the scene, the sensor roster, the
//! objective and the optimizer settings, with named presets.
//!
//! ```toml
//! seed = 7
//! preset = "fig4"          # optional; keys below override the preset
//!
//! [domain]
//! lower = [0.0, 0.0]
//! upper = [1.0, 1.0]
//! h = 0.02
//!
//! [[obstacles]]
//! polygon = [[0.4, 0.4], [0.6, 0.4], [0.6, 0.6]]
//!
//! [[sensors]]
//! count = 8
//! range = 0.6
//! width = 1.0471975511965976
//! failure = 0.5
//! random_on = ["wall:3"]
//!
//! [objective]
//! mode = "expected"
//!
//! [optimizer]
//! iterations = 50
//! ```

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{BoundaryId, BoundaryParam, Domain, Environment, Obstacle};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::objective::{self, Mode, ObjectiveSpec};
use crate::optimizer::init::{self, Span};
use crate::optimizer::{IDConfig, Placement, SymmetryTemplate};
use crate::visibility::{self, Aim, Location, ResolvedSensor, Sector, Sensor};

/// RNG stream used to draw random initial placements.
pub const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sensors: Vec<SensorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySpec>,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative file references are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleSpec {
    Polygon(Vec<[f64; 2]>),
    Cuboid { lower: [f64; 3], upper: [f64; 3] },
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// A group of `count` identical sensors.
///
/// Placement is one of `position` (fixed point), `boundary` + `s` (+ `t`)
/// or `random_on` (uniform over the listed boundaries, optionally limited
/// to `s_range`). `width` is the sector width θ in 2D and the cone
/// half-angle β in 3D; `base_radius` may be given instead of β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    #[serde(default = "one")]
    pub count: usize,
    pub range: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_radius: Option<f64>,
    #[serde(default)]
    pub failure: f64,
    #[serde(default = "yes")]
    pub direction_adjustable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_adjustable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_on: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    pub obstacle: usize,
    pub range: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default)]
    pub failure: f64,
    #[serde(default)]
    pub s_off: f64,
    #[serde(default)]
    pub v_off: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    #[default]
    Uniform,
    /// Indicator of the free part of the polygon `outer`.
    Band { outer: Vec<[f64; 2]> },
    /// Nodes hidden from an anchor sensor, plus an optional focus box.
    BlindSpot {
        anchor: Vec<f64>,
        range: f64,
        #[serde(default)]
        angle: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        focus: Option<[Vec<f64>; 2]>,
    },
    /// Grid dump (see `ScalarField::to_grid_text`), resampled to the scene grid.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub weight: WeightSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_location: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dump_fields: bool,
}

struct Preset {
    name: &'static str,
    summary: &'static str,
    text: &'static str,
}

const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2",
        summary: "three polygons, 8 fixed sensors, directions only (r=0.5, θ=π/2)",
        text: include_str!("presets/fig2.toml"),
    },
    Preset {
        name: "fig4",
        summary: "unit square, 16 wall sensors, p=0 (r=0.6, θ=π/3)",
        text: include_str!("presets/fig4.toml"),
    },
    Preset {
        name: "fig5",
        summary: "unit square, 16 wall sensors, p=0.5, expected coverage",
        text: include_str!("presets/fig5.toml"),
    },
    Preset {
        name: "fig6-alley",
        summary: "alley with a corner, 16 sensors (r=0.8, θ=π/2, p=0.5)",
        text: include_str!("presets/fig6-alley.toml"),
    },
    Preset {
        name: "fig-city",
        summary: "polygonal blocks, 15 boundary sensors (r=0.5, θ=π/3, p=0.5)",
        text: include_str!("presets/fig-city.toml"),
    },
    Preset {
        name: "pentagon-sym",
        summary: "pentagon building, monitored band, symmetric triples per edge",
        text: include_str!("presets/pentagon-sym.toml"),
    },
    Preset {
        name: "pentagon-free",
        summary: "pentagon building, monitored band, 15 free boundary sensors",
        text: include_str!("presets/pentagon-free.toml"),
    },
    Preset {
        name: "store-p05",
        summary: "shelves with blind-spot weights, 9 sensors, p=0.5",
        text: include_str!("presets/store-p05.toml"),
    },
    Preset {
        name: "store-p01",
        summary: "shelves with blind-spot weights, 9 sensors, p=0.1",
        text: include_str!("presets/store-p01.toml"),
    },
    Preset {
        name: "fig8-3d",
        summary: "3D alley between boxes, 8 cone sensors (r=0.9, β=asin(0.7/0.9), p=0.5)",
        text: include_str!("presets/fig8-3d.toml"),
    },
];

/// Names and one-line descriptions of the built-in scenes.
pub fn preset_scenarios() -> Vec<(&'static str, &'static str)> {
    PRESETS.iter().map(|p| (p.name, p.summary)).collect()
}

fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(|p| p.text)
        .ok_or_else(|| Error::UnknownPreset {
            name: name.to_string(),
            available: PRESETS.iter().map(|p| p.name).collect::<Vec<_>>().join(", "),
        })
}

/// Load a preset by name with all defaults applied.
pub fn preset(name: &str) -> Result<Scenario> {
    parse_scenario(&format!("preset = \"{name}\"\n"))
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub(crate) fn syntax_error(text: &str, e: toml::de::Error) -> Error {
    let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
    Error::Syntax {
        line,
        column,
        message: e.message().to_string(),
    }
}

/// Tables merge key by key; any other value in `over` replaces `base`.
fn deep_merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => deep_merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    Scenario::parse(text, Path::new("."))
}

impl Scenario {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Scenario> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| syntax_error(text, e))?;
        let mut scenario: Scenario = match table.remove("preset") {
            None => toml::from_str(text).map_err(|e| syntax_error(text, e))?,
            Some(toml::Value::String(name)) => {
                let base_text = preset_text(&name)?;
                let mut merged: toml::Table =
                    toml::from_str(base_text).map_err(|e| syntax_error(base_text, e))?;
                deep_merge(&mut merged, table);
                toml::Value::Table(merged)
                    .try_into()
                    .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?
            }
            Some(_) => return Err(Error::Config("`preset` must be a string".into())),
        };
        scenario.base_dir = base_dir.to_path_buf();
        scenario.normalize()?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Scenario::parse(&text, dir)
    }

    /// Normalized text form with every default written out.
    pub fn dump(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn dim(&self) -> usize {
        self.domain.lower.len()
    }

    pub fn environment(&self) -> Result<Environment> {
        let domain = Domain::new(&self.domain.lower, &self.domain.upper, self.domain.h)?;
        let obstacles = self
            .obstacles
            .iter()
            .map(|o| match o {
                ObstacleSpec::Polygon(v) => Obstacle::Polygon(v.clone()),
                ObstacleSpec::Cuboid { lower, upper } => Obstacle::Cuboid {
                    lower: *lower,
                    upper: *upper,
                },
            })
            .collect();
        Environment::new(domain, obstacles)
    }

    pub fn sensor_count(&self) -> usize {
        match &self.symmetry {
            Some(_) => 0,
            None => self.sensors.iter().map(|s| s.count).sum(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.objective.mode.unwrap_or(Mode::Coverage)
    }

    /// Fill defaults and check everything that does not need the RNG.
    fn normalize(&mut self) -> Result<()> {
        let env = self.environment()?;
        let dim = env.dim();
        let default_width = if dim == 2 { FRAC_PI_2 } else { FRAC_PI_4 };
        if self.symmetry.is_some() && !self.sensors.is_empty() {
            return Err(Error::Config("`symmetry` generates the sensors; remove the `sensors` list".into()));
        }
        let mut index = 0;
        let mut any_failure = false;
        for (g, spec) in self.sensors.iter_mut().enumerate() {
            normalize_sensor(spec, g, index, &env, default_width)?;
            any_failure |= spec.failure > 0.0;
            index += spec.count;
        }
        if let Some(sym) = &mut self.symmetry {
            sym.width.get_or_insert(default_width);
            check_failure(sym.failure, "symmetry.failure")?;
            any_failure |= sym.failure > 0.0;
            Placement::symmetric(&env, template(sym))?.validate(&env)?;
        }
        if self.objective.mode.is_none() {
            self.objective.mode = Some(if any_failure { Mode::Expected } else { Mode::Coverage });
        }
        match &self.objective.weight {
            WeightSpec::File { path } => {
                let p = self.base_dir.join(path);
                if !p.is_file() {
                    return Err(Error::io(&p, std::io::Error::from(std::io::ErrorKind::NotFound)));
                }
            }
            WeightSpec::BlindSpot { anchor, range, width, .. } => {
                if dim != 2 {
                    return Err(Error::Config("blind-spot weights are planar only".into()));
                }
                if anchor.len() != 2 || !(*range > 0.0) || !(*width > 0.0) {
                    return Err(Error::Config(
                        "objective.weight: anchor needs 2 coordinates and positive range and width".into(),
                    ));
                }
            }
            WeightSpec::Band { outer } => {
                if dim != 2 || outer.len() < 3 {
                    return Err(Error::Config("objective.weight: band needs a planar polygon".into()));
                }
            }
            WeightSpec::Uniform => {}
        }
        let d = IDConfig::for_grid(self.domain.h);
        let o = &mut self.optimizer;
        o.iterations.get_or_insert(d.iterations);
        o.alpha.get_or_insert(d.alpha);
        let alpha = o.alpha.unwrap();
        o.alpha_location.get_or_insert(alpha * d.alpha_location / d.alpha);
        o.k.get_or_insert(d.k);
        let k = o.k.unwrap();
        o.gamma.get_or_insert(20.0 * k);
        o.h_v.get_or_insert(d.h_v);
        o.h_x.get_or_insert(d.h_x);
        o.max_drift.get_or_insert(d.max_drift);
        o.grad_max_iters.get_or_insert(d.grad_max_iters);
        self.id_config().validate()
    }

    pub fn id_config(&self) -> IDConfig {
        let d = IDConfig::for_grid(self.domain.h);
        let o = &self.optimizer;
        IDConfig {
            iterations: o.iterations.unwrap_or(d.iterations),
            alpha: o.alpha.unwrap_or(d.alpha),
            alpha_location: o.alpha_location.unwrap_or(d.alpha_location),
            gamma: o.gamma.unwrap_or(d.gamma),
            k: o.k.unwrap_or(d.k),
            h_v: o.h_v.unwrap_or(d.h_v),
            h_x: o.h_x.unwrap_or(d.h_x),
            max_drift: o.max_drift.unwrap_or(d.max_drift),
            grad_tol: o.grad_tol,
            grad_max_iters: o.grad_max_iters.unwrap_or(d.grad_max_iters),
            seed: self.seed,
        }
    }

    /// Initial placement; random groups draw from the seed's init stream.
    pub fn initial_placement(&self, env: &Environment, seed: u64) -> Result<Placement> {
        if let Some(sym) = &self.symmetry {
            return Placement::symmetric(env, template(sym));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(INIT_STREAM);
        let mut sensors = Vec::with_capacity(self.sensor_count());
        for spec in &self.sensors {
            for _ in 0..spec.count {
                let index = sensors.len();
                let base = base_sensor(spec, env)?;
                let sensor = match &spec.random_on {
                    Some(list) => {
                        let spans = list
                            .iter()
                            .map(|b| {
                                Ok(Span {
                                    boundary: b.parse()?,
                                    s_range: spec.s_range,
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        init::random_on_boundary(env, &spans, &base, index, &mut rng)?
                    }
                    None => base,
                };
                sensor.resolve(env, index)?;
                sensors.push(sensor);
            }
        }
        Ok(Placement::new(sensors))
    }

    pub fn objective_spec(&self, env: &Environment, psi: &ScalarField) -> Result<ObjectiveSpec> {
        let weight = match &self.objective.weight {
            WeightSpec::Uniform => None,
            WeightSpec::Band { outer } => Some(objective::band_weight(psi, outer)),
            WeightSpec::BlindSpot {
                anchor,
                range,
                angle,
                width,
                focus,
            } => {
                let sensor = ResolvedSensor {
                    position: [anchor[0], anchor[1], 0.0],
                    range: *range,
                    sector: Sector::Planar {
                        start: angle.rem_euclid(TAU),
                        width: width.min(TAU),
                    },
                    failure: 0.0,
                };
                let focus = focus.as_ref().map(|[lo, hi]| (to_point(lo), to_point(hi)));
                Some(objective::blind_spot_weight(env, psi, &sensor, focus)?)
            }
            WeightSpec::File { path } => {
                let p = self.base_dir.join(path);
                let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                Some(ScalarField::from_grid_text(&text)?)
            }
        };
        Ok(ObjectiveSpec {
            mode: self.mode(),
            weight,
        })
    }
}

fn to_point(v: &[f64]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (a, x) in v.iter().take(3).enumerate() {
        p[a] = *x;
    }
    p
}

fn template(sym: &SymmetrySpec) -> SymmetryTemplate {
    SymmetryTemplate {
        obstacle: sym.obstacle,
        range: sym.range,
        width: sym.width.unwrap_or(FRAC_PI_2),
        failure: sym.failure,
        s_off: sym.s_off,
        v_off: sym.v_off,
    }
}

fn check_failure(p: f64, field: &str) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{field} = {p} is outside [0, 1)")))
    }
}

fn normalize_sensor(spec: &mut SensorSpec, group: usize, index: usize, env: &Environment, default_width: f64) -> Result<()> {
    let field = |name: &str| format!("sensors[{group}].{name} (sensor {index})");
    let dim = env.dim();
    if spec.count == 0 {
        return Err(Error::Config(format!("{} must be at least 1", field("count"))));
    }
    if !(spec.range > 0.0 && spec.range.is_finite()) {
        return Err(Error::Config(format!("{} = {} must be positive", field("range"), spec.range)));
    }
    check_failure(spec.failure, &field("failure"))?;
    if let Some(d) = spec.base_radius.take() {
        if dim != 3 {
            return Err(Error::Config(format!("{} applies to 3D cones only", field("base_radius"))));
        }
        if spec.width.is_some() {
            return Err(Error::Config(format!("{}: give either width or base_radius", field("width"))));
        }
        spec.width = Some(visibility::half_angle_from_base_radius(spec.range, d));
    }
    let width = *spec.width.get_or_insert(default_width);
    if !(width > 0.0) {
        return Err(Error::Config(format!("{} = {width} must be positive", field("width"))));
    }
    let kinds = [spec.position.is_some(), spec.boundary.is_some(), spec.random_on.is_some()];
    if kinds.iter().filter(|k| **k).count() != 1 {
        return Err(Error::Config(format!(
            "sensors[{group}] (sensor {index}): give exactly one of position, boundary or random_on"
        )));
    }
    if spec.count > 1 && spec.random_on.is_none() {
        return Err(Error::Config(format!(
            "sensors[{group}] (sensor {index}): count > 1 needs random_on"
        )));
    }
    if dim == 2 && (spec.azimuth.is_some() || spec.polar.is_some()) {
        return Err(Error::Config(format!("{}: planar sensors use `angle`", field("azimuth"))));
    }
    if dim == 3 && spec.angle.is_some() {
        return Err(Error::Config(format!("{}: 3D sensors use azimuth and polar", field("angle"))));
    }
    if let Some(p) = &spec.position {
        if p.len() != dim {
            return Err(Error::Config(format!("{} needs {dim} coordinates", field("position"))));
        }
        if spec.location_adjustable == Some(true) {
            return Err(Error::Config(format!("{}: a fixed point cannot move", field("location_adjustable"))));
        }
        spec.location_adjustable = Some(false);
    }
    if let Some(b) = &spec.boundary {
        let id: BoundaryId = b.parse()?;
        env.boundary_extent(id)?;
        spec.s.get_or_insert(0.0);
        if dim == 3 {
            spec.t.get_or_insert(0.0);
        }
        spec.location_adjustable.get_or_insert(true);
    }
    if let Some(list) = &spec.random_on {
        if list.is_empty() {
            return Err(Error::Config(format!("{} is empty", field("random_on"))));
        }
        for b in list {
            let id: BoundaryId = b.parse()?;
            env.boundary_extent(id)?;
        }
        spec.location_adjustable.get_or_insert(true);
    }
    if spec.random_on.is_none() {
        let sensor = base_sensor(spec, env)?;
        sensor.resolve(env, index)?;
        // store the resolved default aim so the dump is explicit
        match sensor.aim {
            Aim::Planar { angle } => spec.angle = Some(angle),
            Aim::Axis { azimuth, polar } => {
                spec.azimuth = Some(azimuth);
                spec.polar = Some(polar);
            }
        }
    }
    Ok(())
}

/// The sensor described by a spec, before any random draw. Missing aims
/// point the sector centre along the boundary normal (or +x for points).
fn base_sensor(spec: &SensorSpec, env: &Environment) -> Result<Sensor> {
    let width = spec.width.unwrap_or(FRAC_PI_2);
    let (location, normal) = if let Some(p) = &spec.position {
        (Location::Fixed(to_point(p)), [1.0, 0.0, 0.0])
    } else if let Some(b) = &spec.boundary {
        let bp = BoundaryParam::on_face(b.parse()?, spec.s.unwrap_or(0.0), spec.t.unwrap_or(0.0));
        let (_, n) = env.boundary_point(bp)?;
        (Location::OnBoundary(bp), n)
    } else {
        // placeholder; replaced by the random draw
        (Location::Fixed([0.0; 3]), [1.0, 0.0, 0.0])
    };
    let mut sensor = if env.dim() == 2 {
        let angle = spec
            .angle
            .unwrap_or_else(|| init::start_angle_for_centre(normal[1].atan2(normal[0]), width));
        Sensor::planar(location, spec.range, angle, width)
    } else {
        let azimuth = spec.azimuth.unwrap_or_else(|| normal[1].atan2(normal[0]));
        let polar = spec.polar.unwrap_or_else(|| normal[2].clamp(-1.0, 1.0).acos());
        Sensor::cone(location, spec.range, azimuth, polar, width)
    };
    sensor.failure = spec.failure;
    sensor.direction_adjustable = spec.direction_adjustable;
    sensor.location_adjustable = spec.location_adjustable.unwrap_or(false);
    Ok(sensor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const MINIMAL: &str = "[domain]\nlower = [0.0, 0.0]\nupper = [1.0, 1.0]\nh = 0.05\n\n[[sensors]]\nrange = 0.3\nposition = [0.5, 0.5]\n";

    #[test]
    fn minimal_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        let g = &s.sensors[0];
        assert_eq!(g.width, Some(FRAC_PI_2));
        assert_eq!(g.failure, 0.0);
        assert_eq!(g.location_adjustable, Some(false));
        assert_eq!(s.objective.weight, WeightSpec::Uniform);
        assert_eq!(s.mode(), Mode::Coverage);
        assert_eq!(s.optimizer.h_v, Some(0.2));
    }

    #[test]
    fn failure_out_of_range_names_field() {
        let text = MINIMAL.replace("range = 0.3", "range = 0.3\nfailure = 1.5");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("failure") && err.contains("sensor 0"), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_scenario("[domain]\nlower = [0.0, \n").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert!(line >= 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn sensor_inside_obstacle_is_infeasible() {
        let text = format!("{MINIMAL}\n[[obstacles]]\npolygon = [[0.4, 0.4], [0.6, 0.4], [0.6, 0.6], [0.4, 0.6]]\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, Error::Infeasible { index: 0, .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn fig4_preset() {
        let s = preset("fig4").unwrap();
        assert_eq!(s.sensor_count(), 16);
        assert_eq!(s.sensors.len(), 2);
        for g in &s.sensors {
            assert_eq!(g.count, 8);
            assert_eq!(g.range, 0.6);
            assert!((g.width.unwrap() - PI / 3.0).abs() < 1e-15);
        }
        let env = s.environment().unwrap();
        let free = env.domain.measure();
        assert!((free - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preset_override() {
        let s = parse_scenario("preset = \"fig4\"\nseed = 9\n[optimizer]\niterations = 3\n").unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.optimizer.iterations, Some(3));
        assert_eq!(s.sensor_count(), 16);
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = parse_scenario("preset = \"nope\"\n").unwrap_err().to_string();
        assert!(err.contains("fig4") && err.contains("fig8-3d"), "{err}");
    }

    #[test]
    fn every_preset_parses_and_round_trips() {
        for (name, _) in preset_scenarios() {
            let s = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            let dump = s.dump();
            let again = parse_scenario(&dump).unwrap_or_else(|e| panic!("{name}: {e}\n{dump}"));
            assert_eq!(again, s, "{name}");
            assert_eq!(again.dump(), dump, "{name}");
        }
    }

    #[test]
    fn fig8_scene_is_exact() {
        let s = preset("fig8-3d").unwrap();
        assert_eq!(s.domain.lower, vec![0.0, 0.0, 0.0]);
        assert_eq!(s.domain.upper, vec![2.0, 2.0, 0.5]);
        assert_eq!(
            s.obstacles[0],
            ObstacleSpec::Cuboid {
                lower: [0.0, 0.0, 0.0],
                upper: [1.4, 1.4, 0.5]
            }
        );
        assert_eq!(s.sensor_count(), 8);
        let beta = s.sensors[0].width.unwrap();
        assert!((beta - (0.7f64 / 0.9).asin()).abs() < 1e-15);
    }

    #[test]
    fn random_initialization_is_seeded() {
        let s = preset("fig5").unwrap();
        let env = s.environment().unwrap();
        let a = s.initial_placement(&env, 4).unwrap();
        let b = s.initial_placement(&env, 4).unwrap();
        let c = s.initial_placement(&env, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.sensors.iter().all(|x| x.failure == 0.5));
    }
}
