//! Per-sensor coverage level sets φ computed by an upwind sweep along the
//! characteristics emanating from the sensor, with range and sector cuts.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::environment::{BoundaryParam, Environment};
use crate::error::{Error, Result};
use crate::field::{FieldRole, Grid, ScalarField};
use crate::geometry::{self, Point};

/// Width, in grid spacings, of the shell outside the range where φ keeps
/// the value `r − |y − x|` instead of −1.
pub const RANGE_SHELL: f64 = 2.0;

/// Angular slack on sector edges, so that rays lying exactly on an edge
/// are inside regardless of rounding.
const ANGLE_TOL: f64 = 1e-12;

/// Clamp applied to polar angles so the cone axis never sits on a pole.
pub const POLAR_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Fixed(Point),
    /// On a boundary, evaluated at a standoff of `h/2` along the free-space normal.
    OnBoundary(BoundaryParam),
}

/// Viewing direction: a start angle for planar sectors, or a cone axis
/// given by azimuth and polar angle in 3D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aim {
    Planar { angle: f64 },
    Axis { azimuth: f64, polar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensor {
    pub location: Location,
    pub range: f64,
    pub aim: Aim,
    /// Angular width θ of the planar sector, or the cone half-angle β in 3D.
    pub width: f64,
    pub failure: f64,
    pub direction_adjustable: bool,
    pub location_adjustable: bool,
}

impl Sensor {
    pub fn planar(location: Location, range: f64, angle: f64, width: f64) -> Sensor {
        Sensor {
            location,
            range,
            aim: Aim::Planar { angle },
            width,
            failure: 0.0,
            direction_adjustable: true,
            location_adjustable: matches!(location, Location::OnBoundary(_)),
        }
    }

    pub fn cone(location: Location, range: f64, azimuth: f64, polar: f64, half_angle: f64) -> Sensor {
        Sensor {
            location,
            range,
            aim: Aim::Axis { azimuth, polar },
            width: half_angle,
            failure: 0.0,
            direction_adjustable: true,
            location_adjustable: matches!(location, Location::OnBoundary(_)),
        }
    }

    pub fn with_failure(mut self, p: f64) -> Sensor {
        self.failure = p;
        self
    }

    pub fn can_move(&self) -> bool {
        self.location_adjustable && matches!(self.location, Location::OnBoundary(_))
    }

    /// Sensing point: the fixed point, or the boundary point pushed `h/2`
    /// into free space.
    pub fn position(&self, env: &Environment) -> Result<Point> {
        match self.location {
            Location::Fixed(p) => Ok(p),
            Location::OnBoundary(bp) => {
                let (p, n) = env.boundary_point(bp)?;
                Ok(geometry::add(p, geometry::scale(n, 0.5 * env.domain.h)))
            }
        }
    }

    /// Validate parameters and geometry, producing the form the sweep consumes.
    pub fn resolve(&self, env: &Environment, index: usize) -> Result<ResolvedSensor> {
        let infeasible = |reason: String| Error::Infeasible { index, reason };
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(infeasible(format!("range must be positive, got {}", self.range)));
        }
        if !(0.0..1.0).contains(&self.failure) {
            return Err(infeasible(format!("failure probability {} outside [0, 1)", self.failure)));
        }
        let position = self.position(env)?;
        if !env.domain.contains(position) {
            return Err(Error::OutsideDomain { index });
        }
        let sd = env.signed_distance(position);
        if sd <= 0.0 {
            return Err(infeasible(format!("sensor point lies inside an obstacle (ψ = {sd})")));
        }
        let sector = match (self.aim, env.dim()) {
            (Aim::Planar { angle }, 2) => {
                if !(self.width > 0.0) {
                    return Err(infeasible("sector width must be positive".into()));
                }
                Sector::Planar {
                    start: angle.rem_euclid(TAU),
                    width: self.width.min(TAU),
                }
            }
            (Aim::Axis { azimuth, polar }, 3) => {
                if !(self.width > 0.0) {
                    return Err(infeasible("cone half-angle must be positive".into()));
                }
                let polar = polar.clamp(POLAR_EPS, PI - POLAR_EPS);
                Sector::Cone {
                    axis: geometry::spherical_axis(azimuth, polar),
                    half_angle: self.width.min(PI),
                }
            }
            _ => return Err(infeasible("sensor direction does not match the scene dimension".into())),
        };
        Ok(ResolvedSensor {
            position,
            range: self.range,
            sector,
            failure: self.failure,
        })
    }
}

/// Base radius `d` and range `r` of a spherical sector to its half-angle.
pub fn half_angle_from_base_radius(range: f64, base_radius: f64) -> f64 {
    (base_radius / range).clamp(0.0, 1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sector {
    /// Directions whose angle lies in `[start, start + width]` modulo 2π.
    Planar { start: f64, width: f64 },
    /// Directions within `half_angle` of the unit `axis`.
    Cone { axis: Point, half_angle: f64 },
}

impl Sector {
    fn full(&self) -> bool {
        match *self {
            Sector::Planar { width, .. } => width >= TAU,
            Sector::Cone { half_angle, .. } => half_angle >= PI,
        }
    }

    /// Angular distance from direction `d` (length `len > 0`) to the sector;
    /// zero inside.
    fn angular_gap(&self, d: Point, len: f64) -> f64 {
        match self.edge_angles(d, len) {
            Some((inside, a)) if !inside => a,
            _ => 0.0,
        }
    }

    /// Whether `d` lies in the sector, and its angular distance to the
    /// nearest edge. `None` for a full sector.
    fn edge_angles(&self, d: Point, len: f64) -> Option<(bool, f64)> {
        match *self {
            Sector::Planar { start, width } => {
                if width >= TAU {
                    return None;
                }
                let u = (d[1].atan2(d[0]) - start).rem_euclid(TAU);
                // closed interval, robust to rounding of rays along the edges
                if u <= width + ANGLE_TOL || u >= TAU - ANGLE_TOL {
                    let m = if u > width + ANGLE_TOL { 0.0 } else { u.min(width - u).max(0.0) };
                    Some((true, m))
                } else {
                    Some((false, (u - width).min(TAU - u)))
                }
            }
            Sector::Cone { axis, half_angle } => {
                if half_angle >= PI {
                    return None;
                }
                let c = (geometry::dot(d, axis) / len).clamp(-1.0, 1.0);
                let gap = c.acos() - half_angle;
                if gap <= ANGLE_TOL {
                    Some((true, (-gap).max(0.0)))
                } else {
                    Some((false, gap))
                }
            }
        }
    }

    /// Signed distance from `sensor + d` to the sector's edge: positive
    /// inside, `+∞` for a full sector.
    fn signed_edge_distance(&self, d: Point, len: f64) -> f64 {
        match self.edge_angles(d, len) {
            None => f64::INFINITY,
            Some((inside, a)) => {
                let dist = if a < FRAC_PI_2 { len * a.sin() } else { len };
                if inside {
                    dist.max(f64::MIN_POSITIVE)
                } else {
                    -dist
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedSensor {
    pub position: Point,
    pub range: f64,
    pub sector: Sector,
    pub failure: f64,
}

/// ±1 angular indicator: +1 when the direction from the sensor to `y` lies in
/// the viewing sector (and at `y` equal to the sensor point).
pub fn sector_indicator(sensor: &ResolvedSensor, y: Point) -> f64 {
    let d = geometry::sub(y, sensor.position);
    let len = geometry::norm(d);
    if len == 0.0 || sensor.sector.angular_gap(d, len) == 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A coverage field stored only on the node box around the sensing ball;
/// every node outside the box carries φ = −1.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePatch {
    pub lower: [usize; 3],
    pub dims: [usize; 3],
    pub values: Vec<f64>,
}

impl CoveragePatch {
    pub fn empty() -> Self {
        CoveragePatch {
            lower: [0; 3],
            dims: [0; 3],
            values: Vec::new(),
        }
    }

    #[inline]
    pub fn local_index(&self, l: [usize; 3]) -> usize {
        l[0] + self.dims[0] * (l[1] + self.dims[1] * l[2])
    }

    #[inline]
    pub fn local_coords(&self, li: usize) -> [usize; 3] {
        let i = li % self.dims[0];
        let rest = li / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn global(&self, l: [usize; 3]) -> [usize; 3] {
        [l[0] + self.lower[0], l[1] + self.lower[1], l[2] + self.lower[2]]
    }

    /// φ at a global node.
    #[inline]
    pub fn at(&self, c: [usize; 3]) -> f64 {
        for a in 0..3 {
            if c[a] < self.lower[a] || c[a] >= self.lower[a] + self.dims[a] {
                return -1.0;
            }
        }
        self.values[self.local_index([c[0] - self.lower[0], c[1] - self.lower[1], c[2] - self.lower[2]])]
    }

    pub fn to_field(&self, grid: &Grid) -> ScalarField {
        let mut f = ScalarField::filled(*grid, -1.0, FieldRole::Coverage);
        for (li, &v) in self.values.iter().enumerate() {
            let c = self.global(self.local_coords(li));
            f.values[grid.index(c[0], c[1], c[2])] = v;
        }
        f
    }
}

/// Coverage field φ of one sensor over the whole grid.
pub fn compute_coverage(psi: &ScalarField, sensor: &ResolvedSensor) -> Result<ScalarField> {
    Ok(coverage_patch(psi, sensor)?.to_field(&psi.grid))
}

/// 3D entry point; identical sweep with octant ordering and bilinear
/// interpolation on grid planes.
pub fn compute_coverage_3d(psi: &ScalarField, sensor: &ResolvedSensor) -> Result<ScalarField> {
    if psi.grid.dim != 3 || !matches!(sensor.sector, Sector::Cone { .. }) {
        return Err(Error::GridMismatch("compute_coverage_3d needs a 3D grid and a cone sensor".into()));
    }
    compute_coverage(psi, sensor)
}

/// Pointwise maximum of coverage fields sharing one grid.
pub fn union_coverage(fields: &[ScalarField]) -> Result<ScalarField> {
    let first = fields
        .first()
        .ok_or_else(|| Error::GridMismatch("union of zero fields has no grid".into()))?;
    let mut out = first.clone();
    for f in &fields[1..] {
        out.grid.check_same(&f.grid)?;
        for (o, &v) in out.values.iter_mut().zip(&f.values) {
            *o = o.max(v);
        }
    }
    out.role = FieldRole::Coverage;
    Ok(out)
}

/// Sweep one sensor over the node box enclosing its sensing ball.
///
/// Nodes inside `B_r(x)` near the viewing sector are visited in increasing
/// `L∞ + L1/2` distance from the sensor point; this key strictly decreases
/// from a node to each of its upwind neighbours, so neighbour values are
/// final when used. The occlusion value is `min(ψ(y), interp)` where
/// `interp` interpolates the neighbours' occlusion values at the point
/// where the ray `x → y` crosses the previous grid line (plane).
pub fn coverage_patch(psi: &ScalarField, sensor: &ResolvedSensor) -> Result<CoveragePatch> {
    let g = psi.grid;
    let x = sensor.position;
    for a in 0..g.dim {
        let lo = g.origin[a];
        let hi = g.origin[a] + g.h * (g.dims[a] - 1) as f64;
        let tol = 1e-12 * (hi - lo);
        if x[a] < lo - tol || x[a] > hi + tol {
            return Err(Error::OutsideDomain { index: 0 });
        }
    }
    let psi_x = psi.interpolate(x);
    if psi_x <= 0.0 {
        return Err(Error::Infeasible {
            index: 0,
            reason: format!("interpolated ψ at the sensor is {psi_x}"),
        });
    }
    let h = g.h;
    let r = sensor.range;
    let reach = r + RANGE_SHELL * h;

    let mut lower = [0usize; 3];
    let mut dims = [1usize; 3];
    for a in 0..g.dim {
        let lo = ((x[a] - reach - g.origin[a]) / h).floor() - 1.0;
        let hi = ((x[a] + reach - g.origin[a]) / h).ceil() + 1.0;
        let lo = lo.clamp(0.0, (g.dims[a] - 1) as f64) as usize;
        let hi = hi.clamp(0.0, (g.dims[a] - 1) as f64) as usize;
        lower[a] = lo;
        dims[a] = hi - lo + 1;
    }
    let mut patch = CoveragePatch {
        lower,
        dims,
        values: vec![-1.0; dims[0] * dims[1] * dims[2]],
    };
    let n = patch.values.len();

    let margin = 4.0 * h;
    let full = sensor.sector.full();
    let mut order: Vec<(f64, u32)> = Vec::with_capacity(n / 2);
    let mut dist = vec![f64::INFINITY; n];
    // ±1 away from the sector's edges, signed edge distance within `margin`
    let mut sector_term = vec![-1.0; n];
    for li in 0..n {
        let c = patch.global(patch.local_coords(li));
        let y = g.position(c);
        let d = geometry::sub(y, x);
        let len = geometry::norm(d);
        if len > reach {
            continue;
        }
        dist[li] = len;
        let sd = if len == 0.0 || full {
            f64::INFINITY
        } else {
            sensor.sector.signed_edge_distance(d, len)
        };
        sector_term[li] = if sd.abs() <= margin { sd } else { sd.signum() };
        let near = sd > 0.0 || len <= margin || sd >= -margin;
        if !near {
            continue;
        }
        let (mut linf, mut l1) = (0.0f64, 0.0f64);
        for a in 0..g.dim {
            linf = linf.max(d[a].abs());
            l1 += d[a].abs();
        }
        order.push((linf + 0.5 * l1, li as u32));
    }
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut occ = vec![f64::NAN; n];
    let psi_local = |l: [usize; 3]| psi.values[g.index(lower[0] + l[0], lower[1] + l[1], lower[2] + l[2])];
    for &(_, li) in &order {
        let li = li as usize;
        let l = patch.local_coords(li);
        let own = psi_local(l);
        let y = g.position(patch.global(l));
        let d = geometry::sub(y, x);
        let mut axis = 0;
        for a in 1..g.dim {
            if d[a].abs() > d[axis].abs() {
                axis = a;
            }
        }
        let da = d[axis].abs();
        if da <= h * (1.0 + 1e-12) {
            occ[li] = own;
            continue;
        }
        let t = h / da;
        let mut base = l;
        // step one plane toward the sensor along the dominant axis
        if d[axis] > 0.0 {
            base[axis] -= 1;
        } else {
            base[axis] += 1;
        }
        let mut others: [(usize, f64, isize); 2] = [(0, 0.0, 0); 2];
        let mut m = 0;
        for b in 0..g.dim {
            if b == axis {
                continue;
            }
            let f = d[b].abs() * t / h;
            if f > 1e-12 {
                let step = if d[b] > 0.0 { -1 } else { 1 };
                let nb = base[b] as isize + step;
                if nb >= 0 && (nb as usize) < dims[b] {
                    others[m] = (b, f.min(1.0), step);
                    m += 1;
                }
            }
        }
        let mut interp = 0.0;
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut q = base;
            for (bit, &(b, f, step)) in others[..m].iter().enumerate() {
                if (corner >> bit) & 1 == 1 {
                    w *= f;
                    q[b] = (q[b] as isize + step) as usize;
                } else {
                    w *= 1.0 - f;
                }
            }
            if w == 0.0 {
                continue;
            }
            let qi = patch.local_index(q);
            let v = occ[qi];
            interp += w * if v.is_nan() { psi_local(q) } else { v };
        }
        occ[li] = own.min(interp);
    }

    // the range term continues through a thin shell beyond r so that the
    // rim keeps a linear profile for H_ε; the sign is unchanged
    let shell = RANGE_SHELL * h;
    for li in 0..n {
        let len = dist[li];
        if len > r + shell {
            continue;
        }
        let range_term = r - len;
        patch.values[li] = if !occ[li].is_nan() {
            occ[li].min(range_term).min(sector_term[li])
        } else {
            psi_local(patch.local_coords(li)).min(range_term).min(-1.0)
        };
    }
    Ok(patch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{Domain, Obstacle};

    fn planar(x: f64, y: f64, r: f64, v: f64, theta: f64) -> ResolvedSensor {
        ResolvedSensor {
            position: [x, y, 0.0],
            range: r,
            sector: Sector::Planar { start: v, width: theta },
            failure: 0.0,
        }
    }

    #[test]
    fn sector_indicator_examples() {
        let s = planar(0.5, 0.5, 1.0, 0.0, FRAC_PI_2);
        assert_eq!(sector_indicator(&s, [0.6, 0.6, 0.0]), 1.0);
        assert_eq!(sector_indicator(&s, [0.4, 0.5, 0.0]), -1.0);
        let w = planar(0.5, 0.5, 1.0, 7.0 * PI / 4.0, FRAC_PI_2);
        assert_eq!(sector_indicator(&w, [0.6, 0.5, 0.0]), 1.0);
        assert_eq!(sector_indicator(&s, [0.5, 0.5, 0.0]), 1.0);
    }

    fn free_env(side: f64, h: f64) -> Environment {
        Environment::new(Domain::new(&[0.0, 0.0], &[side, side], h).unwrap(), vec![]).unwrap()
    }

    #[test]
    fn free_space_values() {
        let env = free_env(1.0, 0.01);
        let psi = env.build_signed_distance();
        let s = planar(0.5, 0.5, 0.3, 0.0, FRAC_PI_2);
        let phi = compute_coverage(&psi, &s).unwrap();
        let v = phi.get([60, 60, 0]);
        assert!((v - (0.3 - 0.02f64.sqrt())).abs() < 1e-12, "{v}");
        assert_eq!(phi.get([40, 50, 0]), -1.0);
        assert_eq!(phi.get([95, 50, 0]), -1.0);
        assert!((phi.get([50, 50, 0]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn shadow_behind_square() {
        let domain = Domain::new(&[0.0, 0.0], &[1.0, 1.0], 0.01).unwrap();
        let sq = vec![[0.4, 0.4], [0.6, 0.4], [0.6, 0.6], [0.4, 0.6]];
        let env = Environment::new(domain, vec![Obstacle::Polygon(sq)]).unwrap();
        let psi = env.build_signed_distance();
        let s = planar(0.2, 0.5, 2.0, 0.0, TAU);
        let phi = compute_coverage(&psi, &s).unwrap();
        assert!(phi.get([80, 50, 0]) < 0.0);
        assert!(phi.get([80, 90, 0]) > 0.0);
        assert!(phi.get([30, 50, 0]) > 0.0);
    }

    #[test]
    fn infeasible_inside_obstacle() {
        let domain = Domain::new(&[0.0, 0.0], &[1.0, 1.0], 0.01).unwrap();
        let sq = vec![[0.4, 0.4], [0.6, 0.4], [0.6, 0.6], [0.4, 0.6]];
        let env = Environment::new(domain, vec![Obstacle::Polygon(sq)]).unwrap();
        let psi = env.build_signed_distance();
        let s = planar(0.5, 0.5, 0.3, 0.0, TAU);
        assert!(matches!(compute_coverage(&psi, &s), Err(Error::Infeasible { .. })));
        let out = planar(1.5, 0.5, 0.3, 0.0, TAU);
        assert!(matches!(compute_coverage(&psi, &out), Err(Error::OutsideDomain { .. })));
        let sensor = Sensor::planar(Location::Fixed([0.5, 0.5, 0.0]), 0.3, 0.0, 1.0);
        assert!(matches!(sensor.resolve(&env, 4), Err(Error::Infeasible { index: 4, .. })));
    }

    #[test]
    fn union_examples() {
        let grid = free_env(1.0, 0.5).grid();
        let a = ScalarField { grid, values: vec![0.2, -1.0, -1.0, 0.1, -1.0, -1.0, -1.0, -1.0, -1.0], role: FieldRole::Coverage };
        let b = ScalarField::filled(grid, -1.0, FieldRole::Coverage);
        let u = union_coverage(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(u.values[0], 0.2);
        assert_eq!(union_coverage(&[b.clone(), b.clone()]).unwrap().values, b.values);
        assert_eq!(union_coverage(&[a.clone(), a.clone()]).unwrap(), a);
        let other = ScalarField::filled(free_env(1.0, 0.25).grid(), -1.0, FieldRole::Coverage);
        assert!(union_coverage(&[a, other]).is_err());
    }

    #[test]
    fn boundary_sensor_standoff() {
        let env = free_env(1.0, 0.02);
        let bp = BoundaryParam::new(crate::environment::BoundaryId::Wall(3), 0.5);
        let s = Sensor::planar(Location::OnBoundary(bp), 0.6, 0.0, 1.0);
        let p = s.position(&env).unwrap();
        assert!((p[0] - 0.01).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!(s.can_move());
    }

    #[test]
    fn beta_helper() {
        let b = half_angle_from_base_radius(0.9, 0.7);
        assert!((b.to_degrees() - 51.0576).abs() < 1e-3);
        assert_eq!(half_angle_from_base_radius(0.4, 0.8), FRAC_PI_2);
    }

    #[test]
    fn cone_full_sphere_and_range() {
        let domain = Domain::new(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 0.05).unwrap();
        let env = Environment::new(domain, vec![]).unwrap();
        let psi = env.build_signed_distance();
        let s = ResolvedSensor {
            position: [0.5, 0.5, 0.5],
            range: 0.3,
            sector: Sector::Cone { axis: [0.0, 0.0, 1.0], half_angle: PI },
            failure: 0.0,
        };
        let phi = compute_coverage_3d(&psi, &s).unwrap();
        assert!((phi.get([12, 10, 10]) - 0.2).abs() < 1e-12);
        // inside the shell beyond the range the range term continues
        assert!(phi.get([17, 10, 10]) < 0.0 && phi.get([17, 10, 10]) > -0.1);
        assert_eq!(phi.get([19, 10, 10]), -1.0);
    }
}
