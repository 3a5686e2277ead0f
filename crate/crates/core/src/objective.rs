//! Coverage functionals: the regularized-Heaviside covered area and the
//! expected area under independent sensor failures, both with optional
//! importance weights or band indicators.

use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::field::{FieldRole, Grid, ScalarField};
use crate::geometry::Point;
use crate::visibility::{self, CoveragePatch, ResolvedSensor};

/// Piecewise-linear regularized Heaviside. `eps == 0` gives the hard step
/// (1 iff φ > 0).
#[inline]
pub fn heaviside_reg(phi: f64, eps: f64) -> f64 {
    if eps <= 0.0 {
        return if phi > 0.0 { 1.0 } else { 0.0 };
    }
    if phi >= eps {
        1.0
    } else if phi <= -eps {
        0.0
    } else {
        0.5 * (1.0 + phi / eps)
    }
}

/// `ε = (h/2)·|∇φ|₁` at one node. Each partial derivative is the smaller
/// in magnitude of the two one-sided differences (the only one on the grid
/// boundary). This equals the central difference wherever φ is linear and
/// ignores the jump to −1 at the range and sector cuts.
#[inline]
fn epsilon_at(grid: &Grid, c: [usize; 3], get: impl Fn([usize; 3]) -> f64) -> f64 {
    let h = grid.h;
    let centre = get(c);
    let mut l1 = 0.0;
    for a in 0..grid.dim {
        let n = grid.dims[a];
        if n < 2 {
            continue;
        }
        let mut slope = f64::INFINITY;
        if c[a] > 0 {
            let mut lo = c;
            lo[a] -= 1;
            slope = (centre - get(lo)).abs();
        }
        if c[a] + 1 < n {
            let mut hi = c;
            hi[a] += 1;
            slope = slope.min((get(hi) - centre).abs());
        }
        l1 += slope / h;
    }
    0.5 * h * l1
}

pub fn epsilon_field(phi: &ScalarField) -> ScalarField {
    let g = phi.grid;
    let values = (0..g.len())
        .map(|idx| epsilon_at(&g, g.coords(idx), |c| phi.get(c)))
        .collect();
    ScalarField {
        grid: g,
        values,
        role: phi.role,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Covered area, combined as `Σ q·(1 − Π_k (1 − H_ε(φ_k)))` with each
    /// sensor smoothed on its own field. This equals the expected area with
    /// every p = 0 and never drops when a sensor is added. Smoothing the max
    /// field instead can: its kinks steepen the one-sided slopes and widen ε.
    #[default]
    Coverage,
    /// Expected covered area under independent failures.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectiveSpec {
    pub mode: Mode,
    /// Non-negative importance weight; `None` means w ≡ 1. A band indicator
    /// is passed here as a 0/1 field.
    pub weight: Option<ScalarField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// Same functional with hard thresholds (ε = 0) for reporting.
    pub hard_value: f64,
    pub mode: Mode,
    /// Per-node covered fraction `H_ε(φ)` or `1 − Πp̃_k`.
    pub degree: Option<ScalarField>,
    /// Per-node count of sensors with φ_k > 0.
    pub overlap: Option<ScalarField>,
}

/// Per-sensor data reused across objective evaluations.
#[derive(Debug, Clone)]
pub struct SensorContribution {
    pub patch: CoveragePatch,
    /// `p̃_k = 1 − H_ε(φ_k)(1 − p_k)` on the patch, with p_k = 0 in coverage mode.
    pub survive: Vec<f64>,
    pub failure: f64,
}

/// Quadrature weights and spec bound to one environment grid.
#[derive(Debug, Clone)]
pub struct Objective {
    pub spec: ObjectiveSpec,
    pub grid: Grid,
    quad: Vec<f64>,
}

impl Objective {
    /// Node weights are `trapezoid × h^dim × w(y)`, zero where ψ ≤ 0.
    pub fn new(psi: &ScalarField, spec: ObjectiveSpec) -> Result<Objective> {
        let grid = psi.grid;
        let weight = match &spec.weight {
            Some(w) => {
                if w.grid.dim != grid.dim {
                    return Err(Error::GridMismatch("weight field dimension differs from the scene".into()));
                }
                if let Some(bad) = w.values.iter().find(|v| !(**v >= 0.0)) {
                    return Err(Error::Config(format!("weight values must be non-negative (found {bad})")));
                }
                Some(w.resample_nearest(&grid))
            }
            None => None,
        };
        let cell = grid.cell_measure();
        let quad = (0..grid.len())
            .map(|idx| {
                if psi.values[idx] <= 0.0 {
                    return 0.0;
                }
                let w = weight.as_ref().map_or(1.0, |f| f.values[idx]);
                grid.trapezoid_weight(grid.coords(idx)) * cell * w
            })
            .collect();
        Ok(Objective { spec, grid, quad })
    }

    /// Weighted measure of free space: the upper bound of every functional.
    pub fn free_measure(&self) -> f64 {
        self.quad.iter().sum()
    }

    pub fn quadrature(&self) -> &[f64] {
        &self.quad
    }

    pub fn contribution(&self, patch: CoveragePatch, failure: f64) -> SensorContribution {
        let survive = match self.spec.mode {
            Mode::Coverage => survival_on_patch(&self.grid, &patch, 0.0),
            Mode::Expected => survival_on_patch(&self.grid, &patch, failure),
        };
        SensorContribution { patch, survive, failure }
    }

    /// Smoothed objective value from per-sensor contributions.
    pub fn value_of(&self, parts: &[&SensorContribution]) -> f64 {
        let g = &self.grid;
        let mut prod = vec![1.0f64; g.len()];
        for part in parts {
            let p = &part.patch;
            for (li, &s) in part.survive.iter().enumerate() {
                if s != 1.0 {
                    let c = p.global(p.local_coords(li));
                    prod[g.index(c[0], c[1], c[2])] *= s;
                }
            }
        }
        self.quad.iter().zip(&prod).map(|(q, p)| q * (1.0 - p)).sum()
    }

    /// Area `V = Σ q·H_ε(φ)` of one coverage field.
    pub fn coverage_area(&self, field: &ScalarField) -> Result<ObjectiveValue> {
        self.grid.check_same(&field.grid)?;
        let g = &self.grid;
        let eps = epsilon_field(field);
        let mut degree = ScalarField::filled(*g, 0.0, FieldRole::Coverage);
        let (mut value, mut hard) = (0.0, 0.0);
        for (idx, &q) in self.quad.iter().enumerate() {
            let hv = heaviside_reg(field.values[idx], eps.values[idx]);
            degree.values[idx] = hv;
            value += q * hv;
            hard += q * heaviside_reg(field.values[idx], 0.0);
        }
        Ok(ObjectiveValue {
            value,
            hard_value: hard,
            mode: Mode::Coverage,
            degree: Some(degree),
            overlap: None,
        })
    }

    /// Expected covered area `Σ q·(1 − Π_k p̃_k)`.
    pub fn expected_coverage(&self, fields: &[ScalarField], failures: &[f64]) -> Result<ObjectiveValue> {
        if fields.len() != failures.len() {
            return Err(Error::Config(format!(
                "expected coverage needs one field per sensor ({} fields, {} sensors)",
                fields.len(),
                failures.len()
            )));
        }
        let g = &self.grid;
        let mut prod = vec![1.0f64; g.len()];
        let mut prod_hard = vec![1.0f64; g.len()];
        for (f, &p) in fields.iter().zip(failures) {
            g.check_same(&f.grid)?;
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("failure probability {p} outside [0, 1)")));
            }
            let eps = epsilon_field(f);
            for idx in 0..g.len() {
                prod[idx] *= 1.0 - heaviside_reg(f.values[idx], eps.values[idx]) * (1.0 - p);
                if f.values[idx] > 0.0 {
                    prod_hard[idx] *= p;
                }
            }
        }
        let mut degree = ScalarField::filled(*g, 0.0, FieldRole::Coverage);
        let (mut value, mut hard) = (0.0, 0.0);
        for (idx, &q) in self.quad.iter().enumerate() {
            degree.values[idx] = 1.0 - prod[idx];
            value += q * (1.0 - prod[idx]);
            hard += q * (1.0 - prod_hard[idx]);
        }
        Ok(ObjectiveValue {
            value,
            hard_value: hard,
            mode: Mode::Expected,
            degree: Some(degree),
            overlap: Some(overlap_count(fields)?),
        })
    }

    /// Dispatch on the configured mode from full per-sensor fields.
    pub fn evaluate_fields(&self, fields: &[ScalarField], failures: &[f64]) -> Result<ObjectiveValue> {
        let mut out = match self.spec.mode {
            Mode::Coverage => {
                if fields.is_empty() {
                    let empty = ScalarField::filled(self.grid, -1.0, FieldRole::Coverage);
                    self.coverage_area(&empty)?
                } else {
                    let value = self.expected_coverage(fields, &vec![0.0; fields.len()])?;
                    ObjectiveValue { mode: Mode::Coverage, ..value }
                }
            }
            Mode::Expected => self.expected_coverage(fields, failures)?,
        };
        if out.overlap.is_none() {
            out.overlap = Some(if fields.is_empty() {
                ScalarField::filled(self.grid, 0.0, FieldRole::Count)
            } else {
                overlap_count(fields)?
            });
        }
        Ok(out)
    }
}

fn survival_on_patch(grid: &Grid, patch: &CoveragePatch, failure: f64) -> Vec<f64> {
    patch
        .values
        .iter()
        .enumerate()
        .map(|(li, &phi)| {
            if phi <= -1.0 {
                // every neighbour of a −1 node is ≥ −1, so ε can only exceed 1
                // next to large positive values; check exactly in that case
                let c = patch.global(patch.local_coords(li));
                let eps = epsilon_at(grid, c, |n| patch.at(n));
                if eps <= 1.0 {
                    return 1.0;
                }
                return 1.0 - heaviside_reg(phi, eps) * (1.0 - failure);
            }
            let c = patch.global(patch.local_coords(li));
            let eps = epsilon_at(grid, c, |n| patch.at(n));
            1.0 - heaviside_reg(phi, eps) * (1.0 - failure)
        })
        .collect()
}

/// Per-node number of fields with φ > 0.
pub fn overlap_count(fields: &[ScalarField]) -> Result<ScalarField> {
    let first = fields
        .first()
        .ok_or_else(|| Error::GridMismatch("overlap of zero fields has no grid".into()))?;
    let mut out = ScalarField::filled(first.grid, 0.0, FieldRole::Count);
    for f in fields {
        out.grid.check_same(&f.grid)?;
        for (o, &v) in out.values.iter_mut().zip(&f.values) {
            if v > 0.0 {
                *o += 1.0;
            }
        }
    }
    Ok(out)
}

/// Importance weight for the blind spots of an anchor sensor: 1 on free
/// nodes the anchor does not cover and inside the optional box, 0 elsewhere.
pub fn blind_spot_weight(
    env: &Environment,
    psi: &ScalarField,
    anchor: &ResolvedSensor,
    focus_box: Option<(Point, Point)>,
) -> Result<ScalarField> {
    let phi = visibility::compute_coverage(psi, anchor)?;
    let g = psi.grid;
    let values = (0..g.len())
        .map(|idx| {
            let p = g.node_position(idx);
            let in_box = focus_box.is_some_and(|(lo, hi)| (0..env.dim()).all(|a| p[a] >= lo[a] && p[a] <= hi[a]));
            if in_box || (psi.values[idx] > 0.0 && phi.values[idx] <= 0.0) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(ScalarField {
        grid: g,
        values,
        role: FieldRole::Weight,
    })
}

/// 0/1 indicator of the band between the obstacle set and an enclosing
/// polygon: nodes inside `outer` and outside every obstacle.
pub fn band_weight(psi: &ScalarField, outer: &[[f64; 2]]) -> ScalarField {
    let g = psi.grid;
    let values = (0..g.len())
        .map(|idx| {
            let p = g.node_position(idx);
            let inside = crate::geometry::point_in_polygon([p[0], p[1]], outer)
                || crate::geometry::on_polygon_boundary([p[0], p[1]], outer, 1e-12);
            if inside && psi.values[idx] > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    ScalarField {
        grid: g,
        values,
        role: FieldRole::Weight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{Domain, Environment};

    #[test]
    fn heaviside_exact_values() {
        let e = 0.3;
        assert_eq!(heaviside_reg(e, e), 1.0);
        assert_eq!(heaviside_reg(0.0, e), 0.5);
        assert_eq!(heaviside_reg(-e, e), 0.0);
        assert_eq!(heaviside_reg(-2.0 * e, e), 0.0);
        assert_eq!(heaviside_reg(0.0, 0.0), 0.0);
        assert_eq!(heaviside_reg(1e-300, 0.0), 1.0);
    }

    fn grid(n: usize) -> Grid {
        Grid::new([0.0; 3], 1.0 / (n - 1) as f64, [n, n, 1], 2)
    }

    #[test]
    fn epsilon_constant_and_linear() {
        let g = grid(11);
        let c = ScalarField::filled(g, 0.7, FieldRole::Coverage);
        assert!(epsilon_field(&c).values.iter().all(|&v| v == 0.0));
        let lin = ScalarField {
            grid: g,
            values: (0..g.len()).map(|i| g.node_position(i)[0]).collect(),
            role: FieldRole::Coverage,
        };
        let eps = epsilon_field(&lin);
        for v in eps.values {
            assert!((v - g.h / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_radial_bounds() {
        // φ = r − |y − x| sampled on a grid; interior ε lies within [h/2, h]
        // up to the central-difference truncation near the apex.
        let g = grid(101);
        let x = [0.503, 0.497, 0.0];
        let phi = ScalarField {
            grid: g,
            values: (0..g.len())
                .map(|i| {
                    let p = g.node_position(i);
                    0.4 - ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt()
                })
                .collect(),
            role: FieldRole::Coverage,
        };
        let eps = epsilon_field(&phi);
        for idx in 0..g.len() {
            let c = g.coords(idx);
            if c.iter().take(2).any(|&k| k == 0 || k == 100) {
                continue;
            }
            let p = g.node_position(idx);
            let r = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
            if r < 3.0 * g.h {
                continue;
            }
            let e = eps.values[idx];
            assert!(e >= g.h / 2.0 * 0.999 && e <= g.h * 0.7072 * 1.001 + 1e-12, "ε {e} at r {r}");
        }
    }

    #[test]
    fn expected_reductions() {
        let env = Environment::new(Domain::new(&[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap(), vec![]).unwrap();
        let psi = env.build_signed_distance();
        let g = psi.grid;
        let mut f = ScalarField::filled(g, -1.0, FieldRole::Coverage);
        for idx in 0..g.len() {
            f.values[idx] = 0.5;
        }
        let obj = Objective::new(&psi, ObjectiveSpec { mode: Mode::Expected, weight: None }).unwrap();
        let cov = Objective::new(&psi, ObjectiveSpec::default()).unwrap();
        let v = cov.coverage_area(&f).unwrap().value;
        let e0 = obj.expected_coverage(&[f.clone()], &[0.0]).unwrap().value;
        let e5 = obj.expected_coverage(&[f.clone()], &[0.5]).unwrap().value;
        let e55 = obj.expected_coverage(&[f.clone(), f.clone()], &[0.5, 0.5]).unwrap().value;
        assert_eq!(e0, v);
        assert!((e5 - 0.5 * v).abs() < 1e-15);
        assert!((e55 - 0.75 * v).abs() < 1e-15);
        assert!(obj.expected_coverage(&[f], &[]).is_err());
    }

    #[test]
    fn overlap_counts() {
        let g = grid(2);
        let f = |vals: [f64; 4]| ScalarField { grid: g, values: vals.to_vec(), role: FieldRole::Coverage };
        let count = overlap_count(&[
            f([0.1, 0.2, -1.0, 0.0]),
            f([-1.0, 0.3, -1.0, -0.5]),
            f([-1.0, 0.3, -1.0, -0.5]),
        ])
        .unwrap();
        assert_eq!(count.values, vec![1.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn negative_weight_rejected() {
        let env = Environment::new(Domain::new(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap(), vec![]).unwrap();
        let psi = env.build_signed_distance();
        let mut w = ScalarField::filled(psi.grid, 1.0, FieldRole::Weight);
        w.values[3] = -0.1;
        assert!(Objective::new(&psi, ObjectiveSpec { mode: Mode::Coverage, weight: Some(w) }).is_err());
    }
}
