use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::objective::{Objective, ObjectiveValue, SensorContribution};
use crate::visibility::{self, ResolvedSensor, Sector};

use super::placement::Placement;

type Key = [u64; 9];

fn key_of(s: &ResolvedSensor) -> Key {
    let sector = match s.sector {
        Sector::Planar { start, width } => [start, width, 0.0, 0.0],
        Sector::Cone { axis, half_angle } => [axis[0], axis[1], axis[2], half_angle],
    };
    [
        s.position[0].to_bits(),
        s.position[1].to_bits(),
        s.position[2].to_bits(),
        s.range.to_bits(),
        sector[0].to_bits(),
        sector[1].to_bits(),
        sector[2].to_bits(),
        sector[3].to_bits(),
        s.failure.to_bits(),
    ]
}

/// Cached evaluation of `F = objective ∘ expand` for one scene.
///
/// Per-sensor contributions are memoized by the resolved sensor, so probes
/// that perturb one coordinate rebuild only the field of the sensor it moves.
pub struct Evaluator<'a> {
    pub env: &'a Environment,
    pub psi: &'a ScalarField,
    pub objective: &'a Objective,
    cache: Mutex<HashMap<Key, Arc<SensorContribution>>>,
    cache_limit: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(env: &'a Environment, psi: &'a ScalarField, objective: &'a Objective) -> Self {
        // bound the cache to roughly 256 MiB of patch data
        let per_sensor = 16 * psi.grid.len().clamp(1, 1 << 20);
        Evaluator {
            env,
            psi,
            objective,
            cache: Mutex::new(HashMap::new()),
            cache_limit: ((256usize << 20) / per_sensor).clamp(64, 4096),
        }
    }

    fn contribution(&self, sensor: &ResolvedSensor, index: usize) -> Result<Arc<SensorContribution>> {
        let key = key_of(sensor);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let patch = visibility::coverage_patch(self.psi, sensor).map_err(|e| reindex(e, index))?;
        let part = Arc::new(self.objective.contribution(patch, sensor.failure));
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= self.cache_limit {
            cache.clear();
        }
        cache.insert(key, part.clone());
        Ok(part)
    }

    /// Smoothed objective value of a placement.
    pub fn value(&self, placement: &Placement) -> Result<f64> {
        let resolved = placement.resolve(self.env)?;
        let parts = resolved
            .iter()
            .enumerate()
            .map(|(i, s)| self.contribution(s, i))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&SensorContribution> = parts.iter().map(|p| p.as_ref()).collect();
        Ok(self.objective.value_of(&refs))
    }

    /// Full evaluation with per-sensor fields and diagnostic maps.
    pub fn evaluate(&self, placement: &Placement) -> Result<(ObjectiveValue, Vec<ScalarField>)> {
        let resolved = placement.resolve(self.env)?;
        let fields = resolved
            .iter()
            .enumerate()
            .map(|(i, s)| visibility::compute_coverage(self.psi, s).map_err(|e| reindex(e, i)))
            .collect::<Result<Vec<_>>>()?;
        let failures: Vec<f64> = resolved.iter().map(|s| s.failure).collect();
        let value = self.objective.evaluate_fields(&fields, &failures)?;
        Ok((value, fields))
    }

    /// Central differences over the free parameters; one-sided where one
    /// probe is infeasible and `None` where both are.
    pub fn gradient_parts(&self, placement: &Placement, h_v: f64, h_x: f64) -> Result<Vec<Option<f64>>> {
        let params = placement.free_params();
        if params.is_empty() {
            return Ok(Vec::new());
        }
        let base = self.value(placement)?;
        let probes: Vec<(usize, f64)> = params
            .iter()
            .enumerate()
            .flat_map(|(l, p)| {
                let h = if p.is_angular() { h_v } else { h_x };
                [(l, h), (l, -h)]
            })
            .collect();
        let results: Vec<Option<(f64, f64)>> = probes
            .par_iter()
            .map(|&(l, delta)| {
                let (moved, actual) = placement.step(self.env, params[l], delta).ok()?;
                if actual == 0.0 {
                    return None;
                }
                self.value(&moved).ok().map(|v| (v, actual))
            })
            .collect();
        Ok(results
            .chunks(2)
            .map(|pair| match (pair[0], pair[1]) {
                (Some((fp, ap)), Some((fm, am))) => Some((fp - fm) / (ap - am)),
                (Some((fp, ap)), None) => Some((fp - base) / ap),
                (None, Some((fm, am))) => Some((base - fm) / (-am)),
                (None, None) => None,
            })
            .collect())
    }

    pub fn gradient(&self, placement: &Placement, h_v: f64, h_x: f64) -> Result<Vec<f64>> {
        self.gradient_parts(placement, h_v, h_x)?
            .into_iter()
            .enumerate()
            .map(|(l, g)| g.ok_or(Error::DegenerateGradient(l)))
            .collect()
    }

    /// Apply a displacement coordinate by coordinate, skipping any single
    /// update that would make the placement infeasible.
    pub fn apply(&self, placement: &Placement, delta: &[f64]) -> Placement {
        let params = placement.free_params();
        let mut current = placement.clone();
        for (p, &d) in params.iter().zip(delta) {
            if d == 0.0 {
                continue;
            }
            if let Ok((next, _)) = current.step(self.env, *p, d) {
                current = next;
            }
        }
        current
    }
}

fn reindex(e: Error, index: usize) -> Error {
    match e {
        Error::Infeasible { reason, .. } => Error::Infeasible { index, reason },
        Error::OutsideDomain { .. } => Error::OutsideDomain { index },
        other => other,
    }
}
