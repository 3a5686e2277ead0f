//! Gradient ascent over sensor directions and boundary positions, with
//! intermittent-diffusion restarts for global search.

mod evaluator;
pub mod init;
mod placement;
pub mod symmetry;

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use evaluator::Evaluator;
pub use placement::{Constraint, FreeParam, Placement};
pub use symmetry::SymmetryTemplate;

/// RNG stream used by the optimizer; initialization draws from stream 0.
pub const OPTIMIZER_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IDConfig {
    /// Number of diffusion/ascent iterations after the first ascent.
    pub iterations: usize,
    /// Diffusion strength scale for angular coordinates.
    pub alpha: f64,
    /// Diffusion strength scale for boundary coordinates.
    pub alpha_location: f64,
    /// Diffusion time scale.
    pub gamma: f64,
    /// Time step of the Euler and Euler–Maruyama updates.
    pub k: f64,
    pub h_v: f64,
    pub h_x: f64,
    /// Cap on the drift displacement of any coordinate per step.
    pub max_drift: f64,
    /// Absolute tolerance on the objective change; `None` scales with the
    /// weighted free-space measure.
    pub grad_tol: Option<f64>,
    pub grad_max_iters: usize,
    pub seed: u64,
}

impl IDConfig {
    /// Defaults tied to the grid spacing `h`.
    pub fn for_grid(h: f64) -> IDConfig {
        let alpha = FRAC_PI_4;
        IDConfig {
            iterations: 20,
            alpha,
            alpha_location: alpha * 0.25,
            gamma: 20.0 * 0.1,
            k: 0.1,
            h_v: 4.0 * h,
            h_x: h,
            max_drift: h,
            grad_tol: None,
            grad_max_iters: 500,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("alpha_location", self.alpha_location),
            ("gamma", self.gamma),
            ("k", self.k),
            ("h_v", self.h_v),
            ("h_x", self.h_x),
            ("max_drift", self.max_drift),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("optimizer.{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.grad_tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("optimizer.grad_tol must be positive, got {t}")));
            }
        }
        if self.grad_max_iters == 0 {
            return Err(Error::Config("optimizer.grad_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub candidate: f64,
    pub best: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub initial: f64,
    pub rows: Vec<TraceRow>,
    /// Objective after every accepted ascent step, per iteration.
    pub ascent_values: Vec<Vec<f64>>,
}

impl RunTrace {
    /// Deterministic part of the trace: `iter,candidate,best`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,candidate,best\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", r.iteration, r.candidate, r.best));
        }
        out
    }

    /// Wall-clock seconds per iteration, kept apart so the trace proper is
    /// reproducible byte for byte.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("iter,seconds\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.6}\n", r.iteration, r.seconds));
        }
        out
    }

    pub fn best_is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].best >= w[0].best)
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub placement: Placement,
    pub value: f64,
    pub converged: bool,
    pub steps: usize,
    pub history: Vec<f64>,
}

/// Scale `k·g` so that no coordinate moves further than `max_drift`.
fn clipped_drift(g: &[f64], k: f64, max_drift: f64) -> Vec<f64> {
    let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) * k;
    let s = if peak > max_drift { max_drift / peak } else { 1.0 };
    g.iter().map(|v| v * k * s).collect()
}

impl Evaluator<'_> {
    fn tolerance(&self, config: &IDConfig) -> f64 {
        config.grad_tol.unwrap_or(1e-6 * self.objective.free_measure().max(f64::MIN_POSITIVE))
    }

    /// Euler ascent `θ ← θ + η·g` until the objective changes by less than
    /// the tolerance for three consecutive steps. Steps that lower the
    /// objective are rejected and halve `η`; accepted steps double it. The
    /// displacement of every coordinate is capped by `max_drift`.
    pub fn gradient_ascent(&self, start: &Placement, config: &IDConfig) -> Result<AscentResult> {
        let tol = self.tolerance(config);
        let mut current = start.clone();
        let mut value = self.value(&current)?;
        let mut history = vec![value];
        let mut eta = config.k;
        let mut quiet = 0;
        let mut steps = 0;
        let mut converged = current.free_params().is_empty();
        while !converged && steps < config.grad_max_iters {
            steps += 1;
            let g: Vec<f64> = self
                .gradient_parts(&current, config.h_v, config.h_x)?
                .into_iter()
                .map(|g| g.unwrap_or(0.0))
                .collect();
            let drift = clipped_drift(&g, eta, config.max_drift);
            let mut change = 0.0;
            if drift.iter().any(|d| *d != 0.0) {
                let mut next = self.apply(&current, &drift);
                next.canonicalize();
                match self.value(&next) {
                    Ok(v) if v >= value => {
                        change = v - value;
                        current = next;
                        value = v;
                        history.push(v);
                        eta = (eta * 2.0).min(1e12);
                    }
                    _ => eta *= 0.5,
                }
            }
            if change.abs() < tol {
                quiet += 1;
                converged = quiet >= 3;
            } else {
                quiet = 0;
            }
        }
        current.canonicalize();
        Ok(AscentResult {
            placement: current,
            value,
            converged,
            steps,
            history,
        })
    }

    /// Euler–Maruyama segment `θ ← θ + k·g + σ√k·ξ` for `⌈T/k⌉` steps.
    /// Angular coordinates use `sigma`, boundary coordinates
    /// `sigma·alpha_location/alpha`. Noise is drawn for every coordinate in
    /// parameter order each step, whether or not the update is accepted.
    pub fn sde_segment<R: Rng>(
        &self,
        start: &Placement,
        sigma: f64,
        duration: f64,
        config: &IDConfig,
        rng: &mut R,
    ) -> Result<Placement> {
        let steps = if duration > 0.0 { (duration / config.k).ceil() as usize } else { 0 };
        let loc_ratio = config.alpha_location / config.alpha;
        let sqrt_k = config.k.sqrt();
        let mut current = start.clone();
        for _ in 0..steps {
            let params = current.free_params();
            if params.is_empty() {
                break;
            }
            let g: Vec<f64> = self
                .gradient_parts(&current, config.h_v, config.h_x)?
                .into_iter()
                .map(|g| g.unwrap_or(0.0))
                .collect();
            let mut delta = clipped_drift(&g, config.k, config.max_drift);
            for (d, p) in delta.iter_mut().zip(&params) {
                let xi: f64 = rng.sample(StandardNormal);
                let s = if p.is_angular() { sigma } else { sigma * loc_ratio };
                *d += s * sqrt_k * xi;
            }
            let mut next = self.apply(&current, &delta);
            next.canonicalize();
            // interpolated ψ can disagree with the exact feasibility test
            // right next to a wall; such a step is dropped
            if self.value(&next).is_ok() {
                current = next;
            }
        }
        Ok(current)
    }

    /// Ascent from the initial placement, then `iterations` rounds of
    /// diffusion followed by ascent, keeping a candidate only on strict
    /// improvement.
    pub fn intermittent_diffusion(&self, initial: &Placement, config: &IDConfig) -> Result<(AscentResult, RunTrace)> {
        config.validate()?;
        initial.validate(self.env)?;
        let clock = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(OPTIMIZER_STREAM);

        let mut trace = RunTrace {
            initial: self.value(initial)?,
            ..RunTrace::default()
        };
        let mut best = self.gradient_ascent(initial, config)?;
        trace.ascent_values.push(best.history.clone());
        trace.rows.push(TraceRow {
            iteration: 0,
            candidate: best.value,
            best: best.value,
            seconds: clock.elapsed().as_secs_f64(),
        });
        for iteration in 1..=config.iterations {
            let d: f64 = rng.random();
            let t: f64 = rng.random();
            let start = self.sde_segment(&best.placement, config.alpha * d, config.gamma * t, config, &mut rng)?;
            let candidate = self.gradient_ascent(&start, config)?;
            trace.ascent_values.push(candidate.history.clone());
            let candidate_value = candidate.value;
            if candidate.value > best.value {
                best = candidate;
            }
            trace.rows.push(TraceRow {
                iteration,
                candidate: candidate_value,
                best: best.value,
                seconds: clock.elapsed().as_secs_f64(),
            });
        }
        Ok((best, trace))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_is_clipped_uniformly() {
        let d = clipped_drift(&[1.0, -4.0], 1.0, 0.5);
        assert!((d[0] - 0.125).abs() < 1e-15 && (d[1] + 0.5).abs() < 1e-15);
        let d = clipped_drift(&[0.1, 0.2], 0.1, 0.5);
        assert!((d[1] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn trace_csv_is_fixed_format() {
        let t = RunTrace {
            initial: 0.0,
            rows: vec![TraceRow { iteration: 0, candidate: 0.5, best: 0.5, seconds: 1.0 }],
            ascent_values: vec![],
        };
        assert_eq!(t.to_csv(), "iter,candidate,best\n0,5.00000000000000000e-1,5.00000000000000000e-1\n");
    }
}
