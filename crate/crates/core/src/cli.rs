//! Command line front end: solve, evaluate, map and check placements.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::field::{FieldRole, ScalarField};
use crate::io::{load_placement, write_file, write_placement};
use crate::objective::{overlap_count, Objective, ObjectiveValue};
use crate::optimizer::{Evaluator, Placement};
use crate::oracle::oracle_coverage_check;
use crate::scenario::{preset_scenarios, Scenario};
use crate::visibility::{self, union_coverage};

/// Marker present in the output directory while `solve` is running.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

#[derive(Debug, Parser)]
#[command(name = "sensorplace", version, about = "Optimize the placement of limited-view sensors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run intermittent diffusion from the scenario's initial placement.
    Solve {
        /// Scenario file, or `preset:<name>`.
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the number of diffusion iterations.
        #[arg(long)]
        iterations: Option<usize>,
        /// Also write ψ and every per-sensor φ.
        #[arg(long)]
        dump_fields: bool,
    },
    /// Print the objective of a placement.
    Evaluate { scenario: String, placement: PathBuf },
    /// Write union-coverage and overlap-count maps of a placement.
    CoverageMap {
        scenario: String,
        placement: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compare the level-set coverage of every sensor with ray casting.
    OracleCheck {
        scenario: String,
        placement: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List the built-in scenes.
    Presets,
}

/// Load a scenario from a path or from `preset:<name>`.
pub fn load_scenario(arg: &str) -> Result<Scenario> {
    match arg.strip_prefix("preset:") {
        Some(name) => crate::scenario::preset(name),
        None => Scenario::from_file(Path::new(arg)),
    }
}

/// Everything an evaluation needs, built once per invocation.
pub struct Session {
    pub scenario: Scenario,
    pub env: Environment,
    pub psi: ScalarField,
    pub objective: Objective,
}

impl Session {
    pub fn new(scenario: Scenario) -> Result<Session> {
        let env = scenario.environment()?;
        let psi = env.build_signed_distance();
        let spec = scenario.objective_spec(&env, &psi)?;
        let objective = Objective::new(&psi, spec)?;
        Ok(Session {
            scenario,
            env,
            psi,
            objective,
        })
    }

    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(&self.env, &self.psi, &self.objective)
    }

    pub fn evaluate(&self, placement: &Placement) -> Result<(ObjectiveValue, Vec<ScalarField>)> {
        self.evaluator().evaluate(placement)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_maps(dir: &Path, fields: &[ScalarField]) -> Result<()> {
    if fields.is_empty() {
        return Ok(());
    }
    let union = union_coverage(fields)?;
    let overlap = overlap_count(fields)?;
    let peak = overlap.values.iter().fold(1.0f64, |m, v| m.max(*v));
    union.write_grid_text(&dir.join("union.grid"))?;
    union.write_pgm(&dir.join("union.pgm"), -union.grid.h, union.grid.h)?;
    overlap.write_grid_text(&dir.join("overlap.grid"))?;
    overlap.write_pgm(&dir.join("overlap.pgm"), 0.0, peak)
}

fn report_value(out: &mut impl Write, v: &ObjectiveValue) -> std::io::Result<()> {
    writeln!(out, "mode={:?} value={:.10} hard={:.10}", v.mode, v.value, v.hard_value)
}

/// Execute a parsed command, printing to `out`.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    let stdout_err = |e: std::io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Presets => {
            for (name, summary) in preset_scenarios() {
                writeln!(out, "{name:<14} {summary}").map_err(stdout_err)?;
            }
            Ok(())
        }
        Command::Evaluate { scenario, placement } => {
            let session = Session::new(load_scenario(&scenario)?)?;
            let placement = load_placement(&session.env, &placement)?;
            let (value, _) = session.evaluate(&placement)?;
            report_value(out, &value).map_err(stdout_err)
        }
        Command::CoverageMap { scenario, placement, out: dir } => {
            let session = Session::new(load_scenario(&scenario)?)?;
            let placement = load_placement(&session.env, &placement)?;
            let (value, fields) = session.evaluate(&placement)?;
            create_dir(&dir)?;
            write_maps(&dir, &fields)?;
            report_value(out, &value).map_err(stdout_err)
        }
        Command::OracleCheck { scenario, placement, out: dir } => {
            let session = Session::new(load_scenario(&scenario)?)?;
            let placement = load_placement(&session.env, &placement)?;
            let resolved = placement.resolve(&session.env)?;
            let mut mask = ScalarField::filled(session.env.grid(), 0.0, FieldRole::Count);
            let (mut agree, mut disagree) = (0, 0);
            for (i, s) in resolved.iter().enumerate() {
                let phi = visibility::compute_coverage(&session.psi, s)?;
                let r = oracle_coverage_check(&session.env, s, &phi)?;
                writeln!(
                    out,
                    "sensor={i} agree={} disagree={} excluded={} agreement={:.6} area={:.6} band={:.6}",
                    r.agree,
                    r.disagree,
                    r.excluded,
                    r.agreement(),
                    r.area,
                    r.half_width
                )
                .map_err(stdout_err)?;
                agree += r.agree;
                disagree += r.disagree;
                for (m, v) in mask.values.iter_mut().zip(&r.mask.values) {
                    *m = m.max(*v);
                }
            }
            let total = agree + disagree;
            let rate = if total == 0 { 1.0 } else { agree as f64 / total as f64 };
            writeln!(out, "total agree={agree} disagree={disagree} agreement={rate:.6}").map_err(stdout_err)?;
            create_dir(&dir)?;
            mask.write_grid_text(&dir.join("oracle_mask.grid"))?;
            mask.write_pgm(&dir.join("oracle_mask.pgm"), 0.0, 1.0)
        }
        Command::Solve {
            scenario,
            seed,
            out: dir,
            iterations,
            dump_fields,
        } => {
            let mut scenario = load_scenario(&scenario)?;
            if let Some(s) = seed {
                scenario.seed = s;
            }
            if let Some(n) = iterations {
                scenario.optimizer.iterations = Some(n);
            }
            scenario.output.dump_fields |= dump_fields;
            solve(scenario, &dir, out)
        }
    }
}

/// Run the optimizer and write the declared artifacts into `dir`.
pub fn solve(scenario: Scenario, dir: &Path, out: &mut impl Write) -> Result<()> {
    create_dir(dir)?;
    let marker = dir.join(INCOMPLETE_MARKER);
    write_file(&marker, "run in progress or failed\n")?;
    let session = Session::new(scenario)?;
    let config = session.scenario.id_config();
    let initial = session.scenario.initial_placement(&session.env, session.scenario.seed)?;
    write_file(&dir.join("scenario.normalized.toml"), session.scenario.dump())?;
    write_file(&dir.join("initial.toml"), write_placement(&session.env, &initial)?)?;

    let evaluator = session.evaluator();
    let (best, trace) = evaluator.intermittent_diffusion(&initial, &config)?;
    let (_, fields) = evaluator.evaluate(&best.placement)?;

    write_file(&dir.join("placement.toml"), write_placement(&session.env, &best.placement)?)?;
    write_file(&dir.join("trace.csv"), trace.to_csv())?;
    write_file(&dir.join("timing.csv"), trace.timing_csv())?;
    write_maps(dir, &fields)?;
    if session.scenario.output.dump_fields {
        session.psi.write_grid_text(&dir.join("psi.grid"))?;
        for (i, f) in fields.iter().enumerate() {
            f.write_grid_text(&dir.join(format!("phi_{i}.grid")))?;
        }
    }
    std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    writeln!(out, "initial={:.10} final={:.10}", trace.initial, best.value).map_err(|e| Error::io("<stdout>", e))
}
