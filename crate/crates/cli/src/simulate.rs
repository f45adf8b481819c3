//! Path simulation with checkpoints, shared by `simulate` and `ladder`.

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError};
use crate::run::RunDir;
use crate::sample::{draw_all, Prepared};
use ibm_core::diagnostics::DiagnosticsReport;
use ibm_core::dynamics::{EventKind, PathRecord, SchemeParams, Simulation};
use ibm_core::io::{path_from_parts, read_configuration_csv, read_path_csv, write_path_csv, ReplicaEntry};
use ibm_core::pointfields::ModelSpec;
use ibm_core::stats::mean_se;
use ibm_core::{Configuration, SeedSpec};
use rayon::prelude::*;
use std::time::Instant;

/// Run-wide options that are not part of the physics.
#[derive(Clone, Copy, Debug, Default)]
pub struct Control {
    pub checkpoint_every: u64,
    /// Stop every replica after this many steps, leaving checkpoints.
    pub halt_after: Option<u64>,
}

pub const UPPER_NOTE: &str = "upper scheme: births are drawn from a reservoir shell outside S_R \
refreshed each step at the boundary intensity and thinned by the field's insertion weight; \
particles leaving S_R die";

/// Initial configurations, one per replica: a shared file or sampler draws.
pub fn initial_configurations(config: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Vec<Configuration>, CliError> {
    let model = config.model()?;
    let n = config.seeds.replicas;
    if let Some(path) = &config.init_file {
        let f = std::fs::File::open(path).map_err(io_err(path))?;
        let c = read_configuration_csv(f, 0.0)?;
        if c.dim() != model.dim() {
            return Err(CliError::Config(format!("{} is {}-d but the model is {}-d", path.display(), c.dim(), model.dim())));
        }
        return Ok(vec![c; n as usize]);
    }
    let cfg = config.sampler.as_ref().ok_or_else(|| CliError::Config("missing [sampler] block".into()))?;
    let prepared = Prepared::new(model, cfg)?;
    draw_all(pool, model, &prepared, config.seeds.master, n)
}

fn checkpoint_name(prefix: &str, i: u32) -> String {
    format!("{prefix}_{i:04}.checkpoint.json")
}

/// One replica in `dir`: resumes from a checkpoint or a finished sidecar
/// when present. Returns `None` when halted.
#[allow(clippy::too_many_arguments)]
fn run_replica(
    dir: &RunDir,
    prefix: &str,
    i: u32,
    init: &Configuration,
    model: &ModelSpec,
    params: &SchemeParams,
    seed: SeedSpec,
    control: Control,
) -> Result<Option<(ReplicaEntry, PathRecord)>, CliError> {
    let csv_name = format!("{prefix}_{i:04}.csv");
    let sidecar = dir.file(&format!("{prefix}_{i:04}.json"));
    let ck = dir.file(&checkpoint_name(prefix, i));
    if sidecar.exists() && !ck.exists() {
        let entry: ReplicaEntry = serde_json::from_str(&std::fs::read_to_string(&sidecar).map_err(io_err(&sidecar))?)
            .map_err(|e| CliError::Config(format!("{}: {e}", sidecar.display())))?;
        let p = dir.file(&csv_name);
        let (dim, frames) = read_path_csv(std::fs::File::open(&p).map_err(io_err(&p))?)?;
        let rec = path_from_parts(&model.name(), &entry, dim, frames)?;
        return Ok(Some((entry, rec)));
    }
    let wrap = |source| CliError::Replica { replica: i, seed, source };
    let mut sim = if ck.exists() {
        Simulation::from_checkpoint(&std::fs::read_to_string(&ck).map_err(io_err(&ck))?).map_err(wrap)?
    } else {
        let bounded = ibm_core::geometry::restrict(init, params.radius + params.cutoff.s + 1.0, false);
        let init = Configuration::with_frozen_exterior(init.dim(), bounded.points().to_vec(), params.radius).map_err(wrap)?;
        Simulation::new(&init, model, params, seed).map_err(wrap)?
    };
    let horizon = params.n_steps();
    let start = Instant::now();
    let first = sim.step_index();
    while !sim.is_done() {
        let mut target = horizon;
        if control.checkpoint_every > 0 {
            target = target.min((sim.step_index() / control.checkpoint_every + 1) * control.checkpoint_every);
        }
        if let Some(h) = control.halt_after {
            target = target.min(h.max(sim.step_index()));
        }
        sim.run_until(target).map_err(wrap)?;
        if sim.is_done() {
            break;
        }
        if control.checkpoint_every > 0 || control.halt_after.is_some() {
            std::fs::write(&ck, sim.to_checkpoint().map_err(wrap)?).map_err(io_err(&ck))?;
        }
        if control.halt_after.is_some_and(|h| sim.step_index() >= h) {
            return Ok(None);
        }
    }
    let steps = sim.step_index() - first;
    let secs = start.elapsed().as_secs_f64();
    eprintln!(
        "{prefix} replica {i}: {steps} steps in {secs:.2} s ({:.0} steps/s)",
        steps as f64 / secs.max(1e-9)
    );
    let guards = sim.guards();
    let rec = sim.into_record();
    let mut w = dir.create_file(&csv_name)?;
    write_path_csv(&mut w, &rec)?;
    let entry = ReplicaEntry {
        replica: i,
        file: csv_name,
        events: rec.events.clone(),
        scheme: Some(rec.scheme),
        radius: Some(rec.radius),
        guards: Some(serde_json::to_value(guards).map_err(ibm_core::Error::from)?),
    };
    let json = serde_json::to_string_pretty(&entry).map_err(ibm_core::Error::from)?;
    std::fs::write(&sidecar, json).map_err(io_err(&sidecar))?;
    if ck.exists() {
        std::fs::remove_file(&ck).map_err(io_err(&ck))?;
    }
    Ok(Some((entry, rec)))
}

/// All replicas of one scheme into `dir`; `None` when halted.
#[allow(clippy::too_many_arguments)]
pub fn run_replicas(
    pool: &rayon::ThreadPool,
    dir: &RunDir,
    prefix: &str,
    inits: &[Configuration],
    model: &ModelSpec,
    params: &SchemeParams,
    master: u64,
    control: Control,
) -> Result<Option<Vec<(ReplicaEntry, PathRecord)>>, CliError> {
    let out: Vec<Result<Option<(ReplicaEntry, PathRecord)>, CliError>> = pool.install(|| {
        inits
            .par_iter()
            .enumerate()
            .map(|(i, init)| run_replica(dir, prefix, i as u32, init, model, params, SeedSpec::new(master, i as u32), control))
            .collect()
    });
    let done: Vec<Option<(ReplicaEntry, PathRecord)>> = out.into_iter().collect::<Result<_, _>>()?;
    Ok(done.into_iter().collect())
}

pub fn summary(report: &mut DiagnosticsReport, paths: &[PathRecord], master: u64) {
    let n = paths.len();
    let seeds = (master, 0, n as u32);
    let finals: Vec<f64> = paths.iter().filter_map(|p| p.last()).map(|f| f.movable_count() as f64).collect();
    let (m, se) = mean_se(&finals);
    report.stat_seeded("final movable count", m, Some(se), n, seeds);
    let count = |k: EventKind| paths.iter().flat_map(|p| &p.events).filter(|e| e.kind == k).count() as f64;
    report.stat_seeded("births", count(EventKind::Birth), None, n, seeds);
    report.stat_seeded("deaths", count(EventKind::Death), None, n, seeds);
    report.stat_seeded("freezes", count(EventKind::Freeze), None, n, seeds);
}

pub fn cmd_simulate(config: &ExperimentConfig, pool: &rayon::ThreadPool, halt_after: Option<u64>) -> Result<Option<DiagnosticsReport>, CliError> {
    let model = config.model()?;
    let scheme = config.scheme.as_ref().ok_or_else(|| CliError::Config("missing [scheme] block".into()))?;
    let params = scheme.params()?;
    let dir = RunDir::create("simulate", config)?;
    let inits = initial_configurations(config, pool)?;
    let control = Control { checkpoint_every: scheme.checkpoint_every, halt_after };
    let Some(done) = run_replicas(pool, &dir, "path", &inits, model, &params, config.seeds.master, control)? else {
        eprintln!("halted; resume with `ibm simulate --resume {}`", dir.path.display());
        return Ok(None);
    };
    let (entries, paths): (Vec<_>, Vec<_>) = done.into_iter().unzip();
    let note = (params.scheme == ibm_core::dynamics::Scheme::Upper).then(|| UPPER_NOTE.to_string());
    dir.write_manifest("simulate", config, model, entries, note)?;
    let mut report = DiagnosticsReport::new(format!("simulate {} ({})", params.scheme.name(), model.name()));
    summary(&mut report, &paths, config.seeds.master);
    dir.write_report(&report)?;
    eprintln!("wrote {} paths to {}", paths.len(), dir.path.display());
    Ok(Some(report))
}
