//! `ladder`: lower scheme over increasing radii, the reference at a large
//! radius and optionally the upper scheme, all from the same initial
//! samples and seeds, followed by the distance ladder.

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError};
use crate::run::RunDir;
use crate::simulate::{initial_configurations, run_replicas, summary, Control, UPPER_NOTE};
use crate::verify::{ladder_report, LoadedRun};
use ibm_core::diagnostics::DiagnosticsReport;
use ibm_core::dynamics::Scheme;

pub fn cmd_ladder(config: &ExperimentConfig, pool: &rayon::ThreadPool, halt_after: Option<u64>) -> Result<Option<DiagnosticsReport>, CliError> {
    let model = config.model()?;
    let scheme = config.scheme.as_ref().ok_or_else(|| CliError::Config("missing [scheme] block".into()))?;
    let ladder = config.ladder.clone().unwrap_or_default();
    let base = scheme.params()?;
    let dir = RunDir::create("ladder", config)?;
    let inits = initial_configurations(config, pool)?;
    let control = Control { checkpoint_every: scheme.checkpoint_every, halt_after };

    let mut legs: Vec<(Scheme, f64)> = ladder.radii.iter().map(|&r| (Scheme::Lower, r)).collect();
    if ladder.upper {
        legs.push((Scheme::Upper, *ladder.radii.last().unwrap()));
    }
    legs.push((Scheme::Reference, ladder.reference_radius));

    let mut runs = Vec::new();
    let mut halted = false;
    let mut report = DiagnosticsReport::new(format!("scheme ladder ({})", model.name()));
    for (kind, radius) in legs {
        let name = format!("{}-R{radius}", kind.name());
        let sub = RunDir { path: dir.path.join(&name), run_id: format!("{}/{name}", dir.run_id) };
        std::fs::create_dir_all(&sub.path).map_err(io_err(&sub.path))?;
        let mut params = base.clone();
        params.scheme = kind;
        params.radius = radius;
        params.validate()?;
        let Some(done) = run_replicas(pool, &sub, "path", &inits, model, &params, config.seeds.master, control)? else {
            halted = true;
            continue;
        };
        let (entries, paths): (Vec<_>, Vec<_>) = done.into_iter().unzip();
        let note = (kind == Scheme::Upper).then(|| UPPER_NOTE.to_string());
        let manifest = sub.write_manifest("ladder", config, model, entries, note)?;
        let mut leg = DiagnosticsReport::new(format!("{name} ({})", model.name()));
        summary(&mut leg, &paths, config.seeds.master);
        sub.write_report(&leg)?;
        runs.push(LoadedRun { name, manifest, paths });
    }
    if halted {
        eprintln!("halted; resume with `ibm ladder --resume {}`", dir.path.display());
        return Ok(None);
    }
    ladder_report(&mut report, &runs, &config.diagnostics())?;
    report.provenance = runs
        .iter()
        .map(|r| serde_json::to_value(&r.manifest))
        .collect::<Result<_, _>>()
        .map_err(ibm_core::Error::from)?;
    dir.write_manifest("ladder", config, model, vec![], None)?;
    dir.write_report(&report)?;
    eprintln!("wrote ladder to {}", dir.path.display());
    Ok(Some(report))
}
