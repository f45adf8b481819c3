//! `verify`: diagnostics over stored runs, and the scheme-distance ladder
//! shared with `ladder`.

use crate::config::{Check, DiagnosticsConfig, ExperimentConfig};
use crate::error::{io_err, CliError};
use crate::run::{read_manifest, RunDir};
use ibm_core::diagnostics::{
    a4_liminf_sequence, check_a4, invariance_test, min_gap, model_intensity, moment4_check, nbj_index, scheme_distance,
    DiagnosticsReport, Pairing, Rule,
};
use ibm_core::dynamics::{PathRecord, Scheme};
use ibm_core::io::{path_from_parts, read_path_csv, Manifest};
use ibm_core::pointfields::ModelSpec;
use ibm_core::{SeedSpec, Window};
use std::path::Path;

pub struct LoadedRun {
    pub name: String,
    pub manifest: Manifest,
    pub paths: Vec<PathRecord>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun, CliError> {
    let manifest = read_manifest(dir)?;
    let model = manifest.model.name();
    let mut paths = Vec::with_capacity(manifest.files.len());
    for entry in &manifest.files {
        let p = dir.join(&entry.file);
        let (dim, frames) = read_path_csv(std::fs::File::open(&p).map_err(io_err(&p))?)?;
        paths.push(path_from_parts(&model, entry, dim, frames)?);
    }
    if paths.is_empty() {
        return Err(CliError::Config(format!("{} holds no paths", dir.display())));
    }
    let name = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(LoadedRun { name, manifest, paths })
}

fn seeds_of(run: &LoadedRun) -> (u64, u32, u32) {
    (run.manifest.master_seed, 0, run.paths.len() as u32)
}

fn last_time(paths: &[PathRecord]) -> f64 {
    paths.iter().filter_map(|p| p.last()).map(|f| f.time).fold(f64::INFINITY, f64::min)
}

/// Distances of every run to the last one, with the ladder verdicts: the
/// non-upper runs strictly decreasing in the given order, and each upper
/// run agreeing with the lower run of the same radius.
pub fn ladder_report(
    report: &mut DiagnosticsReport,
    runs: &[LoadedRun],
    diag: &DiagnosticsConfig,
) -> Result<(), CliError> {
    let (reference, ladder) = runs.split_last().ok_or_else(|| CliError::Config("scheme-ladder needs runs".into()))?;
    if ladder.is_empty() {
        return Err(CliError::Config("scheme-ladder needs at least one run besides the reference".into()));
    }
    for r in ladder {
        if r.manifest.model != reference.manifest.model {
            return Err(CliError::Config(format!(
                "model mismatch: {} is {} but the reference {} is {}",
                r.name,
                r.manifest.model.name(),
                reference.name,
                reference.manifest.model.name()
            )));
        }
    }
    let t = diag.eval_time.unwrap_or_else(|| runs.iter().map(|r| last_time(&r.paths)).fold(f64::INFINITY, f64::min));
    let min_radius = runs.iter().flat_map(|r| &r.paths).map(|p| p.radius).fold(f64::INFINITY, f64::min);
    let window = diag.distance_window.unwrap_or(0.5 * min_radius);
    let mut lower_chain = Vec::new();
    for r in ladder {
        let paired = r.manifest.master_seed == reference.manifest.master_seed && r.paths.len() == reference.paths.len();
        let pairing = if paired { Pairing::Paired } else { Pairing::Independent };
        let d = scheme_distance(&r.paths, &reference.paths, window, t, pairing, SeedSpec::new(reference.manifest.master_seed, 0))?;
        let key = format!("W1[{}]", r.name);
        report.stat_seeded(key.clone(), d.w1, Some(d.w1_se), d.n_a, seeds_of(r));
        report.stat_seeded(format!("intensity gap[{}]", r.name), d.intensity_gap, Some(d.intensity_gap_se), d.n_a, seeds_of(r));
        let scheme = r.paths[0].scheme;
        if scheme == Scheme::Upper {
            let radius = r.paths[0].radius;
            if let Some(l) = ladder.iter().find(|l| l.paths[0].scheme == Scheme::Lower && l.paths[0].radius == radius) {
                report.verdict(
                    format!("upper and lower agree at R={radius}"),
                    Rule::Agree { a: key.clone(), b: format!("W1[{}]", l.name), k: diag.equality_se },
                );
            }
        } else {
            lower_chain.push(key);
        }
    }
    if lower_chain.len() >= 2 {
        report.verdict("distance to reference strictly decreasing", Rule::StrictlyDecreasing { stats: lower_chain });
    }
    report.notes.push(format!("distances at t={t}, intensity window {window}, reference {}", reference.name));
    Ok(())
}

fn sampling_window(model: &ModelSpec, radius: f64) -> Window {
    match model {
        ModelSpec::Bessel { .. } => Window::Interval { lo: 0.0, hi: radius },
        m => Window::Ball { dim: m.dim(), radius },
    }
}

fn analysis_window(model: &ModelSpec, radius: f64, reach: f64, given: Option<f64>) -> Result<Window, CliError> {
    let half = given.unwrap_or(radius - reach - 0.5);
    if !(half > 0.0) {
        return Err(CliError::Config(format!("no room for an analysis window inside R={radius} with bins up to {reach}")));
    }
    Ok(match model {
        ModelSpec::Bessel { .. } => Window::Interval { lo: reach, hi: (reach + 2.0 * half).min(radius - reach) },
        m => Window::Ball { dim: m.dim(), radius: half },
    })
}

fn check_runs(report: &mut DiagnosticsReport, check: Check, run: &LoadedRun, diag: &DiagnosticsConfig) -> Result<(), CliError> {
    let paths = &run.paths;
    let model = &run.manifest.model;
    let radius = paths[0].radius;
    let n = paths.len();
    let t_last = last_time(paths);
    let tag = |s: &str| format!("{s}[{}]", run.name);
    match check {
        Check::Invariance => {
            let edges = &diag.bin_edges;
            let reach = edges.last().copied().unwrap_or(0.0);
            let analysis = analysis_window(model, radius, reach, diag.analysis_window)?;
            let times = paths[0].times();
            let checkpoints = if diag.checkpoints.is_empty() {
                vec![times[times.len() / 2], *times.last().unwrap()]
            } else {
                diag.checkpoints.clone()
            };
            let sub = invariance_test(paths, &checkpoints, &sampling_window(model, radius), &analysis, edges, diag.equality_se)?;
            report.statistics.extend(sub.statistics.into_iter().map(|mut s| {
                s.name = tag(&s.name);
                s
            }));
            for v in sub.verdicts {
                let renamed = rename_rule(v.rule, &tag);
                report.verdict(format!("{} [{}]", v.name, run.name), renamed);
            }
        }
        Check::Moment => {
            let spacing = paths[0].times().windows(2).next().map_or(0.0, |w| w[1] - w[0]);
            if !(spacing > 0.0) {
                return Err(CliError::Config(format!("{} has fewer than two frames", run.name)));
            }
            let mut lags: Vec<f64> = diag
                .lags
                .iter()
                .map(|l| (l / spacing).round().max(1.0) * spacing)
                .filter(|l| *l <= 0.5 * t_last + 1e-12)
                .collect();
            lags.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            let fit = moment4_check(paths, &lags, diag.tag_radius.unwrap_or(0.5 * radius))?;
            report.stat(tag("moment slope"), fit.slope, Some(fit.slope_se), n);
            for (l, (m, se)) in fit.lags.iter().zip(fit.moments.iter().zip(&fit.moment_se)) {
                report.stat(tag(&format!("E|dX|^4 at lag {l}")), *m, Some(*se), n);
            }
            let [lo, hi] = diag.slope_range;
            report.verdict(format!("moment slope in [{lo}, {hi}] [{}]", run.name), Rule::InRange { stat: tag("moment slope"), lo, hi });
        }
        Check::LocalTime => {
            let mut checked = 0usize;
            let mut worst = 0.0f64;
            for p in paths {
                let Some(first) = p.first() else { continue };
                for q in first.particles.iter().filter(|q| !q.frozen) {
                    if p.max_modulus(q.label) < p.radius - diag.boundary_margin {
                        checked += 1;
                        let lt = p.frames.iter().rev().find_map(|f| f.get(q.label)).map_or(0.0, |s| s.local_time);
                        worst = worst.max(lt);
                    }
                }
            }
            report.stat(tag("interior particles"), checked as f64, None, n);
            report.stat(tag("interior local time max"), worst, None, n);
            report.verdict(
                format!("local time vanishes away from the boundary [{}]", run.name),
                Rule::Close { stat: tag("interior local time max"), target: 0.0, tol: 0.0 },
            );
        }
        Check::Nbj => {
            let idx = paths.iter().map(|p| nbj_index(p, 0.5 * radius, t_last)).max().unwrap_or(0);
            report.stat(tag("nbj index"), idx as f64, None, n);
            report.verdict(format!("finitely many labels enter S_{} [{}]", 0.5 * radius, run.name), Rule::Finite { stat: tag("nbj index") });
        }
        Check::MinGap => {
            let half_line = matches!(model, ModelSpec::Bessel { .. });
            let g = paths.iter().map(|p| min_gap(p, half_line)).fold(f64::INFINITY, f64::min);
            report.stat(tag("min gap"), g, None, n);
            report.verdict(format!("no collisions [{}]", run.name), Rule::AtLeast { stat: tag("min gap"), bound: f64::MIN_POSITIVE });
        }
        Check::A4 | Check::SchemeLadder => unreachable!("handled by the caller"),
    }
    Ok(())
}

fn rename_rule(rule: Rule, f: &impl Fn(&str) -> String) -> Rule {
    match rule {
        Rule::WithinSe { stat, target, k } => Rule::WithinSe { stat: f(&stat), target, k },
        Rule::Agree { a, b, k } => Rule::Agree { a: f(&a), b: f(&b), k },
        Rule::Close { stat, target, tol } => Rule::Close { stat: f(&stat), target, tol },
        Rule::InRange { stat, lo, hi } => Rule::InRange { stat: f(&stat), lo, hi },
        Rule::AtLeast { stat, bound } => Rule::AtLeast { stat: f(&stat), bound },
        Rule::AtMost { stat, bound } => Rule::AtMost { stat: f(&stat), bound },
        Rule::StrictlyDecreasing { stats } => Rule::StrictlyDecreasing { stats: stats.iter().map(|s| f(s)).collect() },
        Rule::NonIncreasingWithinSe { stats, k } => {
            Rule::NonIncreasingWithinSe { stats: stats.iter().map(|s| f(s)).collect(), k }
        }
        Rule::Finite { stat } => Rule::Finite { stat: f(&stat) },
    }
}

fn check_a4_report(report: &mut DiagnosticsReport, model: &ModelSpec, diag: &DiagnosticsConfig) -> Result<(), CliError> {
    let intensity = model_intensity(model)
        .ok_or_else(|| CliError::Config(format!("no closed-form intensity for {}; the a4 check needs one", model.name())))?;
    let (r, t) = (diag.a4_radius, diag.a4_horizon);
    let value = match check_a4(intensity, r, t, model.dim()) {
        Ok(v) => v,
        Err(ibm_core::Error::A4Violation { partial_sum, shells }) => {
            report.notes.push(format!("a4 integral diverged: partial sum {partial_sum:e} after {shells} shells"));
            f64::INFINITY
        }
        Err(e) => return Err(e.into()),
    };
    report.stat("a4 integral", value, None, 1);
    report.verdict(format!("a4 integral finite (r={r}, T={t})"), Rule::Finite { stat: "a4 integral".into() });
    if let Some(rho) = model.intensity(&ibm_core::Point::d1(1.0)).filter(|_| !matches!(model, ModelSpec::Bessel { .. })) {
        let seq = a4_liminf_sequence(rho, model.dim(), 1.0, t, 4096.0);
        if let Some(&(rr, v)) = seq.last() {
            report.stat(format!("a4 boundary term at r={rr}"), v, None, 1);
        }
    }
    Ok(())
}

pub fn cmd_verify(config: &ExperimentConfig) -> Result<DiagnosticsReport, CliError> {
    let diag = config.diagnostics();
    let runs: Vec<LoadedRun> = diag.runs.iter().map(|d| load_run(d)).collect::<Result<_, _>>()?;
    let model = match (&config.model, runs.first()) {
        (Some(m), _) => m.clone(),
        (None, Some(r)) => r.manifest.model.clone(),
        (None, None) => return Err(CliError::Config("verify needs a model or runs".into())),
    };
    for r in &runs {
        if r.manifest.model != model {
            return Err(CliError::Config(format!("model mismatch: run {} is {}, expected {}", r.name, r.manifest.model.name(), model.name())));
        }
    }
    let dir = RunDir::create("verify", config)?;
    let mut report = DiagnosticsReport::new(format!("verify ({})", model.name()));
    for &check in &diag.checks {
        match check {
            Check::A4 => check_a4_report(&mut report, &model, &diag)?,
            Check::SchemeLadder => ladder_report(&mut report, &runs, &diag)?,
            c => {
                for run in &runs {
                    check_runs(&mut report, c, run, &diag)?;
                }
            }
        }
    }
    report.provenance = runs
        .iter()
        .map(|r| serde_json::to_value(&r.manifest))
        .collect::<Result<_, _>>()
        .map_err(ibm_core::Error::from)?;
    dir.write_manifest("verify", config, &model, vec![], None)?;
    dir.write_report(&report)?;
    eprintln!("wrote report to {}", dir.path.display());
    Ok(report)
}
