//! Equilibrium sampling, shared by `sample`, `simulate` and `ladder`.

use crate::config::{ExperimentConfig, SamplerConfig, SamplerMethod};
use crate::error::CliError;
use crate::run::RunDir;
use ibm_core::diagnostics::DiagnosticsReport;
use ibm_core::io::{write_configuration_csv, ReplicaEntry};
use ibm_core::pointfields::{sample_gibbs, sample_ginibre, sample_poisson, sample_sine_bulk, DppSampler, ModelSpec};
use ibm_core::stats::mean_se;
use ibm_core::{Configuration, SeedSpec};
use rayon::prelude::*;

/// A sampler with its per-run setup (the DPP spectral decomposition) done once.
pub enum Prepared {
    Dpp(DppSampler),
    Other(SamplerConfig),
}

impl Prepared {
    pub fn new(model: &ModelSpec, cfg: &SamplerConfig) -> Result<Self, CliError> {
        Ok(match cfg.method {
            Some(SamplerMethod::Dpp) => {
                Prepared::Dpp(DppSampler::new(model, &cfg.window_for(model), cfg.grid_size.unwrap_or(64))?)
            }
            _ => Prepared::Other(cfg.clone()),
        })
    }

    pub fn draw(&self, model: &ModelSpec, seed: SeedSpec) -> ibm_core::Result<Configuration> {
        let cfg = match self {
            Prepared::Dpp(s) => return s.sample(seed),
            Prepared::Other(c) => c,
        };
        let w = cfg.window();
        match (cfg.method, model) {
            (Some(SamplerMethod::Ginibre), _) => sample_ginibre(cfg.matrix_size.unwrap_or(1), w, seed),
            (Some(SamplerMethod::SineBulk), ModelSpec::Sine { beta }) => {
                sample_sine_bulk(*beta, cfg.matrix_size.unwrap_or(1), w, seed)
            }
            (Some(SamplerMethod::Gibbs), _) => sample_gibbs(
                model,
                w,
                &Configuration::empty(model.dim()),
                cfg.particles.unwrap_or(0),
                cfg.mcmc_steps.unwrap_or(0),
                seed,
            ),
            (Some(SamplerMethod::Poisson), _) => sample_poisson(cfg.intensity.unwrap_or(1.0), &cfg.window_for(model), seed),
            (m, _) => Err(ibm_core::Error::Config(format!("sampler {m:?} cannot sample {}", model.name()))),
        }
    }

    pub fn expected_count(&self, model: &ModelSpec, cfg: &SamplerConfig) -> Option<f64> {
        match self {
            Prepared::Dpp(s) => Some(s.expected_count()),
            Prepared::Other(_) => match model {
                ModelSpec::Sine { .. } | ModelSpec::Ginibre => Some(cfg.window_for(model).volume() * model.intensity(&ibm_core::Point::d1(0.0))?),
                ModelSpec::Ruelle { .. } if cfg.method == Some(SamplerMethod::Poisson) => {
                    Some(cfg.window_for(model).volume() * cfg.intensity.unwrap_or(1.0))
                }
                _ => None,
            },
        }
    }
}

/// Draws one configuration per replica, in parallel, in replica order.
pub fn draw_all(
    pool: &rayon::ThreadPool,
    model: &ModelSpec,
    sampler: &Prepared,
    master: u64,
    replicas: u32,
) -> Result<Vec<Configuration>, CliError> {
    let out: Vec<Result<Configuration, CliError>> = pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|i| {
                let seed = SeedSpec::new(master, i);
                sampler.draw(model, seed).map_err(|source| CliError::Replica { replica: i, seed, source })
            })
            .collect()
    });
    out.into_iter().collect()
}

pub fn cmd_sample(config: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<DiagnosticsReport, CliError> {
    let model = config.model()?;
    let cfg = config.sampler.as_ref().ok_or_else(|| CliError::Config("missing [sampler] block".into()))?;
    let prepared = Prepared::new(model, cfg)?;
    let samples = draw_all(pool, model, &prepared, config.seeds.master, config.seeds.replicas)?;
    let dir = RunDir::create("sample", config)?;
    let mut files = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let name = format!("sample_{i:04}.csv");
        let mut w = dir.create_file(&name)?;
        write_configuration_csv(&mut w, s)?;
        files.push(ReplicaEntry { replica: i as u32, file: name, events: vec![], scheme: None, radius: None, guards: None });
    }
    dir.write_manifest("sample", config, model, files, None)?;

    let counts: Vec<f64> = samples.iter().map(|s| s.len() as f64).collect();
    let (mean, se) = mean_se(&counts);
    let n = samples.len();
    let mut report = DiagnosticsReport::new(format!("sample ({})", model.name()));
    report.stat_seeded("count", mean, Some(se), n, (config.seeds.master, 0, n as u32));
    if let Some(e) = prepared.expected_count(model, cfg) {
        report.stat("expected count", e, None, n);
    }
    dir.write_report(&report)?;
    eprintln!("wrote {n} samples to {}", dir.path.display());
    Ok(report)
}
