//! `ibm`: seeded experiment driver for finite-volume interacting Brownian
//! motions.
//!
//! Exit codes: 0 pass, 1 verdict failure, 2 configuration error, 3 numeric
//! error.

mod config;
mod error;
mod ladder;
mod run;
mod sample;
mod simulate;
mod verify;

use clap::{Args, Parser, Subcommand};
use config::{apply_override, load_table, model_overrides, parse_config, Check, ExperimentConfig};
use error::CliError;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "ibm", version, about = "Interacting Brownian motions in finite volume")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// TOML config, or a run's manifest.json to replay it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set scheme.dt=0.001`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// sine1, sine2, sine4, ginibre, bessel[:alpha], free1, free2.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw equilibrium configurations.
    Sample {
        /// Half-width (radius) of the sampling window.
        #[arg(long)]
        window: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate paths of one scheme.
    Simulate {
        #[command(flatten)]
        scheme: SchemeFlags,
        #[command(flatten)]
        resume: ResumeFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Run diagnostics on stored runs.
    Verify {
        /// Checks: a4, invariance, scheme-ladder, moment, local-time, nbj, min-gap.
        #[arg(long, value_delimiter = ',')]
        check: Vec<String>,
        /// Run directories; for scheme-ladder the last is the reference.
        #[arg(long, value_delimiter = ',')]
        runs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Scheme-convergence sweep over radii against a reference run.
    Ladder {
        #[command(flatten)]
        scheme: SchemeFlags,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[arg(long)]
        reference_radius: Option<f64>,
        #[command(flatten)]
        resume: ResumeFlags,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct SchemeFlags {
    /// lower, upper or reference.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
}

#[derive(Args, Default)]
struct ResumeFlags {
    /// Continue an interrupted run directory from its checkpoints.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Stop after this many steps per replica, leaving checkpoints.
    #[arg(long, hide = true)]
    halt_after: Option<u64>,
}

fn common_sets(c: &Common) -> Result<Vec<String>, CliError> {
    let mut sets = Vec::new();
    if let Some(m) = &c.model {
        sets.extend(model_overrides(m)?);
    }
    if let Some(s) = c.seed {
        sets.push(format!("seeds.master={s}"));
    }
    if let Some(r) = c.replicas {
        sets.push(format!("seeds.replicas={r}"));
    }
    if let Some(d) = &c.output_dir {
        sets.push(format!("output_dir={}", toml::Value::String(d.display().to_string())));
    }
    if let Some(id) = &c.run_id {
        sets.push(format!("run_id={}", toml::Value::String(id.clone())));
    }
    Ok(sets)
}

fn scheme_sets(s: &SchemeFlags) -> Vec<String> {
    let mut sets = Vec::new();
    if let Some(k) = &s.scheme {
        sets.push(format!("scheme.kind={}", toml::Value::String(k.clone())));
    }
    for (key, v) in [("radius", s.radius), ("dt", s.dt), ("t_end", s.t_end)] {
        if let Some(v) = v {
            sets.push(format!("scheme.{key}={v:?}"));
        }
    }
    if let Some(n) = s.checkpoint_every {
        sets.push(format!("scheme.checkpoint_every={n}"));
    }
    sets
}

fn build_config(common: &Common, flag_sets: Vec<String>, command: &str) -> Result<ExperimentConfig, CliError> {
    let mut table = match &common.config {
        Some(p) => load_table(p)?,
        None => toml::Table::new(),
    };
    for s in common_sets(common)?.iter().chain(&flag_sets).chain(&common.set) {
        apply_override(&mut table, s)?;
    }
    let mut config = parse_config(table)?;
    config.resolve(command)?;
    Ok(config)
}

/// Config of an interrupted run, relocated to where the directory now is.
fn resume_config(dir: &Path, common: &Common, command: &str) -> Result<ExperimentConfig, CliError> {
    if common.config.is_some() || !common.set.is_empty() || common.model.is_some() {
        return Err(CliError::Config("--resume takes the run's own config; drop --config/--set/--model".into()));
    }
    let mut config = parse_config(load_table(&dir.join("config.toml"))?)?;
    config.resolve(command)?;
    let expected = config.output_dir.join(run::run_id(command, &config)?);
    if expected != dir {
        config.output_dir = dir.parent().map(Path::to_path_buf).unwrap_or_default();
        config.run_id = dir.file_name().map(|n| n.to_string_lossy().into_owned());
    }
    Ok(config)
}

/// `Some(pass)` on completion, `None` when halted.
fn execute(cli: Cli) -> Result<Option<bool>, CliError> {
    let pool = run::pool()?;
    match cli.command {
        Command::Sample { window, common } => {
            let sets = window.map(|w| vec![format!("sampler.window={w:?}")]).unwrap_or_default();
            let config = build_config(&common, sets, "sample")?;
            Ok(Some(sample::cmd_sample(&config, &pool)?.passed()))
        }
        Command::Simulate { scheme, resume, common } => {
            let config = match &resume.resume {
                Some(dir) => resume_config(dir, &common, "simulate")?,
                None => build_config(&common, scheme_sets(&scheme), "simulate")?,
            };
            Ok(simulate::cmd_simulate(&config, &pool, resume.halt_after)?.map(|r| r.passed()))
        }
        Command::Verify { check, runs, common } => {
            let mut sets = Vec::new();
            if !check.is_empty() {
                let checks: Vec<Check> = check.iter().map(|c| c.parse()).collect::<Result<_, _>>()?;
                let list = toml::Value::try_from(checks).map_err(|e| CliError::Config(e.to_string()))?;
                sets.push(format!("diagnostics.checks={list}"));
            }
            if !runs.is_empty() {
                let list: Vec<String> = runs.iter().map(|r| r.display().to_string()).collect();
                sets.push(format!("diagnostics.runs={}", toml::Value::try_from(list).map_err(|e| CliError::Config(e.to_string()))?));
            }
            let config = build_config(&common, sets, "verify")?;
            Ok(Some(verify::cmd_verify(&config)?.passed()))
        }
        Command::Ladder { scheme, radii, reference_radius, resume, common } => {
            let config = match &resume.resume {
                Some(dir) => resume_config(dir, &common, "ladder")?,
                None => {
                    let mut sets = scheme_sets(&scheme);
                    if !radii.is_empty() {
                        let list: Vec<String> = radii.iter().map(|r| format!("{r:?}")).collect();
                        sets.push(format!("ladder.radii=[{}]", list.join(",")));
                    }
                    if let Some(r) = reference_radius {
                        sets.push(format!("ladder.reference_radius={r:?}"));
                    }
                    build_config(&common, sets, "ladder")?
                }
            };
            Ok(ladder::cmd_ladder(&config, &pool, resume.halt_after)?.map(|r| r.passed()))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(Some(true)) | Ok(None) => 0,
        Ok(Some(false)) => {
            eprintln!("one or more verdicts failed; see report.md");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
