//! Experiment configuration: TOML files, `--set key=value` overrides and
//! defaults filled in before any compute.

use crate::error::CliError;
use ibm_core::cutoff::{CutoffParams, ShellSequence};
use ibm_core::drift::Truncation;
use ibm_core::dynamics::{Scheme, SchemeParams};
use ibm_core::pointfields::ModelSpec;
use ibm_core::Window;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    /// Initial configuration CSV for `simulate`, shared by all replicas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    pub replicas: u32,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { master: 0, replicas: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    /// Nyström discretisation of the kernel plus the spectral algorithm.
    Dpp,
    /// Eigenvalues of a complex Gaussian matrix.
    Ginibre,
    /// Unfolded bulk eigenvalues of a Gaussian β-ensemble.
    SineBulk,
    /// Metropolis chain for the DLR density.
    Gibbs,
    Poisson,
}

/// Equilibrium sampler. `window` is the half-width (radius) of the sampling
/// window: `[-w, w]` on the line, `[0, w]` for the Bessel field, the disc of
/// radius `w` in the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<SamplerMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
}

impl SamplerConfig {
    pub fn window(&self) -> f64 {
        self.window.unwrap_or(f64::NAN)
    }

    pub fn window_for(&self, model: &ModelSpec) -> Window {
        match model {
            ModelSpec::Bessel { .. } => Window::Interval { lo: 0.0, hi: self.window() },
            m => Window::Ball { dim: m.dim(), radius: self.window() },
        }
    }

    fn resolve(&mut self, model: &ModelSpec) -> Result<(), CliError> {
        let w = self.window.ok_or_else(|| CliError::Config("sampler.window is required".into()))?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(CliError::Config(format!("sampler.window must be positive, got {w}")));
        }
        let method = *self.method.get_or_insert(match model {
            ModelSpec::Sine { beta: 2 } | ModelSpec::Bessel { .. } => SamplerMethod::Dpp,
            ModelSpec::Sine { .. } => SamplerMethod::SineBulk,
            ModelSpec::Ginibre => SamplerMethod::Ginibre,
            ModelSpec::Ruelle { potential, .. } if potential.is_zero() => SamplerMethod::Poisson,
            ModelSpec::Ruelle { .. } => SamplerMethod::Gibbs,
        });
        let fits = match (method, model) {
            (SamplerMethod::Dpp, ModelSpec::Sine { beta: 2 } | ModelSpec::Bessel { .. }) => true,
            (SamplerMethod::Ginibre, ModelSpec::Ginibre) => true,
            (SamplerMethod::SineBulk, ModelSpec::Sine { .. }) => true,
            (SamplerMethod::Gibbs | SamplerMethod::Poisson, ModelSpec::Ruelle { .. }) => true,
            _ => false,
        };
        if !fits {
            return Err(CliError::Config(format!("sampler method {method:?} cannot sample {}", model.name())));
        }
        match method {
            SamplerMethod::Dpp => {
                let len = self.window_for(model).volume();
                self.grid_size.get_or_insert((4.0 * len).ceil().max(64.0) as usize);
            }
            SamplerMethod::Ginibre => {
                self.matrix_size.get_or_insert((w / 0.75).powi(2).ceil().max(4.0) as usize);
            }
            SamplerMethod::SineBulk => {
                self.matrix_size.get_or_insert((10.0 * w).ceil() as usize + 10);
            }
            SamplerMethod::Gibbs => {
                let n = *self.particles.get_or_insert(self.window_for(model).volume().round() as usize);
                self.mcmc_steps.get_or_insert(200 * n.max(1));
            }
            SamplerMethod::Poisson => {
                self.intensity.get_or_insert(1.0);
            }
        }
        Ok(())
    }
}

/// Scheme block; unset fields are filled in from the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: Scheme,
    pub radius: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflect_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_shell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_drift_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_halvings: Option<u32>,
    /// Steps between checkpoints; 0 disables them.
    #[serde(default)]
    pub checkpoint_every: u64,
}

impl SchemeConfig {
    fn resolve(&mut self, model: &ModelSpec) {
        let r = self.radius;
        self.cutoff.get_or_insert_with(|| {
            let shells = (2.0 * r).ceil().max(2.0) as usize;
            let rho = model.intensity(&ibm_core::Point::d1(r.max(1.0))).unwrap_or(1.0).max(1.0 / std::f64::consts::PI);
            let dim = model.dim();
            CutoffParams::new(r, 2.0 * r, 1e3, ShellSequence::for_intensity(rho, dim, 4, shells))
        });
        self.record_every.get_or_insert(1);
        self.max_drift_step.get_or_insert(0.1);
        self.max_halvings.get_or_insert(4);
    }

    pub fn params(&self) -> Result<SchemeParams, CliError> {
        let cutoff = self.cutoff.clone().ok_or_else(|| CliError::Config("scheme.cutoff unresolved".into()))?;
        let mut p = SchemeParams::new(self.kind, self.radius, self.dt, self.t_end, cutoff);
        p.truncation = self.truncation;
        p.reflect_eps = self.reflect_eps;
        p.birth_shell = self.birth_shell;
        p.boundary_intensity = self.boundary_intensity;
        p.record_every = self.record_every.unwrap_or(1);
        p.max_drift_step = self.max_drift_step.unwrap_or(0.1);
        p.max_halvings = self.max_halvings.unwrap_or(4);
        p.validate()?;
        Ok(p)
    }

    /// Interaction range the initial sample has to cover beyond the radius.
    pub fn interaction_range(&self) -> f64 {
        self.cutoff.as_ref().map_or(2.0 * self.radius, |c| c.s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    A4,
    Invariance,
    SchemeLadder,
    Moment,
    LocalTime,
    Nbj,
    MinGap,
}

impl std::str::FromStr for Check {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let v = toml::Value::String(s.to_string());
        v.try_into().map_err(|_| {
            CliError::Config(format!(
                "unknown check `{s}` (expected a4, invariance, scheme-ladder, moment, local-time, nbj, min-gap)"
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub checks: Vec<Check>,
    /// Run directories; for `scheme-ladder` the last one is the reference.
    pub runs: Vec<PathBuf>,
    /// SE multiple for equality-type verdicts.
    pub equality_se: f64,
    /// SE multiple for monotonicity-type verdicts.
    pub monotone_se: f64,
    pub a4_radius: f64,
    pub a4_horizon: f64,
    pub lags: Vec<f64>,
    pub slope_range: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag_radius: Option<f64>,
    pub checkpoints: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis_window: Option<f64>,
    pub bin_edges: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_window: Option<f64>,
    /// Margin below R for the local-time check.
    pub boundary_margin: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            runs: Vec::new(),
            equality_se: 3.0,
            monotone_se: 2.0,
            a4_radius: 0.0,
            a4_horizon: 1.0,
            lags: vec![0.005, 0.01, 0.02, 0.04, 0.08],
            slope_range: [1.8, 2.2],
            tag_radius: None,
            checkpoints: Vec::new(),
            analysis_window: None,
            bin_edges: vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0],
            eval_time: None,
            distance_window: None,
            boundary_margin: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    /// Radii of the lower scheme, increasing.
    pub radii: Vec<f64>,
    pub reference_radius: f64,
    /// Also run the upper scheme at the largest radius.
    pub upper: bool,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self { radii: vec![8.0, 16.0, 32.0], reference_radius: 64.0, upper: true }
    }
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<&ModelSpec, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config("missing [model] block".into()))
    }

    pub fn diagnostics(&self) -> DiagnosticsConfig {
        self.diagnostics.clone().unwrap_or_default()
    }

    /// Validates and fills defaults for the blocks a command needs.
    pub fn resolve(&mut self, command: &str) -> Result<(), CliError> {
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if self.seeds.replicas == 0 {
            return Err(CliError::Config("seeds.replicas must be at least 1".into()));
        }
        match command {
            "sample" => {
                let model = self.model()?.clone();
                let s = self.sampler.as_mut().ok_or_else(|| CliError::Config("sample needs a [sampler] block (or --window)".into()))?;
                s.resolve(&model)?;
            }
            "simulate" | "ladder" => {
                let model = self.model()?.clone();
                let scheme = self.scheme.as_mut().ok_or_else(|| CliError::Config(format!("{command} needs a [scheme] block")))?;
                scheme.resolve(&model);
                scheme.params()?;
                if command == "ladder" {
                    let l = self.ladder.get_or_insert_with(LadderConfig::default);
                    if l.radii.is_empty() || l.radii.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(CliError::Config("ladder.radii must be nonempty and increasing".into()));
                    }
                    if l.reference_radius <= *l.radii.last().unwrap() {
                        return Err(CliError::Config("ladder.reference_radius must exceed every ladder radius".into()));
                    }
                }
                if self.init_file.is_none() {
                    let outer = match self.ladder.as_ref().filter(|_| command == "ladder") {
                        Some(l) => l.reference_radius,
                        None => scheme.radius,
                    };
                    let reach = outer + scheme.interaction_range();
                    let s = self.sampler.get_or_insert(SamplerConfig {
                        method: None,
                        window: None,
                        grid_size: None,
                        matrix_size: None,
                        particles: None,
                        mcmc_steps: None,
                        intensity: None,
                    });
                    s.window.get_or_insert(reach);
                    s.resolve(&model)?;
                }
            }
            "verify" => {
                let d = self.diagnostics.get_or_insert_with(DiagnosticsConfig::default);
                if d.checks.is_empty() {
                    return Err(CliError::Config("verify needs at least one check".into()));
                }
                let needs_runs = d.checks.iter().any(|c| *c != Check::A4);
                if needs_runs && d.runs.is_empty() {
                    return Err(CliError::Config("the selected checks need --runs".into()));
                }
                if d.checks.contains(&Check::A4) && self.model.is_none() && d.runs.is_empty() {
                    return Err(CliError::Config("the a4 check needs a model".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise config: {e}")))
    }
}

/// Loads a TOML config file, or the `config` block of a run manifest.
pub fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config = manifest.get("config").cloned().unwrap_or(manifest);
        return serde_json::from_value(config).map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    text.parse::<toml::Table>().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Applies `key.path=value`; the value is read as a TOML value, or as a
/// bare string when it does not parse.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Model shorthands: sine1, sine2, sine4, ginibre, bessel (α = 1), bessel:α,
/// free1, free2.
pub fn model_overrides(name: &str) -> Result<Vec<String>, CliError> {
    let name = name.trim().to_ascii_lowercase();
    let sets = if let Some(b) = name.strip_prefix("sine") {
        vec!["model.kind=\"sine\"".to_string(), format!("model.beta={b}")]
    } else if name == "ginibre" {
        vec!["model.kind=\"ginibre\"".to_string()]
    } else if let Some(rest) = name.strip_prefix("bessel") {
        let alpha = rest.trim_start_matches(':');
        let alpha = if alpha.is_empty() { "1.0".to_string() } else { alpha.to_string() };
        vec!["model.kind=\"bessel\"".to_string(), format!("model.alpha={alpha}")]
    } else if let Some(d) = name.strip_prefix("free") {
        vec![
            "model.kind=\"ruelle\"".to_string(),
            "model.beta=1.0".to_string(),
            format!("model.dim={d}"),
            "model.potential={kind=\"zero\"}".to_string(),
        ]
    } else {
        return Err(CliError::Config(format!(
            "unknown model `{name}` (expected sine1, sine2, sine4, ginibre, bessel[:alpha], free1, free2)"
        )));
    };
    Ok(sets)
}

pub fn parse_config(table: toml::Table) -> Result<ExperimentConfig, CliError> {
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

/// Stable 64-bit FNV-1a, used for run ids.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(s: &str) -> toml::Table {
        s.parse().unwrap()
    }

    #[test]
    fn overrides_create_nested_tables() {
        let mut t = table("[seeds]\nmaster = 1\n");
        apply_override(&mut t, "seeds.replicas=4").unwrap();
        apply_override(&mut t, "sampler.window=2.5").unwrap();
        apply_override(&mut t, "output_dir=out/x").unwrap();
        assert_eq!(t["seeds"]["replicas"].as_integer(), Some(4));
        assert_eq!(t["sampler"]["window"].as_float(), Some(2.5));
        assert_eq!(t["output_dir"].as_str(), Some("out/x"));
        assert!(apply_override(&mut t, "novalue").is_err());
        assert!(apply_override(&mut t, "seeds.master.x=1").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config(table("[seeds]\nmaster = 1\nreplica = 2\n")).unwrap_err();
        assert!(err.to_string().contains("replica"), "{err}");
        assert!(parse_config(table("colour = 1\n")).is_err());
        assert!(parse_config(table("[model]\nkind = \"sine\"\nbeta = 2\ngamma = 1\n")).is_err());
    }

    #[test]
    fn sine3_is_rejected_with_supported_betas() {
        let mut t = toml::Table::new();
        for s in model_overrides("sine3").unwrap() {
            apply_override(&mut t, &s).unwrap();
        }
        let mut c = parse_config(t).unwrap();
        let err = c.resolve("verify").unwrap_err();
        assert!(err.to_string().contains("{1, 2, 4}"), "{err}");
    }

    #[test]
    fn resolution_fills_defaults_and_roundtrips() {
        let mut t = toml::Table::new();
        for s in model_overrides("sine2").unwrap() {
            apply_override(&mut t, &s).unwrap();
        }
        apply_override(&mut t, "scheme={kind=\"lower\", radius=5.0, dt=0.01, t_end=0.1}").unwrap();
        let mut c = parse_config(t).unwrap();
        c.resolve("simulate").unwrap();
        let s = c.sampler.as_ref().unwrap();
        assert_eq!(s.method, Some(SamplerMethod::Dpp));
        assert_eq!(s.window, Some(15.0));
        assert!(c.scheme.as_ref().unwrap().cutoff.is_some());
        let echoed = parse_config(c.to_toml().unwrap().parse().unwrap()).unwrap();
        assert_eq!(echoed, c);
    }

    #[test]
    fn fnv_reference_value() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
