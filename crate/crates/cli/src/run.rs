//! Run directories, manifests and the replica worker pool.

use crate::config::{fnv1a, ExperimentConfig};
use crate::error::{io_err, CliError};
use ibm_core::diagnostics::DiagnosticsReport;
use ibm_core::io::{Manifest, ReplicaEntry, MANIFEST_SCHEMA_VERSION};
use ibm_core::pointfields::ModelSpec;
use std::path::{Path, PathBuf};

pub const GENERATOR: &str = "ChaCha8 keyed by (master seed, replica, purpose)";

pub fn code_version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("IBM_GIT_DESCRIBE"))
}

/// `<command>-<model>-<hash of the resolved config>` unless set explicitly.
pub fn run_id(command: &str, config: &ExperimentConfig) -> Result<String, CliError> {
    if let Some(id) = &config.run_id {
        if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
            return Err(CliError::Config(format!("run_id `{id}` is not a plain directory name")));
        }
        return Ok(id.clone());
    }
    let mut keyed = config.clone();
    keyed.output_dir = PathBuf::new();
    let model = config.model.as_ref().map_or("runs".to_string(), |m| m.name());
    let hash = fnv1a(format!("{command}\n{}", keyed.to_toml()?).as_bytes());
    Ok(format!("{command}-{model}-{:08x}", hash >> 32))
}

pub struct RunDir {
    pub path: PathBuf,
    pub run_id: String,
}

impl RunDir {
    pub fn create(command: &str, config: &ExperimentConfig) -> Result<Self, CliError> {
        let run_id = run_id(command, config)?;
        let path = config.output_dir.join(&run_id);
        std::fs::create_dir_all(&path).map_err(io_err(&path))?;
        let dir = Self { path, run_id };
        dir.write("config.toml", config.to_toml()?.as_bytes())?;
        Ok(dir)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.file(name);
        std::fs::write(&p, bytes).map_err(io_err(&p))
    }

    pub fn create_file(&self, name: &str) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
        let p = self.file(name);
        Ok(std::io::BufWriter::new(std::fs::File::create(&p).map_err(io_err(&p))?))
    }

    pub fn write_manifest(
        &self,
        command: &str,
        config: &ExperimentConfig,
        model: &ModelSpec,
        files: Vec<ReplicaEntry>,
        note: Option<String>,
    ) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            command: command.to_string(),
            run_id: self.run_id.clone(),
            code_version: code_version(),
            generator: GENERATOR.to_string(),
            model: model.clone(),
            master_seed: config.seeds.master,
            replicas: config.seeds.replicas,
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
            files,
            surrogate_note: note,
        };
        self.write("manifest.json", manifest.to_json()?.as_bytes())?;
        Ok(manifest)
    }

    pub fn write_report(&self, report: &DiagnosticsReport) -> Result<(), CliError> {
        let json = report.to_json().map_err(ibm_core::Error::from)?;
        self.write("report.json", json.as_bytes())?;
        self.write("report.md", report.to_markdown().as_bytes())
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let p = dir.join("manifest.json");
    let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
    Ok(Manifest::from_json(&text)?)
}

/// Worker pool capped by `IBM_THREADS`; outputs never depend on its size.
pub fn pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("IBM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("IBM_THREADS={v} is not a positive integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}
