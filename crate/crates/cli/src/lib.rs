//! Configuration-driven runner for the geometry, flow and pluriclosed checks.
//!
//! A run reads one TOML file, executes one task, prints one line per
//! assertion and writes a JSON report (sorted keys) plus CSV tables.

pub mod config;
pub mod report;
pub mod state;
pub mod tasks;

use config::ExperimentConfig;
use report::{Assertion, Document};
use std::path::{Path, PathBuf};

/// Annotated reference configuration printed by `grflab schema`.
pub const SCHEMA: &str = include_str!("../schema.toml");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(#[from] config::ValidationError),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(path: &'static str, message: impl Into<String>) -> Self {
        CliError::Invalid(config::ValidationError {
            path,
            message: message.into(),
        })
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Invalid(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub assertions: Vec<Assertion>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

pub fn run_file(path: &Path) -> Result<RunOutcome, CliError> {
    let text = std::fs::read_to_string(path)?;
    let cfg = ExperimentConfig::parse(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str());
    run(&cfg, base, stem)
}

/// Runs `cfg`, writing reports under `base.join(cfg.output.dir)`. The file
/// stem is `output.stem`, else `default_stem`, else the task name.
pub fn run(cfg: &ExperimentConfig, base: &Path, default_stem: Option<&str>) -> Result<RunOutcome, CliError> {
    let (built, report) = tasks::run_task(cfg)?;
    let doc = Document {
        task: cfg.task.name(),
        seed: cfg.seed,
        state: &built.label,
        report: &report,
    };
    let stem = cfg
        .output
        .stem
        .clone()
        .or_else(|| default_stem.map(str::to_string))
        .unwrap_or_else(|| cfg.task.name().to_string());
    let files = doc.write(&base.join(&cfg.output.dir), &stem)?;
    Ok(RunOutcome {
        assertions: report.assertions,
        files,
    })
}

pub fn list_presets() -> String {
    let mut s = String::from("lie algebras (backend.kind = \"preset\"):\n");
    for n in grflab_lie::LieAlgebra::preset_names() {
        s.push_str(&format!("  {n}\n"));
    }
    s.push_str("complex structures (state.complex_structure):\n  hopf\n  abelian:2k\n");
    s.push_str("lattice (backend.kind = \"lattice\"): dim, points, length = 2π, order ∈ {2, 4}\n");
    s
}
