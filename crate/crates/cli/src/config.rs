use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CheckIdentities,
    SolitonVerify,
    Lambda,
    Spectrum,
    Flow,
    Stability,
    PluriclosedFlow,
    Lojasiewicz,
    Transversality,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::CheckIdentities => "check-identities",
            Task::SolitonVerify => "soliton-verify",
            Task::Lambda => "lambda",
            Task::Spectrum => "spectrum",
            Task::Flow => "flow",
            Task::Stability => "stability",
            Task::PluriclosedFlow => "pluriclosed-flow",
            Task::Lojasiewicz => "lojasiewicz",
            Task::Transversality => "transversality",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    pub backend: Backend,
    #[serde(default)]
    pub state: StateSpec,
    /// Second state for the `lambda` task; must share `H0`.
    pub compare: Option<StateSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Backend {
    Preset {
        name: String,
    },
    Lattice {
        #[serde(default = "three")]
        dim: usize,
        points: usize,
        #[serde(default = "two_pi")]
        length: f64,
        #[serde(default = "two")]
        order: usize,
    },
}

fn three() -> usize {
    3
}

fn two() -> usize {
    2
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    /// `H0 = κ·c_ijk` on presets, `κ·ε_ijk` on 3-dim lattices.
    #[serde(default)]
    pub kappa: f64,
    /// Constant metric rows; identity when absent.
    pub metric: Option<Vec<Vec<f64>>>,
    /// Constant b-field rows; zero when absent.
    pub b: Option<Vec<Vec<f64>>>,
    /// Amplitudes of seeded random lattice fields added on top.
    #[serde(default)]
    pub metric_amplitude: f64,
    #[serde(default)]
    pub b_amplitude: f64,
    #[serde(default)]
    pub f_amplitude: f64,
    /// Complex structure preset; fixes `H0 = −d^cω` and overrides `kappa`.
    pub complex_structure: Option<String>,
    /// Size of a seeded random perturbation of `(g, b)`.
    #[serde(default)]
    pub perturbation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKindSpec {
    #[default]
    Gauged,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub t_end: f64,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub step_tol: Option<f64>,
    pub flow: FlowKindSpec,
    pub epsilons: Vec<f64>,
    pub directions: usize,
    pub samples: usize,
    pub radii: Vec<f64>,
    pub steps: usize,
    pub fd_epsilons: [f64; 2],
    /// Assert `ρ_B = 0` in the pluriclosed task.
    pub bismut_flat: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            t_end: 10.0,
            dt_min: None,
            dt_max: None,
            step_tol: None,
            flow: FlowKindSpec::Gauged,
            epsilons: vec![1e-2],
            directions: 2,
            samples: 10,
            radii: vec![1e-3, 1e-2],
            steps: 100,
            fd_epsilons: [1e-3, 1e-4],
            bismut_flat: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Relative to the config file.
    pub dir: PathBuf,
    /// File stem; the task name when absent.
    pub stem: Option<String>,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: PathBuf::from("reports"),
            stem: None,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("{path}: {message}")]
pub struct ValidationError {
    pub path: &'static str,
    pub message: String,
}

fn invalid(path: &'static str, message: impl Into<String>) -> Result<(), ValidationError> {
    Err(ValidationError {
        path,
        message: message.into(),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, crate::CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| crate::CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if let Backend::Lattice { dim, points, length, order } = &self.backend {
            if *dim == 0 {
                invalid("backend.dim", "must be positive")?;
            }
            if *points < 3 {
                invalid("backend.points", format!("{points} is too few grid points"))?;
            }
            if !(*length > 0.0) {
                invalid("backend.length", "must be positive")?;
            }
            if *order != 2 && *order != 4 {
                invalid("backend.order", format!("stencil order {order} is not 2 or 4"))?;
            }
            if self.state.complex_structure.is_some() {
                invalid("state.complex_structure", "complex structures are only supported on presets")?;
            }
        }
        for (path, v) in [
            ("state.metric_amplitude", self.state.metric_amplitude),
            ("state.b_amplitude", self.state.b_amplitude),
            ("state.f_amplitude", self.state.f_amplitude),
            ("state.perturbation", self.state.perturbation),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                invalid(path, format!("{v} must be a finite nonnegative number"))?;
            }
        }
        let p = &self.params;
        if !(p.t_end > 0.0) {
            invalid("params.t_end", "must be positive")?;
        }
        if p.epsilons.is_empty() || p.epsilons.iter().any(|e| !(*e >= 0.0)) {
            invalid("params.epsilons", "needs at least one nonnegative entry")?;
        }
        if p.radii.is_empty() || p.radii.iter().any(|r| !(*r > 0.0)) {
            invalid("params.radii", "needs at least one positive entry")?;
        }
        if p.samples == 0 {
            invalid("params.samples", "must be at least 1")?;
        }
        if p.steps == 0 {
            invalid("params.steps", "must be at least 1")?;
        }
        if !(p.fd_epsilons[0] > p.fd_epsilons[1] && p.fd_epsilons[1] > 0.0) {
            invalid("params.fd_epsilons", "needs two decreasing positive steps")?;
        }
        if self.task == Task::PluriclosedFlow && self.state.complex_structure.is_none() {
            invalid("state.complex_structure", "required for the pluriclosed-flow task")?;
        }
        if self.compare.is_some() && self.task != Task::Lambda {
            invalid("compare", "only used by the lambda task")?;
        }
        Ok(())
    }
}
