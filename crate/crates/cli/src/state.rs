use crate::config::{Backend, StateSpec};
use crate::CliError;
use grflab_functional::random_direction;
use grflab_geometry::GeometryState;
use grflab_lattice::{FieldSampler, LatticeGrid};
use grflab_lie::LieAlgebra;
use grflab_pluriclosed::{pluriclosed_state, ComplexStructure};
use grflab_tensor::{antisymmetry_defect, epsilon3, Frame, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Seed offset for the perturbation stream, kept apart from the field sampler.
const PERTURBATION_STREAM: u64 = 0x9e37_79b9;

pub struct BuiltState {
    pub state: GeometryState,
    pub complex_structure: Option<ComplexStructure>,
    pub label: String,
}

fn matrix(path: &'static str, rows: &[Vec<f64>], n: usize) -> Result<Tensor, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config(path, format!("expected a {n}×{n} matrix")));
    }
    Ok(Tensor::constant(n, 2, &rows.concat()))
}

fn numeric(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

pub fn build_state(backend: &Backend, spec: &StateSpec, seed: u64) -> Result<BuiltState, CliError> {
    let built = match backend {
        Backend::Preset { name } => preset_state(name, spec)?,
        Backend::Lattice { dim, points, length, order } => lattice_state(*dim, *points, *length, *order, spec, seed)?,
    };
    if spec.perturbation > 0.0 {
        return perturb(built, spec.perturbation, seed);
    }
    Ok(built)
}

fn preset_state(name: &str, spec: &StateSpec) -> Result<BuiltState, CliError> {
    let alg = LieAlgebra::preset(name).map_err(|e| CliError::config("backend.name", e.to_string()))?;
    let n = alg.dim();
    let frame: Arc<dyn Frame> = Arc::new(alg.frame());
    let g = match &spec.metric {
        Some(rows) => matrix("state.metric", rows, n)?,
        None => Tensor::identity(n),
    };
    let b = match &spec.b {
        Some(rows) => matrix("state.b", rows, n)?,
        None => Tensor::zeros(n, 2, 1),
    };
    if let Some(js) = &spec.complex_structure {
        if spec.kappa != 0.0 {
            return Err(CliError::config("state.kappa", "H0 is fixed by the complex structure; leave kappa unset"));
        }
        let j = ComplexStructure::preset(js).map_err(|e| CliError::config("state.complex_structure", e.to_string()))?;
        let s = pluriclosed_state(frame, g, &j).map_err(|e| CliError::config("state.complex_structure", e.to_string()))?;
        let s = s.with_gb(s.g().clone(), b).map_err(|e| CliError::config("state.b", e.to_string()))?;
        return Ok(BuiltState {
            state: s,
            complex_structure: Some(j),
            label: format!("{name} with J={js}"),
        });
    }
    let c = alg.structure();
    if spec.kappa != 0.0 && antisymmetry_defect(c) > 1e-14 {
        return Err(CliError::config("state.kappa", format!("{name} has no invariant Cartan 3-form")));
    }
    let s = GeometryState::homogeneous(frame, g, c.scale(spec.kappa))
        .and_then(|s| s.with_gb(s.g().clone(), b))
        .map_err(|e| CliError::config("state", e.to_string()))?;
    Ok(BuiltState {
        state: s,
        complex_structure: None,
        label: format!("{name}, kappa={}", spec.kappa),
    })
}

fn lattice_state(dim: usize, points: usize, length: f64, order: usize, spec: &StateSpec, seed: u64) -> Result<BuiltState, CliError> {
    let grid = LatticeGrid::new(dim, points, length, order).map_err(|e| CliError::config("backend", e.to_string()))?;
    let frame: Arc<dyn Frame> = Arc::new(grid.frame());
    let mut fs = FieldSampler::new(grid, seed);
    let mut g = match &spec.metric {
        Some(rows) => matrix("state.metric", rows, dim)?,
        None => Tensor::identity(dim),
    }
    .broadcast(grid.npts());
    if spec.metric_amplitude > 0.0 {
        // the sampler's metric is id + perturbation
        g = g.axpy(1.0, &fs.metric(spec.metric_amplitude).axpy(-1.0, &Tensor::identity(dim).broadcast(grid.npts())));
    }
    let mut b = match &spec.b {
        Some(rows) => matrix("state.b", rows, dim)?,
        None => Tensor::zeros(dim, 2, 1),
    }
    .broadcast(grid.npts());
    if spec.b_amplitude > 0.0 {
        b = b.axpy(1.0, &fs.form(2, spec.b_amplitude));
    }
    let f = if spec.f_amplitude > 0.0 {
        fs.scalar(spec.f_amplitude)
    } else {
        Tensor::scalar(dim, 0.0)
    };
    let h0 = if spec.kappa == 0.0 {
        Tensor::zeros(dim, 3, 1)
    } else if dim == 3 {
        epsilon3().scale(spec.kappa)
    } else {
        return Err(CliError::config("state.kappa", "a constant background 3-form needs dim = 3"));
    };
    let s = GeometryState::new(frame, g, b, h0, f).map_err(|e| CliError::config("state", e.to_string()))?;
    Ok(BuiltState {
        state: s,
        complex_structure: None,
        label: format!("lattice dim={dim} N={points} order={order}, kappa={}", spec.kappa),
    })
}

/// Adds `ε·γ` for a seeded random unit direction; with a complex structure the
/// direction is a Hermitian metric change and `H0` is recomputed from `ω`.
fn perturb(built: BuiltState, eps: f64, seed: u64) -> Result<BuiltState, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PERTURBATION_STREAM);
    let label = format!("{}, perturbed by {eps}", built.label);
    let state = match &built.complex_structure {
        Some(j) => {
            let n = j.n();
            let p = Tensor::from_vec(n, 2, 1, (0..n * n).map(|_| rng.gen_range(-1.0..=1.0)).collect());
            let h = j.hermitian_part(&p.sym());
            let g = built.state.g().axpy(eps / h.max_abs().max(f64::MIN_POSITIVE), &h);
            let s = pluriclosed_state(built.state.frame().clone(), g, j).map_err(numeric)?;
            s.with_gb(s.g().clone(), built.state.b().clone()).map_err(numeric)?
        }
        None => {
            let gamma = random_direction(&built.state, &mut rng);
            built.state.perturbed(&gamma, eps).map_err(numeric)?
        }
    };
    Ok(BuiltState { state, label, ..built })
}
