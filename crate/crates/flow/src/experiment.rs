use crate::integrate::{integrate, FlowControl, FlowError, RateFit, StopReason};
use crate::rhs::FlowKind;
use grflab_functional::{random_tensor, with_minimizer, FunctionalError, SOLITON_TOL};
use grflab_geometry::{Geometry, GeometryState};
use grflab_tensor::Tensor;
use grflab_variation::{VariationError, VariationOps};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionClass {
    /// Sampled in `ker div̄_f`.
    Slice,
    /// Sampled in `Im div̄*_f`.
    Gauge,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRun {
    pub epsilon: f64,
    pub class: DirectionClass,
    pub direction: usize,
    /// `Q(γ)/‖γ‖²` of the unit direction.
    pub quadratic_form: f64,
    /// Largest fixed-basis max-norm distance of `g − b` from the soliton along the run.
    pub max_distance: f64,
    pub stayed_in_neighborhood: bool,
    pub final_residual: f64,
    pub lambda_drift: f64,
    pub monotonicity_violation: f64,
    pub rate_fit: Option<RateFit>,
    pub stop: StopReason,
    pub final_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub lambda0: f64,
    /// Neighbourhoods are measured in the fixed-basis max-norm of `(g, b)`.
    pub norm: &'static str,
    pub neighborhood_factor: f64,
    pub runs: Vec<ExperimentRun>,
}

/// Perturbs a verified soliton along random slice and gauge directions and
/// integrates the gauge-fixed flow from each perturbed state.
pub fn stability_experiment(
    soliton: &GeometryState,
    epsilons: &[f64],
    directions: usize,
    t_end: f64,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    const NEIGHBORHOOD: f64 = 10.0;
    let (base, res) = with_minimizer(soliton)?;
    let ops = VariationOps::new(&base);
    ops.require_soliton()?;
    let geo = Geometry::new(&base);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<(DirectionClass, usize, Tensor)> = Vec::new();
    for i in 0..directions {
        let slice = ops.project_to_kernel(&random_tensor(&base, 2, &mut rng))?;
        let gauge = ops.div_bar_star(&ops.random_pair(&mut rng));
        for (class, g) in [(DirectionClass::Slice, slice), (DirectionClass::Gauge, gauge)] {
            let norm = geo.norm(&g);
            if norm > 0.0 {
                dirs.push((class, i, g.scale(1.0 / norm)));
            }
        }
    }
    let mut runs = Vec::new();
    for &eps in epsilons {
        for (class, i, gamma) in &dirs {
            let q = ops.second_variation(gamma)?;
            let start = base.perturbed(gamma, eps).map_err(FlowError::from)?;
            let control = FlowControl {
                stop_residual: SOLITON_TOL.min(1e-9),
                ..FlowControl::for_state(&start, t_end, FlowKind::Gauged)
            };
            let traj = integrate(&start, &control)?;
            let base_gb = base.g() - base.b();
            let max_distance = traj
                .states
                .iter()
                .map(|s| (&(s.g() - s.b()) - &base_gb).max_abs())
                .fold(0.0, f64::max);
            let last = traj.rows.last().expect("trajectory has rows");
            runs.push(ExperimentRun {
                epsilon: eps,
                class: *class,
                direction: *i,
                quadratic_form: q,
                max_distance,
                stayed_in_neighborhood: max_distance <= NEIGHBORHOOD * eps.max(f64::MIN_POSITIVE) || eps == 0.0,
                final_residual: last.residual(),
                lambda_drift: last.lambda - res.lambda,
                monotonicity_violation: traj.monotonicity_violation(),
                rate_fit: traj.rate_fit,
                stop: traj.stop,
                final_time: last.t,
            });
        }
    }
    Ok(ExperimentReport {
        lambda0: res.lambda,
        norm: "fixed-basis max-norm of (g, b)",
        neighborhood_factor: NEIGHBORHOOD,
        runs,
    })
}
