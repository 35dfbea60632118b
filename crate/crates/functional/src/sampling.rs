use crate::lambda::{lambda_min, lattice_grid, with_minimizer, FunctionalError};
use grflab_geometry::{Geometry, GeometryState};
use grflab_lattice::FieldSampler;
use grflab_tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Soliton residual below which a state counts as a critical point of λ.
pub const SOLITON_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub sample_id: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub rows: Vec<SampleRow>,
    pub max_ratio: f64,
}

impl SampleReport {
    fn from_rows(rows: Vec<SampleRow>) -> Self {
        let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        SampleReport { rows, max_ratio }
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.lhs.is_finite() && r.rhs.is_finite() && r.ratio.is_finite())
    }
}

/// `lhs / rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    const TINY: f64 = 1e-300;
    if rhs > TINY {
        lhs / rhs
    } else if lhs <= TINY {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Uniform `[−1, 1]` entries (homogeneous) or a smooth random field with
/// amplitude 1 per component (lattice).
pub fn random_tensor(state: &GeometryState, rank: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let n = state.dim();
    match lattice_grid(state) {
        Some(grid) => FieldSampler::new(grid, rng.gen()).tensor(rank, 1.0),
        None => {
            let comps = n.pow(rank as u32);
            Tensor::from_vec(n, rank, 1, (0..comps).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        }
    }
}

/// A random 2-tensor scaled to unit f-twisted norm.
pub fn random_direction(state: &GeometryState, rng: &mut ChaCha8Rng) -> Tensor {
    let gamma = random_tensor(state, 2, rng);
    let norm = Geometry::new(state).norm(&gamma);
    gamma.scale(1.0 / norm)
}

/// Optional projection applied to each sampled direction (e.g. onto a slice).
pub type Projection<'a> = &'a dyn Fn(&Tensor) -> Tensor;

fn directions(state: &GeometryState, radius: f64, count: usize, seed: u64, project: Option<Projection>) -> Vec<Tensor> {
    let geo = Geometry::new(state);
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut gamma = random_direction(state, &mut rng);
            if let Some(p) = project {
                gamma = p(&gamma);
                let norm = geo.norm(&gamma);
                if norm > 0.0 {
                    gamma = gamma.scale(1.0 / norm);
                }
            }
            gamma.scale(radius)
        })
        .collect()
}

fn require_soliton(state: &GeometryState) -> Result<(GeometryState, f64), FunctionalError> {
    let (s, res) = with_minimizer(state)?;
    let (rg, rb) = Geometry::new(&s).soliton_residual();
    if rg.max(rb) > SOLITON_TOL {
        return Err(FunctionalError::NotSoliton(rg.max(rb)));
    }
    Ok((s, res.lambda))
}

/// Rows `(|λ − λ₀|^{1/2}, ‖Rc^{H,f}‖_f)` for `count` perturbations of norm `radius`.
pub fn lojasiewicz_sample(
    soliton: &GeometryState,
    radius: f64,
    count: usize,
    seed: u64,
    project: Option<Projection>,
) -> Result<SampleReport, FunctionalError> {
    let (base, lambda0) = require_soliton(soliton)?;
    let mut rows = Vec::with_capacity(count);
    for (i, gamma) in directions(&base, radius, count, seed, project).iter().enumerate() {
        let (s, res) = with_minimizer(&base.perturbed(gamma, 1.0)?)?;
        let lhs = (res.lambda - lambda0).abs().sqrt();
        let geo = Geometry::new(&s);
        let rhs = geo.norm(&geo.rc_hf());
        rows.push(SampleRow {
            sample_id: i,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
        });
    }
    Ok(SampleReport::from_rows(rows))
}

/// Rows `(‖Rc^H‖_f, ‖Rc^{H,f}‖_f)` around a generalized Einstein metric.
pub fn transversality_sample(
    einstein: &GeometryState,
    radius: f64,
    count: usize,
    seed: u64,
    project: Option<Projection>,
) -> Result<SampleReport, FunctionalError> {
    let res = lambda_min(einstein)?;
    let oscillation = res.f.data().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - res.f.data().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let base = einstein.with_f(res.f);
    let (rg, rb) = Geometry::new(&base).soliton_residual();
    let residual = rg.max(rb);
    if residual > SOLITON_TOL || oscillation > SOLITON_TOL {
        return Err(FunctionalError::NotEinstein { residual, oscillation });
    }
    let mut rows = Vec::with_capacity(count);
    for (i, gamma) in directions(&base, radius, count, seed, project).iter().enumerate() {
        let (s, _) = with_minimizer(&base.perturbed(gamma, 1.0)?)?;
        let geo = Geometry::new(&s);
        let lhs = geo.norm(&geo.rc_h());
        let rhs = geo.norm(&geo.rc_hf());
        rows.push(SampleRow {
            sample_id: i,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
        });
    }
    Ok(SampleReport::from_rows(rows))
}
