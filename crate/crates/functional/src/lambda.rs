use grflab_geometry::{volume_log, Geometry, GeometryError, GeometryState};
use grflab_lattice::{GroundStateError, LatticeFrame, LatticeGrid, SchrodingerOperator};
use grflab_tensor::Tensor;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    GroundState(#[from] GroundStateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("base state is not a generalized Einstein metric: soliton residual {residual:.3e}, oscillation of f {oscillation:.3e}")]
    NotEinstein { residual: f64, oscillation: f64 },
    #[error("state is not a steady soliton (residual {0:.3e})")]
    NotSoliton(f64),
    #[error("states have different background H0; their λ values are not comparable")]
    BackgroundMismatch,
}

/// `λ(g, b)` with its minimizer.
#[derive(Debug, Clone)]
pub struct LambdaResult {
    pub lambda: f64,
    pub f: Tensor,
    /// `|∫ e^{−f} dV − 1|`.
    pub normalization_residual: f64,
    /// Largest pointwise deviation of `R − |H|²/12 + 2Δf − |∇f|²` from `λ`.
    pub pointwise_residual: f64,
    /// Eigen-residual of the discrete Schrödinger problem (0 on homogeneous states).
    pub eigen_residual: f64,
}

pub fn lattice_grid(state: &GeometryState) -> Option<LatticeGrid> {
    state
        .frame()
        .as_any()
        .downcast_ref::<LatticeFrame>()
        .map(|f| *f.grid())
}

/// `F(g, b, f) = ∫ (R − |H|²/12 + |∇f|²) e^{−f} dV`.
pub fn f_value(state: &GeometryState) -> f64 {
    let geo = Geometry::new(state);
    let df = geo.df();
    let integrand = geo.curvature().potential().axpy(1.0, &geo.pointwise_inner(df, df));
    geo.integrate(&integrand)
}

/// Lowest eigenvalue of `−4Δ + R − |H|²/12` and the normalized minimizer
/// `f = −2 ln u`.
pub fn lambda_min(state: &GeometryState) -> Result<LambdaResult, FunctionalError> {
    let geo = Geometry::new(state);
    let v = geo.curvature().potential();
    let (lambda, f, eigen_residual) = if state.is_homogeneous() {
        // constant potential: the ground state is constant
        let f = Tensor::scalar(state.dim(), volume_log(state.g(), state.frame().as_ref()));
        (v.value(), f, 0.0)
    } else {
        let grid = lattice_grid(state).expect("non-homogeneous states live on a lattice");
        let gs = SchrodingerOperator::new(grid, state.g(), &v).ground_state(500)?;
        (gs.lambda, gs.f, gs.residual)
    };
    let with_f = Geometry::new(&state.with_f(f.clone()));
    let normalization_residual = (with_f.integrate(&Tensor::scalar(state.dim(), 1.0)) - 1.0).abs();
    let pointwise_residual = with_f.lambda_density().map(|x| x - lambda).max_abs();
    Ok(LambdaResult {
        lambda,
        f,
        normalization_residual,
        pointwise_residual,
        eigen_residual,
    })
}

pub fn lambda(state: &GeometryState) -> Result<f64, FunctionalError> {
    Ok(lambda_min(state)?.lambda)
}

/// The state with `f` replaced by the λ-minimizer.
pub fn with_minimizer(state: &GeometryState) -> Result<(GeometryState, LambdaResult), FunctionalError> {
    let res = lambda_min(state)?;
    Ok((state.with_f(res.f.clone()), res))
}

/// `−∫ ⟨γ, Rc^{H,f}⟩ e^{−f} dV` at the given `f`.
pub fn first_variation(state: &GeometryState, gamma: &Tensor) -> f64 {
    let geo = Geometry::new(state);
    -geo.inner(gamma, &geo.rc_hf())
}

/// `λ` along `state + tγ` (b moves by `−t·skew γ`, H0 fixed).
pub fn lambda_along(state: &GeometryState, gamma: &Tensor, t: f64) -> Result<f64, FunctionalError> {
    lambda(&state.perturbed(gamma, t)?)
}

/// Central difference `(λ(+ε) − λ(−ε)) / 2ε`.
pub fn fd_first_variation(state: &GeometryState, gamma: &Tensor, eps: f64) -> Result<f64, FunctionalError> {
    Ok((lambda_along(state, gamma, eps)? - lambda_along(state, gamma, -eps)?) / (2.0 * eps))
}

/// Second central difference `(λ(+t) − 2λ(0) + λ(−t)) / t²`.
pub fn fd_second_variation(state: &GeometryState, gamma: &Tensor, t: f64) -> Result<f64, FunctionalError> {
    let l0 = lambda(state)?;
    Ok((lambda_along(state, gamma, t)? - 2.0 * l0 + lambda_along(state, gamma, -t)?) / (t * t))
}

/// Refuses to compare λ across different backgrounds.
pub fn lambda_difference(a: &GeometryState, b: &GeometryState) -> Result<f64, FunctionalError> {
    if !a.same_background(b, 1e-12) {
        return Err(FunctionalError::BackgroundMismatch);
    }
    Ok(lambda(a)? - lambda(b)?)
}
