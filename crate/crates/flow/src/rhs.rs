use grflab_functional::{with_minimizer, FunctionalError};
use grflab_geometry::{Geometry, GeometryState};
use grflab_tensor::Tensor;

/// Velocity `(∂g/∂t, ∂b/∂t)` of a flow.
#[derive(Debug, Clone)]
pub struct FlowRhs {
    pub dg: Tensor,
    pub db: Tensor,
}

impl FlowRhs {
    pub fn max_abs(&self) -> f64 {
        self.dg.max_abs().max(self.db.max_abs())
    }

    /// `∂g/∂t − ∂b/∂t`, the velocity of `g − b`.
    pub fn combined(&self) -> Tensor {
        &self.dg - &self.db
    }
}

/// Which right-hand side drives an integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// `∂g = −2Rc + ½H²`, `∂b = −d*H`.
    Plain,
    /// `∂g = −2(Rc − ¼H² + ∇²f)`, `∂b = −d*_f H`, with `f` the λ-minimizer.
    Gauged,
}

/// Generalized Ricci flow velocity.
pub fn grf_rhs(state: &GeometryState) -> FlowRhs {
    let geo = Geometry::new(state);
    let c = geo.curvature();
    FlowRhs {
        dg: c.rc.scale(-2.0).axpy(0.5, &c.h2).sym(),
        db: c.d_star_h.scale(-1.0).skew(),
    }
}

/// Largest entry of `∂(g − b)/∂t + 2Rc⁺` for the plain flow.
pub fn grf_consistency(state: &GeometryState) -> f64 {
    let geo = Geometry::new(state);
    let rhs = grf_rhs(state);
    rhs.combined().axpy(2.0, &geo.curvature().rc_plus).max_abs()
}

/// Gauge-fixed velocity `−2Rc^{H,f}` split into its symmetric part and `b`-part,
/// with `f` recomputed as the λ-minimizer.
pub fn gauged_rhs(state: &GeometryState) -> Result<FlowRhs, FunctionalError> {
    let (s, _) = with_minimizer(state)?;
    Ok(gauged_rhs_at(&s))
}

/// Gauge-fixed velocity at the `f` stored in the state.
pub fn gauged_rhs_at(state: &GeometryState) -> FlowRhs {
    let geo = Geometry::new(state);
    let c = geo.curvature();
    let dg = c.rc.axpy(-0.25, &c.h2).axpy(1.0, &geo.hessian(state.f())).scale(-2.0);
    FlowRhs {
        dg: dg.sym(),
        db: geo.d_star(geo.h()).scale(-1.0).skew(),
    }
}

pub fn flow_rhs(state: &GeometryState, kind: FlowKind) -> Result<FlowRhs, FunctionalError> {
    match kind {
        FlowKind::Plain => Ok(grf_rhs(state)),
        FlowKind::Gauged => gauged_rhs(state),
    }
}
