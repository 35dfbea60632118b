use crate::calculus::exterior_d;
use grflab_tensor::{antisymmetry_defect, check_spd, determinant, Frame, SpdError, Tensor};
use std::sync::Arc;

pub const CLOSED_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Metric(#[from] SpdError),
    #[error("b is not skew (defect {0:.3e})")]
    NotSkew(f64),
    #[error("H0 is not a 3-form (antisymmetry defect {0:.3e})")]
    NotThreeForm(f64),
    #[error("H0 is not closed (|dH0| = {0:.3e})")]
    NotClosed(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// A point `(g, b, f)` with background 3-form `H0`; the torsion is `H = H0 + db`.
#[derive(Debug, Clone)]
pub struct GeometryState {
    frame: Arc<dyn Frame>,
    g: Tensor,
    b: Tensor,
    h0: Tensor,
    f: Tensor,
}

fn check_shape(name: &str, t: &Tensor, rank: usize, frame: &dyn Frame) -> Result<(), GeometryError> {
    if t.rank() != rank || t.n() != frame.dim() || (t.npts() != 1 && t.npts() != frame.npts()) {
        return Err(GeometryError::Shape(format!(
            "{name} has rank {} over dim {} with {} points; expected rank {rank}, dim {}, {} points",
            t.rank(),
            t.n(),
            t.npts(),
            frame.dim(),
            frame.npts()
        )));
    }
    Ok(())
}

impl GeometryState {
    pub fn new(frame: Arc<dyn Frame>, g: Tensor, b: Tensor, h0: Tensor, f: Tensor) -> Result<Self, GeometryError> {
        check_shape("g", &g, 2, frame.as_ref())?;
        check_shape("b", &b, 2, frame.as_ref())?;
        check_shape("H0", &h0, 3, frame.as_ref())?;
        check_shape("f", &f, 0, frame.as_ref())?;
        check_spd(&g, 1e-12)?;
        let skew = (&b + &b.transpose()).max_abs();
        if skew > 1e-12 * b.max_abs().max(1.0) {
            return Err(GeometryError::NotSkew(skew));
        }
        let defect = antisymmetry_defect(&h0);
        if defect > 1e-12 * h0.max_abs().max(1.0) {
            return Err(GeometryError::NotThreeForm(defect));
        }
        let dh = exterior_d(frame.as_ref(), &h0).max_abs();
        if dh > CLOSED_TOL * h0.max_abs().max(1.0) {
            return Err(GeometryError::NotClosed(dh));
        }
        Ok(GeometryState { frame, g, b, h0, f })
    }

    /// `(g, b = 0, H0)` with `f` chosen so that `∫ e^{−f} dV = 1` when `g` is constant.
    pub fn homogeneous(frame: Arc<dyn Frame>, g: Tensor, h0: Tensor) -> Result<Self, GeometryError> {
        let n = frame.dim();
        let f = Tensor::scalar(n, volume_log(&g, frame.as_ref()));
        Self::new(frame, g, Tensor::zeros(n, 2, 1), h0, f)
    }

    pub fn frame(&self) -> &Arc<dyn Frame> {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn g(&self) -> &Tensor {
        &self.g
    }

    pub fn b(&self) -> &Tensor {
        &self.b
    }

    pub fn h0(&self) -> &Tensor {
        &self.h0
    }

    pub fn f(&self) -> &Tensor {
        &self.f
    }

    /// `H = H0 + db`.
    pub fn h(&self) -> Tensor {
        &self.h0 + &exterior_d(self.frame.as_ref(), &self.b)
    }

    pub fn with_f(&self, f: Tensor) -> GeometryState {
        assert_eq!(f.rank(), 0);
        GeometryState { f, ..self.clone() }
    }

    pub fn with_metric(&self, g: Tensor) -> Result<GeometryState, GeometryError> {
        Self::new(self.frame.clone(), g, self.b.clone(), self.h0.clone(), self.f.clone())
    }

    pub fn with_gb(&self, g: Tensor, b: Tensor) -> Result<GeometryState, GeometryError> {
        Self::new(self.frame.clone(), g, b, self.h0.clone(), self.f.clone())
    }

    /// Moves along `γ = h − K`: `g + t h`, `b + t K` (f unchanged).
    pub fn perturbed(&self, gamma: &Tensor, t: f64) -> Result<GeometryState, GeometryError> {
        let h = gamma.sym();
        let k = gamma.skew().scale(-1.0);
        self.with_gb(self.g.axpy(t, &h), self.b.axpy(t, &k))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.frame.is_homogeneous()
    }

    /// Largest `|dH|`, which vanishes because `dH0 = 0` and `d² = 0`.
    pub fn closedness_residual(&self) -> f64 {
        exterior_d(self.frame.as_ref(), &self.h()).max_abs()
    }

    /// Same background `H0` (within `tol`); λ values are only comparable then.
    pub fn same_background(&self, other: &GeometryState, tol: f64) -> bool {
        self.h0.n() == other.h0.n()
            && self.frame.npts() == other.frame.npts()
            && (&self.h0.broadcast(self.frame.npts()) - &other.h0.broadcast(other.frame.npts())).max_abs() <= tol
    }
}

/// `ln ∫ dV_g`; for a homogeneous metric this is the constant minimizer `f = ln V`.
pub fn volume_log(g: &Tensor, frame: &dyn Frame) -> f64 {
    let npts = frame.npts();
    let det = determinant(g).broadcast(npts);
    let v: f64 = grflab_tensor::pairwise_sum(&det.data().iter().map(|d| d.sqrt() * frame.cell_volume()).collect::<Vec<_>>());
    v.ln()
}
