//! Hermitian layer: complex structures, the Bismut–Ricci form, pluriclosed
//! flow and the `ξ`/`η̃` splitting of variations.

mod complex;
mod decomposition;
mod flow;
mod hermitian;
mod igsd;

pub use complex::{ComplexStructure, SQUARE_TOL};
pub use decomposition::{
    aeppli_direction, constrained_span, d_bismut_star, decompose_variation, hermitian_symmetric_part,
    integrability_defect, k4_formula, k4_second_variation, k4_slice_basis, K4Report, PluriclosedDecomposition, SLICE_TOL,
};
pub use flow::{pluriclosed_flow, PluriclosedFlowRow, PluriclosedTrajectory};
pub use hermitian::{
    bismut_ricci, bismut_torsion, hermitian_pack, hopf_state, lie_derivative_bracket, pluriclosed_rhs,
    pluriclosed_state, BismutRicci, HermitianPack, HermitianResiduals, PggResiduals, PluriclosedRhs,
    COMPATIBILITY_TOL,
};
pub use igsd::{
    bismut_laplacian, d_operator, hodge_laplacian, igsd_complex_checks, l_bar_bismut, lequivalent_bound, lfxi_rhs,
    IgsdComplexReport, IgsdElementCheck, LequivalentBound,
};

use grflab_geometry::GeometryError;
use grflab_variation::VariationError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PluriclosedError {
    #[error("J² ≠ −id (residual {0:.3e})")]
    NotComplex(f64),
    #[error("J is not compatible with g (residual {0:.3e})")]
    Incompatible(f64),
    #[error("variation is not in ker div̄_f (relative residual {0:.3e})")]
    NotInSlice(f64),
    #[error("no complex structure preset `{0}`")]
    NoPreset(String),
    #[error("{0} is only implemented on homogeneous states")]
    HomogeneousOnly(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Variation(#[from] VariationError),
}
