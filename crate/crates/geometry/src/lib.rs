//! Connections, curvature and f-twisted operators of a generalized metric
//! `(g, b, f)` with background torsion `H0`, written against the [`Frame`]
//! abstraction so the same code runs on Lie groups and lattice tori.
//!
//! Conventions: all stored indices are down; `H²_ij = H_ikl H_j^kl`,
//! `|H|² = H_ijk H^ijk`; `Rm(X,Y,Z,W) = ⟨∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z, W⟩`.
//!
//! [`Frame`]: grflab_tensor::Frame

mod calculus;
mod curvature;
mod geometry;
mod state;

pub use calculus::{cov, cov_slots, exterior_d};
pub use curvature::{curvature_tensor, CurvaturePack, IdentityResiduals};
pub use geometry::{levi_civita, Geometry, Sign};
pub use state::{volume_log, GeometryError, GeometryState, CLOSED_TOL};
