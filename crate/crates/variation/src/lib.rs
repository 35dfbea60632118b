//! Second variation of `λ`: the divergence pair `div̄_f`, the mixed Laplacian
//! `Δ̄_f`, the operators `L̄_f` and `N̄_f`, their commutation identities and
//! stability spectra on `ker div̄_f`.

mod comm;
mod ops;
mod spectrum;

pub use comm::{CommResiduals, ParallelResiduals};
pub use ops::{OneFormPair, VariationError, VariationOps, SOLVE_TOL};
pub use spectrum::{SpectrumReport, SpectrumTolerances, Verdict};
