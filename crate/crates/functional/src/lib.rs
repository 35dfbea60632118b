//! The generalized Einstein-Hilbert functional `F`, the entropy `λ` with its
//! minimizer, first and second variations by finite differences, and sampled
//! Lojasiewicz and transversality inequalities.

mod lambda;
mod sampling;

pub use lambda::{
    f_value, fd_first_variation, fd_second_variation, first_variation, lambda, lambda_along, lambda_difference,
    lambda_min, lattice_grid, with_minimizer, FunctionalError, LambdaResult,
};
pub use sampling::{
    lojasiewicz_sample, random_direction, random_tensor, ratio, transversality_sample, Projection, SampleReport, SampleRow,
    SOLITON_TOL,
};
