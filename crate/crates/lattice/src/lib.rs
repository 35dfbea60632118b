//! Periodic finite-difference discretization of flat tori.

mod fields;
mod grid;
mod ground;

pub use fields::{FieldSampler, TrigPolynomial};
pub use grid::{GridError, LatticeFrame, LatticeGrid};
pub use ground::{ground_state, GroundState, GroundStateError, SchrodingerOperator, EIGEN_TOL};

use grflab_tensor::{determinant, pairwise_sum, Tensor};

/// `Σ value · e^{−f} · √det g · cell volume`.
pub fn integrate_f(field: &Tensor, f: &Tensor, g: &Tensor, grid: &LatticeGrid) -> f64 {
    assert_eq!(field.rank(), 0);
    let npts = grid.npts();
    let det = determinant(g);
    let vol = grid.cell_volume();
    let terms: Vec<f64> = (0..npts)
        .map(|p| field.at(p)[0] * (-f.at(p)[0]).exp() * det.at(p)[0].sqrt() * vol)
        .collect();
    pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_volume_integrates_one() {
        let grid = LatticeGrid::new(3, 8, 1.0, 2).unwrap();
        let one = Tensor::scalar(3, 1.0);
        let v = integrate_f(&one, &Tensor::scalar(3, 0.0), &Tensor::identity(3), &grid);
        assert!((v - 1.0).abs() < 1e-14);
    }
}
