//! Lowest eigenpair of the Schrödinger operator `−4Δ_g + V` on a lattice.
//!
//! The Dirichlet form is discretized with one-sided differences averaged over
//! forward and backward choices, which keeps the stencil compact: its kernel is
//! the constants only, so the ground state is simple and positive.

use crate::grid::LatticeGrid;
use grflab_tensor::krylov::{conjugate_gradient, dot, norm};
use grflab_tensor::{determinant, inverse, Tensor};

pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GroundStateError {
    #[error("inverse iteration did not converge after {iterations} steps (eigen-residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("inner conjugate-gradient solve stalled (relative residual {0:.3e})")]
    InnerSolve(f64),
    #[error("ground state changes sign (min/max = {0:.3e}); Perron root not found")]
    NotPositive(f64),
}

#[derive(Debug, Clone)]
pub struct GroundState {
    /// Lowest eigenvalue, evaluated as a Rayleigh quotient.
    pub lambda: f64,
    /// Eigenfunction with `Σ u² √det g · cell = 1`, `u > 0`.
    pub u: Tensor,
    /// `f = −2 ln u`, so `∫ e^{−f} dV = 1`.
    pub f: Tensor,
    pub iterations: usize,
    pub residual: f64,
}

/// `−4Δ_g + V` in weak form: `Q(u) = ∫ 4|∇u|²_g + V u² dV`.
#[derive(Debug, Clone)]
pub struct SchrodingerOperator {
    grid: LatticeGrid,
    mu: Vec<f64>,
    ginv: Tensor,
    potential: Vec<f64>,
}

impl SchrodingerOperator {
    pub fn new(grid: LatticeGrid, g: &Tensor, potential: &Tensor) -> Self {
        let npts = grid.npts();
        let det = determinant(g).broadcast(npts);
        let vol = grid.cell_volume();
        let mu = det.data().iter().map(|d| d.sqrt() * vol).collect();
        SchrodingerOperator {
            grid,
            mu,
            ginv: inverse(g).broadcast(npts),
            potential: potential.broadcast(npts).into_data(),
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.mu
    }

    fn one_sided(&self, u: &[f64], axis: usize, forward: bool, out: &mut [f64]) {
        let h = self.grid.spacing();
        for p in 0..u.len() {
            out[p] = if forward {
                (u[self.grid.shift(p, axis, 1)] - u[p]) / h
            } else {
                (u[p] - u[self.grid.shift(p, axis, -1)]) / h
            };
        }
    }

    /// Transpose of `one_sided`, accumulated into `out`.
    fn one_sided_t(&self, flux: &[f64], axis: usize, forward: bool, out: &mut [f64]) {
        let h = self.grid.spacing();
        for p in 0..flux.len() {
            out[p] += if forward {
                (flux[self.grid.shift(p, axis, -1)] - flux[p]) / h
            } else {
                (flux[p] - flux[self.grid.shift(p, axis, 1)]) / h
            };
        }
    }

    /// Stiffness `K` with `uᵀKu = Σ μ g^{ij} ∂_i u ∂_j u` (averaged one-sided).
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.dim();
        let npts = u.len();
        let mut grads = Vec::with_capacity(2 * n);
        for axis in 0..n {
            for forward in [true, false] {
                let mut d = vec![0.0; npts];
                self.one_sided(u, axis, forward, &mut d);
                grads.push(d);
            }
        }
        let gi = self.ginv.data();
        let mut out = vec![0.0; npts];
        let mut flux = vec![0.0; npts];
        for i in 0..n {
            for si in [true, false] {
                flux.iter_mut().for_each(|f| *f = 0.0);
                for j in 0..n {
                    let (choices, w): (&[bool], f64) = if i == j {
                        (if si { &[true] } else { &[false] }, 0.5)
                    } else {
                        (&[true, false], 0.25)
                    };
                    for &sj in choices {
                        let d = &grads[2 * j + usize::from(!sj)];
                        for p in 0..npts {
                            flux[p] += w * self.mu[p] * gi[p * n * n + i * n + j] * d[p];
                        }
                    }
                }
                self.one_sided_t(&flux, i, si, &mut out);
            }
        }
        out
    }

    /// `(4K + μV) u`.
    pub fn apply_form(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.apply_stiffness(u);
        for p in 0..u.len() {
            out[p] = 4.0 * out[p] + self.mu[p] * self.potential[p] * u[p];
        }
        out
    }

    /// `Q(u) / ∫u²`.
    pub fn rayleigh_quotient(&self, u: &[f64]) -> f64 {
        let a = self.apply_form(u);
        let num = dot(u, &a);
        let den: f64 = dot(&u.iter().zip(&self.mu).map(|(x, m)| x * m).collect::<Vec<_>>(), u);
        num / den
    }

    /// Symmetrized operator `S = M^{-1/2}(4K + μV)M^{-1/2}` acting on `w = M^{1/2}u`.
    fn apply_symmetric(&self, w: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = w.iter().zip(&self.mu).map(|(w, m)| w / m.sqrt()).collect();
        self.apply_form(&u).iter().zip(&self.mu).map(|(a, m)| a / m.sqrt()).collect()
    }

    pub fn ground_state(&self, max_iter: usize) -> Result<GroundState, GroundStateError> {
        let npts = self.len();
        let vmin = self.potential.iter().cloned().fold(f64::INFINITY, f64::min);
        let shift = vmin - 1.0;
        let shifted = |w: &[f64]| -> Vec<f64> {
            let mut a = self.apply_symmetric(w);
            for (a, w) in a.iter_mut().zip(w) {
                *a -= shift * w;
            }
            a
        };
        let mut w: Vec<f64> = self.mu.iter().map(|m| m.sqrt()).collect();
        let nw = norm(&w);
        w.iter_mut().for_each(|x| *x /= nw);
        let mut residual = f64::INFINITY;
        for it in 0..max_iter {
            let sw = self.apply_symmetric(&w);
            let theta = dot(&w, &sw);
            let r: Vec<f64> = sw.iter().zip(&w).map(|(a, b)| a - theta * b).collect();
            residual = norm(&r);
            if residual <= EIGEN_TOL {
                return self.finish(&w, it, residual);
            }
            let mut x = w.clone();
            let out = conjugate_gradient(&shifted, &w, &mut x, 1e-14, 20 * npts.max(100));
            if !out.converged && out.residual > 1e-9 {
                return Err(GroundStateError::InnerSolve(out.residual));
            }
            let nx = norm(&x);
            w = x.into_iter().map(|v| v / nx).collect();
        }
        Err(GroundStateError::NoConvergence {
            iterations: max_iter,
            residual,
        })
    }

    fn finish(&self, w: &[f64], iterations: usize, residual: f64) -> Result<GroundState, GroundStateError> {
        let mut u: Vec<f64> = w.iter().zip(&self.mu).map(|(w, m)| w / m.sqrt()).collect();
        let sign = if u.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        u.iter_mut().for_each(|x| *x *= sign);
        let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo <= 0.0 {
            return Err(GroundStateError::NotPositive(lo / hi));
        }
        let mass: f64 = u.iter().zip(&self.mu).map(|(u, m)| u * u * m).sum();
        u.iter_mut().for_each(|x| *x /= mass.sqrt());
        let lambda = self.rayleigh_quotient(&u);
        let n = self.grid.dim();
        let f = u.iter().map(|x| -2.0 * x.ln()).collect();
        Ok(GroundState {
            lambda,
            u: Tensor::scalar_field(n, u),
            f: Tensor::scalar_field(n, f),
            iterations,
            residual,
        })
    }
}

/// Smallest eigenpair of `−4Δ_g + V` with the minimizer normalization.
pub fn ground_state(grid: LatticeGrid, g: &Tensor, potential: &Tensor) -> Result<GroundState, GroundStateError> {
    SchrodingerOperator::new(grid, g, potential).ground_state(500)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(grid: &LatticeGrid) -> Tensor {
        Tensor::identity(grid.dim())
    }

    #[test]
    fn zero_potential_gives_zero() {
        let grid = LatticeGrid::new(3, 8, 1.0, 2).unwrap();
        let gs = ground_state(grid, &flat(&grid), &Tensor::scalar(3, 0.0)).unwrap();
        assert!(gs.lambda.abs() < 1e-12);
        let u0 = gs.u.at(0)[0];
        assert!(gs.u.data().iter().all(|u| (u - u0).abs() < 1e-9));
    }

    #[test]
    fn constant_potential_shifts() {
        let grid = LatticeGrid::new(3, 8, 2.0, 2).unwrap();
        let gs = ground_state(grid, &flat(&grid), &Tensor::scalar(3, -1.75)).unwrap();
        assert!((gs.lambda + 1.75).abs() < 1e-12);
        // ∫ e^{-f} dV = 1
        let total: f64 = gs.f.data().iter().map(|f| (-f).exp() * grid.cell_volume()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stiffness_is_symmetric() {
        let grid = LatticeGrid::new(3, 8, 1.0, 2).unwrap();
        let mut s = crate::FieldSampler::new(grid, 1);
        let g = s.metric(0.3);
        let op = SchrodingerOperator::new(grid, &g, &Tensor::scalar(3, 0.0));
        let a = s.scalar(1.0).into_data();
        let b = s.scalar(1.0).into_data();
        let lhs = dot(&op.apply_stiffness(&a), &b);
        let rhs = dot(&a, &op.apply_stiffness(&b));
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
