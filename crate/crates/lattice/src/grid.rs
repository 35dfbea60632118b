use grflab_tensor::{Frame, Tensor};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GridError {
    #[error("lattice dimension must be 3 or 4, got {0}")]
    Dim(usize),
    #[error("lattice needs at least 8 points per axis, got {0}")]
    TooCoarse(usize),
    #[error("period must be positive and finite, got {0}")]
    Period(f64),
    #[error("stencil order must be 2 or 4, got {0}")]
    Order(usize),
}

/// A periodic cubic grid on the flat torus `(ℝ/Lℤ)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGrid {
    dim: usize,
    n: usize,
    length: f64,
    order: usize,
}

impl LatticeGrid {
    pub fn new(dim: usize, n: usize, length: f64, order: usize) -> Result<Self, GridError> {
        if dim != 3 && dim != 4 {
            return Err(GridError::Dim(dim));
        }
        if n < 8 {
            return Err(GridError::TooCoarse(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(GridError::Period(length));
        }
        if order != 2 && order != 4 {
            return Err(GridError::Order(order));
        }
        Ok(LatticeGrid { dim, n, length, order })
    }

    /// The default calibration grid: dim 3, N = 16, L = 2π, second order.
    pub fn standard() -> Self {
        Self::new(3, 16, 2.0 * std::f64::consts::PI, 2).unwrap()
    }

    pub fn with_points(self, n: usize) -> Result<Self, GridError> {
        Self::new(self.dim, n, self.length, self.order)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn npts(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn coords(&self, p: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim];
        grflab_tensor::unflatten(p, self.n, &mut idx);
        idx
    }

    pub fn position(&self, p: usize) -> Vec<f64> {
        self.coords(p).into_iter().map(|i| i as f64 * self.spacing()).collect()
    }

    /// Index of the point shifted by `k` cells along `axis`, periodically.
    pub fn shift(&self, p: usize, axis: usize, k: isize) -> usize {
        let s = self.stride(axis);
        let i = (p / s) % self.n;
        let j = (i as isize + k).rem_euclid(self.n as isize) as usize;
        p - i * s + j * s
    }

    pub fn frame(&self) -> LatticeFrame {
        LatticeFrame::new(*self)
    }
}

/// The coordinate frame `∂_1, …, ∂_dim` with central-difference derivatives.
#[derive(Debug, Clone)]
pub struct LatticeFrame {
    grid: LatticeGrid,
    c: Tensor,
    neighbours: Vec<Vec<[usize; 4]>>,
}

impl LatticeFrame {
    pub fn new(grid: LatticeGrid) -> Self {
        let npts = grid.npts();
        let neighbours = (0..grid.dim())
            .map(|a| {
                (0..npts)
                    .map(|p| {
                        [
                            grid.shift(p, a, -2),
                            grid.shift(p, a, -1),
                            grid.shift(p, a, 1),
                            grid.shift(p, a, 2),
                        ]
                    })
                    .collect()
            })
            .collect();
        LatticeFrame {
            c: Tensor::zeros(grid.dim(), 3, 1),
            grid,
            neighbours,
        }
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    /// Central difference of a flat point-major array with `comps` components.
    pub fn diff_axis(&self, data: &[f64], comps: usize, axis: usize, out: &mut [f64]) {
        let h = self.grid.spacing();
        let nb = &self.neighbours[axis];
        let npts = self.grid.npts();
        match self.grid.order() {
            2 => {
                let w = 0.5 / h;
                for p in 0..npts {
                    let [_, m1, p1, _] = nb[p];
                    for c in 0..comps {
                        out[p * comps + c] = w * (data[p1 * comps + c] - data[m1 * comps + c]);
                    }
                }
            }
            _ => {
                let w = 1.0 / (12.0 * h);
                for p in 0..npts {
                    let [m2, m1, p1, p2] = nb[p];
                    for c in 0..comps {
                        out[p * comps + c] = w
                            * (8.0 * (data[p1 * comps + c] - data[m1 * comps + c])
                                - (data[p2 * comps + c] - data[m2 * comps + c]));
                    }
                }
            }
        }
    }
}

impl Frame for LatticeFrame {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn npts(&self) -> usize {
        self.grid.npts()
    }

    fn cell_volume(&self) -> f64 {
        self.grid.cell_volume()
    }

    fn structure_constants(&self) -> &Tensor {
        &self.c
    }

    fn derivative(&self, t: &Tensor) -> Tensor {
        let n = self.dim();
        if t.is_constant() && self.npts() > 1 {
            return Tensor::zeros(n, t.rank() + 1, 1);
        }
        let comps = t.comps();
        let npts = self.npts();
        let mut out = Tensor::zeros(n, t.rank() + 1, npts);
        let mut buf = vec![0.0; comps * npts];
        for axis in 0..n {
            self.diff_axis(t.data(), comps, axis, &mut buf);
            let o = out.data_mut();
            for p in 0..npts {
                let dst = p * n * comps + axis * comps;
                o[dst..dst + comps].copy_from_slice(&buf[p * comps..(p + 1) * comps]);
            }
        }
        out
    }

    fn divergence(&self, t: &Tensor) -> Tensor {
        let n = self.dim();
        assert!(t.rank() >= 1);
        if t.is_constant() && self.npts() > 1 {
            return Tensor::zeros(n, t.rank() - 1, 1);
        }
        let comps = t.comps();
        let inner = comps / n;
        let npts = self.npts();
        let mut out = Tensor::zeros(n, t.rank() - 1, npts);
        let mut slab = vec![0.0; inner * npts];
        let mut buf = vec![0.0; inner * npts];
        for axis in 0..n {
            for p in 0..npts {
                let src = p * comps + axis * inner;
                slab[p * inner..(p + 1) * inner].copy_from_slice(&t.data()[src..src + inner]);
            }
            self.diff_axis(&slab, inner, axis, &mut buf);
            for (o, b) in out.data_mut().iter_mut().zip(&buf) {
                *o += b;
            }
        }
        out
    }

    fn label(&self) -> String {
        format!(
            "lattice(dim={}, N={}, L={}, order={})",
            self.grid.dim(),
            self.grid.points_per_axis(),
            self.grid.length(),
            self.grid.order()
        )
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(LatticeGrid::new(2, 16, 1.0, 2).is_err());
        assert!(LatticeGrid::new(3, 4, 1.0, 2).is_err());
        assert!(LatticeGrid::new(3, 8, 0.0, 2).is_err());
        assert!(LatticeGrid::new(3, 8, 1.0, 3).is_err());
        assert!(LatticeGrid::new(4, 8, 1.0, 4).is_ok());
    }

    #[test]
    fn shift_wraps() {
        let g = LatticeGrid::new(3, 8, 1.0, 2).unwrap();
        let p = 7 * g.stride(1);
        assert_eq!(g.coords(g.shift(p, 1, 1)), vec![0, 0, 0]);
        assert_eq!(g.coords(g.shift(0, 2, -1)), vec![0, 0, 7]);
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let f = LatticeGrid::standard().frame();
        let t = Tensor::scalar_field(3, vec![2.5; f.npts()]);
        assert!(f.derivative(&t).max_abs() < 1e-14);
    }

    #[test]
    fn divergence_matches_trace_of_derivative() {
        let f = LatticeGrid::new(3, 8, 1.0, 4).unwrap().frame();
        let t = Tensor::from_fn(3, 2, f.npts(), |p, i| ((p * 7 + i[0] * 3 + i[1]) % 11) as f64);
        let a = f.divergence(&t);
        let b = grflab_tensor::trace_first_two(&f.derivative(&t));
        assert!((&a - &b).max_abs() < 1e-12);
    }
}
