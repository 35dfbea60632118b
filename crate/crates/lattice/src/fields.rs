use crate::grid::LatticeGrid;
use grflab_tensor::{antisymmetrize, einsum, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::f64::consts::PI;

/// A real trigonometric polynomial `Σ a cos(2π k·x/L) + b sin(2π k·x/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    pub length: f64,
    pub terms: Vec<(Vec<i32>, f64, f64)>,
}

impl TrigPolynomial {
    pub fn random(dim: usize, length: f64, kmax: i32, nterms: usize, amplitude: f64, rng: &mut impl Rng) -> Self {
        let terms = (0..nterms)
            .map(|_| {
                let k: Vec<i32> = (0..dim).map(|_| rng.gen_range(-kmax..=kmax)).collect();
                let a = amplitude * rng.gen_range(-1.0..1.0);
                let b = amplitude * rng.gen_range(-1.0..1.0);
                (k, a, b)
            })
            .collect();
        TrigPolynomial { length, terms }
    }

    fn phase(&self, k: &[i32], x: &[f64]) -> f64 {
        2.0 * PI / self.length * k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let t = self.phase(k, x);
                a * t.cos() + b * t.sin()
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (k, a, b) in &self.terms {
            let t = self.phase(k, x);
            let d = -a * t.sin() + b * t.cos();
            for (ga, &ka) in g.iter_mut().zip(k) {
                *ga += d * 2.0 * PI * ka as f64 / self.length;
            }
        }
        g
    }

    pub fn sample(&self, grid: &LatticeGrid) -> Tensor {
        let vals = (0..grid.npts()).map(|p| self.value(&grid.position(p))).collect();
        Tensor::scalar_field(grid.dim(), vals)
    }
}

/// Deterministic generator of smooth random fields on a grid.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    grid: LatticeGrid,
    rng: ChaCha8Rng,
    pub kmax: i32,
    pub nterms: usize,
}

impl FieldSampler {
    pub fn new(grid: LatticeGrid, seed: u64) -> Self {
        FieldSampler {
            grid,
            rng: ChaCha8Rng::seed_from_u64(seed),
            kmax: 1,
            nterms: 3,
        }
    }

    pub fn scalar(&mut self, amplitude: f64) -> Tensor {
        TrigPolynomial::random(self.grid.dim(), self.grid.length(), self.kmax, self.nterms, amplitude, &mut self.rng)
            .sample(&self.grid)
    }

    /// A rank-`rank` field with independent smooth components.
    pub fn tensor(&mut self, rank: usize, amplitude: f64) -> Tensor {
        let n = self.grid.dim();
        let comps = n.pow(rank as u32);
        let npts = self.grid.npts();
        let cols: Vec<Tensor> = (0..comps).map(|_| self.scalar(amplitude)).collect();
        Tensor::from_fn(n, rank, npts, |p, idx| cols[grflab_tensor::flatten(idx, n)].at(p)[0])
    }

    pub fn form(&mut self, rank: usize, amplitude: f64) -> Tensor {
        antisymmetrize(&self.tensor(rank, amplitude))
    }

    /// `δ + A Aᵀ·s` style metric: identity plus a small smooth symmetric field.
    pub fn metric(&mut self, amplitude: f64) -> Tensor {
        let a = self.tensor(2, amplitude);
        let s = a.sym();
        let id = Tensor::identity(self.grid.dim());
        let sq = einsum("ik,jk->ij", &[&s, &s]);
        &(&id + &s) + &sq.scale(0.5)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field() {
        let g = LatticeGrid::new(3, 8, 1.0, 2).unwrap();
        let a = FieldSampler::new(g, 7).tensor(2, 0.1);
        let b = FieldSampler::new(g, 7).tensor(2, 0.1);
        assert_eq!(a, b);
    }

    #[test]
    fn metric_is_spd() {
        let g = LatticeGrid::new(3, 8, 1.0, 2).unwrap();
        let m = FieldSampler::new(g, 3).metric(0.3);
        assert!(grflab_tensor::check_spd(&m, 1e-12).is_ok());
    }
}
