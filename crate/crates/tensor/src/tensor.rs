use std::ops::{Add, Mul, Neg, Sub};

/// A field of rank-`rank` tensors over `npts` points, all indices down.
///
/// Storage is point-major: the components of point `p` occupy
/// `data[p * n^rank .. (p + 1) * n^rank]` in row-major index order.
/// A tensor with `npts == 1` broadcasts against any point count.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    n: usize,
    rank: usize,
    npts: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, rank: usize, npts: usize) -> Self {
        let comps = n.pow(rank as u32);
        Tensor {
            n,
            rank,
            npts,
            data: vec![0.0; comps * npts],
        }
    }

    pub fn from_vec(n: usize, rank: usize, npts: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            n.pow(rank as u32) * npts,
            "tensor data length does not match shape"
        );
        Tensor {
            n,
            rank,
            npts,
            data,
        }
    }

    /// A single-point (spatially constant) tensor.
    pub fn constant(n: usize, rank: usize, comps: &[f64]) -> Self {
        Self::from_vec(n, rank, 1, comps.to_vec())
    }

    /// Constant scalar over an `n`-dimensional frame.
    pub fn scalar(n: usize, v: f64) -> Self {
        Self::from_vec(n, 0, 1, vec![v])
    }

    /// Scalar field with `npts` points over an `n`-dimensional frame.
    pub fn scalar_field(n: usize, values: Vec<f64>) -> Self {
        let npts = values.len();
        Self::from_vec(n, 0, npts, values)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, 2, 1);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn from_fn(n: usize, rank: usize, npts: usize, mut f: impl FnMut(usize, &[usize]) -> f64) -> Self {
        let mut t = Self::zeros(n, rank, npts);
        let comps = t.comps();
        let mut idx = vec![0usize; rank];
        for p in 0..npts {
            for c in 0..comps {
                unflatten(c, n, &mut idx);
                t.data[p * comps + c] = f(p, &idx);
            }
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn comps(&self) -> usize {
        self.n.pow(self.rank as u32)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Components at point `p`; a constant tensor answers for every point.
    pub fn at(&self, p: usize) -> &[f64] {
        let c = self.comps();
        let p = if self.npts == 1 { 0 } else { p };
        &self.data[p * c..(p + 1) * c]
    }

    pub fn at_mut(&mut self, p: usize) -> &mut [f64] {
        let c = self.comps();
        &mut self.data[p * c..(p + 1) * c]
    }

    pub fn get(&self, p: usize, idx: &[usize]) -> f64 {
        self.at(p)[flatten(idx, self.n)]
    }

    pub fn set(&mut self, p: usize, idx: &[usize], v: f64) {
        let n = self.n;
        self.at_mut(p)[flatten(idx, n)] = v;
    }

    /// Scalar value of a rank-0, single-point tensor.
    pub fn value(&self) -> f64 {
        assert!(self.rank == 0 && self.npts == 1, "value() needs a constant scalar");
        self.data[0]
    }

    pub fn is_constant(&self) -> bool {
        self.npts == 1
    }

    pub fn broadcast(&self, npts: usize) -> Tensor {
        if self.npts == npts {
            return self.clone();
        }
        assert_eq!(self.npts, 1, "cannot broadcast {} points to {}", self.npts, npts);
        let mut data = Vec::with_capacity(self.data.len() * npts);
        for _ in 0..npts {
            data.extend_from_slice(&self.data);
        }
        Tensor::from_vec(self.n, self.rank, npts, data)
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        assert_eq!(self.rank, other.rank, "rank mismatch");
        assert_eq!(self.n, other.n, "dimension mismatch");
        let npts = common_npts(self.npts, other.npts);
        let comps = self.comps();
        let mut out = Tensor::zeros(self.n, self.rank, npts);
        for p in 0..npts {
            let a = self.at(p);
            let b = other.at(p);
            let o = &mut out.data[p * comps..(p + 1) * comps];
            for c in 0..comps {
                o[c] = f(a[c], b[c]);
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor::from_vec(self.n, self.rank, self.npts, self.data.iter().map(|&x| f(x)).collect())
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|x| s * x)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Tensor) -> Tensor {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar_field(&self, s: &Tensor) -> Tensor {
        assert_eq!(s.rank, 0, "expected a scalar field");
        let npts = common_npts(self.npts, s.npts);
        let comps = self.comps();
        let mut out = Tensor::zeros(self.n, self.rank, npts);
        for p in 0..npts {
            let w = s.at(p)[0];
            let a = self.at(p);
            for c in 0..comps {
                out.data[p * comps + c] = w * a[c];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Permute slots: `out[i_{perm[0]}, …] = self[i_0, …]`; equivalently
    /// slot `s` of the input becomes slot `perm[s]` of the output.
    pub fn permute(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.rank);
        let n = self.n;
        let comps = self.comps();
        let mut out = Tensor::zeros(n, self.rank, self.npts);
        let mut idx = vec![0usize; self.rank];
        let mut oidx = vec![0usize; self.rank];
        let map: Vec<usize> = (0..comps)
            .map(|c| {
                unflatten(c, n, &mut idx);
                for s in 0..self.rank {
                    oidx[perm[s]] = idx[s];
                }
                flatten(&oidx, n)
            })
            .collect();
        for p in 0..self.npts {
            let a = self.at(p);
            let o = &mut out.data[p * comps..(p + 1) * comps];
            for c in 0..comps {
                o[map[c]] = a[c];
            }
        }
        out
    }

    pub fn transpose(&self) -> Tensor {
        assert_eq!(self.rank, 2);
        self.permute(&[1, 0])
    }

    pub fn sym(&self) -> Tensor {
        self.axpy(1.0, &self.transpose()).scale(0.5)
    }

    pub fn skew(&self) -> Tensor {
        self.axpy(-1.0, &self.transpose()).scale(0.5)
    }

    /// Sum over points of the components, no weights.
    pub fn sum(&self) -> f64 {
        pairwise_sum(&self.data)
    }

}

impl Add for &Tensor {
    type Output = Tensor;
    fn add(self, rhs: &Tensor) -> Tensor {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Tensor {
    type Output = Tensor;
    fn sub(self, rhs: &Tensor) -> Tensor {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Tensor {
    type Output = Tensor;
    fn mul(self, rhs: f64) -> Tensor {
        self.scale(rhs)
    }
}

pub fn common_npts(a: usize, b: usize) -> usize {
    if a == b || b == 1 {
        a
    } else if a == 1 {
        b
    } else {
        panic!("point counts {a} and {b} are incompatible")
    }
}

pub fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

pub fn unflatten(mut c: usize, n: usize, idx: &mut [usize]) {
    for s in (0..idx.len()).rev() {
        idx[s] = c % n;
        c /= n;
    }
}

/// Fixed-order pairwise summation; the reduction tree depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
