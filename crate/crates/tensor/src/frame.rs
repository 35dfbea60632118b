use crate::tensor::Tensor;
use std::any::Any;
use std::fmt::Debug;

/// A global frame `{e_i}` on a compact manifold together with a quadrature.
///
/// Tensors are expressed in this frame. The frame supplies the directional
/// derivative `e_m(T)` of component functions, the structure constants of the
/// frame brackets `[e_i, e_j] = c_ij^k e_k` (constant) and the reference volume
/// weight of each point.
pub trait Frame: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn npts(&self) -> usize;

    /// Reference volume carried by each point.
    fn cell_volume(&self) -> f64;

    /// Rank-3 constant tensor `c[i][j][k]`.
    fn structure_constants(&self) -> &Tensor;

    /// `out[m, i…] = e_m(t[i…])`; the new index comes first.
    fn derivative(&self, t: &Tensor) -> Tensor;

    /// `out[i…] = Σ_m e_m(t[m, i…])`.
    fn divergence(&self, t: &Tensor) -> Tensor {
        let d = self.derivative(t);
        trace_first_two(&d)
    }

    fn label(&self) -> String;

    /// Access to the concrete backend, e.g. to recover lattice parameters.
    fn as_any(&self) -> &dyn Any;

    /// True when every invariant field is constant (no spatial points).
    fn is_homogeneous(&self) -> bool {
        self.npts() == 1
    }

    fn total_volume(&self) -> f64 {
        self.cell_volume() * self.npts() as f64
    }
}

/// `out[i…] = Σ_m t[m, m, i…]`.
pub fn trace_first_two(t: &Tensor) -> Tensor {
    let n = t.n();
    assert!(t.rank() >= 2);
    let rank = t.rank() - 2;
    let inner = n.pow(rank as u32);
    let comps = t.comps();
    let mut out = Tensor::zeros(n, rank, t.npts());
    for p in 0..t.npts() {
        let a = t.at(p);
        let o = out.at_mut(p);
        for m in 0..n {
            let base = (m * n + m) * inner;
            for c in 0..inner {
                o[c] += a[base + c];
            }
        }
        debug_assert_eq!(a.len(), comps);
    }
    out
}
