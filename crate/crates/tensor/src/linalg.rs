use crate::tensor::Tensor;
use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpdError {
    #[error("metric is not symmetric at point {point} (asymmetry {asymmetry:.3e})")]
    NotSymmetric { point: usize, asymmetry: f64 },
    #[error("metric is not positive definite at point {point}: eigenvalue {eigenvalue:.6e}")]
    NotPositive { point: usize, eigenvalue: f64 },
}

pub fn point_matrix(t: &Tensor, p: usize) -> DMatrix<f64> {
    assert_eq!(t.rank(), 2);
    let n = t.n();
    DMatrix::from_row_slice(n, n, t.at(p))
}

fn store_matrix(out: &mut Tensor, p: usize, m: &DMatrix<f64>) {
    let n = m.nrows();
    let o = out.at_mut(p);
    for i in 0..n {
        for j in 0..n {
            o[i * n + j] = m[(i, j)];
        }
    }
}

/// Smallest eigenvalue of a symmetric 2-tensor at every point.
pub fn min_eigenvalue(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(t.n(), 0, t.npts());
    for p in 0..t.npts() {
        let e = SymmetricEigen::new(point_matrix(t, p)).eigenvalues;
        out.at_mut(p)[0] = e.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    out
}

/// Checks symmetry (to `tol`, relative) and positivity of a metric field.
pub fn check_spd(g: &Tensor, tol: f64) -> Result<(), SpdError> {
    let n = g.n();
    for p in 0..g.npts() {
        let a = g.at(p);
        let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                asym = asym.max((a[i * n + j] - a[j * n + i]).abs());
            }
        }
        if asym > tol * scale {
            return Err(SpdError::NotSymmetric {
                point: p,
                asymmetry: asym,
            });
        }
        let e = SymmetricEigen::new(point_matrix(g, p)).eigenvalues;
        let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(lo > 0.0) {
            return Err(SpdError::NotPositive {
                point: p,
                eigenvalue: lo,
            });
        }
    }
    Ok(())
}

/// Pointwise inverse of an invertible 2-tensor field.
pub fn inverse(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(t.n(), 2, t.npts());
    for p in 0..t.npts() {
        let m = point_matrix(t, p)
            .try_inverse()
            .expect("singular matrix in pointwise inverse");
        let s = (&m + m.transpose()) * 0.5;
        let use_sym = (&m - &s).amax() < 1e-14 * m.amax().max(1.0);
        store_matrix(&mut out, p, if use_sym { &s } else { &m });
    }
    out
}

/// Pointwise determinant.
pub fn determinant(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(t.n(), 0, t.npts());
    for p in 0..t.npts() {
        out.at_mut(p)[0] = point_matrix(t, p).determinant();
    }
    out
}

/// Replace slot `slot` by its contraction with a matrix field:
/// `out[…a…] = Σ_b m[a, b] t[…b…]`.
pub fn contract_slot(t: &Tensor, slot: usize, m: &Tensor) -> Tensor {
    let n = t.n();
    let r = t.rank();
    assert!(slot < r);
    assert_eq!(m.rank(), 2);
    let npts = crate::tensor::common_npts(t.npts(), m.npts());
    let inner = n.pow((r - 1 - slot) as u32);
    let outer = n.pow(slot as u32);
    let comps = t.comps();
    let mut out = Tensor::zeros(n, r, npts);
    for p in 0..npts {
        let a = t.at(p);
        let mm = m.at(p);
        let o = &mut out.data_mut()[p * comps..(p + 1) * comps];
        for hi in 0..outer {
            for ai in 0..n {
                for b in 0..n {
                    let w = mm[ai * n + b];
                    if w == 0.0 {
                        continue;
                    }
                    let src = (hi * n + b) * inner;
                    let dst = (hi * n + ai) * inner;
                    for lo in 0..inner {
                        o[dst + lo] += w * a[src + lo];
                    }
                }
            }
        }
    }
    out
}

/// Contract every slot with `m` (raising with `g⁻¹`, lowering with `g`).
pub fn contract_all(t: &Tensor, m: &Tensor) -> Tensor {
    let mut out = t.clone();
    for s in 0..t.rank() {
        out = contract_slot(&out, s, m);
    }
    if t.rank() == 0 {
        out = out.broadcast(crate::tensor::common_npts(t.npts(), m.npts()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_diag() {
        let g = Tensor::constant(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let gi = inverse(&g);
        assert!((gi.get(0, &[0, 0]) - 0.5).abs() < 1e-15);
        assert!((gi.get(0, &[1, 1]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spd_rejects_negative() {
        let g = Tensor::constant(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(check_spd(&g, 1e-12), Err(SpdError::NotPositive { .. })));
    }

    #[test]
    fn contract_second_slot() {
        let t = Tensor::constant(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let m = Tensor::constant(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = contract_slot(&t, 1, &m);
        // t·mᵀ
        assert_eq!(c.data(), &[2.0, 1.0, 4.0, 3.0]);
    }
}
