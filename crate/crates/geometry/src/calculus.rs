//! Metric-free calculus on a frame: exterior derivative and connection
//! derivatives with prescribed coefficients.

use grflab_tensor::{flatten, unflatten, Frame, Tensor};

/// Exterior derivative of a `p`-form in a frame with brackets:
/// `(dω)(x0..xp) = Σ_i (−1)^i x_i(ω(..x̂_i..)) + Σ_{i<j} (−1)^{i+j} ω([x_i,x_j], ..)`.
pub fn exterior_d(frame: &dyn Frame, form: &Tensor) -> Tensor {
    let n = frame.dim();
    let p = form.rank();
    let der = frame.derivative(form);
    let c = frame.structure_constants().at(0);
    let brackets = c.iter().any(|&x| x != 0.0);
    let npts = der.npts().max(form.npts());
    let comps = n.pow((p + 1) as u32);
    let mut out = Tensor::zeros(n, p + 1, npts);
    let mut idx = vec![0usize; p + 1];
    let mut rest = vec![0usize; p];
    for pt in 0..npts {
        let dd = der.at(pt);
        let w = form.at(pt);
        let o = out.at_mut(pt);
        for flat in 0..comps {
            unflatten(flat, n, &mut idx);
            let mut v = 0.0;
            for i in 0..=p {
                let mut r = 0;
                for (k, &x) in idx.iter().enumerate() {
                    if k != i {
                        rest[r] = x;
                        r += 1;
                    }
                }
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                v += s * dd[idx[i] * n.pow(p as u32) + flatten(&rest, n)];
            }
            if brackets && p >= 1 {
                for i in 0..=p {
                    for j in i + 1..=p {
                        let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        let mut r = 1;
                        for (k, &x) in idx.iter().enumerate() {
                            if k != i && k != j {
                                rest[r] = x;
                                r += 1;
                            }
                        }
                        for m in 0..n {
                            let b = c[(idx[i] * n + idx[j]) * n + m];
                            if b != 0.0 {
                                rest[0] = m;
                                v += s * b * w[flatten(&rest, n)];
                            }
                        }
                    }
                }
            }
            o[flat] = v;
        }
    }
    out
}

/// `(∇_m T)_{a1..ap} = e_m(T_{a..}) − Σ_s A^{(s)}_{m a_s}^c T_{..c..}` where slot `s`
/// uses connection coefficients `slots[s]` (`A[m][a][c]`, `∇_m e_a = A_ma^c e_c`).
pub fn cov_slots(frame: &dyn Frame, t: &Tensor, slots: &[&Tensor]) -> Tensor {
    let n = frame.dim();
    let r = t.rank();
    assert_eq!(slots.len(), r, "one connection per slot");
    let der = frame.derivative(t);
    let mut npts = der.npts().max(t.npts());
    for a in slots {
        npts = npts.max(a.npts());
    }
    let comps = t.comps();
    let mut out = der.broadcast(npts);
    let mut idx = vec![0usize; r];
    let strides: Vec<usize> = (0..r).map(|s| n.pow((r - 1 - s) as u32)).collect();
    for pt in 0..npts {
        let tt = t.at(pt);
        let views: Vec<&[f64]> = slots.iter().map(|a| a.at(pt)).collect();
        let o = out.at_mut(pt);
        for flat in 0..comps {
            unflatten(flat, n, &mut idx);
            for (s, a) in views.iter().enumerate() {
                let ai = idx[s];
                let base = flat - ai * strides[s];
                for m in 0..n {
                    let row = &a[(m * n + ai) * n..(m * n + ai + 1) * n];
                    let mut acc = 0.0;
                    for c in 0..n {
                        acc += row[c] * tt[base + c * strides[s]];
                    }
                    o[m * comps + flat] -= acc;
                }
            }
        }
    }
    out
}

pub fn cov(frame: &dyn Frame, t: &Tensor, a: &Tensor) -> Tensor {
    let slots: Vec<&Tensor> = (0..t.rank()).map(|_| a).collect();
    cov_slots(frame, t, &slots)
}
