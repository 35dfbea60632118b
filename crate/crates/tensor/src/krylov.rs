//! Conjugate gradients on flat vectors with a caller-supplied operator.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    crate::pairwise_sum(&prods)
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` for symmetric positive (semi)definite `A`, starting from `x`.
///
/// Stops when `‖b − A x‖ ≤ tol · ‖b‖`. A consistent singular system converges
/// to the solution of least norm relative to the start vector.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    conjugate_gradient_in(apply, dot, b, x, tol, max_iter)
}

/// Conjugate gradients for an operator that is self-adjoint with respect to
/// the inner product `inner` (norms are taken in that inner product too).
///
/// Without convergence, `x` holds the iterate of smallest residual; iteration
/// also stops once the residual grows far past that minimum, which happens
/// when roundoff makes a singular system inconsistent.
pub fn conjugate_gradient_in(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    inner: impl Fn(&[f64], &[f64]) -> f64,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let bn = inner(b, b).max(0.0).sqrt();
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = inner(&r, &r);
    let mut best = (rr, x.to_vec());
    let mut iterations = max_iter;
    for it in 0..max_iter {
        if rr.max(0.0).sqrt() <= tol * bn {
            return CgOutcome {
                iterations: it,
                residual: rr.max(0.0).sqrt() / bn,
                converged: true,
            };
        }
        let ap = apply(&p);
        let pap = inner(&p, &ap);
        if pap <= 0.0 {
            iterations = it;
            break;
        }
        let alpha = rr / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = inner(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        if rr < best.0 {
            best = (rr, x.to_vec());
        } else if rr > 1e8 * best.0 {
            iterations = it + 1;
            break;
        }
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr > best.0 {
        x.copy_from_slice(&best.1);
        rr = best.0;
    }
    let res = rr.max(0.0).sqrt() / bn;
    CgOutcome {
        iterations,
        residual: res,
        converged: res <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut v = 3.0 * x[i];
                    if i > 0 {
                        v -= x[i - 1];
                    }
                    if i + 1 < n {
                        v -= x[i + 1];
                    }
                    v
                })
                .collect()
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let out = conjugate_gradient(apply, &b, &mut x, 1e-12, 500);
        assert!(out.converged);
        let r = apply(&x);
        assert!(r.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}
