//! Small dense tensors batched over the points of a frame.

pub mod einsum;
pub mod frame;
pub mod krylov;
pub mod linalg;
pub mod tensor;

pub use einsum::einsum;
pub use frame::{trace_first_two, Frame};
pub use linalg::{check_spd, contract_all, contract_slot, determinant, inverse, min_eigenvalue, SpdError};
pub use tensor::{flatten, pairwise_sum, unflatten, Tensor};

/// Levi-Civita symbol on three indices.
pub fn epsilon3() -> Tensor {
    Tensor::from_fn(3, 3, 1, |_, i| permutation_sign(i))
}

/// Sign of the permutation `idx` of `0..len`, or 0 when an index repeats.
pub fn permutation_sign(idx: &[usize]) -> f64 {
    let mut s = 1.0;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if idx[a] == idx[b] {
                return 0.0;
            }
            if idx[a] > idx[b] {
                s = -s;
            }
        }
    }
    s
}

/// Largest deviation of a tensor from full antisymmetry.
pub fn antisymmetry_defect(t: &Tensor) -> f64 {
    let r = t.rank();
    let mut worst = 0.0f64;
    for a in 0..r {
        for b in a + 1..r {
            let mut perm: Vec<usize> = (0..r).collect();
            perm.swap(a, b);
            let swapped = t.permute(&perm);
            worst = worst.max((t + &swapped).max_abs());
        }
    }
    worst
}

/// Full antisymmetrization `Alt(t)` (average over signed permutations).
pub fn antisymmetrize(t: &Tensor) -> Tensor {
    let r = t.rank();
    let perms = permutations(r);
    let mut out = Tensor::zeros(t.n(), r, t.npts());
    for p in &perms {
        out = out.axpy(permutation_sign(p), &t.permute(p));
    }
    out.scale(1.0 / perms.len() as f64)
}

fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(r - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_is_antisymmetric() {
        let e = epsilon3();
        assert_eq!(e.get(0, &[0, 1, 2]), 1.0);
        assert_eq!(e.get(0, &[1, 0, 2]), -1.0);
        assert_eq!(antisymmetry_defect(&e), 0.0);
    }

    #[test]
    fn antisymmetrize_is_projection() {
        let t = Tensor::from_fn(3, 3, 1, |_, i| (i[0] + 2 * i[1] * i[2] + 1) as f64);
        let a = antisymmetrize(&t);
        assert!(antisymmetry_defect(&a) < 1e-14);
        assert!((&antisymmetrize(&a) - &a).max_abs() < 1e-14);
    }
}
