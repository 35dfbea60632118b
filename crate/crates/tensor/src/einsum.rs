//! Pointwise Einstein summation over point-batched tensors.
//!
//! `einsum("ijl,lk->ijk", &[&a, &b])` contracts at every point; single-point
//! operands broadcast. Index letters are plain ASCII lowercase.

use crate::tensor::{common_npts, Tensor};

struct Plan {
    n: usize,
    out_rank: usize,
    // for each assignment of all letters: output offset, then operand offsets
    table: Vec<usize>,
    k: usize,
}

fn parse(spec: &str, nops: usize) -> (Vec<Vec<u8>>, Vec<u8>) {
    let (lhs, rhs) = spec
        .split_once("->")
        .unwrap_or_else(|| panic!("einsum spec `{spec}` lacks `->`"));
    let ins: Vec<Vec<u8>> = lhs.split(',').map(|s| s.trim().bytes().collect()).collect();
    assert_eq!(ins.len(), nops, "einsum spec `{spec}` expects {} operands", ins.len());
    (ins, rhs.trim().bytes().collect())
}

fn plan(spec: &str, ops: &[&Tensor], n: usize) -> Plan {
    let (ins, out) = parse(spec, ops.len());
    let mut letters: Vec<u8> = out.clone();
    for s in &ins {
        for &c in s {
            if !letters.contains(&c) {
                letters.push(c);
            }
        }
    }
    for (s, t) in ins.iter().zip(ops) {
        assert_eq!(s.len(), t.rank(), "einsum `{spec}`: operand rank mismatch");
    }
    let nl = letters.len();
    let pos = |c: u8| letters.iter().position(|&x| x == c).unwrap();
    let strides = |word: &[u8]| -> Vec<(usize, usize)> {
        let r = word.len();
        word.iter()
            .enumerate()
            .map(|(s, &c)| (pos(c), n.pow((r - 1 - s) as u32)))
            .collect()
    };
    let out_st = strides(&out);
    let in_st: Vec<_> = ins.iter().map(|w| strides(w)).collect();
    let total = n.pow(nl as u32);
    let k = ops.len() + 1;
    let mut table = Vec::with_capacity(total * k);
    let mut asg = vec![0usize; nl];
    for _ in 0..total {
        table.push(out_st.iter().map(|&(l, s)| asg[l] * s).sum());
        for st in &in_st {
            table.push(st.iter().map(|&(l, s)| asg[l] * s).sum());
        }
        for d in (0..nl).rev() {
            asg[d] += 1;
            if asg[d] < n {
                break;
            }
            asg[d] = 0;
        }
    }
    Plan {
        n,
        out_rank: out.len(),
        table,
        k,
    }
}

pub fn einsum(spec: &str, ops: &[&Tensor]) -> Tensor {
    assert!(!ops.is_empty());
    let n = ops[0].n();
    let npts = ops.iter().fold(1, |acc, t| common_npts(acc, t.npts()));
    let pl = plan(spec, ops, n);
    let mut out = Tensor::zeros(pl.n, pl.out_rank, npts);
    let oc = out.comps();
    for p in 0..npts {
        let views: Vec<&[f64]> = ops.iter().map(|t| t.at(p)).collect();
        let o = &mut out.data_mut()[p * oc..(p + 1) * oc];
        for row in pl.table.chunks_exact(pl.k) {
            let mut v = 1.0;
            for (j, view) in views.iter().enumerate() {
                v *= view[row[j + 1]];
            }
            o[row[0]] += v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_product() {
        let a = Tensor::constant(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = Tensor::constant(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = einsum("ij,jk->ik", &[&a, &b]);
        assert_eq!(c.data(), &[2.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn trace_and_full_contraction() {
        let a = Tensor::constant(3, 2, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!(einsum("ii->", &[&a]).value(), 6.0);
        assert_eq!(einsum("ij,ij->", &[&a, &a]).value(), 14.0);
    }

    #[test]
    fn broadcasts_points() {
        let a = Tensor::from_fn(2, 1, 3, |p, i| (p + i[0]) as f64);
        let m = Tensor::identity(2).scale(2.0);
        let c = einsum("ij,j->i", &[&m, &a]);
        assert_eq!(c.npts(), 3);
        assert_eq!(c.get(2, &[1]), 6.0);
    }
}
