use grflab_tensor::*;
use proptest::prelude::*;

fn tensor(n: usize, rank: usize, npts: usize) -> impl Strategy<Value = Tensor> {
    proptest::collection::vec(-1.0f64..1.0, n.pow(rank as u32) * npts)
        .prop_map(move |d| Tensor::from_vec(n, rank, npts, d))
}

fn spd(n: usize) -> impl Strategy<Value = Tensor> {
    tensor(n, 2, 1).prop_map(move |a| {
        let aat = einsum("ik,jk->ij", &[&a, &a]);
        aat.axpy(1.0, &Tensor::identity(n).scale(0.5))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn einsum_matches_explicit_loops(a in tensor(3, 3, 2), m in tensor(3, 2, 2)) {
        let out = einsum("ijk,kl->lij", &[&a, &m]);
        for p in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        let want: f64 = (0..3).map(|k| a.get(p, &[i, j, k]) * m.get(p, &[k, l])).sum();
                        prop_assert!((out.get(p, &[l, i, j]) - want).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn contract_slot_agrees_with_einsum(t in tensor(4, 3, 1), m in tensor(4, 2, 1)) {
        let a = contract_slot(&t, 1, &m);
        let b = einsum("ibk,ab->iak", &[&t, &m]);
        prop_assert!((&a - &b).max_abs() < 1e-14);
    }

    #[test]
    fn sym_and_skew_split_and_are_orthogonal(t in tensor(4, 2, 3)) {
        prop_assert!((&(&t.sym() + &t.skew()) - &t).max_abs() < 1e-15);
        prop_assert!((&t.sym() - &t.sym().transpose()).max_abs() == 0.0);
        prop_assert!(einsum("ij,ij->", &[&t.sym(), &t.skew()]).max_abs() < 1e-14);
    }

    #[test]
    fn antisymmetrize_is_a_projection(t in tensor(4, 3, 1)) {
        let a = antisymmetrize(&t);
        prop_assert!(antisymmetry_defect(&a) < 1e-15);
        prop_assert!((&antisymmetrize(&a) - &a).max_abs() < 1e-15);
    }

    #[test]
    fn inverse_and_determinant_of_spd(g in spd(4), h in spd(4)) {
        prop_assert!(check_spd(&g, 1e-12).is_ok());
        let id = einsum("ij,jk->ik", &[&g, &inverse(&g)]);
        prop_assert!((&id - &Tensor::identity(4)).max_abs() < 1e-10);
        let gh = einsum("ij,jk->ik", &[&g, &h]);
        let (dg, dh, dgh) = (determinant(&g).value(), determinant(&h).value(), determinant(&gh).value());
        prop_assert!((dgh - dg * dh).abs() < 1e-10 * dgh.abs().max(1.0));
        prop_assert!(min_eigenvalue(&g).value() >= 0.5 - 1e-12);
    }

    #[test]
    fn broadcasting_matches_repeated_constants(c in tensor(3, 2, 1), f in tensor(3, 2, 5)) {
        let a = &c + &f;
        let b = &c.broadcast(5) + &f;
        prop_assert_eq!(a, b);
    }
}

#[test]
fn epsilon_contracts_to_the_identity() {
    let e = epsilon3();
    let d = einsum("ikl,jkl->ij", &[&e, &e]);
    assert_eq!((&d - &Tensor::identity(3).scale(2.0)).max_abs(), 0.0);
    assert_eq!(permutation_sign(&[2, 0, 1]), 1.0);
    assert_eq!(permutation_sign(&[0, 0, 1]), 0.0);
}
