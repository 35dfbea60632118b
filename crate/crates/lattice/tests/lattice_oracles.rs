use grflab_lattice::{ground_state, FieldSampler, LatticeGrid, SchrodingerOperator, TrigPolynomial};
use grflab_tensor::{Frame, Tensor};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn derivative_error(n: usize, order: usize) -> f64 {
    let grid = LatticeGrid::new(3, n, 2.0 * PI, order).unwrap();
    let frame = grid.frame();
    let field = Tensor::scalar_field(3, (0..grid.npts()).map(|p| grid.position(p)[0].sin()).collect());
    let d = frame.derivative(&field);
    (0..grid.npts())
        .map(|p| (d.at(p)[0] - grid.position(p)[0].cos()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn sine_derivative_converges_at_stencil_order() {
    for order in [2usize, 4] {
        let e1 = derivative_error(16, order);
        let e2 = derivative_error(32, order);
        let observed = (e1 / e2).log2();
        assert!((observed - order as f64).abs() < 0.1, "order {order}: observed {observed}");
    }
}

#[test]
fn central_difference_has_exact_discrete_symbol() {
    let grid = LatticeGrid::new(3, 8, 1.0, 2).unwrap();
    let h = grid.spacing();
    let k = 2.0 * PI / grid.length();
    let field = Tensor::scalar_field(3, (0..grid.npts()).map(|p| (k * grid.position(p)[2]).sin()).collect());
    let d = grid.frame().derivative(&field);
    for p in 0..grid.npts() {
        let exact_symbol = (k * h).sin() / h * (k * grid.position(p)[2]).cos();
        assert!((d.at(p)[2] - exact_symbol).abs() < 1e-12);
    }
}

#[test]
fn random_trig_polynomial_matches_analytic_gradient() {
    let rng = ChaCha8Rng::seed_from_u64(11);
    let errs: Vec<f64> = [16usize, 32]
        .iter()
        .map(|&n| {
            let grid = LatticeGrid::new(3, n, 2.0 * PI, 4).unwrap();
            let mut r = rng.clone();
            let tp = TrigPolynomial::random(3, grid.length(), 2, 4, 1.0, &mut r);
            let d = grid.frame().derivative(&tp.sample(&grid));
            (0..grid.npts())
                .map(|p| {
                    let g = tp.gradient(&grid.position(p));
                    (0..3).map(|a| (d.at(p)[a] - g[a]).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let rel = errs[0] / 4.0;
    assert!(rel < 0.05, "relative error {rel}");
    assert!((errs[0] / errs[1]).log2() > 3.8);
}

fn dense_spectrum(op: &SchrodingerOperator) -> Vec<f64> {
    let n = op.len();
    let mu = op.weights();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0 / mu[j].sqrt();
        let col = op.apply_form(&e);
        for i in 0..n {
            m[(i, j)] = col[i] / mu[i].sqrt();
        }
    }
    let s = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[test]
fn sine_potential_matches_dense_oracle() {
    let grid = LatticeGrid::new(3, 8, 2.0 * PI, 2).unwrap();
    let v = Tensor::scalar_field(
        3,
        (0..grid.npts())
            .map(|p| {
                let x = grid.position(p);
                x[0].sin() + 0.5 * (x[1] + 2.0 * x[2]).cos()
            })
            .collect(),
    );
    let mut s = FieldSampler::new(grid, 5);
    let g = s.metric(0.2);
    let op = SchrodingerOperator::new(grid, &g, &v);
    let gs = op.ground_state(500).unwrap();
    let ev = dense_spectrum(&op);
    assert!((gs.lambda - ev[0]).abs() < 1e-8, "{} vs {}", gs.lambda, ev[0]);
    assert!(ev[1] - ev[0] > 1e-3, "ground state is simple");
    assert!(gs.u.data().iter().all(|&u| u > 0.0));
}

#[test]
fn sine_potential_n16_flat_matches_separable_oracle() {
    // flat metric, V = sin x: the spectrum separates, so the 3D ground state
    // equals the 1D ground state of the same stencil along x
    let grid = LatticeGrid::new(3, 16, 2.0 * PI, 2).unwrap();
    let v = Tensor::scalar_field(3, (0..grid.npts()).map(|p| grid.position(p)[0].sin()).collect());
    let gs = ground_state(grid, &Tensor::identity(3), &v).unwrap();
    let n = 16;
    let h = grid.spacing();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        // averaged forward/backward second difference is the compact 3-point one
        m[(i, i)] = 8.0 / (h * h) + (i as f64 * h).sin();
        m[(i, (i + 1) % n)] -= 4.0 / (h * h);
        m[(i, (i + n - 1) % n)] -= 4.0 / (h * h);
    }
    let ev = SymmetricEigen::new(m).eigenvalues;
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((gs.lambda - lo).abs() < 1e-8, "{} vs {}", gs.lambda, lo);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rayleigh_quotient_bounds_ground_state(seed in 0u64..1000) {
        let grid = LatticeGrid::new(3, 8, 2.0 * PI, 2).unwrap();
        let mut s = FieldSampler::new(grid, seed);
        let g = s.metric(0.2);
        let v = s.scalar(1.0);
        let op = SchrodingerOperator::new(grid, &g, &v);
        let gs = op.ground_state(500).unwrap();
        let trial = s.scalar(1.0).map(|x| x + 2.0);
        prop_assert!(gs.lambda <= op.rayleigh_quotient(trial.data()) + 1e-12);
    }

    #[test]
    fn central_difference_is_antisymmetric(seed in 0u64..1000) {
        // Σ (∂a) b = −Σ a (∂b): summation by parts without boundary terms
        let grid = LatticeGrid::new(3, 8, 1.0, 4).unwrap();
        let mut s = FieldSampler::new(grid, seed);
        let a = s.scalar(1.0);
        let b = s.scalar(1.0);
        let f = grid.frame();
        let da = f.derivative(&a);
        let db = f.derivative(&b);
        for axis in 0..3 {
            let l: f64 = (0..grid.npts()).map(|p| da.at(p)[axis] * b.at(p)[0]).sum();
            let r: f64 = (0..grid.npts()).map(|p| a.at(p)[0] * db.at(p)[axis]).sum();
            prop_assert!((l + r).abs() < 1e-10);
        }
    }
}
