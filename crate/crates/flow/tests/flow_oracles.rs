use grflab_flow::*;
use grflab_functional::{first_variation, lambda, random_direction, with_minimizer};
use grflab_geometry::{exterior_d, Geometry, GeometryState};
use grflab_lattice::{FieldSampler, LatticeGrid};
use grflab_lie::LieAlgebra;
use grflab_tensor::{epsilon3, Frame, Tensor};
use grflab_variation::{SpectrumTolerances, VariationOps};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn su2(g: Tensor, kappa: f64) -> GeometryState {
    let frame: Arc<dyn Frame> = Arc::new(LieAlgebra::su2().frame());
    GeometryState::homogeneous(frame, g, epsilon3().scale(kappa)).unwrap()
}

fn soliton() -> GeometryState {
    with_minimizer(&su2(Tensor::identity(3), 1.0)).unwrap().0
}

fn lattice(seed: u64, amp: f64) -> GeometryState {
    let grid = LatticeGrid::new(3, 8, 2.0 * std::f64::consts::PI, 2).unwrap();
    let mut fs = FieldSampler::new(grid, seed);
    let frame: Arc<dyn Frame> = Arc::new(grid.frame());
    let (g, b) = (fs.metric(amp), fs.form(2, amp));
    GeometryState::new(frame, g, b, epsilon3().scale(0.2), Tensor::scalar(3, 0.0)).unwrap()
}

fn diag(a: [f64; 3]) -> Tensor {
    Tensor::from_fn(3, 2, 1, |_, i| if i[0] == i[1] { a[i[0]] } else { 0.0 })
}

#[test]
fn rhs_oracles() {
    let frame: Arc<dyn Frame> = Arc::new(LieAlgebra::abelian(3).frame());
    let flat = GeometryState::homogeneous(frame, Tensor::identity(3), Tensor::zeros(3, 3, 1)).unwrap();
    assert_eq!(grf_rhs(&flat).max_abs(), 0.0);
    assert!(grf_rhs(&su2(Tensor::identity(3), 1.0)).max_abs() < 1e-14);
    let r = grf_rhs(&su2(Tensor::identity(3), 0.9));
    assert!((&r.dg - &Tensor::identity(3).scale(0.81 - 1.0)).max_abs() < 1e-14);
    assert!(r.db.max_abs() < 1e-15);
}

#[test]
fn plain_flow_is_bismut_ricci_flow() {
    let g = Tensor::identity(3).axpy(1.0, &diag([0.3, -0.1, 0.05]));
    assert!(grf_consistency(&su2(g, 0.7)) < 1e-12);
    // on a lattice Rc is symmetric only up to truncation error, and ∂g keeps the symmetric part
    let s = lattice(2, 0.2);
    let defect = Geometry::new(&s).identity_residuals().ricci_symmetry;
    assert!(grf_consistency(&s) <= defect + 1e-12);
}

#[test]
fn gauged_rhs_oracles() {
    assert!(gauged_rhs(&soliton()).unwrap().max_abs() < 1e-14);
    let g = Tensor::identity(3).axpy(1.0, &diag([0.3, -0.1, 0.05]));
    let s = su2(g, 0.7);
    let (a, b) = (grf_rhs(&s), gauged_rhs(&s).unwrap());
    assert!((&a.dg - &b.dg).max_abs() < 1e-15 && (&a.db - &b.db).max_abs() < 1e-15);
    // lattice: the velocity of g − b is −2Rc^{H,f}
    let (s, _) = with_minimizer(&lattice(4, 0.1)).unwrap();
    let rhs = gauged_rhs_at(&s);
    let geo = Geometry::new(&s);
    let rc = geo.rc_hf();
    assert!((&rhs.dg - &rc.sym().scale(-2.0)).max_abs() < 1e-12);
    // the skew part of Rc + ∇²f is truncation error only
    let defect = geo.curvature().rc.axpy(1.0, &geo.hessian(s.f())).skew().max_abs();
    assert!(defect < 1e-2);
    assert!((&rhs.db - &rc.skew().scale(2.0)).max_abs() <= 2.0 * defect + 1e-12);
}

#[test]
fn velocity_norm_is_twice_the_soliton_residual() {
    let s = with_minimizer(&su2(Tensor::identity(3).axpy(1.0, &diag([0.2, -0.1, 0.0])), 0.8)).unwrap().0;
    let geo = Geometry::new(&s);
    let (rg, rb) = geo.soliton_residual();
    let v = geo.norm(&gauged_rhs_at(&s).combined());
    assert!((v - 2.0 * (rg * rg + 0.25 * rb * rb).sqrt()).abs() < 1e-12 * v);
}

#[test]
fn soliton_is_stationary() {
    let s = soliton();
    let control = FlowControl {
        stop_residual: -1.0,
        ..FlowControl::for_state(&s, 10.0, FlowKind::Gauged)
    };
    let traj = integrate(&s, &control).unwrap();
    assert_eq!(traj.stop, StopReason::ReachedEnd);
    assert!((traj.times().last().unwrap() - 10.0).abs() < 1e-12);
    for st in &traj.states {
        assert!((st.g() - s.g()).max_abs() < 1e-10 && st.b().max_abs() < 1e-10);
    }
    // ε = 0 runs of the experiment are stationary too
    let rep = stability_experiment(&s, &[0.0], 1, 1.0, 1).unwrap();
    assert!(rep.runs.iter().all(|r| r.final_residual < 1e-12 && r.stayed_in_neighborhood));
}

#[test]
fn perturbed_soliton_converges_at_the_spectral_rate() {
    let s = soliton();
    let spectrum = VariationOps::new(&s).stability_spectrum(SpectrumTolerances::default()).unwrap();
    let mu = spectrum.smallest_negative().unwrap();
    let start = s.perturbed(&diag([1.0, -1.0, 0.0]), 1e-2).unwrap();
    let traj = integrate(&start, &FlowControl::for_state(&start, 30.0, FlowKind::Gauged)).unwrap();
    assert_eq!(traj.stop, StopReason::Converged);
    assert!(traj.final_residual() < 1e-8);
    assert!(traj.monotonicity_violation() < 1e-12);
    let fit = traj.rate_fit.unwrap();
    assert!(fit.r_squared > 0.99);
    // the linearized flow is ∂γ = 2N̄γ
    assert!((fit.rate.unwrap() / (2.0 * mu.abs()) - 1.0).abs() < 0.05, "{fit:?} {mu}");
    // times strictly increase and H is always H0 + db
    assert!(traj.rows.windows(2).all(|w| w[1].t > w[0].t));
    for st in &traj.states {
        let h = st.h0() + &exterior_d(st.frame().as_ref(), st.b());
        assert_eq!((&st.h() - &h).max_abs(), 0.0);
    }
}

#[test]
fn lambda_derivative_is_twice_the_squared_gradient() {
    let s = with_minimizer(&su2(Tensor::identity(3).axpy(1.0, &diag([0.2, -0.1, 0.0])), 0.8)).unwrap().0;
    let geo = Geometry::new(&s);
    let exact = 2.0 * geo.norm_sq(&geo.rc_hf());
    let rhs = gauged_rhs_at(&s);
    assert!((first_variation(&s, &rhs.combined()) - exact).abs() < 1e-13);
    let fd = |dt: f64| {
        let fwd = lambda(&rk4_step(&s, dt, FlowKind::Gauged).unwrap()).unwrap();
        let back = lambda(&rk4_step(&s, -dt, FlowKind::Gauged).unwrap()).unwrap();
        ((fwd - back) / (2.0 * dt) - exact).abs()
    };
    let (e1, e2) = (fd(1e-2), fd(5e-3));
    assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
}

#[test]
fn rk4_step_is_time_reversible_to_fifth_order() {
    let s = su2(Tensor::identity(3).axpy(1.0, &diag([0.2, -0.1, 0.0])), 0.8);
    let err = |dt: f64| {
        let back = rk4_step(&rk4_step(&s, dt, FlowKind::Plain).unwrap(), -dt, FlowKind::Plain).unwrap();
        (back.g() - s.g()).max_abs()
    };
    let (e1, e2) = (err(0.1), err(0.05));
    assert!((e1 / e2).log2() > 4.5, "{e1} {e2}");
}

#[test]
fn shrinking_sphere_blows_up() {
    // κ = 0: g(t) = (1 − t)·id, extinct at t = 1
    let s = su2(Tensor::identity(3), 0.0);
    let traj = integrate(&s, &FlowControl::for_state(&s, 5.0, FlowKind::Plain)).unwrap();
    match traj.stop {
        StopReason::Blowup { t, .. } => assert!((t - 1.0).abs() < 1e-3, "{t}"),
        other => panic!("{other:?}"),
    }
    assert!(traj.monotonicity_violation() == 0.0);
}

#[test]
fn lattice_flow_increases_lambda() {
    let s = lattice(3, 0.05);
    let control = FlowControl {
        dt_initial: 0.05,
        ..FlowControl::for_state(&s, 0.3, FlowKind::Gauged)
    };
    let traj = integrate(&s, &control).unwrap();
    assert_eq!(traj.stop, StopReason::ReachedEnd);
    assert!(traj.monotonicity_violation() <= 1e-6);
    let l = traj.lambda_series();
    assert!(l.last().unwrap() > l.first().unwrap());
}

#[test]
fn rate_fit_uses_final_decade() {
    let rows: Vec<TrajectoryRow> = (0..40)
        .map(|i| {
            let t = 0.25 * i as f64;
            TrajectoryRow { t, lambda: 0.0, r_g: 3.0 * (-1.5 * t).exp(), r_b: 0.0, min_eig_g: 1.0 }
        })
        .collect();
    let fit = fit_rate(&rows).unwrap();
    assert!((fit.rate.unwrap() - 1.5).abs() < 1e-10);
    let noisy: Vec<TrajectoryRow> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| TrajectoryRow { r_g: if i % 2 == 0 { 1.0 } else { 20.0 }, ..*r })
        .collect();
    assert!(fit_rate(&noisy).map_or(true, |f| f.rate.is_none()));
}

#[test]
fn stability_experiment_separates_slice_and_gauge() {
    let rep = stability_experiment(&soliton(), &[1e-2], 2, 30.0, 7).unwrap();
    assert_eq!(rep.runs.len(), 4);
    for r in &rep.runs {
        assert!(r.final_residual < 1e-8, "{r:?}");
        assert!(r.monotonicity_violation < 1e-12);
        assert!(r.stayed_in_neighborhood);
        match r.class {
            DirectionClass::Slice => assert!((r.quadratic_form + 1.0).abs() < 1e-10),
            DirectionClass::Gauge => assert!(r.quadratic_form.abs() < 1e-12),
        }
    }
}

#[test]
fn random_perturbations_return_to_the_soliton() {
    let s = soliton();
    for seed in 0..5 {
        let gamma = random_direction(&s, &mut ChaCha8Rng::seed_from_u64(seed));
        let start = s.perturbed(&gamma, 1e-2).unwrap();
        let traj = integrate(&start, &FlowControl::for_state(&start, 30.0, FlowKind::Gauged)).unwrap();
        assert!(traj.final_residual() < 1e-8);
        assert!(traj.monotonicity_violation() < 1e-9);
        assert!(traj.rate_fit.unwrap().r_squared >= 0.99);
    }
}
