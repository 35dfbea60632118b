mod pluriclosed;

use crate::config::{ExperimentConfig, FlowKindSpec, Params, Task};
use crate::report::{cell, to_value, Assertion, Table, TaskReport};
use crate::state::{build_state, BuiltState};
use crate::CliError;
use grflab_flow::{integrate, stability_experiment, DirectionClass, FlowControl, FlowKind};
use grflab_functional::{
    f_value, fd_first_variation, first_variation, lambda_difference, lambda_min, lojasiewicz_sample, random_direction,
    transversality_sample, with_minimizer, SampleReport, SOLITON_TOL,
};
use grflab_geometry::{Geometry, GeometryState};
use grflab_variation::{SpectrumTolerances, VariationOps};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub(crate) fn num(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Absolute tolerances by backend: exact algebra on presets, stencil-limited on lattices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub identity: f64,
    pub bianchi: f64,
    pub soliton: f64,
    pub eigen: f64,
    pub comm: f64,
    pub parallel: f64,
}

impl Tolerances {
    pub fn for_state(state: &GeometryState) -> Self {
        if state.is_homogeneous() {
            Tolerances {
                identity: 1e-12,
                bianchi: 1e-12,
                soliton: 1e-12,
                eigen: 1e-12,
                comm: 1e-12,
                parallel: 1e-12,
            }
        } else {
            Tolerances {
                identity: 1e-8,
                bianchi: 1e-6,
                soliton: SOLITON_TOL,
                eigen: 1e-8,
                comm: 1e-8,
                parallel: 1e-6,
            }
        }
    }
}

/// λ must not decrease by more than this between accepted steps.
pub const MONOTONICITY_TOL: f64 = 1e-9;
/// Terminal soliton residual of a converged flow.
pub const TERMINAL_TOL: f64 = 1e-8;
/// Allowed relative mismatch between the fitted decay rate and `2|μ_min|`.
pub const RATE_TOL: f64 = 0.25;
/// Minimum observed order of the central-difference first variation.
pub const FD_ORDER_MIN: f64 = 1.95;

pub fn run_task(cfg: &ExperimentConfig) -> Result<(BuiltState, TaskReport), CliError> {
    let built = build_state(&cfg.backend, &cfg.state, cfg.seed)?;
    let mut r = TaskReport::default();
    let s = &built.state;
    let p = &cfg.params;
    match cfg.task {
        Task::CheckIdentities => check_identities(s, &mut r),
        Task::SolitonVerify => soliton_verify(s, &mut r)?,
        Task::Lambda => {
            let other = match &cfg.compare {
                Some(spec) => Some(build_state(&cfg.backend, spec, cfg.seed)?.state),
                None => None,
            };
            lambda_task(s, other.as_ref(), p, cfg.seed, &mut r)?
        }
        Task::Spectrum => spectrum(s, p, cfg.seed, &mut r)?,
        Task::Flow => flow(s, p, &mut r)?,
        Task::Stability => stability(s, p, cfg.seed, &mut r)?,
        Task::PluriclosedFlow => {
            let j = built.complex_structure.as_ref().ok_or_else(|| {
                CliError::config("state.complex_structure", "required for the pluriclosed-flow task")
            })?;
            pluriclosed::run(s, j, p, cfg.seed, &mut r)?
        }
        Task::Lojasiewicz => sampling(s, p, cfg.seed, "OPL", "lojasiewicz", &mut r)?,
        Task::Transversality => sampling(s, p, cfg.seed, "TRA", "transversality", &mut r)?,
    }
    Ok((built, r))
}

fn check_identities(s: &GeometryState, r: &mut TaskReport) {
    let t = Tolerances::for_state(s);
    let geo = Geometry::new(s);
    let ir = geo.identity_residuals();
    let bianchi = geo.bianchi_residual();
    r.check(Assertion::at_most("P3", "|R⁺ − (R − ¼|H|²)|", ir.scalar, t.identity));
    r.check(Assertion::at_most("P3", "|Rc⁺ − (Rc − ¼H² − ½d*H)|", ir.ricci, t.identity));
    r.check(Assertion::at_most("BianchiBismut", "cyclic-sum residual", bianchi, t.bianchi));
    r.check(Assertion::at_most("G", "|dH|", ir.closedness, t.identity));
    r.put(
        "residuals",
        json!({
            "scalar": ir.scalar,
            "ricci": ir.ricci,
            "bianchi": bianchi,
            "closedness": ir.closedness,
            "pair_antisymmetry": ir.pair_antisymmetry,
            "ricci_symmetry": ir.ricci_symmetry,
        }),
    );
}

fn soliton_verify(s: &GeometryState, r: &mut TaskReport) -> Result<(), CliError> {
    let t = Tolerances::for_state(s);
    let (s, res) = with_minimizer(s).map_err(num)?;
    let (rg, rb) = Geometry::new(&s).soliton_residual();
    r.check(Assertion::at_most("s", "‖sym Rc^{H,f}‖_f", rg, t.soliton));
    r.check(Assertion::at_most("s", "‖2 skew Rc^{H,f}‖_f", rb, t.soliton));
    r.put("lambda", res.lambda);
    r.put("r_g", rg);
    r.put("r_b", rb);
    r.put("soliton", rg.max(rb) <= t.soliton);
    Ok(())
}

fn lambda_task(
    s: &GeometryState,
    other: Option<&GeometryState>,
    p: &Params,
    seed: u64,
    r: &mut TaskReport,
) -> Result<(), CliError> {
    let t = Tolerances::for_state(s);
    if let Some(o) = other {
        // refuses states with different H0 before anything is reported
        r.put("lambda_difference", lambda_difference(o, s).map_err(num)?);
    }
    let res = lambda_min(s).map_err(num)?;
    r.check(Assertion::at_most("lam", "|(−4Δ + R^H)e^{−f/2} − λe^{−f/2}|", res.eigen_residual, t.eigen));
    r.check(Assertion::at_most("lam", "|∫e^{−f}dV − 1|", res.normalization_residual, t.eigen));
    r.put("lambda", res.lambda);
    r.put("f_functional_at_state", f_value(s));
    r.put("eigen_residual", res.eigen_residual);
    r.put("normalization_residual", res.normalization_residual);
    r.put("pointwise_residual", res.pointwise_residual);

    let s = s.with_f(res.f);
    let [e1, e2] = p.fd_epsilons;
    let mut table = Table::new("first-variation", &["direction", "analytic", "error_coarse", "error_fine", "order"]);
    let mut worst_order = f64::INFINITY;
    for i in 0..p.samples {
        let gamma = random_direction(&s, &mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64)));
        let a = first_variation(&s, &gamma);
        let c = (fd_first_variation(&s, &gamma, e1).map_err(num)? - a).abs();
        let f = (fd_first_variation(&s, &gamma, e2).map_err(num)? - a).abs();
        // at a critical point both errors are roundoff and carry no order
        let order = if c > 1e-10 * a.abs().max(1.0) { (c / f).ln() / (e1 / e2).ln() } else { f64::NAN };
        if order.is_finite() {
            worst_order = worst_order.min(order);
        }
        table.push(vec![i.to_string(), cell(a), cell(c), cell(f), cell(order)]);
    }
    if worst_order.is_finite() {
        r.check(Assertion::at_least("fv", "observed order of central differences", worst_order, FD_ORDER_MIN));
    }
    r.put("first_variation_min_order", worst_order.is_finite().then_some(worst_order));
    r.tables.push(table);
    Ok(())
}

fn soliton_ops(s: &GeometryState) -> Result<VariationOps, CliError> {
    let (base, _) = with_minimizer(s).map_err(num)?;
    let ops = VariationOps::new(&base);
    ops.require_soliton().map_err(num)?;
    Ok(ops)
}

fn spectrum(s: &GeometryState, p: &Params, seed: u64, r: &mut TaskReport) -> Result<(), CliError> {
    let t = Tolerances::for_state(s);
    let ops = soliton_ops(s)?;
    let rep = ops.stability_spectrum(SpectrumTolerances::default()).map_err(num)?;
    let comm = ops.comm_suite(p.samples, seed).map_err(num)?;
    for (anchor, quantity, v) in [
        ("MT1", "‖N̄_f div̄*_f(u,v)‖", comm.mt1),
        ("Comm1", "div̄ div̄* commutator", comm.comm1),
        ("Comm2", "div̄ div̄ div̄* + Δ_f(div u + div v)", comm.comm2),
        ("Comm6", "L̄ div̄* − ½ div̄* Φ", comm.comm6),
        ("Comm7", "div̄ L̄ − ½ Φ div̄", comm.comm7),
        ("DivLaplacian", "Δ_f div̄ − div̄ Φ", comm.div_laplacian),
        ("Comm7", "div̄ L̄ on ker div̄", comm.decomposition),
    ] {
        r.check(Assertion::at_most(anchor, quantity, v, t.comm));
    }
    if !rep.kernel_basis.is_empty() {
        let worst = rep
            .kernel_basis
            .iter()
            .map(|z| ops.parallel_residuals(z).max())
            .fold(0.0, f64::max);
        r.check(Assertion::at_most("BFG", "IGSD parallel-system residual", worst, t.parallel));
    }
    let mut table = Table::new("eigenvalues", &["index", "eigenvalue"]);
    for (i, m) in rep.eigenvalues.iter().enumerate() {
        table.push(vec![i.to_string(), cell(*m)]);
    }
    r.tables.push(table);
    r.put("spectrum", &rep);
    r.put("smallest_negative", rep.smallest_negative());
    r.put("commutators", comm);
    Ok(())
}

fn control(s: &GeometryState, p: &Params, kind: FlowKind) -> FlowControl {
    let mut c = FlowControl::for_state(s, p.t_end, kind);
    if let Some(v) = p.dt_min {
        c.dt_min = v;
    }
    if let Some(v) = p.dt_max {
        c.dt_max = v;
    }
    if let Some(v) = p.step_tol {
        c.tol = v;
    }
    c
}

fn flow(s: &GeometryState, p: &Params, r: &mut TaskReport) -> Result<(), CliError> {
    let kind = match p.flow {
        FlowKindSpec::Gauged => FlowKind::Gauged,
        FlowKindSpec::Plain => FlowKind::Plain,
    };
    let traj = integrate(s, &control(s, p, kind)).map_err(num)?;
    r.check(Assertion::at_most("Kinequality", "largest decrease of λ", traj.monotonicity_violation(), MONOTONICITY_TOL));
    let mut table = Table::new("trajectory", &["t", "lambda", "r_g", "r_b", "min_eig_g"]);
    for row in &traj.rows {
        table.push(vec![cell(row.t), cell(row.lambda), cell(row.r_g), cell(row.r_b), cell(row.min_eig_g)]);
    }
    r.tables.push(table);
    r.put("kind", if kind == FlowKind::Gauged { "gauged" } else { "plain" });
    r.put("stop", traj.stop);
    r.put("rate_fit", traj.rate_fit);
    r.put("accepted_steps", traj.rows.len() - 1);
    r.put("rejected_steps", traj.rejected_steps);
    r.put("final_residual", traj.final_residual());
    r.put("monotonicity_violation", traj.monotonicity_violation());
    Ok(())
}

fn stability(s: &GeometryState, p: &Params, seed: u64, r: &mut TaskReport) -> Result<(), CliError> {
    let ops = soliton_ops(s)?;
    let spectrum = ops.stability_spectrum(SpectrumTolerances::default()).map_err(num)?;
    let mu = spectrum.smallest_negative();
    let rep = stability_experiment(ops.geometry().state(), &p.epsilons, p.directions, p.t_end, seed).map_err(num)?;
    let runs = &rep.runs;
    let fold = |f: &dyn Fn(&grflab_flow::ExperimentRun) -> f64| runs.iter().map(f).fold(0.0, f64::max);
    r.check(Assertion::at_most("Kinequality", "largest decrease of λ", fold(&|x| x.monotonicity_violation), MONOTONICITY_TOL));
    r.check(Assertion::at_most(
        "Fcor",
        "max distance / ε",
        fold(&|x| if x.epsilon > 0.0 { x.max_distance / x.epsilon } else { 0.0 }),
        rep.neighborhood_factor,
    ));
    r.check(Assertion::at_most("MTT", "terminal soliton residual", fold(&|x| x.final_residual), TERMINAL_TOL));
    let expected = mu.map(|m| 2.0 * m.abs());
    if let Some(rate) = expected {
        let fits: Vec<f64> = runs
            .iter()
            .filter(|x| x.class == DirectionClass::Slice)
            .filter_map(|x| x.rate_fit.filter(|f| f.r_squared >= 0.99).and_then(|f| f.rate))
            .collect();
        if !fits.is_empty() {
            let err = fits.iter().map(|k| (k / rate - 1.0).abs()).fold(0.0, f64::max);
            r.check(Assertion::at_most("MTT", "relative error of decay rate vs 2|μ_min|", err, RATE_TOL));
        }
    }
    let mut table = Table::new(
        "runs",
        &[
            "epsilon",
            "class",
            "direction",
            "quadratic_form",
            "max_distance",
            "stayed_in_neighborhood",
            "final_residual",
            "lambda_drift",
            "monotonicity_violation",
            "rate",
            "r_squared",
            "stop",
            "final_time",
        ],
    );
    for x in runs {
        let class = if x.class == DirectionClass::Slice { "slice" } else { "gauge" };
        let stop = to_value(x.stop)["reason"].as_str().unwrap_or("").to_string();
        table.push(vec![
            cell(x.epsilon),
            class.to_string(),
            x.direction.to_string(),
            cell(x.quadratic_form),
            cell(x.max_distance),
            x.stayed_in_neighborhood.to_string(),
            cell(x.final_residual),
            cell(x.lambda_drift),
            cell(x.monotonicity_violation),
            x.rate_fit.and_then(|f| f.rate).map(cell).unwrap_or_default(),
            x.rate_fit.map(|f| cell(f.r_squared)).unwrap_or_default(),
            stop,
            cell(x.final_time),
        ]);
    }
    r.tables.push(table);
    r.put("experiment", &rep);
    r.put("smallest_negative_eigenvalue", mu);
    r.put("expected_rate", expected);
    Ok(())
}

fn sampling(
    s: &GeometryState,
    p: &Params,
    seed: u64,
    anchor: &'static str,
    name: &str,
    r: &mut TaskReport,
) -> Result<(), CliError> {
    let mut table = Table::new(name, &["radius", "sample_id", "lhs", "rhs", "ratio"]);
    let mut maxima = Vec::new();
    let mut non_finite = 0usize;
    for &radius in &p.radii {
        let rep: SampleReport = if anchor == "OPL" {
            lojasiewicz_sample(s, radius, p.samples, seed, None)
        } else {
            transversality_sample(s, radius, p.samples, seed, None)
        }
        .map_err(num)?;
        non_finite += rep.rows.iter().filter(|x| !(x.lhs.is_finite() && x.rhs.is_finite() && x.ratio.is_finite())).count();
        for x in &rep.rows {
            table.push(vec![cell(radius), x.sample_id.to_string(), cell(x.lhs), cell(x.rhs), cell(x.ratio)]);
        }
        maxima.push(json!({ "radius": radius, "max_ratio": rep.max_ratio }));
    }
    let ratios: Vec<f64> = maxima.iter().filter_map(|m| m["max_ratio"].as_f64()).collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if hi == 0.0 { 1.0 } else { hi / lo };
    r.check(Assertion::at_most(anchor, "non-finite ratios", non_finite as f64, 0.0));
    r.check(Assertion::at_most(anchor, "spread of max ratio across radii", spread, 2.0));
    r.tables.push(table);
    r.put("max_ratios", maxima);
    r.put("spread", spread);
    Ok(())
}
