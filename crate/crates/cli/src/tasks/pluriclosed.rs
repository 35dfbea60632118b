use super::{num, Tolerances};
use crate::config::Params;
use crate::report::{cell, to_value, Assertion, Table, TaskReport};
use crate::CliError;
use grflab_functional::{random_tensor, with_minimizer};
use grflab_geometry::{Geometry, GeometryState};
use grflab_pluriclosed::{
    aeppli_direction, bismut_ricci, hermitian_pack, igsd_complex_checks, k4_formula, k4_second_variation, k4_slice_basis,
    pluriclosed_flow, pluriclosed_rhs, pluriclosed_state, ComplexStructure,
};
use grflab_tensor::Tensor;
use grflab_variation::VariationOps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub fn run(s: &GeometryState, j: &ComplexStructure, p: &Params, seed: u64, r: &mut TaskReport) -> Result<(), CliError> {
    if !s.is_homogeneous() {
        return Err(CliError::Numeric("the pluriclosed task is only implemented on presets".into()));
    }
    let t = Tolerances::for_state(s).identity;
    let mut out = Map::new();
    let pack = hermitian_pack(s, j).map_err(num)?;
    let res = pack.residuals;
    r.check(Assertion::at_most("J", "|J compatibility| + |N_J|", res.compatibility + res.nijenhuis, t));
    r.check(Assertion::at_most("pluriclosed", "|dd^cω|", res.pluriclosed, t));
    r.check(Assertion::at_most("BismutTorsion", "|H + d^cω|", res.torsion, t));
    out.insert("hermitian".into(), to_value(res));

    let geo = Geometry::new(s);
    let br = bismut_ricci(&geo, j);
    if p.bismut_flat {
        r.check(Assertion::at_most("BRF", "|ρ_B|", br.rho.max_abs(), t));
    }
    out.insert(
        "bismut_ricci".into(),
        json!({
            "rho": br.rho.max_abs(),
            "rho_11": br.rho_11.max_abs(),
            "rho_20": br.rho_20.max_abs(),
            "scalar": br.scalar.max_abs(),
        }),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pgg = pluriclosed_rhs(s, j).map_err(num)?.residuals.max();
    for _ in 0..p.samples {
        let n = j.n();
        let m = Tensor::from_vec(n, 2, 1, (0..n * n).map(|_| rng.gen_range(-1.0..=1.0)).collect());
        let g = s.g().axpy(0.3, &j.hermitian_part(&m.sym()));
        let st = pluriclosed_state(s.frame().clone(), g, j).map_err(num)?;
        pgg = pgg.max(pluriclosed_rhs(&st, j).map_err(num)?.residuals.max());
    }
    r.check(Assertion::at_most("PGG", "gauge-equivalence residual over Hermitian perturbations", pgg, t));
    out.insert("pgg_residual".into(), Value::from(pgg));

    let (base, _) = with_minimizer(s).map_err(num)?;
    let ops = VariationOps::new(&base);
    if ops.require_soliton().is_ok() {
        out.insert("soliton".into(), Value::from(true));
        second_variation_checks(&ops, j, p, &mut rng, r, &mut out)?;
    } else {
        out.insert("soliton".into(), Value::from(false));
    }

    let traj = pluriclosed_flow(s, j, p.t_end, p.steps).map_err(num)?;
    let mut table = Table::new("pluriclosed-flow", &["t", "rho_11", "rho_20", "pgg", "pluriclosed", "min_eig_g"]);
    for x in &traj.rows {
        table.push(vec![cell(x.t), cell(x.rho_11), cell(x.rho_20), cell(x.pgg), cell(x.pluriclosed), cell(x.min_eig_g)]);
    }
    let along = traj.rows.iter().map(|x| x.pgg.max(x.pluriclosed)).fold(0.0, f64::max);
    r.check(Assertion::at_most("PGG", "PGG and dd^cω residuals along the flow", along, 10.0 * t));
    let last = traj.rows.last().expect("flow has rows");
    out.insert(
        "flow".into(),
        json!({ "t_end": last.t, "steps": p.steps, "final_rho_11": last.rho_11, "final_min_eig_g": last.min_eig_g }),
    );
    r.tables.push(table);
    r.data.insert("pluriclosed".into(), Value::Object(out));
    Ok(())
}

fn second_variation_checks(
    ops: &VariationOps,
    j: &ComplexStructure,
    p: &Params,
    rng: &mut ChaCha8Rng,
    r: &mut TaskReport,
    out: &mut Map<String, Value>,
) -> Result<(), CliError> {
    let geo = ops.geometry();
    let n = ops.n();
    let basis = k4_slice_basis(ops, j).map_err(num)?;
    let mut k4_err = 0.0f64;
    for _ in 0..p.samples {
        let gamma = basis.iter().fold(Tensor::zeros(n, 2, 1), |acc, b| acc.axpy(rng.gen_range(-1.0..=1.0), b));
        let k = k4_second_variation(ops, j, &gamma).map_err(num)?;
        let q = ops.second_variation(&gamma).map_err(num)?;
        k4_err = k4_err.max((k.value - q).abs() / q.abs().max(1.0));
    }
    if !basis.is_empty() {
        r.check(Assertion::at_most("k4", "|k4 − ⟨γ, N̄_f γ⟩| on the integrable slice", k4_err, 1e-10));
    }

    let mut aeppli_err = 0.0f64;
    for _ in 0..p.samples {
        let alpha = Tensor::from_vec(n, 1, 1, (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect());
        let gamma = aeppli_direction(geo, j, &alpha);
        let expected = -2.0 * geo.norm_sq(&geo.d_star(&geo.d(&alpha)));
        let k = k4_formula(ops, j, &gamma).map_err(num)?;
        aeppli_err = aeppli_err.max((k.value - expected).abs() / expected.abs().max(1.0));
    }
    r.check(Assertion::at_most("k4", "|k4 + 2‖d*_f dα‖²| for ξ = dα", aeppli_err, 1e-10));

    let samples: Vec<Tensor> = (0..p.samples).map(|_| random_tensor(geo.state(), 2, rng)).collect();
    let igsd = igsd_complex_checks(ops, j, &samples).map_err(num)?;
    r.check(Assertion::at_most("Lfxi", "L̄_f identity on random 2-forms", igsd.lfxi_random, 1e-12));
    if j.bismut_parallel_residual(geo) < 1e-12 {
        r.check(Assertion::at_most("Lequivalent", "|L̄_f(γ∘J) − L̄_f(γ)∘J|", igsd.lequivalent_random, 1e-12));
    }
    if !igsd.admissible.is_empty() {
        let worst = |f: &dyn Fn(&grflab_pluriclosed::IgsdElementCheck) -> f64| {
            igsd.admissible.iter().map(f).fold(0.0, f64::max)
        };
        r.check(Assertion::at_most("C", "|dξ − C| on the IGSD kernel", worst(&|e| e.d_xi_minus_c), 1e-12));
        r.check(Assertion::at_most(
            "BFIGSD",
            "|d*_f ξ| + |(d^B_f)*ξ| on the IGSD kernel",
            worst(&|e| e.d_star_xi + e.d_bismut_star_xi),
            1e-12,
        ));
        r.check(Assertion::at_most("D", "|D(η̃)| on the IGSD kernel", worst(&|e| e.d_eta.unwrap_or(0.0)), 1e-12));
    }
    out.insert("k4_slice_dim".into(), Value::from(basis.len()));
    out.insert("k4_relative_error".into(), Value::from(k4_err));
    out.insert("aeppli_relative_error".into(), Value::from(aeppli_err));
    out.insert("igsd".into(), to_value(&igsd));
    Ok(())
}
