use crate::complex::ComplexStructure;
use crate::hermitian::{hermitian_pack, pluriclosed_rhs, pluriclosed_state};
use crate::PluriclosedError;
use grflab_geometry::GeometryState;
use grflab_tensor::{min_eigenvalue, Tensor};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PluriclosedFlowRow {
    pub t: f64,
    /// `|ρ_B^{1,1}|` and `|ρ_B^{2,0}|`.
    pub rho_11: f64,
    pub rho_20: f64,
    /// Gauge-equivalence residual at this time.
    pub pgg: f64,
    /// `|dd^cω|`.
    pub pluriclosed: f64,
    pub min_eig_g: f64,
}

#[derive(Debug, Clone)]
pub struct PluriclosedTrajectory {
    pub rows: Vec<PluriclosedFlowRow>,
    pub final_state: GeometryState,
}

fn row(t: f64, state: &GeometryState, j: &ComplexStructure) -> Result<PluriclosedFlowRow, PluriclosedError> {
    let rhs = pluriclosed_rhs(state, j)?;
    let pack = hermitian_pack(state, j)?;
    Ok(PluriclosedFlowRow {
        t,
        rho_11: rhs.d_omega.max_abs(),
        rho_20: rhs.d_beta.max_abs(),
        pgg: rhs.residuals.max(),
        pluriclosed: pack.residuals.pluriclosed,
        min_eig_g: min_eigenvalue(state.g()).data().iter().fold(f64::INFINITY, |a, &b| a.min(b)),
    })
}

/// Fixed-step RK4 for `∂ω/∂t = −ρ_B^{1,1}` on an invariant Hermitian metric,
/// with the torsion kept at `H = −d^cω`. Homogeneous states only.
pub fn pluriclosed_flow(
    state0: &GeometryState,
    j: &ComplexStructure,
    t_end: f64,
    steps: usize,
) -> Result<PluriclosedTrajectory, PluriclosedError> {
    if !state0.is_homogeneous() {
        return Err(PluriclosedError::HomogeneousOnly("pluriclosed flow"));
    }
    let frame = state0.frame().clone();
    let at = |g: Tensor| pluriclosed_state(frame.clone(), j.hermitian_part(&g.sym()), j);
    let velocity = |s: &GeometryState| pluriclosed_rhs(s, j).map(|r| r.dg);
    let mut state = at(state0.g().clone())?;
    let dt = t_end / steps.max(1) as f64;
    let mut rows = vec![row(0.0, &state, j)?];
    for k in 1..=steps {
        let g = state.g();
        let k1 = velocity(&state)?;
        let k2 = velocity(&at(g.axpy(0.5 * dt, &k1))?)?;
        let k3 = velocity(&at(g.axpy(0.5 * dt, &k2))?)?;
        let k4 = velocity(&at(g.axpy(dt, &k3))?)?;
        let inc = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
        state = at(g.axpy(dt / 6.0, &inc))?;
        rows.push(row(k as f64 * dt, &state, j)?);
    }
    Ok(PluriclosedTrajectory { rows, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::hopf_state;

    #[test]
    fn hopf_is_stationary() {
        let j = ComplexStructure::samelson_hopf();
        let traj = pluriclosed_flow(&hopf_state(), &j, 1.0, 10).unwrap();
        assert_eq!(traj.rows.len(), 11);
        assert!((traj.final_state.g() - &Tensor::identity(4)).max_abs() < 1e-14);
        assert!(traj.rows.iter().all(|r| r.rho_11 < 1e-13 && r.pgg < 1e-12));
    }

    #[test]
    fn step_refinement_is_fourth_order() {
        let j = ComplexStructure::samelson_hopf();
        let p = Tensor::from_fn(4, 2, 1, |_, i| ((i[0] * 3 + i[1] * 3 + i[0] * i[1]) % 5) as f64 * 0.05);
        let g = Tensor::identity(4).axpy(1.0, &j.hermitian_part(&p.sym()));
        let s = pluriclosed_state(hopf_state().frame().clone(), g, &j).unwrap();
        let end = |n| pluriclosed_flow(&s, &j, 0.5, n).unwrap().final_state.g().clone();
        let (a, b, c) = (end(4), end(8), end(16));
        let ratio = (&a - &b).max_abs() / (&b - &c).max_abs();
        assert!(ratio.log2() > 3.5, "{ratio}");
    }
}
