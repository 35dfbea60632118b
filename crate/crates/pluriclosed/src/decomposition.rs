use crate::complex::ComplexStructure;
use crate::hermitian::{bismut_ricci, hermitian_pack};
use crate::PluriclosedError;
use grflab_geometry::Geometry;
use grflab_tensor::{einsum, Tensor};
use grflab_variation::VariationOps;
use nalgebra::DMatrix;
use serde::Serialize;

/// `γ∘J = −ξ + η̃` with `ξ` a 2-form and `η̃` symmetric anti-Hermitian.
///
/// Only variations whose `γ∘J` has no symmetric Hermitian part split this way
/// (the `b`-variation is then of type `(2,0)+(0,2)`); for other `γ` that part
/// is left over and reported as `residual`.
#[derive(Debug, Clone)]
pub struct PluriclosedDecomposition {
    pub xi: Tensor,
    pub eta_tilde: Tensor,
    /// `C_ijk = η̃_il H_ljk + η̃_jl H_lki + η̃_kl H_lij`.
    pub c: Tensor,
    /// `|γ∘J + ξ − η̃|`.
    pub residual: f64,
    /// `|η̃(J·,J·) + η̃|`.
    pub anti_hermitian_defect: f64,
    /// `|C^{3,0+0,3}|`.
    pub c_type_defect: f64,
}

pub fn decompose_variation(gamma: &Tensor, geo: &Geometry, j: &ComplexStructure) -> PluriclosedDecomposition {
    let gj = j.compose(gamma);
    let eta_tilde = j.anti_hermitian_part(&gj.sym());
    let xi = gj.skew().scale(-1.0);
    let gi = geo.ginv();
    let hu = einsum("ljk,la->ajk", &[geo.h(), gi]);
    let t = einsum("ia,ajk->ijk", &[&eta_tilde, &hu]);
    let c = &(&t + &t.permute(&[2, 0, 1])) + &t.permute(&[1, 2, 0]);
    let residual = gj.axpy(1.0, &xi).axpy(-1.0, &eta_tilde).max_abs();
    PluriclosedDecomposition {
        anti_hermitian_defect: (&j.conjugate(&eta_tilde) + &eta_tilde).max_abs(),
        c_type_defect: j.type_30_part(&c).max_abs(),
        xi,
        eta_tilde,
        c,
        residual,
    }
}

/// `(d^B_f)*ξ_k = d*_fξ_k − ½H_lmk ξ^{lm}`.
pub fn d_bismut_star(geo: &Geometry, xi: &Tensor) -> Tensor {
    let hx = einsum("lmk,lm->k", &[geo.h(), &geo.raise(xi)]);
    geo.d_star(xi).axpy(-0.5, &hx)
}

/// Terms of the pluriclosed second-variation formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K4Report {
    pub value: f64,
    /// `−2‖d*_f ξ‖²`.
    pub d_star_term: f64,
    /// `−⅙‖dξ − C‖²`.
    pub exact_term: f64,
    /// `∫|η|²(−½S_B + L_V f)e^{−f}dV` with `V = ½(θ♯ − ∇f)`.
    pub eta_term: f64,
    /// `|γ∘J + ξ − η̃|`.
    pub decomposition_residual: f64,
    /// `|div̄_f γ|` relative to `|γ|`.
    pub slice_residual: f64,
}

/// Relative `div̄_f γ` tolerance for the slice precondition.
pub const SLICE_TOL: f64 = 1e-8;

/// `−2‖d*_fξ‖² − ⅙‖dξ − C‖² + ∫|η|²(−½S_B + L_V f)e^{−f}dV` for `γ ∈ ker div̄_f`.
pub fn k4_second_variation(ops: &VariationOps, j: &ComplexStructure, gamma: &Tensor) -> Result<K4Report, PluriclosedError> {
    ops.require_soliton()?;
    let report = k4_formula(ops, j, gamma)?;
    if report.slice_residual > SLICE_TOL {
        return Err(PluriclosedError::NotInSlice(report.slice_residual));
    }
    Ok(report)
}

/// The same expression without the soliton and slice preconditions.
pub fn k4_formula(ops: &VariationOps, j: &ComplexStructure, gamma: &Tensor) -> Result<K4Report, PluriclosedError> {
    let geo = ops.geometry();
    let scale = gamma.max_abs().max(f64::MIN_POSITIVE);
    let slice_residual = ops.div_bar(gamma).max_abs() / scale;
    let pack = hermitian_pack(geo.state(), j)?;
    let dec = decompose_variation(gamma, geo, j);
    let d_star_term = -2.0 * geo.norm_sq(&geo.d_star(&dec.xi));
    let exact_term = -geo.norm_sq(&(&geo.d(&dec.xi) - &dec.c)) / 6.0;
    let s_b = bismut_ricci(geo, j).scalar;
    let df = geo.df();
    let theta_df = einsum("i,ij,j->", &[&pack.theta, geo.ginv(), df]);
    let lvf = theta_df.axpy(-1.0, &geo.pointwise_inner(df, df)).scale(0.5);
    let eta2 = geo.pointwise_inner(&dec.eta_tilde, &dec.eta_tilde);
    let density = s_b.scale(-0.5).axpy(1.0, &lvf);
    let integrand = eta2.mul_scalar_field(&density);
    let eta_term = geo.integrate(&integrand);
    Ok(K4Report {
        value: d_star_term + exact_term + eta_term,
        d_star_term,
        exact_term,
        eta_term,
        decomposition_residual: dec.residual,
        slice_residual,
    })
}

/// Variation whose decomposition is `ξ = dα`, `η̃ = 0`: `γ = dα∘J`.
pub fn aeppli_direction(geo: &Geometry, j: &ComplexStructure, alpha: &Tensor) -> Tensor {
    j.compose(&geo.d(alpha))
}

fn unit(n: usize, rank: usize, k: usize) -> Tensor {
    let mut data = vec![0.0; n.pow(rank as u32)];
    data[k] = 1.0;
    Tensor::from_vec(n, rank, 1, data)
}

/// Combinations of `basis` annihilated by every constraint, orthonormal in
/// coordinates. Homogeneous (single-point) tensors only.
pub fn constrained_span(basis: &[Tensor], constraints: &[&dyn Fn(&Tensor) -> Vec<f64>], rel_tol: f64) -> Vec<Tensor> {
    let k = basis.len();
    if k == 0 {
        return Vec::new();
    }
    let cols: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| constraints.iter().flat_map(|c| c(b)).collect())
        .collect();
    let rows = cols[0].len().max(k);
    let m = DMatrix::from_fn(rows, k, |r, c| cols[c].get(r).copied().unwrap_or(0.0));
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let coords: Vec<Vec<f64>> = (0..k)
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax.max(1.0))
        .map(|i| vt.row(i).iter().copied().collect())
        .collect();
    let combos: Vec<Tensor> = coords
        .iter()
        .map(|w| basis.iter().zip(w).fold(Tensor::zeros(basis[0].n(), basis[0].rank(), 1), |acc, (b, x)| acc.axpy(*x, b)))
        .collect();
    orthonormalize(combos)
}

fn orthonormalize(vs: Vec<Tensor>) -> Vec<Tensor> {
    let dot = |a: &Tensor, b: &Tensor| a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum::<f64>();
    let mut out: Vec<Tensor> = Vec::new();
    for mut v in vs {
        for _ in 0..2 {
            for u in &out {
                v = v.axpy(-dot(u, &v), u);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-10 {
            out.push(v.scale(1.0 / norm));
        }
    }
    out
}

/// Basis of `{γ ∈ ker div̄_f : γ∘J has no symmetric Hermitian part, δN_J(I) = 0}`,
/// the variations to which the pluriclosed second-variation formula applies.
/// `I = −g⁻¹η̃` is the complex-structure variation carried by `γ`.
pub fn k4_slice_basis(ops: &VariationOps, j: &ComplexStructure) -> Result<Vec<Tensor>, PluriclosedError> {
    let geo = ops.geometry();
    if !geo.state().is_homogeneous() {
        return Err(PluriclosedError::HomogeneousOnly("k4 slice basis"));
    }
    let n = ops.n();
    let basis: Vec<Tensor> = (0..n * n).map(|k| unit(n, 2, k)).collect();
    let constraints = admissibility_constraints(ops, j);
    let refs: Vec<&dyn Fn(&Tensor) -> Vec<f64>> = constraints.iter().map(|c| c.as_ref()).collect();
    Ok(constrained_span(&basis, &refs, 1e-9))
}

type Constraint<'a> = Box<dyn Fn(&Tensor) -> Vec<f64> + 'a>;

pub(crate) fn admissibility_constraints<'a>(ops: &'a VariationOps, j: &'a ComplexStructure) -> Vec<Constraint<'a>> {
    let geo = ops.geometry();
    vec![
        Box::new(move |g: &Tensor| {
            let p = ops.div_bar(g);
            p.u.data().iter().chain(p.v.data()).copied().collect()
        }),
        Box::new(move |g: &Tensor| hermitian_symmetric_part(j, g).into_data()),
        Box::new(move |g: &Tensor| integrability_defect(geo, j, g).into_data()),
    ]
}

/// Symmetric Hermitian part of `γ∘J`.
pub fn hermitian_symmetric_part(j: &ComplexStructure, gamma: &Tensor) -> Tensor {
    j.hermitian_part(&j.compose(gamma).sym())
}

/// `δN_J(I)` for the complex-structure variation `I = −g⁻¹η̃` of `γ`.
pub fn integrability_defect(geo: &Geometry, j: &ComplexStructure, gamma: &Tensor) -> Tensor {
    let dec = decompose_variation(gamma, geo, j);
    j.nijenhuis_variation(geo.frame(), &j.deformation(geo, &dec.eta_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::hopf_state;

    #[test]
    fn hermitian_metric_variation_has_no_eta() {
        let state = hopf_state();
        let geo = Geometry::new(&state);
        let j = ComplexStructure::samelson_hopf();
        let s = Tensor::from_fn(4, 2, 1, |_, i| (i[0] + i[1]) as f64 * 0.1 + if i[0] == i[1] { 1.0 } else { 0.0 });
        let gamma = j.hermitian_part(&s.sym());
        let dec = decompose_variation(&gamma, &geo, &j);
        assert!(dec.eta_tilde.max_abs() < 1e-15);
        assert!((&dec.xi + &j.compose(&gamma)).max_abs() < 1e-15);
        assert!(dec.residual < 1e-15);
    }

    #[test]
    fn pure_complex_structure_direction_has_no_xi() {
        let state = hopf_state();
        let geo = Geometry::new(&state);
        let j = ComplexStructure::samelson_hopf();
        let s = Tensor::from_fn(4, 2, 1, |_, i| ((i[0] * 5 + i[1] * 5 + i[0] * i[1]) % 7) as f64 - 3.0);
        let eta = j.anti_hermitian_part(&s.sym());
        // γ∘J = η̃  ⇔  γ = −η̃∘J
        let gamma = j.compose(&eta).scale(-1.0);
        let dec = decompose_variation(&gamma, &geo, &j);
        assert!(dec.xi.max_abs() < 1e-14);
        assert!((&dec.eta_tilde - &eta).max_abs() < 1e-14);
    }

    #[test]
    fn constrained_span_of_nothing_is_everything() {
        let basis: Vec<Tensor> = (0..4).map(|k| unit(2, 2, k)).collect();
        let none = |_: &Tensor| vec![0.0];
        assert_eq!(constrained_span(&basis, &[&none], 1e-9).len(), 4);
        let first = |t: &Tensor| vec![t.data()[0]];
        assert_eq!(constrained_span(&basis, &[&first], 1e-9).len(), 3);
    }
}
