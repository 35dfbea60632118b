use crate::complex::ComplexStructure;
use crate::decomposition::{constrained_span, d_bismut_star, decompose_variation, hermitian_symmetric_part, integrability_defect};
use crate::PluriclosedError;
use grflab_geometry::{Geometry, Sign};
use grflab_tensor::{einsum, Tensor};
use grflab_variation::{SpectrumTolerances, VariationOps};
use serde::Serialize;

/// `Δ^B_f α = −(∇⁺)^{*f}∇⁺α`.
pub fn bismut_laplacian(geo: &Geometry, a: &Tensor) -> Tensor {
    geo.nabla_bismut_adjoint(&geo.nabla_bismut(a, Sign::Plus), Sign::Plus).scale(-1.0)
}

/// `(∇⁺_m α_kj) H^{mk}_i`.
fn torsion_gradient(ops: &VariationOps, a: &Tensor) -> Tensor {
    let geo = ops.geometry();
    let na = geo.nabla_bismut(a, Sign::Plus);
    let hu = einsum("mki,ma,kb->abi", &[geo.h(), geo.ginv(), geo.ginv()]);
    einsum("mkj,mki->ij", &[&na, &hu])
}

/// `½Δ^B_f γ + R̊⁺(γ) − ∇⁺_mγ_kj H_mki − ½H²_ki γ_kj`, the Bismut form of `L̄_f`.
pub fn l_bar_bismut(ops: &VariationOps, gamma: &Tensor) -> Tensor {
    let geo = ops.geometry();
    let h2g = einsum("ki,kj->ij", &[&geo.curvature().h2, &geo.raise_slot(gamma, 0)]);
    bismut_laplacian(geo, gamma)
        .scale(0.5)
        .axpy(1.0, &ops.r_ring(gamma))
        .axpy(-1.0, &torsion_gradient(ops, gamma))
        .axpy(-0.5, &h2g)
}

/// `D(α) = ½Δ^B_f α + ½(R̊⁺(α) + R̊⁺(α)ᵀ) − ½(∇⁺_mα_kj H_mki + ∇⁺_mα_ki H_mkj) + H_kim H_kjl α^{ml}`.
pub fn d_operator(ops: &VariationOps, a: &Tensor) -> Tensor {
    let geo = ops.geometry();
    let r = ops.r_ring(a);
    let tg = torsion_gradient(ops, a);
    let hh = einsum("kim,kjl,ml->ij", &[&geo.raise_slot(geo.h(), 0), geo.h(), &geo.raise(a)]);
    bismut_laplacian(geo, a)
        .scale(0.5)
        .axpy(0.5, &(&r + &r.transpose()))
        .axpy(-0.5, &(&tg + &tg.transpose()))
        .axpy(1.0, &hh)
}

/// `Δ_{d,f} ξ = dd*_f ξ + d*_f dξ` on forms.
pub fn hodge_laplacian(geo: &Geometry, form: &Tensor) -> Tensor {
    let down = if form.rank() > 0 { geo.d(&geo.d_star(form)) } else { Tensor::zeros(geo.n(), 0, 1) };
    geo.d_star(&geo.d(form)).axpy(1.0, &down)
}

/// Right side of the `L̄_f` identity for 2-forms:
/// `−½Δ_{d,f}ξ − ½H_ijk δ^k + ½(∇_iδ_j + ∇_jδ_i) − ¼((dξ)_mkj H^{mk}_i + (dξ)_mki H^{mk}_j)`,
/// with `δ = d*_fξ − (d^B_f)*ξ`.
pub fn lfxi_rhs(geo: &Geometry, xi: &Tensor) -> Tensor {
    let delta = &geo.d_star(xi) - &d_bismut_star(geo, xi);
    let nd = geo.nabla(&delta);
    let dxi = geo.d(xi);
    let hu = einsum("mki,ma,kb->abi", &[geo.h(), geo.ginv(), geo.ginv()]);
    let t = einsum("mkj,mki->ij", &[&dxi, &hu]);
    hodge_laplacian(geo, xi)
        .scale(-0.5)
        .axpy(-0.5, &einsum("ijk,k->ij", &[geo.h(), &geo.raise(&delta)]))
        .axpy(0.5, &(&nd + &nd.transpose()))
        .axpy(-0.25, &(&t + &t.transpose()))
}

/// `|L̄_f(γ∘J) − L̄_f(γ)∘J|`; it vanishes when `∇⁺J = 0`, and then
/// `‖L̄_f(γ∘J)‖ = ‖L̄_f(γ)‖` for compatible `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LequivalentBound {
    pub norm_l_gamma: f64,
    pub norm_l_gamma_j: f64,
    pub commutator: f64,
}

pub fn lequivalent_bound(ops: &VariationOps, j: &ComplexStructure, gamma: &Tensor) -> LequivalentBound {
    let geo = ops.geometry();
    let lg = ops.l_bar(gamma);
    let lgj = ops.l_bar(&j.compose(gamma));
    LequivalentBound {
        norm_l_gamma: geo.norm(&lg),
        norm_l_gamma_j: geo.norm(&lgj),
        commutator: (&lgj - &j.compose(&lg)).max_abs(),
    }
}

/// Residuals for one element of the IGSD kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IgsdElementCheck {
    /// `|L̄_f γ|` and `|L̄_f(γ∘J)|`.
    pub l_bar: f64,
    pub l_bar_j: f64,
    /// `|∇̄γ|`, `|∇⁺γ|`, `|∇⁻γ|`.
    pub nabla_bar_gamma: f64,
    pub nabla_plus_gamma: f64,
    pub nabla_minus_gamma: f64,
    pub nabla_plus_xi: f64,
    pub nabla_minus_xi: f64,
    pub eta_tilde: f64,
    /// `|dξ − C|`, `|d*_fξ|`, `|(d^B_f)*ξ|`.
    pub d_xi_minus_c: f64,
    pub d_star_xi: f64,
    pub d_bismut_star_xi: f64,
    /// `|D(η̃)|`; `None` when `η̃ = 0`.
    pub d_eta: Option<f64>,
    /// `|Δ_{d,f}ξ|`.
    pub hodge_xi: f64,
    /// `|L̄_f ξ − rhs|` for the `L̄_f` identity on 2-forms.
    pub lfxi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IgsdComplexReport {
    pub kernel_dim: usize,
    /// Kernel elements that are admissible and integrable, where the
    /// pluriclosed system `dξ = C`, `d*_fξ = 0`, `D(η̃) = 0` applies.
    pub admissible_dim: usize,
    pub admissible: Vec<IgsdElementCheck>,
    /// Kernel elements with `η̃ = 0` (deformations fixing `J`).
    pub fixed_j_dim: usize,
    pub fixed_j: Vec<IgsdElementCheck>,
    /// Largest `|L̄_f ξ − rhs|` over random 2-forms.
    pub lfxi_random: f64,
    /// Largest `|L̄_f(γ∘J) − L̄_f(γ)∘J|` over random 2-tensors.
    pub lequivalent_random: f64,
}

fn element_check(ops: &VariationOps, j: &ComplexStructure, gamma: &Tensor) -> IgsdElementCheck {
    let geo = ops.geometry();
    let dec = decompose_variation(gamma, geo, j);
    let eta = dec.eta_tilde.max_abs();
    IgsdElementCheck {
        l_bar: ops.l_bar(gamma).max_abs(),
        l_bar_j: ops.l_bar(&j.compose(gamma)).max_abs(),
        nabla_bar_gamma: ops.nabla_bar(gamma).max_abs(),
        nabla_plus_gamma: geo.nabla_bismut(gamma, Sign::Plus).max_abs(),
        nabla_minus_gamma: geo.nabla_bismut(gamma, Sign::Minus).max_abs(),
        nabla_plus_xi: geo.nabla_bismut(&dec.xi, Sign::Plus).max_abs(),
        nabla_minus_xi: geo.nabla_bismut(&dec.xi, Sign::Minus).max_abs(),
        eta_tilde: eta,
        d_xi_minus_c: (&geo.d(&dec.xi) - &dec.c).max_abs(),
        d_star_xi: geo.d_star(&dec.xi).max_abs(),
        d_bismut_star_xi: d_bismut_star(geo, &dec.xi).max_abs(),
        d_eta: (eta > 1e-12).then(|| d_operator(ops, &dec.eta_tilde).max_abs()),
        hodge_xi: hodge_laplacian(geo, &dec.xi).max_abs(),
        lfxi: (&ops.l_bar(&dec.xi) - &lfxi_rhs(geo, &dec.xi)).max_abs(),
    }
}

/// Complex-geometric checks on the IGSD kernel of a homogeneous pluriclosed soliton.
pub fn igsd_complex_checks(
    ops: &VariationOps,
    j: &ComplexStructure,
    samples: &[Tensor],
) -> Result<IgsdComplexReport, PluriclosedError> {
    let geo = ops.geometry();
    if !geo.state().is_homogeneous() {
        return Err(PluriclosedError::HomogeneousOnly("IGSD complex checks"));
    }
    let spectrum = ops.stability_spectrum(SpectrumTolerances::default())?;
    let kernel = &spectrum.kernel_basis;
    let herm = |g: &Tensor| hermitian_symmetric_part(j, g).into_data();
    let integ = |g: &Tensor| integrability_defect(geo, j, g).into_data();
    let eta = |g: &Tensor| decompose_variation(g, geo, j).eta_tilde.into_data();
    let admissible = constrained_span(kernel, &[&herm, &integ], 1e-9);
    let fixed_j = constrained_span(kernel, &[&herm, &eta], 1e-9);
    let lfxi_random = samples
        .iter()
        .map(|s| {
            let xi = s.skew();
            (&ops.l_bar(&xi) - &lfxi_rhs(geo, &xi)).max_abs()
        })
        .fold(0.0, f64::max);
    let lequivalent_random = samples
        .iter()
        .map(|s| lequivalent_bound(ops, j, s).commutator)
        .fold(0.0, f64::max);
    Ok(IgsdComplexReport {
        kernel_dim: kernel.len(),
        admissible_dim: admissible.len(),
        admissible: admissible.iter().map(|g| element_check(ops, j, g)).collect(),
        fixed_j_dim: fixed_j.len(),
        fixed_j: fixed_j.iter().map(|g| element_check(ops, j, g)).collect(),
        lfxi_random,
        lequivalent_random,
    })
}
