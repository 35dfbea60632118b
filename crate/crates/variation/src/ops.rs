use grflab_functional::SOLITON_TOL;
use grflab_geometry::{Geometry, GeometryState, Sign};
use grflab_tensor::krylov::{conjugate_gradient, conjugate_gradient_in};
use grflab_tensor::{einsum, Tensor};
use std::sync::OnceLock;

/// Relative tolerance of the inner conjugate-gradient solves.
pub const SOLVE_TOL: f64 = 1e-13;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum VariationError {
    #[error("state is not a steady soliton (residual {0:.3e}); the operator is only defined at solitons")]
    NotSoliton(f64),
    #[error("φ-equation solve failed (relative residual {0:.3e})")]
    PhiSolve(f64),
    #[error("homogeneous φ-source should vanish but is {0:.3e}")]
    NonzeroSource(f64),
    #[error("kernel projection solve failed (relative residual {0:.3e})")]
    Projection(f64),
}

/// A pair of 1-forms `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormPair {
    pub u: Tensor,
    pub v: Tensor,
}

impl OneFormPair {
    pub fn new(u: Tensor, v: Tensor) -> Self {
        assert_eq!(u.rank(), 1);
        assert_eq!(v.rank(), 1);
        OneFormPair { u, v }
    }

    pub fn zeros(n: usize) -> Self {
        OneFormPair::new(Tensor::zeros(n, 1, 1), Tensor::zeros(n, 1, 1))
    }

    pub fn scale(&self, s: f64) -> Self {
        OneFormPair::new(self.u.scale(s), self.v.scale(s))
    }

    pub fn axpy(&self, s: f64, other: &OneFormPair) -> Self {
        OneFormPair::new(self.u.axpy(s, &other.u), self.v.axpy(s, &other.v))
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    fn flatten(&self, npts: usize) -> Vec<f64> {
        let mut out = self.u.broadcast(npts).into_data();
        out.extend_from_slice(self.v.broadcast(npts).data());
        out
    }

    fn unflatten(n: usize, npts: usize, data: &[f64]) -> Self {
        let half = data.len() / 2;
        OneFormPair::new(
            Tensor::from_vec(n, 1, npts, data[..half].to_vec()),
            Tensor::from_vec(n, 1, npts, data[half..].to_vec()),
        )
    }
}

/// Second-variation operators of `λ` at a state.
///
/// Pair pairing: `⟨(u,v),(x,y)⟩ = ⟨u,x⟩_f + ⟨v,y⟩_f`, for which `div̄*` is the
/// formal adjoint of `div̄`.
#[derive(Debug)]
pub struct VariationOps {
    geo: Geometry,
    raised_h: Tensor,
    soliton: OnceLock<f64>,
}

impl VariationOps {
    pub fn new(state: &GeometryState) -> Self {
        Self::from_geometry(Geometry::new(state))
    }

    pub fn from_geometry(geo: Geometry) -> Self {
        let gi = geo.ginv();
        let raised_h = einsum("ijl,ia,jb->abl", &[geo.h(), gi, gi]);
        VariationOps {
            geo,
            raised_h,
            soliton: OnceLock::new(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geo
    }

    pub fn n(&self) -> usize {
        self.geo.n()
    }

    fn npts(&self) -> usize {
        self.geo.frame().npts()
    }

    /// `max(r_g, r_b)` of the soliton equations.
    pub fn soliton_residual(&self) -> f64 {
        *self.soliton.get_or_init(|| {
            let (rg, rb) = self.geo.soliton_residual();
            rg.max(rb)
        })
    }

    pub fn require_soliton(&self) -> Result<(), VariationError> {
        let r = self.soliton_residual();
        if r > SOLITON_TOL {
            return Err(VariationError::NotSoliton(r));
        }
        Ok(())
    }

    pub fn pair_inner(&self, a: &OneFormPair, b: &OneFormPair) -> f64 {
        self.geo.inner(&a.u, &b.u) + self.geo.inner(&a.v, &b.v)
    }

    /// `u_l = (∇⁺)^m γ_ml − ∇^m f γ_ml`, `v_l = (∇⁻)^m γ_lm − ∇^m f γ_lm`.
    pub fn div_bar(&self, gamma: &Tensor) -> OneFormPair {
        let plus = self.geo.bismut(Sign::Plus);
        let minus = self.geo.bismut(Sign::Minus);
        let u = self.geo.nabla_adjoint_slots(gamma, &[plus]).scale(-1.0);
        let v = self.geo.nabla_adjoint_slots(&gamma.transpose(), &[minus]).scale(-1.0);
        OneFormPair::new(u, v)
    }

    /// `γ_ij = −∇⁺_i u_j − ∇⁻_j v_i`.
    pub fn div_bar_star(&self, p: &OneFormPair) -> Tensor {
        let a = self.geo.nabla_bismut(&p.u, Sign::Plus);
        let b = self.geo.nabla_bismut(&p.v, Sign::Minus).transpose();
        (&a + &b).scale(-1.0)
    }

    /// Mixed derivative: `∇⁻` on the first slot, `∇⁺` on the second.
    pub fn nabla_bar(&self, gamma: &Tensor) -> Tensor {
        self.geo.nabla_mixed(gamma)
    }

    /// `Δ̄_f γ = −∇̄^{*f} ∇̄ γ`, composed from the derivative and its flux-form adjoint.
    pub fn delta_bar(&self, gamma: &Tensor) -> Tensor {
        let plus = self.geo.bismut(Sign::Plus);
        let minus = self.geo.bismut(Sign::Minus);
        self.geo
            .nabla_adjoint_slots(&self.nabla_bar(gamma), &[minus, plus])
            .scale(-1.0)
    }

    /// Expanded form of `Δ̄_f γ`:
    /// `Δ_f γ − H_mjk ∇_m γ_ik + H_mik ∇_m γ_kj − ¼(H²_jl γ_il + H²_il γ_lj) − ½H_mkj H_mli γ_lk`
    /// plus `−½(d*_f H)_ik γ_kj + ½(d*_f H)_jk γ_ik`, which vanishes at solitons.
    pub fn delta_bar_expanded(&self, gamma: &Tensor) -> Tensor {
        let geo = &self.geo;
        let h = geo.h();
        let gi = geo.ginv();
        let ng = geo.nabla(gamma);
        let up_first = geo.raise_slot(&geo.raise_slot(&ng, 0), 1);
        let up_last = geo.raise_slot(&geo.raise_slot(&ng, 0), 2);
        let h2 = &geo.curvature().h2;
        let g_up0 = geo.raise_slot(gamma, 0);
        let g_up1 = geo.raise_slot(gamma, 1);
        let g_up = geo.raise(gamma);
        let dsh = geo.d_star(h);
        geo.laplacian(gamma)
            .axpy(-1.0, &einsum("mjk,mik->ij", &[h, &up_last]))
            .axpy(1.0, &einsum("mik,mkj->ij", &[h, &up_first]))
            .axpy(-0.25, &einsum("il,lj->ij", &[&g_up1, h2]))
            .axpy(-0.25, &einsum("il,lj->ij", &[h2, &g_up0]))
            .axpy(-0.5, &einsum("mkj,nli,mn,lk->ij", &[h, h, gi, &g_up]))
            .axpy(-0.5, &einsum("ik,kj->ij", &[&dsh, &g_up0]))
            .axpy(0.5, &einsum("jk,ik->ij", &[&dsh, &g_up1]))
    }

    /// `R̊⁺(γ)_ij = R⁺_iklj γ^kl`.
    pub fn r_ring(&self, gamma: &Tensor) -> Tensor {
        einsum("iklj,kl->ij", &[&self.geo.curvature().rm_plus, &self.geo.raise(gamma)])
    }

    /// `L̄_f = ½Δ̄_f + R̊⁺`.
    pub fn l_bar(&self, gamma: &Tensor) -> Tensor {
        self.delta_bar(gamma).scale(0.5).axpy(1.0, &self.r_ring(gamma))
    }

    /// Positive divergence `div_f u = ∇^m u_m − ⟨∇f, u⟩`.
    pub fn div_one_form(&self, u: &Tensor) -> Tensor {
        self.geo.nabla_adjoint(u).scale(-1.0)
    }

    /// Scalar `div̄_f(u, v) = ½(div_f u + div_f v)`.
    pub fn div_bar_scalar(&self, p: &OneFormPair) -> Tensor {
        self.div_one_form(&p.u).axpy(1.0, &self.div_one_form(&p.v)).scale(0.5)
    }

    /// `Δ^±_f u = Δ_f u ± H^ab_l ∇_a u_b − ¼H²_lk u^k`.
    pub fn delta_pm(&self, u: &Tensor, sign: Sign) -> Tensor {
        let geo = &self.geo;
        let nu = geo.nabla(u);
        let h2u = einsum("lk,k->l", &[&geo.curvature().h2, &geo.raise(u)]);
        geo.laplacian(u)
            .axpy(sign.value(), &einsum("abl,ab->l", &[&self.raised_h, &nu]))
            .axpy(-0.25, &h2u)
    }

    /// `Φ(u, v) = (Δ⁺_f u, Δ⁻_f v)`.
    pub fn phi_pair(&self, p: &OneFormPair) -> OneFormPair {
        OneFormPair::new(self.delta_pm(&p.u, Sign::Plus), self.delta_pm(&p.v, Sign::Minus))
    }

    /// Solves `Δ_f φ = s` with `∫ φ e^{−f} dV = 0`.
    pub fn solve_phi(&self, source: &Tensor) -> Result<Tensor, VariationError> {
        let n = self.n();
        if self.geo.state().is_homogeneous() {
            // invariant sources are constant and integrate to zero only when zero
            let s = source.max_abs();
            if s > 1e-12 {
                return Err(VariationError::NonzeroSource(s));
            }
            return Ok(Tensor::scalar(n, 0.0));
        }
        let npts = self.npts();
        let w = self.weights();
        let total: f64 = w.iter().sum();
        let src = source.broadcast(npts);
        let mean: f64 = src.data().iter().zip(&w).map(|(s, w)| s * w).sum::<f64>() / total;
        let b: Vec<f64> = src.data().iter().zip(&w).map(|(s, w)| -(s - mean) * w).collect();
        let apply = |x: &[f64]| -> Vec<f64> {
            let t = Tensor::scalar_field(n, x.to_vec());
            let l = self.geo.laplacian(&t).broadcast(npts);
            l.data().iter().zip(&w).map(|(l, w)| -l * w).collect()
        };
        let mut x = vec![0.0; npts];
        let out = conjugate_gradient(apply, &b, &mut x, SOLVE_TOL, 20 * npts);
        if !out.converged && out.residual > 1e-10 {
            return Err(VariationError::PhiSolve(out.residual));
        }
        let m: f64 = x.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / total;
        Ok(Tensor::scalar_field(n, x.iter().map(|x| x - m).collect()))
    }

    /// `φ` of the `N̄_f` correction: `Δ_f φ = div̄_f div̄_f γ`.
    pub fn phi(&self, gamma: &Tensor) -> Result<Tensor, VariationError> {
        self.solve_phi(&self.div_bar_scalar(&self.div_bar(gamma)))
    }

    /// `N̄_f γ = L̄_f γ + ½ div̄*_f div̄_f γ + ½ (∇⁺)² φ`.
    pub fn n_bar(&self, gamma: &Tensor) -> Result<Tensor, VariationError> {
        self.require_soliton()?;
        let phi = self.phi(gamma)?;
        let dphi = self.geo.frame().derivative(&phi);
        let hess_plus = self.geo.nabla_bismut(&dphi, Sign::Plus);
        Ok(self
            .l_bar(gamma)
            .axpy(0.5, &self.div_bar_star(&self.div_bar(gamma)))
            .axpy(0.5, &hess_plus))
    }

    /// `⟨γ, N̄_f γ⟩_f`.
    pub fn second_variation(&self, gamma: &Tensor) -> Result<f64, VariationError> {
        Ok(self.geo.inner(gamma, &self.n_bar(gamma)?))
    }

    fn weights(&self) -> Vec<f64> {
        let npts = self.npts();
        let vol = self.geo.frame().cell_volume();
        self.geo.density().broadcast(npts).data().iter().map(|m| m * vol).collect()
    }

    /// Orthogonal projection onto `ker div̄_f`: `γ − div̄*(w)` with
    /// `div̄ div̄* w = div̄ γ`.
    pub fn project_to_kernel(&self, gamma: &Tensor) -> Result<Tensor, VariationError> {
        let n = self.n();
        let npts = self.npts();
        let rhs = self.div_bar(gamma);
        // already in the slice up to roundoff: a relative solve would only amplify noise
        if self.pair_inner(&rhs, &rhs).max(0.0).sqrt() <= 1e-12 * self.geo.norm(gamma) {
            return Ok(gamma.clone());
        }
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            let pa = OneFormPair::unflatten(n, npts, a);
            let pb = OneFormPair::unflatten(n, npts, b);
            self.pair_inner(&pa, &pb)
        };
        let apply = |x: &[f64]| -> Vec<f64> {
            let p = OneFormPair::unflatten(n, npts, x);
            self.div_bar(&self.div_bar_star(&p)).flatten(npts)
        };
        let b = rhs.flatten(npts);
        let mut x = vec![0.0; b.len()];
        conjugate_gradient_in(apply, inner, &b, &mut x, SOLVE_TOL, 4000);
        let p = OneFormPair::unflatten(n, npts, &x);
        let out = gamma.axpy(-1.0, &self.div_bar_star(&p));
        let left = self.div_bar(&out);
        let left = self.pair_inner(&left, &left).max(0.0).sqrt();
        let scale = self.pair_inner(&rhs, &rhs).max(0.0).sqrt().max(self.geo.norm(gamma));
        if left > 1e-9 * scale {
            return Err(VariationError::Projection(left / scale));
        }
        Ok(out)
    }
}
