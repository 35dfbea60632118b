use crate::calculus::{cov, cov_slots, exterior_d};
use crate::state::GeometryState;
use crate::curvature::CurvaturePack;
use std::sync::OnceLock;
use grflab_tensor::{contract_all, contract_slot, determinant, einsum, inverse, pairwise_sum, Frame, Tensor};

/// Derived, read-only data of a state: inverse metric, measure, torsion and the
/// Levi-Civita and Bismut connection coefficients.
#[derive(Debug, Clone)]
pub struct Geometry {
    state: GeometryState,
    gi: Tensor,
    mu: Tensor,
    h: Tensor,
    lc: Tensor,
    plus: Tensor,
    minus: Tensor,
    df: Tensor,
    curvature: OnceLock<CurvaturePack>,
}

impl Geometry {
    pub fn new(state: &GeometryState) -> Geometry {
        let frame = state.frame().as_ref();
        let g = state.g();
        let gi = inverse(g);
        let det = determinant(g);
        let f = state.f();
        let npts = det.npts().max(f.npts());
        let mu = Tensor::from_fn(frame.dim(), 0, npts, |p, _| (-f.at(p)[0]).exp() * det.at(p)[0].sqrt());
        let h = state.h();
        let lc = levi_civita(frame, g, &gi);
        let hu = einsum("mad,dc->mac", &[&h, &gi]).scale(0.5);
        let plus = &lc + &hu;
        let minus = &lc - &hu;
        let df = frame.derivative(f);
        Geometry {
            state: state.clone(),
            gi,
            mu,
            h,
            lc,
            plus,
            minus,
            df,
            curvature: OnceLock::new(),
        }
    }

    pub(crate) fn curvature_cache(&self) -> &OnceLock<CurvaturePack> {
        &self.curvature
    }

    pub fn state(&self) -> &GeometryState {
        &self.state
    }

    pub fn frame(&self) -> &dyn Frame {
        self.state.frame().as_ref()
    }

    pub fn n(&self) -> usize {
        self.state.dim()
    }

    pub fn g(&self) -> &Tensor {
        self.state.g()
    }

    pub fn ginv(&self) -> &Tensor {
        &self.gi
    }

    pub fn h(&self) -> &Tensor {
        &self.h
    }

    /// `e^{−f} √det g` (without the frame's cell volume).
    pub fn density(&self) -> &Tensor {
        &self.mu
    }

    /// Levi-Civita coefficients `A[m][a][c]`.
    pub fn levi_civita(&self) -> &Tensor {
        &self.lc
    }

    /// Bismut coefficients `A± = A ± ½ g⁻¹H`.
    pub fn bismut(&self, sign: Sign) -> &Tensor {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }

    /// `df` as a 1-form.
    pub fn df(&self) -> &Tensor {
        &self.df
    }

    /// `∇f` with the index raised.
    pub fn grad_f(&self) -> Tensor {
        einsum("ij,j->i", &[&self.gi, &self.df])
    }

    pub fn raise(&self, t: &Tensor) -> Tensor {
        contract_all(t, &self.gi)
    }

    pub fn lower(&self, t: &Tensor) -> Tensor {
        contract_all(t, self.g())
    }

    pub fn raise_slot(&self, t: &Tensor, slot: usize) -> Tensor {
        contract_slot(t, slot, &self.gi)
    }

    /// Levi-Civita derivative, new index first.
    pub fn nabla(&self, t: &Tensor) -> Tensor {
        cov(self.frame(), t, &self.lc)
    }

    pub fn nabla_bismut(&self, t: &Tensor, sign: Sign) -> Tensor {
        cov(self.frame(), t, self.bismut(sign))
    }

    /// Derivative with a separate connection per slot.
    pub fn nabla_slots(&self, t: &Tensor, slots: &[&Tensor]) -> Tensor {
        cov_slots(self.frame(), t, slots)
    }

    /// Mixed connection on 2-tensors: `∇⁻` on the first slot, `∇⁺` on the second.
    pub fn nabla_mixed(&self, t: &Tensor) -> Tensor {
        assert_eq!(t.rank(), 2);
        cov_slots(self.frame(), t, &[&self.minus, &self.plus])
    }

    pub fn d(&self, form: &Tensor) -> Tensor {
        exterior_d(self.frame(), form)
    }

    /// `∫ s e^{−f} dV`.
    pub fn integrate(&self, s: &Tensor) -> f64 {
        assert_eq!(s.rank(), 0);
        let npts = self.frame().npts();
        let vol = self.frame().cell_volume();
        let terms: Vec<f64> = (0..npts).map(|p| s.at(p)[0] * self.mu.at(p)[0] * vol).collect();
        pairwise_sum(&terms)
    }

    /// Pointwise full contraction `⟨a, b⟩_g`.
    pub fn pointwise_inner(&self, a: &Tensor, b: &Tensor) -> Tensor {
        assert_eq!(a.rank(), b.rank());
        let ra = self.raise(a);
        let npts = ra.npts().max(b.npts());
        Tensor::from_fn(self.n(), 0, npts, |p, _| {
            ra.at(p).iter().zip(b.at(p)).map(|(x, y)| x * y).sum()
        })
    }

    /// The f-twisted `L²` pairing `∫⟨a, b⟩ e^{−f} dV`.
    pub fn inner(&self, a: &Tensor, b: &Tensor) -> f64 {
        self.integrate(&self.pointwise_inner(a, b))
    }

    pub fn norm_sq(&self, a: &Tensor) -> f64 {
        self.inner(a, a)
    }

    pub fn norm(&self, a: &Tensor) -> f64 {
        self.norm_sq(a).max(0.0).sqrt()
    }

    /// Formal f-adjoint of a derivative with per-slot connections.
    ///
    /// Input `s` has its derivative index first; the result `T` satisfies
    /// `⟨∇T', s⟩_f = ⟨T', T⟩_f` for the derivative `∇` built from `slots`.
    /// Written in flux form, so it is an exact discrete adjoint on lattices.
    pub fn nabla_adjoint_slots(&self, s: &Tensor, slots: &[&Tensor]) -> Tensor {
        let n = self.n();
        let r = s.rank() - 1;
        assert_eq!(slots.len(), r);
        let sharp = self.raise(s).mul_scalar_field(&self.mu);
        let mut y = self.frame().divergence(&sharp).scale(-1.0);
        let npts = sharp.npts().max(y.npts());
        y = y.broadcast(npts);
        let comps = n.pow(r as u32);
        let strides: Vec<usize> = (0..r).map(|k| n.pow((r - 1 - k) as u32)).collect();
        let mut idx = vec![0usize; r];
        for pt in 0..npts {
            let ss = sharp.at(pt);
            let views: Vec<&[f64]> = slots.iter().map(|a| a.at(pt)).collect();
            let o = y.at_mut(pt);
            for flat in 0..comps {
                grflab_tensor::unflatten(flat, n, &mut idx);
                let mut acc = 0.0;
                for (k, a) in views.iter().enumerate() {
                    let ai = idx[k];
                    let base = flat - ai * strides[k];
                    for m in 0..n {
                        for d in 0..n {
                            acc += a[(m * n + d) * n + ai] * ss[m * comps + base + d * strides[k]];
                        }
                    }
                }
                o[flat] -= acc;
            }
        }
        let inv_mu = self.mu.map(|m| 1.0 / m);
        self.lower(&y).mul_scalar_field(&inv_mu)
    }

    pub fn nabla_adjoint(&self, s: &Tensor) -> Tensor {
        let slots: Vec<&Tensor> = (0..s.rank() - 1).map(|_| &self.lc).collect();
        self.nabla_adjoint_slots(s, &slots)
    }

    pub fn nabla_bismut_adjoint(&self, s: &Tensor, sign: Sign) -> Tensor {
        let a = self.bismut(sign);
        let slots: Vec<&Tensor> = (0..s.rank() - 1).map(|_| a).collect();
        self.nabla_adjoint_slots(s, &slots)
    }

    /// f-twisted rough Laplacian `Δ_f T = −∇^{*f}∇T`.
    pub fn laplacian(&self, t: &Tensor) -> Tensor {
        self.nabla_adjoint(&self.nabla(t)).scale(-1.0)
    }

    /// `d*_f ω = −∇^m ω_{m…} + ∇^m f ω_{m…}` for forms (also `div_f` of 2-tensors).
    pub fn d_star(&self, form: &Tensor) -> Tensor {
        self.nabla_adjoint(form)
    }

    /// Pointwise (non flux) `d*ω = −g^{mi} ∇_m ω_{i…}`.
    pub fn d_star_pointwise(&self, form: &Tensor) -> Tensor {
        let nw = self.nabla(form);
        let r = form.rank();
        let raised = contract_slot(&nw, 0, &self.gi);
        let out = grflab_tensor::trace_first_two(&raised).scale(-1.0);
        debug_assert_eq!(out.rank(), r - 1);
        out
    }

    /// `∇_i ∇_j φ`.
    pub fn hessian(&self, phi: &Tensor) -> Tensor {
        self.nabla(&self.frame().derivative(phi))
    }

    /// Unweighted `Δφ = g^ij ∇_i∇_j φ`, evaluated pointwise.
    pub fn laplacian_unweighted(&self, phi: &Tensor) -> Tensor {
        einsum("ij,ij->", &[&self.hessian(phi), &self.gi])
    }

    /// `i_X T` on the first slot for a vector field `X`.
    pub fn interior(&self, x: &Tensor, t: &Tensor) -> Tensor {
        assert_eq!(x.rank(), 1);
        let n = self.n();
        let r = t.rank();
        let inner = n.pow((r - 1) as u32);
        let npts = x.npts().max(t.npts());
        let mut out = Tensor::zeros(n, r - 1, npts);
        for p in 0..npts {
            let xx = x.at(p);
            let tt = t.at(p);
            let o = out.at_mut(p);
            for m in 0..n {
                for c in 0..inner {
                    o[c] += xx[m] * tt[m * inner + c];
                }
            }
        }
        out
    }

    /// `(L_X g)_ab = ∇_a X_b + ∇_b X_a` for a vector field `X`.
    pub fn lie_derivative_metric(&self, x: &Tensor) -> Tensor {
        let xl = einsum("ab,b->a", &[self.g(), x]);
        let nx = self.nabla(&xl);
        &nx + &nx.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `½(e_m g_ac + e_a g_mc − e_c g_ma) + ½(C_mac − C_acm + C_cma)` raised on `c`,
/// with `C_ijk = c_ij^l g_lk`.
pub fn levi_civita(frame: &dyn Frame, g: &Tensor, gi: &Tensor) -> Tensor {
    let dg = frame.derivative(g);
    let cl = einsum("ijl,lk->ijk", &[frame.structure_constants(), g]);
    let metric_part = &(&dg + &dg.permute(&[1, 0, 2])) - &dg.permute(&[2, 0, 1]);
    let bracket_part = &(&cl - &cl.permute(&[1, 2, 0])) + &cl.permute(&[2, 0, 1]);
    let npts = metric_part.npts().max(bracket_part.npts());
    let low = metric_part.broadcast(npts).axpy(1.0, &bracket_part).scale(0.5);
    einsum("mak,kc->mac", &[&low, gi])
}
