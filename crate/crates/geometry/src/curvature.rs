use crate::geometry::{Geometry, Sign};
use grflab_tensor::{einsum, Frame, Tensor};

/// `Rm_ijkl = ⟨R(e_i,e_j)e_k, e_l⟩` of the connection with coefficients `a`.
pub fn curvature_tensor(frame: &dyn Frame, a: &Tensor, g: &Tensor) -> Tensor {
    let da = frame.derivative(a);
    let quad = &einsum("jkl,ilp->ijkp", &[a, a]) - &einsum("ikl,jlp->ijkp", &[a, a]);
    let bracket = einsum("ijl,lkp->ijkp", &[frame.structure_constants(), a]);
    let npts = da.npts().max(quad.npts());
    let r = (&da.broadcast(npts) - &da.permute(&[1, 0, 2, 3]).broadcast(npts))
        .axpy(1.0, &quad)
        .axpy(-1.0, &bracket);
    einsum("ijkp,pl->ijkl", &[&r, g])
}

/// Levi-Civita and Bismut (`∇⁺`) curvatures together with the torsion terms
/// that relate them.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub rm: Tensor,
    pub rc: Tensor,
    pub r: Tensor,
    pub rm_plus: Tensor,
    pub rc_plus: Tensor,
    pub r_plus: Tensor,
    pub h2: Tensor,
    pub h_norm_sq: Tensor,
    /// Pointwise `d*H_jk = −∇^i H_ijk`.
    pub d_star_h: Tensor,
    pub nabla_h: Tensor,
}

impl CurvaturePack {
    pub fn new(geo: &Geometry) -> CurvaturePack {
        let gi = geo.ginv();
        let h = geo.h();
        let rm = curvature_tensor(geo.frame(), geo.levi_civita(), geo.g());
        let rc = einsum("ijkl,il->jk", &[&rm, gi]);
        let r = einsum("jk,jk->", &[&rc, gi]);
        let h2 = einsum("ikl,jmn,km,ln->ij", &[h, h, gi, gi]);
        let h_norm_sq = einsum("ij,ij->", &[&h2, gi]);
        let nabla_h = geo.nabla(h);
        let d_star_h = einsum("mijk,mi->jk", &[&nabla_h, gi]).scale(-1.0);
        let p = einsum("xwa,yzb,ab->xyzw", &[h, h, gi]);
        let q = einsum("ywa,xzb,ab->xyzw", &[h, h, gi]);
        let rm_plus = rm
            .axpy(0.5, &nabla_h)
            .axpy(-0.5, &nabla_h.permute(&[1, 0, 2, 3]))
            .axpy(-0.25, &p)
            .axpy(0.25, &q);
        let rc_plus = einsum("ijkl,il->jk", &[&rm_plus, gi]);
        let r_plus = einsum("jk,jk->", &[&rc_plus, gi]);
        CurvaturePack {
            rm,
            rc,
            r,
            rm_plus,
            rc_plus,
            r_plus,
            h2,
            h_norm_sq,
            d_star_h,
            nabla_h,
        }
    }

    /// Schrödinger potential `R − |H|²/12`.
    pub fn potential(&self) -> Tensor {
        self.r.axpy(-1.0 / 12.0, &self.h_norm_sq)
    }
}

/// Largest residuals of the algebraic curvature identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `R⁺ − (R − ¼|H|²)`.
    pub scalar: f64,
    /// `Rc⁺ − (Rc − ¼H² − ½d*H)`.
    pub ricci: f64,
    /// Antisymmetry of `Rm⁺` in its first and in its last pair.
    pub pair_antisymmetry: f64,
    /// `Rc − Rcᵀ`.
    pub ricci_symmetry: f64,
    /// `|dH|`.
    pub closedness: f64,
}

impl Geometry {
    pub fn curvature(&self) -> &CurvaturePack {
        self.curvature_cache().get_or_init(|| CurvaturePack::new(self))
    }

    pub fn identity_residuals(&self) -> IdentityResiduals {
        let c = self.curvature();
        let scalar = (&c.r_plus - &c.r.axpy(-0.25, &c.h_norm_sq)).max_abs();
        let expected = c.rc.axpy(-0.25, &c.h2).axpy(-0.5, &c.d_star_h);
        let ricci = (&c.rc_plus - &expected).max_abs();
        let first = (&c.rm_plus + &c.rm_plus.permute(&[1, 0, 2, 3])).max_abs();
        let last = (&c.rm_plus + &c.rm_plus.permute(&[0, 1, 3, 2])).max_abs();
        IdentityResiduals {
            scalar,
            ricci,
            pair_antisymmetry: first.max(last),
            ricci_symmetry: (&c.rc - &c.rc.transpose()).max_abs(),
            closedness: self.d(self.h()).max_abs(),
        }
    }

    /// Largest entry of `Σ_cyc Rm⁺(x,y,z,w) − ½(Σ_cyc (∇⁺_x H)(y,z,w) + (∇⁺_w H)(x,y,z))`.
    pub fn bianchi_residual(&self) -> f64 {
        let rp = &self.curvature().rm_plus;
        let nhp = self.nabla_bismut(self.h(), Sign::Plus);
        let cyc = |t: &Tensor| &(t + &t.permute(&[2, 0, 1, 3])) + &t.permute(&[1, 2, 0, 3]);
        let rhs = (&cyc(&nhp) + &nhp.permute(&[3, 0, 1, 2])).scale(0.5);
        (&cyc(rp) - &rhs).max_abs()
    }

    /// `Rc^{H,f} = Rc − ¼H² + ∇²f − ½(d*H + i_∇f H)`, with `d*H + i_∇f H = d*_f H`.
    pub fn rc_hf(&self) -> Tensor {
        let c = self.curvature();
        let sym = c.rc.axpy(-0.25, &c.h2).axpy(1.0, &self.hessian(self.state().f()));
        sym.axpy(-0.5, &self.d_star(self.h()))
    }

    /// `Rc^H = Rc − ¼H² − ½d*H` (the `f`-free version).
    pub fn rc_h(&self) -> Tensor {
        let c = self.curvature();
        c.rc.axpy(-0.25, &c.h2).axpy(-0.5, &c.d_star_h)
    }

    /// f-twisted norms of the metric and b-field soliton equations.
    pub fn soliton_residual(&self) -> (f64, f64) {
        let rc = self.rc_hf();
        (self.norm(&rc.sym()), self.norm(&rc.skew().scale(2.0)))
    }

    /// `λ` integrand `R − |H|²/12 + 2Δf − |∇f|²`.
    pub fn lambda_density(&self) -> Tensor {
        let c = self.curvature();
        let f = self.state().f();
        let df = self.df();
        let lap = self.laplacian_unweighted(f);
        let grad_sq = self.pointwise_inner(df, df);
        c.potential().axpy(2.0, &lap).axpy(-1.0, &grad_sq)
    }
}
