use crate::complex::ComplexStructure;
use crate::PluriclosedError;
use grflab_geometry::{Geometry, GeometryState};
use grflab_lie::LieAlgebra;
use grflab_tensor::{einsum, Frame, Tensor};
use serde::Serialize;
use std::sync::Arc;

/// Tolerance for `g(J·,J·) = g`.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Hermitian data of `(g, J)` together with the pluriclosed checks.
#[derive(Debug, Clone)]
pub struct HermitianPack {
    pub omega: Tensor,
    pub d_omega: Tensor,
    /// `d^cω(X,Y,Z) = −dω(JX,JY,JZ)`.
    pub dc_omega: Tensor,
    /// Lee form `θ = −d*ω∘J`.
    pub theta: Tensor,
    pub residuals: HermitianResiduals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HermitianResiduals {
    /// `|g(J·,J·) − g|`.
    pub compatibility: f64,
    pub nijenhuis: f64,
    /// `|dd^cω|`.
    pub pluriclosed: f64,
    /// `|H + d^cω|` for the state's `H`.
    pub torsion: f64,
    /// `|∇⁺ω|`.
    pub bismut_hermitian: f64,
}

impl HermitianResiduals {
    pub fn max(&self) -> f64 {
        [self.compatibility, self.nijenhuis, self.pluriclosed, self.torsion, self.bismut_hermitian]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn require_compatible(g: &Tensor, j: &ComplexStructure) -> Result<(), PluriclosedError> {
    if g.n() != j.n() {
        return Err(PluriclosedError::Shape(format!("J has dim {} but g has dim {}", j.n(), g.n())));
    }
    let r = j.compatibility_residual(g);
    if r > COMPATIBILITY_TOL * g.max_abs().max(1.0) {
        return Err(PluriclosedError::Incompatible(r));
    }
    Ok(())
}

/// `−d^cω` for `ω = g(J·,·)`.
pub fn bismut_torsion(frame: &dyn Frame, g: &Tensor, j: &ComplexStructure) -> Tensor {
    let d_omega = grflab_geometry::exterior_d(frame, &j.kahler_form(g));
    dc_of(&d_omega, j).scale(-1.0)
}

fn dc_of(d_omega: &Tensor, j: &ComplexStructure) -> Tensor {
    let m = j.matrix();
    einsum("pqr,pa,qb,rc->abc", &[d_omega, m, m, m]).scale(-1.0)
}

pub fn hermitian_pack(state: &GeometryState, j: &ComplexStructure) -> Result<HermitianPack, PluriclosedError> {
    require_compatible(state.g(), j)?;
    let geo = Geometry::new(state);
    let omega = j.kahler_form(state.g());
    let d_omega = geo.d(&omega);
    let dc_omega = dc_of(&d_omega, j);
    let theta = einsum("c,ca->a", &[&geo.d_star_pointwise(&omega), j.matrix()]).scale(-1.0);
    let residuals = HermitianResiduals {
        compatibility: j.compatibility_residual(state.g()),
        nijenhuis: j.nijenhuis_residual(geo.frame()),
        pluriclosed: geo.d(&dc_omega).max_abs(),
        torsion: (geo.h() + &dc_omega).max_abs(),
        bismut_hermitian: j.bismut_parallel_residual(&geo),
    };
    Ok(HermitianPack {
        omega,
        d_omega,
        dc_omega,
        theta,
        residuals,
    })
}

/// The pluriclosed state `(g, b = 0, H0 = −d^cω)` with normalized constant `f`.
pub fn pluriclosed_state(frame: Arc<dyn Frame>, g: Tensor, j: &ComplexStructure) -> Result<GeometryState, PluriclosedError> {
    require_compatible(&g, j)?;
    let h0 = bismut_torsion(frame.as_ref(), &g, j);
    Ok(GeometryState::homogeneous(frame, g, h0)?)
}

/// Hopf preset `su(2) ⊕ u(1)` with `g = id` and the Samelson structure; here
/// `H = −d^cω` is minus the Cartan form on `su(2)` and the metric is Bismut-flat.
pub fn hopf_state() -> GeometryState {
    let frame: Arc<dyn Frame> = Arc::new(LieAlgebra::hopf().frame());
    pluriclosed_state(frame, Tensor::identity(4), &ComplexStructure::samelson_hopf()).expect("Hopf preset is Hermitian")
}

/// Bismut–Ricci form and its type components.
#[derive(Debug, Clone)]
pub struct BismutRicci {
    /// `ρ_B(X,Y) = ½ Σ_i ⟨R⁺(X,Y)Je_i, e_i⟩`.
    pub rho: Tensor,
    pub rho_11: Tensor,
    /// `(2,0)+(0,2)` part.
    pub rho_20: Tensor,
    /// `S_B = ⟨ρ_B, ω⟩_g`, pointwise.
    pub scalar: Tensor,
}

pub fn bismut_ricci(geo: &Geometry, j: &ComplexStructure) -> BismutRicci {
    let rp = &geo.curvature().rm_plus;
    let rho = einsum("ijcd,da,ca->ij", &[rp, geo.ginv(), j.matrix()]).scale(0.5);
    let rho_11 = j.hermitian_part(&rho);
    let rho_20 = j.anti_hermitian_part(&rho);
    let scalar = geo.pointwise_inner(&rho, &j.kahler_form(geo.g()));
    BismutRicci {
        rho,
        rho_11,
        rho_20,
        scalar,
    }
}

/// Pluriclosed flow velocity in both representations.
#[derive(Debug, Clone)]
pub struct PluriclosedRhs {
    /// `∂ω/∂t = −ρ_B^{1,1}`.
    pub d_omega: Tensor,
    /// `∂β/∂t = −ρ_B^{2,0}`.
    pub d_beta: Tensor,
    /// `∂g/∂t` transported from `∂ω/∂t` through `g = −Jᵀω`.
    pub dg: Tensor,
    /// `(2,0)+(0,2)` part of `∂b/∂t`, i.e. `−(∂β/∂t)∘J`.
    pub db_20: Tensor,
    /// `−Rc + ¼H² − ½L_{θ♯}g`.
    pub dg_gauge: Tensor,
    /// `−½d*H + ½dθ − ½i_{θ♯}H`.
    pub db_gauge: Tensor,
    pub residuals: PggResiduals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PggResiduals {
    /// `|∂g/∂t − (−Rc + ¼H² − ½L_{θ♯}g)|`.
    pub metric: f64,
    /// `|(∂b/∂t)_gauge^{2,0} − (∂b/∂t)^{2,0}|`.
    pub b_field: f64,
    /// `|L_{θ♯}g` via `∇θ♯` minus the bracket expression`|, homogeneous states only.
    pub lie_derivative: Option<f64>,
}

impl PggResiduals {
    pub fn max(&self) -> f64 {
        self.metric.max(self.b_field).max(self.lie_derivative.unwrap_or(0.0))
    }
}

/// `(L_X g)_ab = −X^i c_ia^k g_kb − X^i c_ib^k g_ak` for a left-invariant `X`.
pub fn lie_derivative_bracket(c: &Tensor, g: &Tensor, x: &Tensor) -> Tensor {
    let t = einsum("i,iak,kb->ab", &[x, c, g]);
    (&t + &t.transpose()).scale(-1.0)
}

pub fn pluriclosed_rhs(state: &GeometryState, j: &ComplexStructure) -> Result<PluriclosedRhs, PluriclosedError> {
    let pack = hermitian_pack(state, j)?;
    let geo = Geometry::new(state);
    let br = bismut_ricci(&geo, j);
    let d_omega = br.rho_11.scale(-1.0);
    let d_beta = br.rho_20.scale(-1.0);
    let dg = einsum("ka,kb->ab", &[j.matrix(), &d_omega]).scale(-1.0);
    let db_20 = j.compose(&d_beta).scale(-1.0);

    let c = geo.curvature();
    let x = einsum("ij,j->i", &[geo.ginv(), &pack.theta]);
    let lie = geo.lie_derivative_metric(&x);
    let dg_gauge = c.rc.scale(-1.0).axpy(0.25, &c.h2).axpy(-0.5, &lie);
    let db_gauge = c
        .d_star_h
        .scale(-0.5)
        .axpy(0.5, &geo.d(&pack.theta))
        .axpy(-0.5, &geo.interior(&x, geo.h()));
    let lie_derivative = state
        .is_homogeneous()
        .then(|| (&lie - &lie_derivative_bracket(geo.frame().structure_constants(), state.g(), &x)).max_abs());
    let residuals = PggResiduals {
        metric: (&dg - &dg_gauge).max_abs(),
        b_field: (&j.anti_hermitian_part(&db_gauge) - &db_20).max_abs(),
        lie_derivative,
    };
    Ok(PluriclosedRhs {
        d_omega,
        d_beta,
        dg,
        db_20,
        dg_gauge,
        db_gauge,
        residuals,
    })
}
