use crate::PluriclosedError;
use grflab_geometry::{Geometry, Sign};
use grflab_tensor::{einsum, Frame, Tensor};

/// `J² + id` tolerance applied on construction.
pub const SQUARE_TOL: f64 = 1e-12;

/// A frame-constant almost complex structure. `j[a][b]` is the `e_a`
/// component of `J e_b`, so `(γ∘J)_ij = γ_ik j[k][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    j: Tensor,
}

impl ComplexStructure {
    pub fn new(j: Tensor) -> Result<Self, PluriclosedError> {
        if j.rank() != 2 || j.npts() != 1 || j.n() % 2 != 0 {
            return Err(PluriclosedError::Shape(format!(
                "J must be a constant n×n endomorphism with n even (got rank {}, n {}, {} points)",
                j.rank(),
                j.n(),
                j.npts()
            )));
        }
        let cs = ComplexStructure { j };
        let r = cs.square_residual();
        if r > SQUARE_TOL {
            return Err(PluriclosedError::NotComplex(r));
        }
        Ok(cs)
    }

    /// Samelson structure on `su(2) ⊕ u(1)`: `Je₁ = e₂`, `Je₃ = e₀`.
    pub fn samelson_hopf() -> Self {
        let mut j = Tensor::zeros(4, 2, 1);
        j.set(0, &[2, 1], 1.0);
        j.set(0, &[1, 2], -1.0);
        j.set(0, &[0, 3], 1.0);
        j.set(0, &[3, 0], -1.0);
        ComplexStructure { j }
    }

    /// `J e_{2k} = e_{2k+1}`.
    pub fn standard(n: usize) -> Result<Self, PluriclosedError> {
        let mut j = Tensor::zeros(n, 2, 1);
        for k in 0..n / 2 {
            j.set(0, &[2 * k + 1, 2 * k], 1.0);
            j.set(0, &[2 * k, 2 * k + 1], -1.0);
        }
        Self::new(j)
    }

    /// `"hopf"` or `"abelian:n"` with `n` even.
    pub fn preset(name: &str) -> Result<Self, PluriclosedError> {
        if name == "hopf" {
            return Ok(Self::samelson_hopf());
        }
        name.strip_prefix("abelian:")
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|n| n % 2 == 0 && *n > 0)
            .ok_or_else(|| PluriclosedError::NoPreset(name.to_string()))
            .and_then(Self::standard)
    }

    pub fn matrix(&self) -> &Tensor {
        &self.j
    }

    pub fn n(&self) -> usize {
        self.j.n()
    }

    pub fn square_residual(&self) -> f64 {
        einsum("ak,kb->ab", &[&self.j, &self.j]).axpy(1.0, &Tensor::identity(self.n())).max_abs()
    }

    /// `γ∘J`, i.e. `(X, Y) ↦ γ(X, JY)`.
    pub fn compose(&self, gamma: &Tensor) -> Tensor {
        einsum("ik,kj->ij", &[gamma, &self.j])
    }

    /// `s(J·, J·)`.
    pub fn conjugate(&self, s: &Tensor) -> Tensor {
        einsum("ab,ac,bd->cd", &[s, &self.j, &self.j])
    }

    /// `½(s + s(J·,J·))`.
    pub fn hermitian_part(&self, s: &Tensor) -> Tensor {
        s.axpy(1.0, &self.conjugate(s)).scale(0.5)
    }

    /// `½(s − s(J·,J·))`: the `(2,0)+(0,2)` part of a 2-form, the anti-Hermitian part of a symmetric tensor.
    pub fn anti_hermitian_part(&self, s: &Tensor) -> Tensor {
        s.axpy(-1.0, &self.conjugate(s)).scale(0.5)
    }

    /// `(3,0)+(0,3)` part of a real 3-form, `¼(α − α(J,J,·) − α(J,·,J) − α(·,J,J))`.
    pub fn type_30_part(&self, a: &Tensor) -> Tensor {
        let j = &self.j;
        let t1 = einsum("pqc,pa,qb->abc", &[a, j, j]);
        let t2 = einsum("pbr,pa,rc->abc", &[a, j, j]);
        let t3 = einsum("aqr,qb,rc->abc", &[a, j, j]);
        a.axpy(-1.0, &t1).axpy(-1.0, &t2).axpy(-1.0, &t3).scale(0.25)
    }

    /// `ω(X,Y) = g(JX, Y)`.
    pub fn kahler_form(&self, g: &Tensor) -> Tensor {
        einsum("ka,kb->ab", &[&self.j, g])
    }

    /// Largest entry of `g(J·,J·) − g`.
    pub fn compatibility_residual(&self, g: &Tensor) -> f64 {
        (&self.conjugate(g) - g).max_abs()
    }

    /// `N_J(e_a, e_b)` from the frame brackets; valid because `J` is frame-constant.
    pub fn nijenhuis(&self, frame: &dyn Frame) -> Tensor {
        let c = frame.structure_constants();
        let j = &self.j;
        let id = Tensor::identity(self.n());
        bracket(c, j, j)
            .axpy(-1.0, &apply(j, &bracket_first(c, j)))
            .axpy(-1.0, &apply(j, &bracket_second(c, j)))
            .axpy(-1.0, &bracket(c, &id, &id))
    }

    pub fn nijenhuis_residual(&self, frame: &dyn Frame) -> f64 {
        self.nijenhuis(frame).max_abs()
    }

    /// Derivative of `N_J` along a frame-constant endomorphism `I`
    /// (`i[a][b]` = `e_a` component of `I e_b`).
    pub fn nijenhuis_variation(&self, frame: &dyn Frame, i: &Tensor) -> Tensor {
        let c = frame.structure_constants();
        let j = &self.j;
        // N(X,Y) = [JX,JY] − J[JX,Y] − J[X,JY] − [X,Y]; differentiate each J.
        let a = bracket(c, i, j);
        let b = bracket(c, j, i);
        let m1 = apply(i, &bracket_first(c, j));
        let m2 = apply(j, &bracket_first(c, i));
        let m3 = apply(i, &bracket_second(c, j));
        let m4 = apply(j, &bracket_second(c, i));
        a.axpy(1.0, &b).axpy(-1.0, &m1).axpy(-1.0, &m2).axpy(-1.0, &m3).axpy(-1.0, &m4)
    }

    /// Complex-structure variation `I = −g⁻¹η̃` of a symmetric anti-Hermitian `η̃`.
    pub fn deformation(&self, geo: &Geometry, eta_tilde: &Tensor) -> Tensor {
        einsum("ki,ij->kj", &[geo.ginv(), eta_tilde]).scale(-1.0)
    }

    /// `∇⁺ω`; zero iff the Bismut connection preserves `J`.
    pub fn bismut_parallel_residual(&self, geo: &Geometry) -> f64 {
        geo.nabla_bismut(&self.kahler_form(geo.g()), Sign::Plus).max_abs()
    }
}

/// `out[a][b][k]` = `e_k` component of `[P e_a, Q e_b]`.
fn bracket(c: &Tensor, p: &Tensor, q: &Tensor) -> Tensor {
    einsum("xa,yb,xyk->abk", &[p, q, c])
}

/// `[P e_a, e_b]`.
fn bracket_first(c: &Tensor, p: &Tensor) -> Tensor {
    einsum("xa,xbk->abk", &[p, c])
}

/// `[e_a, P e_b]`.
fn bracket_second(c: &Tensor, p: &Tensor) -> Tensor {
    einsum("yb,ayk->abk", &[p, c])
}

fn apply(m: &Tensor, v: &Tensor) -> Tensor {
    einsum("kl,abl->abk", &[m, v])
}

#[cfg(test)]
mod tests {
    use super::*;
    use grflab_lie::LieAlgebra;

    #[test]
    fn presets_square_to_minus_one() {
        assert_eq!(ComplexStructure::samelson_hopf().square_residual(), 0.0);
        assert_eq!(ComplexStructure::preset("abelian:4").unwrap().square_residual(), 0.0);
        assert!(ComplexStructure::preset("abelian:3").is_err());
        assert!(ComplexStructure::new(Tensor::identity(2)).is_err());
    }

    #[test]
    fn samelson_is_integrable() {
        let j = ComplexStructure::samelson_hopf();
        assert_eq!(j.nijenhuis_residual(&LieAlgebra::hopf().frame()), 0.0);
    }

    #[test]
    fn sheared_structure_is_not_integrable() {
        // P J P⁻¹ with P = id + ½ e₁⊗e₃* is not induced by an automorphism.
        let mut p = Tensor::identity(4);
        p.set(0, &[1, 3], 0.5);
        let mut pi = Tensor::identity(4);
        pi.set(0, &[1, 3], -0.5);
        let m = einsum("ab,bc,cd->ad", &[&p, ComplexStructure::samelson_hopf().matrix(), &pi]);
        let j = ComplexStructure::new(m).unwrap();
        assert!(j.nijenhuis_residual(&LieAlgebra::hopf().frame()) > 0.1);
        assert!(ComplexStructure::standard(4).unwrap().nijenhuis_residual(&LieAlgebra::abelian(4).frame()) == 0.0);
    }

    #[test]
    fn nijenhuis_variation_matches_difference_quotient() {
        let frame = LieAlgebra::hopf().frame();
        let j = ComplexStructure::samelson_hopf();
        let i = Tensor::from_fn(4, 2, 1, |_, x| ((x[0] * 3 + x[1] * 5) % 7) as f64 / 7.0 - 0.4);
        let eps = 1e-6;
        let jp = ComplexStructure { j: j.matrix().axpy(eps, &i) };
        let jm = ComplexStructure { j: j.matrix().axpy(-eps, &i) };
        let fd = (&jp.nijenhuis(&frame) - &jm.nijenhuis(&frame)).scale(0.5 / eps);
        assert!((&fd - &j.nijenhuis_variation(&frame, &i)).max_abs() < 1e-8);
    }

    #[test]
    fn type_projection_is_idempotent() {
        let j = ComplexStructure::standard(6).unwrap();
        let a = grflab_tensor::antisymmetrize(&Tensor::from_fn(6, 3, 1, |_, x| {
            ((x[0] * 7 + x[1] * 3 + x[2] * 11) % 13) as f64 - 6.0
        }));
        let p = j.type_30_part(&a);
        assert!((&j.type_30_part(&p) - &p).max_abs() < 1e-12);
        assert!(p.max_abs() > 0.1);
    }
}
