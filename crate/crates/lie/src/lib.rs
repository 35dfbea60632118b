//! Left-invariant geometry on compact Lie groups.
//!
//! Invariant tensors are constant in a left-invariant frame, so every
//! derivative reduces to an algebraic contraction with structure constants.

use grflab_tensor::{antisymmetry_defect, check_spd, einsum, epsilon3, inverse, Frame, SpdError, Tensor};

pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LieError {
    #[error("structure constants are not antisymmetric (defect {0:.3e})")]
    NotAntisymmetric(f64),
    #[error("Jacobi identity fails (residual {0:.3e})")]
    Jacobi(f64),
    #[error("algebra is not unimodular (trace of ad is {0:.3e})")]
    NotUnimodular(f64),
    #[error("form is not antisymmetric (defect {0:.3e})")]
    FormNotAntisymmetric(f64),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Metric(#[from] SpdError),
}

/// Structure constants `c[i][j][k]`: the coefficient of `e_k` in `[e_i, e_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    name: String,
    c: Tensor,
}

impl LieAlgebra {
    /// Validates antisymmetry, Jacobi and unimodularity.
    pub fn new(name: impl Into<String>, c: Tensor) -> Result<Self, LieError> {
        assert_eq!(c.rank(), 3);
        let alg = LieAlgebra { name: name.into(), c };
        let a = alg.antisymmetry_residual();
        if a > STRUCTURE_TOL {
            return Err(LieError::NotAntisymmetric(a));
        }
        let j = alg.jacobi_residual();
        if j > STRUCTURE_TOL {
            return Err(LieError::Jacobi(j));
        }
        let u = alg.unimodularity_residual();
        if u > STRUCTURE_TOL {
            return Err(LieError::NotUnimodular(u));
        }
        Ok(alg)
    }

    pub fn su2() -> Self {
        Self::new("su2", epsilon3()).unwrap()
    }

    /// `su(2) ⊕ u(1)` with `e0` central and `e1, e2, e3` spanning `su(2)`.
    pub fn hopf() -> Self {
        let e = epsilon3();
        let c = Tensor::from_fn(4, 3, 1, |_, i| {
            if i.iter().all(|&x| x >= 1) {
                e.get(0, &[i[0] - 1, i[1] - 1, i[2] - 1])
            } else {
                0.0
            }
        });
        Self::new("hopf", c).unwrap()
    }

    pub fn abelian(n: usize) -> Self {
        Self::new(format!("abelian:{n}"), Tensor::zeros(n, 3, 1)).unwrap()
    }

    /// `"su2"`, `"hopf"` or `"abelian:n"`.
    pub fn preset(name: &str) -> Result<Self, LieError> {
        match name {
            "su2" => Ok(Self::su2()),
            "hopf" => Ok(Self::hopf()),
            _ => {
                let n = name
                    .strip_prefix("abelian:")
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| LieError::UnknownPreset(name.to_string()))?;
                Ok(Self::abelian(n))
            }
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["su2", "hopf", "abelian:n"]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.c.n()
    }

    pub fn structure(&self) -> &Tensor {
        &self.c
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c.get(0, &[i, j, k])
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        (&self.c + &self.c.permute(&[1, 0, 2])).max_abs()
    }

    pub fn jacobi_residual(&self) -> f64 {
        let c = &self.c;
        // c_ij^m c_mk^l + cyclic(i,j,k)
        let t = einsum("ijm,mkl->ijkl", &[c, c]);
        let cyc = &(&t + &t.permute(&[2, 0, 1, 3])) + &t.permute(&[1, 2, 0, 3]);
        cyc.max_abs()
    }

    pub fn unimodularity_residual(&self) -> f64 {
        einsum("iji->j", &[&self.c]).max_abs()
    }

    /// Basis permutations `σ` with `c[σi][σj][σk] = c[i][j][k]`.
    pub fn permutation_symmetries(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut out = Vec::new();
        for p in all_permutations(n) {
            let ok = (0..n).all(|i| {
                (0..n).all(|j| (0..n).all(|k| self.c(p[i], p[j], p[k]) == self.c(i, j, k)))
            });
            if ok {
                out.push(p);
            }
        }
        out
    }

    pub fn frame(&self) -> HomogeneousFrame {
        HomogeneousFrame { alg: self.clone() }
    }
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Chevalley–Eilenberg differential of an invariant `p`-form:
/// `(dω)(x0,…,xp) = Σ_{i<j} (−1)^{i+j} ω([xi,xj], x0,…,x̂i,…,x̂j,…,xp)`.
pub fn chevalley_d(form: &Tensor, alg: &LieAlgebra) -> Result<Tensor, LieError> {
    let defect = antisymmetry_defect(form);
    let scale = form.max_abs().max(1.0);
    if defect > 1e-12 * scale {
        return Err(LieError::FormNotAntisymmetric(defect));
    }
    Ok(bracket_d(form, alg.structure()))
}

/// The bracket part of the exterior derivative, for any frame.
pub fn bracket_d(form: &Tensor, c: &Tensor) -> Tensor {
    let n = c.n();
    let p = form.rank();
    let npts = form.npts();
    let mut out = Tensor::zeros(n, p + 1, npts);
    let mut idx = vec![0usize; p + 1];
    let mut rest = vec![0usize; p];
    let cc = c.at(0);
    for pt in 0..npts {
        let w = form.at(pt);
        let comps = n.pow((p + 1) as u32);
        for flat in 0..comps {
            grflab_tensor::unflatten(flat, n, &mut idx);
            let mut v = 0.0;
            for i in 0..=p {
                for j in i + 1..=p {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let mut r = 1;
                    for (k, &x) in idx.iter().enumerate() {
                        if k != i && k != j {
                            rest[r] = x;
                            r += 1;
                        }
                    }
                    for m in 0..n {
                        let b = cc[(idx[i] * n + idx[j]) * n + m];
                        if b != 0.0 {
                            rest[0] = m;
                            v += sign * b * w[grflab_tensor::flatten(&rest, n)];
                        }
                    }
                }
            }
            out.at_mut(pt)[flat] = v;
        }
    }
    out
}

/// Levi-Civita coefficients `Γ[m][a][c]` with `∇_{e_m} e_a = Γ_ma^c e_c` for an
/// invariant metric, from `2⟨∇_x y,z⟩ = ⟨[x,y],z⟩ − ⟨[y,z],x⟩ + ⟨[z,x],y⟩`.
pub fn koszul_connection(g: &Tensor, alg: &LieAlgebra) -> Result<Tensor, LieError> {
    check_spd(g, 1e-12)?;
    let cl = einsum("ijl,lk->ijk", &[alg.structure(), g]);
    let low = &(&cl - &cl.permute(&[1, 2, 0])) + &cl.permute(&[2, 0, 1]);
    // cl.permute([1,2,0])[m,a,c] = cl[a,c,m]; cl.permute([2,0,1])[m,a,c] = cl[c,m,a]
    let gi = inverse(g);
    Ok(einsum("mak,kc->mac", &[&low, &gi]).scale(0.5))
}

/// `(∇_m T)_{a…} = −Σ_slots Γ_{m a_s}^c T_{…c…}` for invariant `T`.
pub fn invariant_derivative(t: &Tensor, gamma: &Tensor) -> Tensor {
    let n = t.n();
    let r = t.rank();
    let comps = t.comps();
    let mut out = Tensor::zeros(n, r + 1, 1);
    let tt = t.at(0);
    let gg = gamma.at(0);
    let mut idx = vec![0usize; r];
    for m in 0..n {
        for flat in 0..comps {
            grflab_tensor::unflatten(flat, n, &mut idx);
            let mut v = 0.0;
            for s in 0..r {
                let a = idx[s];
                let stride = n.pow((r - 1 - s) as u32);
                let base = flat - a * stride;
                for c in 0..n {
                    v -= gg[(m * n + a) * n + c] * tt[base + c * stride];
                }
            }
            out.at_mut(0)[m * comps + flat] = v;
        }
    }
    out
}

/// The left-invariant frame of a Lie group: one point, zero derivatives.
#[derive(Debug, Clone)]
pub struct HomogeneousFrame {
    alg: LieAlgebra,
}

impl HomogeneousFrame {
    pub fn algebra(&self) -> &LieAlgebra {
        &self.alg
    }
}

impl Frame for HomogeneousFrame {
    fn dim(&self) -> usize {
        self.alg.dim()
    }

    fn npts(&self) -> usize {
        1
    }

    fn cell_volume(&self) -> f64 {
        1.0
    }

    fn structure_constants(&self) -> &Tensor {
        self.alg.structure()
    }

    fn derivative(&self, t: &Tensor) -> Tensor {
        assert_eq!(t.npts(), 1, "invariant tensors live on a single point");
        Tensor::zeros(t.n(), t.rank() + 1, 1)
    }

    fn label(&self) -> String {
        self.alg.name().to_string()
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in ["su2", "hopf", "abelian:3", "abelian:4"] {
            let a = LieAlgebra::preset(name).unwrap();
            assert!(a.jacobi_residual() < 1e-12);
            assert!(a.unimodularity_residual() < 1e-12);
        }
        assert!(LieAlgebra::preset("so3x").is_err());
        assert!(LieAlgebra::preset("abelian:0").is_err());
    }

    #[test]
    fn rejects_nonunimodular() {
        // the 2-dim affine algebra [e0,e1] = e1
        let mut c = Tensor::zeros(2, 3, 1);
        c.set(0, &[0, 1, 1], 1.0);
        c.set(0, &[1, 0, 1], -1.0);
        assert!(matches!(LieAlgebra::new("aff", c), Err(LieError::NotUnimodular(_))));
    }

    #[test]
    fn rejects_non_antisymmetric_form() {
        let a = LieAlgebra::su2();
        let b = Tensor::identity(3);
        assert!(matches!(chevalley_d(&b, &a), Err(LieError::FormNotAntisymmetric(_))));
    }

    #[test]
    fn d_of_zero_is_zero() {
        let a = LieAlgebra::hopf();
        let d = chevalley_d(&Tensor::zeros(4, 2, 1), &a).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn top_degree_d_vanishes_on_su2() {
        let a = LieAlgebra::su2();
        let h = epsilon3().scale(0.7);
        assert_eq!(chevalley_d(&h, &a).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn koszul_su2_identity() {
        let a = LieAlgebra::su2();
        let gam = koszul_connection(&Tensor::identity(3), &a).unwrap();
        assert!((&gam - &epsilon3().scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn koszul_rejects_indefinite() {
        let a = LieAlgebra::su2();
        let g = Tensor::constant(3, 2, &[1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 1.0]);
        let err = koszul_connection(&g, &a).unwrap_err();
        assert!(err.to_string().contains("-2.0"));
    }

    #[test]
    fn scalar_derivative_is_zero() {
        let a = LieAlgebra::su2();
        let gam = koszul_connection(&Tensor::identity(3), &a).unwrap();
        let d = invariant_derivative(&Tensor::scalar(3, 4.0), &gam);
        assert_eq!(d.rank(), 1);
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn su2_symmetries_include_cyclic() {
        let s = LieAlgebra::su2().permutation_symmetries();
        assert!(s.contains(&vec![1, 2, 0]));
        assert!(!s.contains(&vec![1, 0, 2]));
    }
}
