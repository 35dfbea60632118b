use crate::ops::{OneFormPair, VariationError, VariationOps};
use grflab_functional::random_tensor;
use grflab_geometry::Sign;
use grflab_tensor::{einsum, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Largest f-norms of the two sides' difference, over all samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CommResiduals {
    /// `N̄ div̄*(u,v)`.
    pub mt1: f64,
    /// `div̄ div̄*(u,v) + (Δ⁺u + ∇div v, Δ⁻v + ∇div u)`.
    pub comm1: f64,
    /// `div̄ div̄ div̄*(u,v) + Δ_f(div u + div v)`.
    pub comm2: f64,
    /// `L̄ div̄*(u,v) − ½ div̄* Φ(u,v)`.
    pub comm6: f64,
    /// `div̄ L̄ γ − ½ Φ(div̄ γ)`.
    pub comm7: f64,
    /// `Δ_f div̄(u,v) − div̄ Φ(u,v)`.
    pub div_laplacian: f64,
    /// `div̄ L̄ γ` for `γ` projected onto `ker div̄`.
    pub decomposition: f64,
}

impl CommResiduals {
    pub fn max(&self) -> f64 {
        [self.mt1, self.comm1, self.comm2, self.comm6, self.comm7, self.div_laplacian, self.decomposition]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn merge(&mut self, o: &CommResiduals) {
        self.mt1 = self.mt1.max(o.mt1);
        self.comm1 = self.comm1.max(o.comm1);
        self.comm2 = self.comm2.max(o.comm2);
        self.comm6 = self.comm6.max(o.comm6);
        self.comm7 = self.comm7.max(o.comm7);
        self.div_laplacian = self.div_laplacian.max(o.div_laplacian);
        self.decomposition = self.decomposition.max(o.decomposition);
    }
}

impl VariationOps {
    fn pair_norm(&self, p: &OneFormPair) -> f64 {
        self.pair_inner(p, p).max(0.0).sqrt()
    }

    fn grad(&self, phi: &Tensor) -> Tensor {
        self.geometry().frame().derivative(phi)
    }

    /// `(−Δ⁺u − ∇div v, −Δ⁻v − ∇div u)`.
    pub fn comm1_rhs(&self, p: &OneFormPair) -> OneFormPair {
        let du = self.div_one_form(&p.u);
        let dv = self.div_one_form(&p.v);
        OneFormPair::new(
            self.delta_pm(&p.u, Sign::Plus).axpy(1.0, &self.grad(&dv)).scale(-1.0),
            self.delta_pm(&p.v, Sign::Minus).axpy(1.0, &self.grad(&du)).scale(-1.0),
        )
    }

    /// Classical Bochner form of `div̄ div̄*` for `H = 0` (any `g`, `f`):
    /// `(−Δ_f u − ∇div_f v − Rc^f(v), −Δ_f v − ∇div_f u − Rc^f(u))`
    /// with `Rc^f = Rc + ∇²f`.
    pub fn bochner_rhs(&self, p: &OneFormPair) -> OneFormPair {
        let geo = self.geometry();
        let rcf = geo.curvature().rc.axpy(1.0, &geo.hessian(geo.state().f()));
        let act = |w: &Tensor| einsum("lk,k->l", &[&rcf, &geo.raise(w)]);
        let du = self.div_one_form(&p.u);
        let dv = self.div_one_form(&p.v);
        OneFormPair::new(
            geo.laplacian(&p.u).axpy(1.0, &self.grad(&dv)).axpy(1.0, &act(&p.v)).scale(-1.0),
            geo.laplacian(&p.v).axpy(1.0, &self.grad(&du)).axpy(1.0, &act(&p.u)).scale(-1.0),
        )
    }

    /// `‖div̄ div̄*(u,v) − bochner_rhs(u,v)‖`.
    pub fn bochner_residual(&self, p: &OneFormPair) -> f64 {
        let lhs = self.div_bar(&self.div_bar_star(p));
        self.pair_norm(&lhs.axpy(-1.0, &self.bochner_rhs(p)))
    }

    /// Residuals of every identity for one sample `(u, v)`, `γ`.
    pub fn comm_residuals(&self, p: &OneFormPair, gamma: &Tensor) -> Result<CommResiduals, VariationError> {
        self.require_soliton()?;
        let geo = self.geometry();
        let star = self.div_bar_star(p);
        let phi = self.phi_pair(p);

        let mt1 = geo.norm(&self.n_bar(&star)?);

        let back = self.div_bar(&star);
        let comm1 = self.pair_norm(&back.axpy(-1.0, &self.comm1_rhs(p)));

        let divs = self.div_one_form(&p.u).axpy(1.0, &self.div_one_form(&p.v));
        let comm2 = geo.norm(&self.div_bar_scalar(&back).axpy(1.0, &geo.laplacian(&divs)));

        let comm6 = geo.norm(&self.l_bar(&star).axpy(-0.5, &self.div_bar_star(&phi)));

        let lg = self.l_bar(gamma);
        let comm7 = self.pair_norm(&self.div_bar(&lg).axpy(-0.5, &self.phi_pair(&self.div_bar(gamma))));

        let div_laplacian = geo.norm(&geo.laplacian(&self.div_bar_scalar(p)).axpy(-1.0, &self.div_bar_scalar(&phi)));

        let kernel = self.project_to_kernel(gamma)?;
        let decomposition = self.pair_norm(&self.div_bar(&self.l_bar(&kernel)));

        Ok(CommResiduals {
            mt1,
            comm1,
            comm2,
            comm6,
            comm7,
            div_laplacian,
            decomposition,
        })
    }

    /// Random pair with entries of size one (homogeneous) or smooth random fields (lattice).
    pub fn random_pair(&self, rng: &mut ChaCha8Rng) -> OneFormPair {
        let s = self.geometry().state();
        OneFormPair::new(random_tensor(s, 1, rng), random_tensor(s, 1, rng))
    }

    /// Maximum residuals over `samples` random `(u, v)` and `γ`.
    pub fn comm_suite(&self, samples: usize, seed: u64) -> Result<CommResiduals, VariationError> {
        self.require_soliton()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = CommResiduals::default();
        for _ in 0..samples {
            let p = self.random_pair(&mut rng);
            let gamma = random_tensor(self.geometry().state(), 2, &mut rng);
            out.merge(&self.comm_residuals(&p, &gamma)?);
        }
        Ok(out)
    }
}

/// Residuals of the parallel-tensor system for `γ = h − K`:
/// `∇_m h_ij + ½(H_mi^k K_jk + H_mj^k K_ik)` and
/// `∇_m K_ij − ½(H_mi^k h_kj − H_mj^k h_ik)`, together with `|∇̄γ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParallelResiduals {
    pub symmetric: f64,
    pub skew: f64,
    pub mixed: f64,
}

impl ParallelResiduals {
    pub fn max(&self) -> f64 {
        self.symmetric.max(self.skew).max(self.mixed)
    }
}

impl VariationOps {
    pub fn parallel_residuals(&self, gamma: &Tensor) -> ParallelResiduals {
        let geo = self.geometry();
        let h = gamma.sym();
        let k = gamma.skew().scale(-1.0);
        let hu = geo.raise_slot(geo.h(), 2);
        let nh = geo.nabla(&h);
        let nk = geo.nabla(&k);
        let hk = einsum("mik,jk->mij", &[&hu, &k]);
        let hh = einsum("mik,kj->mij", &[&hu, &h]);
        let sym = nh.axpy(0.5, &hk).axpy(0.5, &hk.permute(&[0, 2, 1]));
        let skew = nk.axpy(-0.5, &hh).axpy(0.5, &hh.permute(&[0, 2, 1]));
        ParallelResiduals {
            symmetric: sym.max_abs(),
            skew: skew.max_abs(),
            mixed: self.nabla_bar(gamma).max_abs(),
        }
    }
}
