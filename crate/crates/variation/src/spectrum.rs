use crate::comm::CommResiduals;
use crate::ops::{VariationError, VariationOps};
use grflab_tensor::Tensor;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Thresholds used to classify a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumTolerances {
    /// Singular values below `kernel_rel · σ_max` span `ker div̄_f`.
    pub kernel_rel: f64,
    /// Singular values in `[ambiguous_lo, ambiguous_hi] · σ_max` make the kernel ill-determined.
    pub ambiguous_lo: f64,
    pub ambiguous_hi: f64,
    /// Eigenvalues with `|μ| ≤ zero_rel · max(1, max|μ|)` count as zero modes.
    pub zero_rel: f64,
    /// Verdict "linearly_stable" iff the top eigenvalue is at most this.
    pub stable: f64,
    /// Verdict "marginal" iff the top eigenvalue is at most this (and above `stable`).
    pub marginal: f64,
}

impl Default for SpectrumTolerances {
    fn default() -> Self {
        SpectrumTolerances {
            kernel_rel: 1e-8,
            ambiguous_lo: 1e-10,
            ambiguous_hi: 1e-6,
            zero_rel: 1e-8,
            stable: 1e-10,
            marginal: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LinearlyStable,
    Marginal,
    Unstable,
    /// The slice could not be separated from its complement; see `svd_gap`.
    IllConditioned,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Ascending eigenvalues of `γ ↦ ⟨γ, L̄_f γ⟩_f` on `ker div̄_f`
    /// (Ritz values on lattices).
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    #[serde(skip)]
    pub kernel_basis: Vec<Tensor>,
    pub verdict: Verdict,
    /// Dimension of the slice the form was restricted to.
    pub slice_dim: usize,
    /// Largest `|Q(γ_a, γ_b) − Q(γ_b, γ_a)|` before symmetrization.
    pub form_asymmetry: f64,
    /// Ratio of consecutive singular values around the ambiguous band, when ill-conditioned.
    pub svd_gap: Option<f64>,
    pub method: &'static str,
    pub tolerances: SpectrumTolerances,
    pub residuals: CommResiduals,
}

impl SpectrumReport {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Negative eigenvalue closest to zero, excluding zero modes.
    pub fn smallest_negative(&self) -> Option<f64> {
        let zero = self.zero_threshold();
        self.eigenvalues.iter().copied().filter(|&m| m < -zero).fold(None, |a, m| Some(a.map_or(m, |a: f64| a.max(m))))
    }

    fn zero_threshold(&self) -> f64 {
        let scale = self.eigenvalues.iter().fold(1.0f64, |a, m| a.max(m.abs()));
        self.tolerances.zero_rel * scale
    }
}

fn verdict(top: f64, tol: &SpectrumTolerances) -> Verdict {
    if top <= tol.stable {
        Verdict::LinearlyStable
    } else if top <= tol.marginal {
        Verdict::Marginal
    } else {
        Verdict::Unstable
    }
}

fn basis_tensor(n: usize, k: usize) -> Tensor {
    let mut data = vec![0.0; n * n];
    data[k] = 1.0;
    Tensor::from_vec(n, 2, 1, data)
}

impl VariationOps {
    /// Orthonormal-in-coordinates basis of `ker div̄_f` on a homogeneous state,
    /// with the singular values of `div̄_f`.
    pub fn slice_basis(&self, tol: &SpectrumTolerances) -> (Vec<Tensor>, Vec<f64>, Option<f64>) {
        let n = self.n();
        let cols = n * n;
        let rows = (2 * n).max(cols);
        let mut m = DMatrix::<f64>::zeros(rows, cols);
        for k in 0..cols {
            let p = self.div_bar(&basis_tensor(n, k));
            for (r, x) in p.u.data().iter().chain(p.v.data()).enumerate() {
                m[(r, k)] = *x;
            }
        }
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("requested V");
        let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        let smax = sigma.iter().fold(0.0f64, |a, &s| a.max(s));
        let ambiguous: Vec<f64> = sigma
            .iter()
            .copied()
            .filter(|&s| s >= tol.ambiguous_lo * smax && s <= tol.ambiguous_hi * smax && smax > 0.0)
            .collect();
        let gap = if ambiguous.is_empty() {
            None
        } else {
            let mut sorted = sigma.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let worst = sorted
                .windows(2)
                .filter(|w| w[1] > 0.0)
                .map(|w| w[0] / w[1])
                .fold(0.0f64, f64::max);
            Some(worst)
        };
        let basis = (0..cols)
            .filter(|&i| sigma[i] <= tol.kernel_rel * smax)
            .map(|i| Tensor::from_vec(n, 2, 1, vt.row(i).iter().copied().collect()))
            .collect();
        (basis, sigma, gap)
    }

    /// Stability spectrum of `L̄_f` on `ker div̄_f`.
    pub fn stability_spectrum(&self, tol: SpectrumTolerances) -> Result<SpectrumReport, VariationError> {
        self.require_soliton()?;
        let residuals = self.comm_suite(3, 0)?;
        if self.geometry().state().is_homogeneous() {
            Ok(self.homogeneous_spectrum(tol, residuals))
        } else {
            self.lanczos_spectrum(tol, residuals, 60, 0)
        }
    }

    fn homogeneous_spectrum(&self, tol: SpectrumTolerances, residuals: CommResiduals) -> SpectrumReport {
        let geo = self.geometry();
        let (basis, _, gap) = self.slice_basis(&tol);
        let k = basis.len();
        let images: Vec<Tensor> = basis.iter().map(|z| self.l_bar(z)).collect();
        let gram = DMatrix::from_fn(k, k, |a, b| geo.inner(&basis[a], &basis[b]));
        let q = DMatrix::from_fn(k, k, |a, b| geo.inner(&basis[a], &images[b]));
        let form_asymmetry = (&q - q.transpose()).abs().max();
        let qs = (&q + q.transpose()) * 0.5;
        let (eigenvalues, vectors) = if k == 0 {
            (Vec::new(), DMatrix::zeros(0, 0))
        } else {
            let l = gram.clone().cholesky().expect("Gram matrix of a basis is SPD").l();
            let li = l.clone().try_inverse().expect("triangular factor is invertible");
            let m = &li * &qs * li.transpose();
            let m = (&m + m.transpose()) * 0.5;
            let eig = SymmetricEigen::new(m);
            let coeffs = li.transpose() * &eig.eigenvectors;
            (eig.eigenvalues.iter().copied().collect::<Vec<f64>>(), coeffs)
        };
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[a].partial_cmp(&eigenvalues[b]).unwrap());
        let sorted: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let scale = sorted.iter().fold(1.0f64, |a, m| a.max(m.abs()));
        let kernel_basis: Vec<Tensor> = order
            .iter()
            .filter(|&&i| eigenvalues[i].abs() <= tol.zero_rel * scale)
            .map(|&i| {
                basis
                    .iter()
                    .enumerate()
                    .fold(Tensor::zeros(self.n(), 2, 1), |acc, (a, z)| acc.axpy(vectors[(a, i)], z))
            })
            .collect();
        let top = sorted.last().copied().unwrap_or(0.0);
        SpectrumReport {
            kernel_dim: kernel_basis.len(),
            kernel_basis,
            verdict: if gap.is_some() { Verdict::IllConditioned } else { verdict(top, &tol) },
            slice_dim: k,
            eigenvalues: sorted,
            form_asymmetry,
            svd_gap: gap,
            method: "dense",
            tolerances: tol,
            residuals,
        }
    }

    /// Lanczos with full reorthogonalization on `P L̄_f P`, where `P` projects onto
    /// `ker div̄_f`. Returns Ritz values of the Krylov space.
    pub fn lanczos_spectrum(
        &self,
        tol: SpectrumTolerances,
        residuals: CommResiduals,
        steps: usize,
        seed: u64,
    ) -> Result<SpectrumReport, VariationError> {
        let geo = self.geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // white noise excites every mode; smooth samples span only a few Fourier modes
        let npts = geo.frame().npts();
        let noise = Tensor::from_fn(self.n(), 2, npts, |_, _| rng.gen_range(-1.0..=1.0));
        let mut q = self.project_to_kernel(&noise)?;
        q = q.scale(1.0 / geo.norm(&q));
        let mut basis: Vec<Tensor> = vec![q];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut form_asymmetry = 0.0f64;
        for j in 0..steps {
            let lq = self.l_bar(&basis[j]);
            let mut w = self.project_to_kernel(&lq)?;
            let a = geo.inner(&basis[j], &w);
            if j > 0 {
                let sym = geo.inner(&basis[j - 1], &lq);
                form_asymmetry = form_asymmetry.max((sym - beta[j - 1]).abs());
            }
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    w = w.axpy(-geo.inner(v, &w), v);
                }
            }
            let b = geo.norm(&w);
            if b < 1e-12 * a.abs().max(1.0) || j + 1 == steps {
                break;
            }
            beta.push(b);
            basis.push(w.scale(1.0 / b));
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut vals: Vec<(f64, DVector<f64>)> = (0..m)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
            .collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.0.abs()));
        let kernel_basis: Vec<Tensor> = vals
            .iter()
            .filter(|v| v.0.abs() <= tol.zero_rel * scale)
            .map(|v| {
                basis
                    .iter()
                    .enumerate()
                    .fold(Tensor::zeros(self.n(), 2, 1), |acc, (a, z)| acc.axpy(v.1[a], z))
            })
            .collect();
        let eigenvalues: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let top = eigenvalues.last().copied().unwrap_or(0.0);
        Ok(SpectrumReport {
            kernel_dim: kernel_basis.len(),
            kernel_basis,
            verdict: verdict(top, &tol),
            slice_dim: m,
            eigenvalues,
            form_asymmetry,
            svd_gap: None,
            method: "lanczos",
            tolerances: tol,
            residuals,
        })
    }
}
