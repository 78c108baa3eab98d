//! Photon-mode states over a truncated Fock basis `|0⟩ … |n_max⟩`.
//!
//! Pure states are amplitude vectors, mixed states are dense Hermitian
//! density matrices. Every constructor renormalizes over the truncated
//! window and records the discarded tail weight in a diagnostics field, so
//! truncation bias is auditable rather than silent. Constructors whose
//! target state has a known tail (coherent, displaced Fock) refuse windows
//! that cut more than ~8 standard deviations unless explicitly overridden.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{LnFactorial, ScaledLogSumC};
use crate::{C64, EPS_HERM, EPS_NORM};

/// Pure photon state: one complex amplitude per Fock index `0..=n_max`.
///
/// Invariant: unit norm (within [`EPS_NORM`]) after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonPure {
    amps: DVector<C64>,
    truncation_loss: f64,
}

impl PhotonPure {
    /// Empty-cavity state `|0⟩`.
    pub fn vacuum(n_max: usize) -> Self {
        let mut amps = DVector::zeros(n_max + 1);
        amps[0] = C64::new(1.0, 0.0);
        Self {
            amps,
            truncation_loss: 0.0,
        }
    }

    /// Fock basis state `|n⟩`.
    pub fn fock(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::TruncationBounds { n, n_max });
        }
        let mut amps = DVector::zeros(n_max + 1);
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self {
            amps,
            truncation_loss: 0.0,
        })
    }

    /// Coherent state `|α⟩` with amplitudes `e^{-|α|²/2} αⁿ/√(n!)`,
    /// renormalized over the truncated window.
    ///
    /// Fails unless the window keeps at least eight standard deviations of
    /// the Poisson tail: `|α|² + 8|α| ≤ n_max`. Use
    /// [`PhotonPure::coherent_truncated`] to construct anyway.
    pub fn coherent(alpha: C64, n_max: usize) -> Result<Self> {
        let needed = adequate_n_max(alpha.norm_sqr());
        if needed > n_max {
            return Err(Error::TruncationInadequate {
                what: format!("coherent state with |alpha|^2 = {:.6}", alpha.norm_sqr()),
                needed,
                n_max,
            });
        }
        Ok(Self::coherent_truncated(alpha, n_max))
    }

    /// Coherent state without the truncation-adequacy gate; the discarded
    /// tail weight is still recorded.
    pub fn coherent_truncated(alpha: C64, n_max: usize) -> Self {
        if alpha == C64::new(0.0, 0.0) {
            return Self::vacuum(n_max);
        }
        let lf = LnFactorial::up_to(n_max);
        let ln_a = alpha.norm().ln();
        let arg = alpha.arg();
        let half_a2 = 0.5 * alpha.norm_sqr();
        let amps = DVector::from_iterator(
            n_max + 1,
            (0..=n_max).map(|n| {
                let log_mag = -half_a2 + n as f64 * ln_a - 0.5 * lf.get(n);
                C64::from_polar(log_mag.exp(), n as f64 * arg)
            }),
        );
        let mut state = Self {
            amps,
            truncation_loss: 0.0,
        };
        let norm_sq = state.norm_sq();
        state.truncation_loss = (1.0 - norm_sq).max(0.0);
        state.normalize();
        state
    }

    /// Displaced Fock state `D(α)|n_i⟩`, built from its expansion as a
    /// finite sum of photon-added coherent states
    /// `(1/√(n_i!)) Σ_r (-α)^{n_i-r} C(n_i,r) n_i!/(n_i!)·(a†)^r |α⟩`
    /// followed by explicit renormalization over the window.
    ///
    /// This is an independent construction from applying
    /// [`displacement_matrix`] to a Fock vector, and the two are held to
    /// agree to 1e-8.
    pub fn displaced_fock(n_i: usize, alpha: C64, n_max: usize) -> Result<Self> {
        if n_i > n_max {
            return Err(Error::TruncationBounds { n: n_i, n_max });
        }
        let needed = adequate_n_max(alpha.norm_sqr() + n_i as f64);
        if needed > n_max {
            return Err(Error::TruncationInadequate {
                what: format!(
                    "displaced fock state with n_i = {n_i}, |alpha|^2 = {:.6}",
                    alpha.norm_sqr()
                ),
                needed,
                n_max,
            });
        }
        if alpha == C64::new(0.0, 0.0) {
            return Self::fock(n_i, n_max);
        }

        let lf = LnFactorial::up_to(n_max.max(n_i));
        let ln_a = alpha.norm().ln();
        let arg = alpha.arg();
        let arg_neg = (-alpha).arg();
        let half_a2 = 0.5 * alpha.norm_sqr();

        let mut amps = DVector::zeros(n_max + 1);
        for n in 0..=n_max {
            let mut sum = ScaledLogSumC::new();
            for r in 0..=n_i.min(n) {
                // (-α)^{n_i-r} C(n_i,r) n_i! / √(n_i!) * amp_α(n-r) * √(n!/(n-r)!)
                let log_mag = -half_a2
                    + (n_i - r) as f64 * ln_a
                    + (n - r) as f64 * ln_a
                    + 0.5 * lf.get(n_i)
                    - lf.get(r)
                    - lf.get(n_i - r)
                    - lf.get(n - r)
                    + 0.5 * lf.get(n);
                let phase = (n_i - r) as f64 * arg_neg + (n - r) as f64 * arg;
                sum.add(log_mag, phase);
            }
            amps[n] = sum.value();
        }

        let mut state = Self {
            amps,
            truncation_loss: 0.0,
        };
        let norm_sq = state.norm_sq();
        state.truncation_loss = (1.0 - norm_sq).max(0.0);
        state.normalize();
        Ok(state)
    }

    /// Build from raw amplitudes, normalizing.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Domain("photon state needs at least one amplitude".into()));
        }
        let mut state = Self {
            amps: DVector::from_vec(amps),
            truncation_loss: 0.0,
        };
        if state.norm_sq() <= 0.0 {
            return Err(Error::Domain("photon state has zero norm".into()));
        }
        state.normalize();
        Ok(state)
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amp(&self, n: usize) -> C64 {
        self.amps[n]
    }

    /// Weight discarded by truncation at construction time.
    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescale to unit norm; returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm_sq().sqrt();
        if norm > 0.0 {
            self.amps /= C64::new(norm, 0.0);
        }
        norm
    }

    /// Photon-number probabilities `|amps[n]|²`.
    pub fn distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn mean_photon(&self) -> f64 {
        crate::analysis::mean(&self.distribution())
    }

    /// Outer product `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> PhotonDensity {
        let n = self.amps.len();
        let mut mat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        PhotonDensity {
            mat,
            truncation_loss: self.truncation_loss,
        }
    }

    /// Inner product ⟨self|other⟩.
    pub fn overlap(&self, other: &PhotonPure) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn validate(&self, eps_norm: f64) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > eps_norm {
            return Err(Error::Validation(format!(
                "pure state norm^2 = {n}, outside 1 ± {eps_norm}"
            )));
        }
        Ok(())
    }
}

/// Mixed photon state: dense Hermitian density matrix over the truncated
/// Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDensity {
    mat: DMatrix<C64>,
    truncation_loss: f64,
}

impl PhotonDensity {
    /// Thermal state with Boltzmann parameter `theta = ħω/k_BT`: diagonal
    /// with geometric weights `p_n ∝ e^{-nθ}`, renormalized over the window.
    pub fn thermal(theta: f64, n_max: usize) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::Domain(format!(
                "thermal state needs theta > 0, got {theta}"
            )));
        }
        let q = (-theta).exp();
        let mut mat = DMatrix::zeros(n_max + 1, n_max + 1);
        let mut w = 1.0;
        let mut total = 0.0;
        for n in 0..=n_max {
            mat[(n, n)] = C64::new(w, 0.0);
            total += w;
            w *= q;
        }
        for n in 0..=n_max {
            mat[(n, n)] /= total;
        }
        // exact tail of the geometric distribution beyond the window
        let truncation_loss = q.powi(n_max as i32 + 1);
        Ok(Self {
            mat,
            truncation_loss,
        })
    }

    /// Thermal state specified by its mean photon number
    /// `⟨n⟩ = 1/(e^θ - 1)`.
    pub fn thermal_with_mean(mean_n: f64, n_max: usize) -> Result<Self> {
        if !(mean_n > 0.0) {
            return Err(Error::Domain(format!(
                "thermal mean photon number must be positive, got {mean_n}"
            )));
        }
        Self::thermal(((mean_n + 1.0) / mean_n).ln(), n_max)
    }

    /// Wrap a Hermitian matrix, checking Hermiticity and normalizing trace.
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Domain("density matrix must be square and non-empty".into()));
        }
        let defect = herm_defect(&mat);
        if defect > EPS_HERM {
            return Err(Error::Validation(format!(
                "density matrix Hermiticity defect {defect:.3e} exceeds {EPS_HERM:.1e}"
            )));
        }
        let mut rho = Self {
            mat,
            truncation_loss: 0.0,
        };
        let tr = rho.trace();
        if tr <= 0.0 {
            return Err(Error::Validation(format!("density matrix trace {tr} not positive")));
        }
        rho.mat /= C64::new(tr, 0.0);
        Ok(rho)
    }

    /// Wrap a matrix produced by an internal channel; symmetrizes and
    /// renormalizes without the Hermiticity gate.
    pub(crate) fn from_matrix_unchecked(mut mat: DMatrix<C64>, truncation_loss: f64) -> Self {
        let n = mat.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (mat[(i, j)] + mat[(j, i)].conj());
                mat[(i, j)] = avg;
                mat[(j, i)] = avg.conj();
            }
            mat[(i, i)] = C64::new(mat[(i, i)].re, 0.0);
        }
        Self {
            mat,
            truncation_loss,
        }
    }

    pub fn n_max(&self) -> usize {
        self.mat.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub(crate) fn add_truncation_loss(&mut self, loss: f64) {
        self.truncation_loss += loss;
    }

    pub fn trace(&self) -> f64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// Rescale to unit trace; returns the trace before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let tr = self.trace();
        if tr > 0.0 {
            self.mat /= C64::new(tr, 0.0);
        }
        tr
    }

    /// `tr(ρ²)`; 1 for pure states, 1/(n_max+1) for maximally mixed.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Diagonal probabilities.
    pub fn distribution(&self) -> Vec<f64> {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn mean_photon(&self) -> f64 {
        crate::analysis::mean(&self.distribution())
    }

    pub fn validate(&self, eps_norm: f64, eps_herm: f64) -> Result<()> {
        let defect = herm_defect(&self.mat);
        if defect > eps_herm {
            return Err(Error::Validation(format!(
                "Hermiticity defect {defect:.3e} exceeds {eps_herm:.1e}"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > eps_norm {
            return Err(Error::Validation(format!(
                "trace = {tr}, outside 1 ± {eps_norm}"
            )));
        }
        Ok(())
    }

    /// Smallest-eigenvalue positivity check. O(N³); intended for tests and
    /// validation mode, not per-step hot paths.
    pub fn validate_psd(&self, eps_psd: f64) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < -eps_psd {
            return Err(Error::Validation(format!(
                "density matrix has eigenvalue {min:.3e} below -{eps_psd:.1e}"
            )));
        }
        Ok(())
    }

    /// Smallest eigenvalue of the (Hermitian) matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.mat.clone());
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Eigen-decomposition sorted by descending eigenvalue.
    pub fn eigen_branches(&self) -> Vec<(f64, DVector<C64>)> {
        let eig = nalgebra::SymmetricEigen::new(self.mat.clone());
        let mut pairs: Vec<(f64, DVector<C64>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, eig.eigenvectors.column(i).into_owned()))
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        pairs
    }
}

/// Pure-or-mixed photon state.
#[derive(Clone, Debug)]
pub enum PhotonState {
    Pure(PhotonPure),
    Mixed(PhotonDensity),
}

impl PhotonState {
    pub fn n_max(&self) -> usize {
        match self {
            PhotonState::Pure(p) => p.n_max(),
            PhotonState::Mixed(m) => m.n_max(),
        }
    }

    pub fn distribution(&self) -> Vec<f64> {
        match self {
            PhotonState::Pure(p) => p.distribution(),
            PhotonState::Mixed(m) => m.distribution(),
        }
    }

    pub fn mean_photon(&self) -> f64 {
        match self {
            PhotonState::Pure(p) => p.mean_photon(),
            PhotonState::Mixed(m) => m.mean_photon(),
        }
    }

    pub fn to_density(&self) -> PhotonDensity {
        match self {
            PhotonState::Pure(p) => p.to_density(),
            PhotonState::Mixed(m) => m.clone(),
        }
    }
}

impl From<PhotonPure> for PhotonState {
    fn from(p: PhotonPure) -> Self {
        PhotonState::Pure(p)
    }
}

impl From<PhotonDensity> for PhotonState {
    fn from(m: PhotonDensity) -> Self {
        PhotonState::Mixed(m)
    }
}

/// Fock-basis matrix of the displacement operator `D(α)`:
/// `M[n, n'] = ⟨n|D(α)|n'⟩`.
///
/// Shares its element evaluator with the electron-photon scattering kernel,
/// whose matrix has exactly this form with the coupling in place of α.
/// Unitary on the truncated space up to boundary leakage.
pub fn displacement_matrix(alpha: C64, n_max: usize) -> DMatrix<C64> {
    let lf = LnFactorial::up_to(n_max);
    let mut mat = DMatrix::zeros(n_max + 1, n_max + 1);
    for n in 0..=n_max {
        for np in 0..=n_max {
            mat[(n, np)] = crate::scattering::displacement_element(alpha, n, np, &lf);
        }
    }
    mat
}

/// Smallest adequate truncation for a state of effective size `m`
/// (mean photon number): keeps ~8 standard deviations of a Poisson-like
/// tail, `m + 8√m`.
pub fn adequate_n_max(m: f64) -> usize {
    (m + 8.0 * m.sqrt()).ceil() as usize
}

/// Max elementwise deviation from Hermiticity.
pub fn herm_defect(mat: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}
