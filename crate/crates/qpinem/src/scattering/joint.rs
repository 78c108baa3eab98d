//! Joint electron-photon pure states and their single-pass evolution,
//! plus the closed-form outputs for a delta electron meeting a coherent
//! or Fock state.

use nalgebra::DMatrix;

use crate::electron::ElectronPure;
use crate::error::{Error, Result};
use crate::fockspace::{adequate_n_max, PhotonDensity, PhotonPure};
use crate::numeric::{LnFactorial, ScaledLogSum, ScaledLogSumC, SERIES_CUTOFF_LN};
use crate::scattering::{Coupling, ScatteringKernel};
use crate::C64;

/// Joint pure state: amplitude table `c[k, n]` over the electron window
/// `[k_lo, k_hi]` and photon indices `0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPure {
    k_lo: i64,
    k_hi: i64,
    amps: DMatrix<C64>, // row (k - k_lo), column n
    leakage: f64,
}

impl JointPure {
    /// Product state `electron ⊗ photon`.
    pub fn product(electron: &ElectronPure, photon: &PhotonPure) -> Self {
        let (k_lo, k_hi) = electron.window();
        let rows = (k_hi - k_lo + 1) as usize;
        let cols = photon.n_max() + 1;
        let mut amps = DMatrix::zeros(rows, cols);
        for ki in 0..rows {
            let e = electron.amps()[ki];
            if e == C64::new(0.0, 0.0) {
                continue;
            }
            for n in 0..cols {
                amps[(ki, n)] = e * photon.amp(n);
            }
        }
        Self {
            k_lo,
            k_hi,
            amps,
            leakage: electron.leakage() + photon.truncation_loss(),
        }
    }

    pub fn from_table(k_lo: i64, k_hi: i64, amps: DMatrix<C64>, leakage: f64) -> Self {
        assert_eq!(amps.nrows() as i64, k_hi - k_lo + 1);
        Self {
            k_lo,
            k_hi,
            amps,
            leakage,
        }
    }

    pub fn window(&self) -> (i64, i64) {
        (self.k_lo, self.k_hi)
    }

    pub fn n_max(&self) -> usize {
        self.amps.ncols() - 1
    }

    pub fn amps(&self) -> &DMatrix<C64> {
        &self.amps
    }

    pub fn amp(&self, k: i64, n: usize) -> C64 {
        if k < self.k_lo || k > self.k_hi || n >= self.amps.ncols() {
            C64::new(0.0, 0.0)
        } else {
            self.amps[((k - self.k_lo) as usize, n)]
        }
    }

    /// Weight lost to window truncation so far (input plus evolution).
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of each electron ladder index, `P(k) = Σ_n |c[k,n]|²`.
    pub fn electron_marginal(&self) -> Vec<f64> {
        (0..self.amps.nrows())
            .map(|ki| (0..self.amps.ncols()).map(|n| self.amps[(ki, n)].norm_sqr()).sum())
            .collect()
    }

    /// Probability of each photon number, `P(n) = Σ_k |c[k,n]|²`.
    pub fn photon_marginal(&self) -> Vec<f64> {
        (0..self.amps.ncols())
            .map(|n| (0..self.amps.nrows()).map(|ki| self.amps[(ki, n)].norm_sqr()).sum())
            .collect()
    }

    /// Reduced photon density matrix, `ρ[n,m] = Σ_k c[k,n] c*[k,m]`.
    pub fn photon_density(&self) -> PhotonDensity {
        let cols = self.amps.ncols();
        let mut mat = DMatrix::zeros(cols, cols);
        for ki in 0..self.amps.nrows() {
            for n in 0..cols {
                let a = self.amps[(ki, n)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for m in 0..cols {
                    mat[(n, m)] += a * self.amps[(ki, m)].conj();
                }
            }
        }
        let mut rho = PhotonDensity::from_matrix_unchecked(mat, self.leakage);
        rho.normalize();
        rho
    }

    /// Photon state conditioned on measuring the electron at index `k`,
    /// with its probability.
    pub fn postselect_electron(&self, k: i64) -> Result<(PhotonPure, f64)> {
        if k < self.k_lo || k > self.k_hi {
            return Err(Error::WindowBounds {
                k,
                k_lo: self.k_lo,
                k_hi: self.k_hi,
            });
        }
        let row = (k - self.k_lo) as usize;
        let amps: Vec<C64> = (0..self.amps.ncols()).map(|n| self.amps[(row, n)]).collect();
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if p < 1e-14 {
            return Err(Error::ZeroProbabilityBranch { p });
        }
        Ok((PhotonPure::from_amps(amps)?, p))
    }
}

/// One scattering pass on a joint pure state:
/// `c_out[k, n] = Σ_{n'} c_in[k + n - n', n'] · s_{n, n'}`.
///
/// Total `k + n` is conserved per basis component. The output keeps the
/// input window; weight pushed outside it (or past the photon truncation)
/// shows up as a norm deficit recorded in the leakage diagnostic. The
/// output is not renormalized.
pub fn evolve_pure(state: &JointPure, kernel: &ScatteringKernel) -> JointPure {
    assert_eq!(
        state.n_max(),
        kernel.n_max(),
        "state and kernel truncations differ"
    );
    let (k_lo, k_hi) = state.window();
    let rows = state.amps.nrows();
    let cols = state.amps.ncols();
    let s = kernel.matrix();
    let mut out = DMatrix::zeros(rows, cols);
    for ki in 0..rows {
        let k = k_lo + ki as i64;
        for n in 0..cols {
            let total = k + n as i64;
            // input row k' = k + n - n' must lie in the window
            let np_min = (total - k_hi).max(0) as usize;
            let np_max_i = total - k_lo;
            if np_max_i < np_min as i64 {
                continue;
            }
            let np_max = (np_max_i as usize).min(cols - 1);
            let mut acc = C64::new(0.0, 0.0);
            for np in np_min..=np_max {
                let src_row = (total - np as i64 - k_lo) as usize;
                let a = state.amps[(src_row, np)];
                if a != C64::new(0.0, 0.0) {
                    acc += a * s[(n, np)];
                }
            }
            out[(ki, n)] = acc;
        }
    }
    let in_norm = state.norm_sq();
    let mut result = JointPure {
        k_lo,
        k_hi,
        amps: out,
        leakage: state.leakage,
    };
    let lost = (in_norm - result.norm_sq()).max(0.0);
    result.leakage += lost;
    result
}

/// Closed-form output amplitude for a delta electron (k₀ = 0) meeting a
/// coherent state `|α⟩`:
///
/// ```text
/// c_{k,n} = e^{-(|g|²+|α|²)/2} α^{k+n} g^{-k} √(n!)
///           Σ_{r=max(0,k)}^{k+n} (-|g|²)^r / [r! (k+n-r)! (r-k)!]
/// ```
///
/// for `k + n ≥ 0`, zero otherwise.
pub fn coherent_delta_coeffs(alpha: C64, g: Coupling, k: i64, n: usize) -> C64 {
    let lf = LnFactorial::up_to((n as i64 + k.max(0)).max(n as i64) as usize + 1);
    coherent_delta_coeffs_with(alpha, g, k, n, &lf)
}

fn coherent_delta_coeffs_with(alpha: C64, g: Coupling, k: i64, n: usize, lf: &LnFactorial) -> C64 {
    let total = k + n as i64;
    if total < 0 {
        return C64::new(0.0, 0.0);
    }
    let gv = g.value();
    if gv == C64::new(0.0, 0.0) {
        // no interaction: delta electron stays put, coherent amplitudes pass through
        if k != 0 {
            return C64::new(0.0, 0.0);
        }
        if alpha == C64::new(0.0, 0.0) {
            return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        }
        let log_mag = -0.5 * alpha.norm_sqr() + n as f64 * alpha.norm().ln() - 0.5 * lf.get(n);
        return C64::from_polar(log_mag.exp(), n as f64 * alpha.arg());
    }
    if alpha == C64::new(0.0, 0.0) {
        // vacuum input: only the k + n = 0 column survives
        if total != 0 {
            return C64::new(0.0, 0.0);
        }
        return crate::scattering::displacement_element(gv, n, 0, lf);
    }

    let x = gv.norm_sqr();
    let ln_x = x.ln();
    let r_lo = k.max(0) as usize;
    let r_hi = total as usize;

    let mut sum = ScaledLogSum::new();
    let mut prev = f64::NEG_INFINITY;
    let mut best = f64::NEG_INFINITY;
    for r in r_lo..=r_hi {
        let log_mag =
            r as f64 * ln_x - lf.get(r) - lf.get(r_hi - r) - lf.get((r as i64 - k) as usize);
        if log_mag < prev && log_mag < best - SERIES_CUTOFF_LN {
            break;
        }
        prev = log_mag;
        best = best.max(log_mag);
        sum.add(log_mag, r % 2 == 1);
    }
    let (log_scale, scaled) = sum.parts();
    if scaled == 0.0 || log_scale == f64::NEG_INFINITY {
        return C64::new(0.0, 0.0);
    }
    let log_pre = -0.5 * (x + alpha.norm_sqr()) + total as f64 * alpha.norm().ln()
        - k as f64 * gv.norm().ln()
        + 0.5 * lf.get(n);
    let phase = total as f64 * alpha.arg() - k as f64 * gv.arg();
    C64::from_polar(scaled * (log_scale + log_pre).exp(), phase)
}

/// Full closed-form joint output for delta ⊗ coherent over a window.
/// Fast path for large truncations: no kernel matrix is materialized.
pub fn coherent_delta_output(
    alpha: C64,
    g: Coupling,
    k_lo: i64,
    k_hi: i64,
    n_max: usize,
) -> JointPure {
    let lf = LnFactorial::up_to(n_max + k_hi.max(0) as usize + 1);
    let rows = (k_hi - k_lo + 1) as usize;
    let mut amps = DMatrix::zeros(rows, n_max + 1);
    for ki in 0..rows {
        let k = k_lo + ki as i64;
        for n in 0..=n_max {
            amps[(ki, n)] = coherent_delta_coeffs_with(alpha, g, k, n, &lf);
        }
    }
    let mut out = JointPure {
        k_lo,
        k_hi,
        amps,
        leakage: 0.0,
    };
    out.leakage = (1.0 - out.norm_sq()).max(0.0);
    out
}

/// Photon state after post-selecting electron energy bin `k` from a
/// delta ⊗ coherent scattering event: the photon-added coherent series
///
/// ```text
/// e^{-|g|²/2} (-g*α)^k Σ_{r=max(-k,0)} (-α|g|²)^r / [r!(r+k)!] (a†)^r |α⟩
/// ```
///
/// explicitly normalized over the truncated window.
pub fn postselected_photon_state(
    alpha: C64,
    g: Coupling,
    k: i64,
    n_max: usize,
) -> Result<PhotonPure> {
    let needed = adequate_n_max(alpha.norm_sqr() + k.unsigned_abs() as f64);
    if needed > n_max {
        return Err(Error::TruncationInadequate {
            what: format!(
                "post-selected photon state with |alpha|^2 = {:.6}, k = {k}",
                alpha.norm_sqr()
            ),
            needed,
            n_max,
        });
    }
    let gv = g.value();
    if gv == C64::new(0.0, 0.0) {
        if k != 0 {
            return Err(Error::ZeroProbabilityBranch { p: 0.0 });
        }
        return PhotonPure::coherent(alpha, n_max);
    }
    if alpha == C64::new(0.0, 0.0) {
        // vacuum input: the scattered state is the k + n = 0 column
        if k > 0 {
            return Err(Error::ZeroProbabilityBranch { p: 0.0 });
        }
        return PhotonPure::fock((-k) as usize, n_max);
    }

    let lf = LnFactorial::up_to(n_max + k.unsigned_abs() as usize + 1);
    let x = gv.norm_sqr();
    let ln_ax = alpha.norm().ln() + x.ln();
    let arg_na = (-alpha).arg();
    let ln_a = alpha.norm().ln();
    let arg_a = alpha.arg();
    let half_a2 = 0.5 * alpha.norm_sqr();

    let r_lo = (-k).max(0) as usize;
    let mut amps = vec![C64::new(0.0, 0.0); n_max + 1];
    for (n, amp) in amps.iter_mut().enumerate() {
        if n < r_lo {
            continue;
        }
        let mut sum = ScaledLogSumC::new();
        let mut prev = f64::NEG_INFINITY;
        let mut best = f64::NEG_INFINITY;
        for r in r_lo..=n {
            let log_mag = r as f64 * ln_ax - lf.get(r) - lf.get((r as i64 + k) as usize)
                - half_a2
                + (n - r) as f64 * ln_a
                - lf.get(n - r)
                + 0.5 * lf.get(n);
            if log_mag < prev && log_mag < best - SERIES_CUTOFF_LN {
                break;
            }
            prev = log_mag;
            best = best.max(log_mag);
            sum.add(log_mag, r as f64 * arg_na + (n - r) as f64 * arg_a);
        }
        *amp = sum.value();
    }

    // prefactor e^{-|g|²/2} (-g*α)^k fixes the overall phase
    let pc = -gv.conj() * alpha;
    let pre = C64::from_polar(
        ((-0.5 * x) + k as f64 * pc.norm().ln()).exp(),
        k as f64 * pc.arg(),
    );
    for a in amps.iter_mut() {
        *a *= pre;
    }
    PhotonPure::from_amps(amps)
}

/// Probability for the photon mode to go from Fock `n_from` to Fock `n_to`
/// in one pass of a delta electron:
///
/// ```text
/// P = e^{-|g|²} |g|^{2(n_to - n_from)} n_to! n_from!
///     |Σ_{r=max(0, n_from - n_to)}^{n_from} (-|g|²)^r / [r!(n_from-r)!(r-n_from+n_to)!]|²
/// ```
///
/// Evaluated directly from this sum, independently of the kernel matrix
/// route, so the two can cross-check each other.
pub fn fock_transition_prob(n_from: usize, n_to: usize, g: Coupling) -> f64 {
    let gv = g.value();
    if gv == C64::new(0.0, 0.0) {
        return if n_from == n_to { 1.0 } else { 0.0 };
    }
    let x = gv.norm_sqr();
    let ln_x = x.ln();
    let lf = LnFactorial::up_to(n_from.max(n_to) + 1);
    let r_lo = n_from.saturating_sub(n_to);

    let mut sum = ScaledLogSum::new();
    let mut prev = f64::NEG_INFINITY;
    let mut best = f64::NEG_INFINITY;
    for r in r_lo..=n_from {
        let log_mag =
            r as f64 * ln_x - lf.get(r) - lf.get(n_from - r) - lf.get(r + n_to - n_from);
        if log_mag < prev && log_mag < best - SERIES_CUTOFF_LN {
            break;
        }
        prev = log_mag;
        best = best.max(log_mag);
        sum.add(log_mag, r % 2 == 1);
    }
    let (log_scale, scaled) = sum.parts();
    if scaled == 0.0 || log_scale == f64::NEG_INFINITY {
        return 0.0;
    }
    let log_p = -x + (n_to as f64 - n_from as f64) * ln_x + lf.get(n_to) + lf.get(n_from)
        + 2.0 * (log_scale + scaled.abs().ln());
    log_p.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::build_kernel;
    use approx::assert_abs_diff_eq;

    fn poisson(lambda: f64, n: usize) -> f64 {
        let lf = LnFactorial::up_to(n);
        (-lambda + n as f64 * lambda.ln() - lf.get(n)).exp()
    }

    #[test]
    fn zero_coupling_evolution_is_identity() {
        let electron = ElectronPure::delta(0, -6, 6).unwrap();
        let photon = PhotonPure::coherent(C64::new(1.2, 0.3), 30).unwrap();
        let joint = JointPure::product(&electron, &photon);
        let kernel = build_kernel(Coupling::new(C64::new(0.0, 0.0)), 30);
        let out = evolve_pure(&joint, &kernel);
        for k in -6..=6i64 {
            for n in 0..=30 {
                assert!((out.amp(k, n) - joint.amp(k, n)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn vacuum_delta_photon_marginal_is_poisson() {
        // |k=0, n=0⟩ with g = 1i: P(n) = e^{-1}/n!
        let g = Coupling::new(C64::new(0.0, 1.0));
        let n_max = 40;
        let electron = ElectronPure::delta(0, -(n_max as i64) - 4, n_max as i64 + 4).unwrap();
        let photon = PhotonPure::vacuum(n_max);
        let joint = JointPure::product(&electron, &photon);
        let out = evolve_pure(&joint, &build_kernel(g, n_max));
        let marginal = out.photon_marginal();
        for n in 0..=20 {
            assert_abs_diff_eq!(marginal[n], poisson(1.0, n), epsilon = 1e-10);
        }
    }

    #[test]
    fn total_ladder_index_is_conserved() {
        // basis input |k'=2, n'=3⟩: output support only on k + n = 5
        let g = Coupling::new(C64::new(0.4, 0.3));
        let n_max = 24;
        let electron = ElectronPure::delta(2, -26, 26).unwrap();
        let photon = PhotonPure::fock(3, n_max).unwrap();
        let joint = JointPure::product(&electron, &photon);
        let out = evolve_pure(&joint, &build_kernel(g, n_max));
        for k in -26..=26i64 {
            for n in 0..=n_max {
                if k + n as i64 != 5 {
                    assert_eq!(out.amp(k, n), C64::new(0.0, 0.0), "leaked to ({k},{n})");
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_numeric_evolution() {
        // delta ⊗ coherent(√50), g = 0.25i
        let alpha = C64::new(50.0f64.sqrt(), 0.0);
        let g = Coupling::new(C64::new(0.0, 0.25));
        let n_max = 120;
        let k_span = 128i64;
        let electron = ElectronPure::delta(0, -k_span, k_span).unwrap();
        let photon = PhotonPure::coherent(alpha, n_max).unwrap();
        let joint = JointPure::product(&electron, &photon);
        let numeric = evolve_pure(&joint, &build_kernel(g, n_max));
        let mut worst = 0.0f64;
        for k in -k_span..=k_span {
            for n in 0..=n_max {
                let analytic = coherent_delta_coeffs(alpha, g, k, n);
                worst = worst.max((numeric.amp(k, n) - analytic).norm());
            }
        }
        assert!(worst < 1e-8, "worst deviation {worst:.3e}");
    }

    #[test]
    fn closed_form_limits() {
        // k + n < 0 is empty
        assert_eq!(
            coherent_delta_coeffs(C64::new(2.0, 0.0), Coupling::new(C64::new(0.0, 0.5)), -3, 1),
            C64::new(0.0, 0.0)
        );
        // g → 0: Poissonian photon statistics at k = 0, nothing elsewhere
        let alpha = C64::new(3.0, 0.0);
        let g0 = Coupling::new(C64::new(0.0, 0.0));
        for n in 0..=12 {
            let c = coherent_delta_coeffs(alpha, g0, 0, n);
            assert_abs_diff_eq!(c.norm_sqr(), poisson(9.0, n), epsilon = 1e-12);
            assert_eq!(coherent_delta_coeffs(alpha, g0, 1, n), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn postselection_matches_renormalized_slice() {
        let alpha = C64::new(50.0f64.sqrt(), 0.0);
        let g = Coupling::new(C64::new(0.0, 0.25));
        let n_max = 120;
        let out = coherent_delta_output(alpha, g, -128, 128, n_max);
        for k in [-2i64, 2] {
            let (slice, _p) = out.postselect_electron(k).unwrap();
            let direct = postselected_photon_state(alpha, g, k, n_max).unwrap();
            let mut worst = 0.0f64;
            for n in 0..=n_max {
                worst = worst.max((slice.amp(n) - direct.amp(n)).norm());
            }
            assert!(worst < 1e-8, "k = {k}: worst deviation {worst:.3e}");
        }
    }

    #[test]
    fn postselection_matches_at_strong_coupling() {
        let alpha = C64::new(50.0f64.sqrt(), 0.0);
        let g = Coupling::new(C64::new(0.0, 1.0));
        let n_max = 160;
        let out = coherent_delta_output(alpha, g, -170, 170, n_max);
        for k in [-6i64, 6] {
            let (slice, _p) = out.postselect_electron(k).unwrap();
            let direct = postselected_photon_state(alpha, g, k, n_max).unwrap();
            let mut worst = 0.0f64;
            for n in 0..=n_max {
                worst = worst.max((slice.amp(n) - direct.amp(n)).norm());
            }
            assert!(worst < 1e-8, "k = {k}: worst deviation {worst:.3e}");
        }
    }

    #[test]
    fn postselection_weak_coupling_limit() {
        let alpha = C64::new(1.7, -0.4);
        let g = Coupling::new(C64::new(0.0, 0.0));
        let direct = postselected_photon_state(alpha, g, 0, 40).unwrap();
        let coherent = PhotonPure::coherent(alpha, 40).unwrap();
        for n in 0..=40 {
            assert!((direct.amp(n) - coherent.amp(n)).norm() < 1e-12);
        }
        assert!(matches!(
            postselected_photon_state(alpha, g, 2, 40),
            Err(Error::ZeroProbabilityBranch { .. })
        ));
    }

    #[test]
    fn fock_transitions_reduce_and_normalize() {
        let g = Coupling::new(C64::new(0.0, 1.0));
        // g = 0 is the identity channel
        let g0 = Coupling::new(C64::new(0.0, 0.0));
        assert_eq!(fock_transition_prob(4, 4, g0), 1.0);
        assert_eq!(fock_transition_prob(4, 5, g0), 0.0);
        // from vacuum: Poisson(|g|²)
        for n in 0..=15 {
            assert_abs_diff_eq!(fock_transition_prob(0, n, g), poisson(1.0, n), epsilon = 1e-12);
        }
        // completeness
        for n_from in [0usize, 1, 5, 20] {
            let total: f64 = (0..=120).map(|n| fock_transition_prob(n_from, n, g)).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn mean_photon_gain_is_coupling_squared() {
        for g in [C64::new(0.0, 1.0), C64::new(0.0, 0.1)] {
            let gq = Coupling::new(g);
            for n_from in [0usize, 1, 5, 20] {
                let gain: f64 = (0..=140)
                    .map(|n| (n as f64 - n_from as f64) * fock_transition_prob(n_from, n, gq))
                    .sum();
                assert_abs_diff_eq!(gain, g.norm_sqr(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn electron_marginal_is_bessel_in_semiclassical_limit() {
        // |α|² = 2500, g_qu = 0.01i, conventional g = g_qu·α = (i) 0.5
        let alpha = C64::new(2500.0f64.sqrt(), 0.0);
        let g = Coupling::new(C64::new(0.0, 0.01));
        let n_max = adequate_n_max(alpha.norm_sqr());
        let out = coherent_delta_output(alpha, g, -40, 40, n_max);
        let marginal = out.electron_marginal();
        let mut worst = 0.0f64;
        for k in -10..=10i64 {
            let p = marginal[(k + 40) as usize];
            let reference = crate::analysis::bessel_reference(k, 0.5);
            worst = worst.max((p - reference).abs());
        }
        assert!(worst <= 1e-3, "worst deviation {worst:.3e}");
    }

    #[test]
    fn partial_trace_agrees_with_postselection_weights() {
        let alpha = C64::new(10.0f64.sqrt(), 0.0);
        let g = Coupling::new(C64::new(0.0, 0.1));
        let n_max = 50;
        let electron = ElectronPure::delta(0, -54, 54).unwrap();
        let photon = PhotonPure::coherent(alpha, n_max).unwrap();
        let out = evolve_pure(&JointPure::product(&electron, &photon), &build_kernel(g, n_max));
        let rho = out.photon_density();
        rho.validate(1e-9, 1e-12).unwrap();
        // diagonal of the traced state equals the photon marginal
        let marginal = out.photon_marginal();
        let dist = rho.distribution();
        for n in 0..=n_max {
            assert_abs_diff_eq!(dist[n], marginal[n], epsilon = 1e-10);
        }
    }
}
