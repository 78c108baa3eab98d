//! Photon-statistics observables: moments, Mandel Q, thermal-slope and
//! effective-amplitude fits, Bessel references, peak counting, fidelity.

use crate::error::{Error, Result};
use crate::fockspace::{PhotonDensity, PhotonPure, PhotonState};
use crate::C64;

/// Bins below this probability are excluded from the log-linear thermal fit.
pub const DEFAULT_P_FLOOR: f64 = 1e-12;

/// Default absolute prominence threshold for [`peak_count`].
pub const DEFAULT_PEAK_PROMINENCE: f64 = 1e-3;

/// Mean of a photon-number distribution, `Σ n p_n`.
pub fn mean(dist: &[f64]) -> f64 {
    dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// Variance `⟨n²⟩ - ⟨n⟩²`, clamped at zero.
pub fn variance(dist: &[f64]) -> f64 {
    let m = mean(dist);
    let m2: f64 = dist.iter().enumerate().map(|(n, p)| (n as f64) * (n as f64) * p).sum();
    (m2 - m * m).max(0.0)
}

/// Mandel Q parameter `(⟨(Δn)²⟩ - ⟨n⟩)/⟨n⟩`: 0 for Poissonian statistics,
/// -1 for a Fock state, ⟨n⟩ for a thermal state.
pub fn mandel_q(dist: &[f64]) -> Result<f64> {
    let m = mean(dist);
    if m <= 0.0 {
        return Err(Error::UndefinedMandelQ);
    }
    Ok((variance(dist) - m) / m)
}

/// Thermal slope fit: least-squares slope of `ln p_n` vs `n` over bins with
/// `p_n > p_floor`, negated, together with the fit's r². An exactly
/// geometric distribution gives back its θ with r² = 1.
pub fn effective_theta(dist: &[f64]) -> Result<(f64, f64)> {
    effective_theta_with(dist, DEFAULT_P_FLOOR)
}

pub fn effective_theta_with(dist: &[f64], p_floor: f64) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = dist
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > p_floor)
        .map(|(n, &p)| (n as f64, p.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!(
            "thermal slope fit needs at least 5 bins above {p_floor:.1e}, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::Fit("degenerate abscissa in thermal slope fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let y_mean = sy / n;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - y_mean).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res < 1e-20 {
        1.0
    } else {
        0.0
    };
    Ok((-slope, r2))
}

/// Effective coherent amplitude `√⟨n⟩`.
pub fn effective_alpha(dist: &[f64]) -> f64 {
    mean(dist).sqrt()
}

/// Squared Bessel function of the first kind, `J_k(2 g)²`, the electron
/// sideband probability in the classical strong-field limit. `g` is the
/// conventional interaction strength `|g_qu| |α|`.
pub fn bessel_reference(k: i64, g: f64) -> f64 {
    let x = 2.0 * g.abs();
    bessel_j(k.unsigned_abs() as usize, x).powi(2)
}

/// J_n(x) for n ≥ 0, x ≥ 0 by downward (Miller) recurrence with the
/// normalization `J_0 + 2 Σ J_{2m} = 1`. Stable up to the few hundred
/// orders needed for strong-field checks.
fn bessel_j(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    // start well above both the order and the argument
    let base = n.max(x as usize) + 1;
    let start = base + 14 + 3 * (base as f64).sqrt() as usize;
    let start = start + (start & 1); // even
    let mut jp = 0.0f64; // J_{m+1}
    let mut j = 1e-30f64; // J_m
    let mut result = 0.0f64;
    let mut norm = 0.0f64; // J_0 + 2 Σ_{m even > 0} J_m
    for m in (0..=start).rev() {
        let jm = (2.0 * (m as f64 + 1.0) / x) * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
        if m % 2 == 0 {
            norm += if m == 0 { j } else { 2.0 * j };
        }
        if m == n {
            result = j;
        }
    }
    result / norm
}

/// Number of strict local maxima with topographic prominence at or above
/// `min_prominence`. The prominence base of a peak is the higher of the two
/// minima separating it from higher ground (or the array edge) on each side.
pub fn peak_count(dist: &[f64], min_prominence: f64) -> usize {
    assert!(min_prominence > 0.0, "prominence threshold must be positive");
    let n = dist.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    for i in 0..n {
        let left_ok = i == 0 || dist[i] > dist[i - 1];
        let right_ok = i == n - 1 || dist[i] > dist[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        if n == 1 {
            count += 1;
            continue;
        }
        let mut left_base = dist[i];
        let mut jy = i;
        while jy > 0 {
            jy -= 1;
            if dist[jy] > dist[i] {
                break;
            }
            left_base = left_base.min(dist[jy]);
        }
        let mut right_base = dist[i];
        let mut jy = i;
        while jy + 1 < n {
            jy += 1;
            if dist[jy] > dist[i] {
                break;
            }
            right_base = right_base.min(dist[jy]);
        }
        let prominence = dist[i] - left_base.max(right_base);
        if prominence >= min_prominence {
            count += 1;
        }
    }
    count
}

/// State fidelity in [0, 1]. Pure-pure pairs use `|⟨a|b⟩|²`, pure-mixed
/// pairs use `⟨ψ|ρ|ψ⟩`, and mixed-mixed pairs use the Uhlmann fidelity
/// `(tr √(√ρ σ √ρ))²`. Both states must share a truncation.
pub fn fidelity(a: &PhotonState, b: &PhotonState) -> f64 {
    assert_eq!(a.n_max(), b.n_max(), "fidelity needs equal truncations");
    match (a, b) {
        (PhotonState::Pure(x), PhotonState::Pure(y)) => fidelity_pure(x, y),
        (PhotonState::Pure(x), PhotonState::Mixed(y)) => fidelity_pure_mixed(x, y),
        (PhotonState::Mixed(x), PhotonState::Pure(y)) => fidelity_pure_mixed(y, x),
        (PhotonState::Mixed(x), PhotonState::Mixed(y)) => fidelity_mixed(x, y),
    }
}

pub fn fidelity_pure(a: &PhotonPure, b: &PhotonPure) -> f64 {
    a.overlap(b).norm_sqr()
}

pub fn fidelity_pure_mixed(psi: &PhotonPure, rho: &PhotonDensity) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    let m = rho.matrix();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += psi.amp(i).conj() * m[(i, j)] * psi.amp(j);
        }
    }
    acc.re.clamp(0.0, 1.0 + 1e-9)
}

pub fn fidelity_mixed(rho: &PhotonDensity, sigma: &PhotonDensity) -> f64 {
    let sqrt_rho = hermitian_sqrt(rho.matrix());
    let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    // tr √(inner) = Σ √λ over the (PSD) eigenvalues
    let eig = nalgebra::SymmetricEigen::new(symmetrize(inner));
    let tr: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    (tr * tr).clamp(0.0, 1.0 + 1e-9)
}

fn hermitian_sqrt(m: &nalgebra::DMatrix<C64>) -> nalgebra::DMatrix<C64> {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m.clone()));
    let dim = m.nrows();
    let mut diag = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for k in 0..dim {
        diag[(k, k)] = C64::new(eig.eigenvalues[k].max(0.0).sqrt(), 0.0);
    }
    &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
}

fn symmetrize(mut m: nalgebra::DMatrix<C64>) -> nalgebra::DMatrix<C64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    m
}

/// Summary statistics of one photon-number distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsReport {
    pub mean_n: f64,
    pub var_n: f64,
    pub mandel_q: Option<f64>,
    pub effective_theta: Option<f64>,
    pub fit_r2: Option<f64>,
    pub effective_alpha: f64,
    pub peak_count: usize,
}

impl StatsReport {
    pub fn from_distribution(dist: &[f64]) -> Self {
        let (theta, r2) = match effective_theta(dist) {
            Ok((t, r)) => (Some(t), Some(r)),
            Err(_) => (None, None),
        };
        Self {
            mean_n: mean(dist),
            var_n: variance(dist),
            mandel_q: mandel_q(dist).ok(),
            effective_theta: theta,
            fit_r2: r2,
            effective_alpha: effective_alpha(dist),
            peak_count: peak_count(dist, DEFAULT_PEAK_PROMINENCE),
        }
    }
}
