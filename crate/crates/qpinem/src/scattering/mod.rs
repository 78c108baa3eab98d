//! Electron-photon scattering: kernel matrix, joint pure-state evolution,
//! photon-space Kraus channels, the coupling integral, and the closed-form
//! special cases used as cross-checks.

mod joint;
mod kernel;
mod kraus;

pub use joint::{
    coherent_delta_coeffs, coherent_delta_output, evolve_pure, fock_transition_prob,
    postselected_photon_state, JointPure,
};
pub use kernel::{boundary_margin, build_kernel, kernel_element, Coupling, ScatteringKernel};
pub(crate) use kernel::displacement_element;
pub use kraus::{kraus_operators, kraus_operators_clipped, KrausFamily};

use crate::error::{Error, Result};
use crate::C64;

/// CODATA elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// CODATA reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Sampled longitudinal electric-field profile along the electron path.
#[derive(Clone, Debug)]
pub struct FieldProfile {
    /// Sample positions in meters, strictly increasing.
    pub z: Vec<f64>,
    /// Complex field samples in V/m.
    pub e_z: Vec<C64>,
    /// Mode angular frequency, rad/s.
    pub omega: f64,
    /// Electron speed, m/s.
    pub v: f64,
}

/// Outcome of the coupling integral.
#[derive(Clone, Copy, Debug)]
pub struct GquResult {
    pub g: Coupling,
    /// Set when the field has not decayed to < 1e-6 of its peak at either
    /// end of the sampled range, so the integral may be truncated.
    pub endpoint_warning: bool,
}

/// Dimensionless coupling from a field profile:
/// `g_qu = (e/ħω) ∫ dz' e^{-iωz'/v} E_z(z')`, trapezoidal quadrature on the
/// given grid (no resampling).
pub fn compute_g_qu(profile: &FieldProfile) -> Result<GquResult> {
    let n = profile.z.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "field profile needs at least 2 samples, got {n}"
        )));
    }
    if profile.e_z.len() != n {
        return Err(Error::Domain(format!(
            "field profile has {} positions but {} field samples",
            n,
            profile.e_z.len()
        )));
    }
    if !(profile.v > 0.0) || !(profile.omega > 0.0) {
        return Err(Error::Domain(format!(
            "field profile needs positive omega and v, got omega = {}, v = {}",
            profile.omega, profile.v
        )));
    }
    for w in profile.z.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(
                "field profile positions must be strictly increasing".into(),
            ));
        }
    }

    let phase_rate = -profile.omega / profile.v;
    let integrand =
        |i: usize| profile.e_z[i] * C64::from_polar(1.0, phase_rate * profile.z[i]);

    let mut acc_re = crate::numeric::CompensatedSum::new();
    let mut acc_im = crate::numeric::CompensatedSum::new();
    let mut prev = integrand(0);
    for i in 1..n {
        let cur = integrand(i);
        let h = profile.z[i] - profile.z[i - 1];
        let contrib = (prev + cur) * 0.5 * h;
        acc_re.add(contrib.re);
        acc_im.add(contrib.im);
        prev = cur;
    }
    let integral = C64::new(acc_re.total(), acc_im.total());
    let g = integral * (ELEMENTARY_CHARGE / (HBAR * profile.omega));

    let peak = profile.e_z.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
    let endpoint_warning = peak > 0.0
        && (profile.e_z[0].norm() >= 1e-6 * peak || profile.e_z[n - 1].norm() >= 1e-6 * peak);

    Ok(GquResult {
        g: Coupling::new(g),
        endpoint_warning,
    })
}

/// Brute-force oracles shared by unit tests in this crate. Independent of
/// the series-based kernel path: matrix exponentials are taken through a
/// Hermitian eigendecomposition of the generator.
#[cfg(test)]
pub(crate) mod test_oracles {
    use nalgebra::DMatrix;

    use crate::C64;

    /// expm(g a† - g* a) on the truncated photon space, which equals the
    /// conserved-block reduction of the joint scattering generator.
    pub fn expm_kernel(g: C64, n_max: usize) -> DMatrix<C64> {
        let dim = n_max + 1;
        let i = C64::new(0.0, 1.0);
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for n in 0..n_max {
            let root = ((n + 1) as f64).sqrt();
            h[(n + 1, n)] = i * g * root;
            h[(n, n + 1)] = -i * g.conj() * root;
        }
        let eig = nalgebra::SymmetricEigen::new(h);
        let mut diag = DMatrix::<C64>::zeros(dim, dim);
        for k in 0..dim {
            diag[(k, k)] = (-i * C64::new(eig.eigenvalues[k], 0.0)).exp();
        }
        &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
    }

    /// Largest index up to which the truncated matrix exponential agrees
    /// with the untruncated closed form: boundary corrections require a
    /// round trip past n_max, of relative size [(|g|√N)^m / m!]² at depth
    /// m, so we take the smallest m with (|g|√N)^m/m! ≤ √tol.
    pub fn expm_agreement_interior(g_abs: f64, n_max: usize, tol: f64) -> usize {
        let x = g_abs * (n_max as f64).sqrt();
        let target = tol.sqrt().ln();
        let mut log_term = 0.0f64;
        let mut m = 0usize;
        while (log_term > target || (m as f64) < x) && m < n_max {
            m += 1;
            log_term += x.ln() - (m as f64).ln();
        }
        n_max - m.min(n_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_field_gives_zero_coupling() {
        let profile = FieldProfile {
            z: (0..100).map(|i| i as f64 * 1e-8).collect(),
            e_z: vec![C64::new(0.0, 0.0); 100],
            omega: 1e15,
            v: 1e8,
        };
        let out = compute_g_qu(&profile).unwrap();
        assert_eq!(out.g.value(), C64::new(0.0, 0.0));
    }

    #[test]
    fn phase_matched_rectangle_is_analytic() {
        // e_z(z) = E0 e^{+iωz/v} on [0, L]: integrand constant, trapezoid exact
        let omega = 2.0e15;
        let v = 1.2e8;
        let e0 = 3.0e7;
        let l = 5.0e-6;
        let n = 2001;
        let z: Vec<f64> = (0..n).map(|i| l * i as f64 / (n - 1) as f64).collect();
        let e_z: Vec<C64> = z
            .iter()
            .map(|&zi| C64::from_polar(e0, omega * zi / v))
            .collect();
        let out = compute_g_qu(&FieldProfile { z, e_z, omega, v }).unwrap();
        let expect = ELEMENTARY_CHARGE * e0 * l / (HBAR * omega);
        assert_abs_diff_eq!(out.g.value().re, expect, epsilon = 1e-12 * expect);
        assert_abs_diff_eq!(out.g.value().im, 0.0, epsilon = 1e-12 * expect);
        // field does not decay at the ends: warned
        assert!(out.endpoint_warning);
    }

    #[test]
    fn gaussian_profile_matches_fourier_transform() {
        // e_z = E0 exp(-z²/2σ²): g = (eE0/ħω)·σ√(2π)·exp(-σ²ω²/2v²)
        let sigma = 2.0e-6;
        let v = 1.5e8;
        let omega = v / sigma; // phase factor exp(-1/2)
        let e0 = 1.0e7;
        let n = 20001;
        let half = 8.0 * sigma;
        let z: Vec<f64> = (0..n)
            .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
            .collect();
        let e_z: Vec<C64> = z
            .iter()
            .map(|&zi| C64::new(e0 * (-zi * zi / (2.0 * sigma * sigma)).exp(), 0.0))
            .collect();
        let out = compute_g_qu(&FieldProfile { z, e_z, omega, v }).unwrap();
        let expect = ELEMENTARY_CHARGE * e0 / (HBAR * omega)
            * sigma
            * (2.0 * std::f64::consts::PI).sqrt()
            * (-sigma * sigma * omega * omega / (2.0 * v * v)).exp();
        assert!(!out.endpoint_warning);
        assert_abs_diff_eq!(out.g.value().re, expect, epsilon = 1e-6 * expect);
        assert!(out.g.value().im.abs() < 1e-6 * expect);
    }

    #[test]
    fn profile_validation_errors() {
        let bad = FieldProfile {
            z: vec![0.0],
            e_z: vec![C64::new(1.0, 0.0)],
            omega: 1e15,
            v: 1e8,
        };
        assert!(compute_g_qu(&bad).is_err());
        let unsorted = FieldProfile {
            z: vec![0.0, 2.0, 1.0],
            e_z: vec![C64::new(1.0, 0.0); 3],
            omega: 1e15,
            v: 1e8,
        };
        assert!(compute_g_qu(&unsorted).is_err());
    }
}
