//! The electron-photon scattering kernel.
//!
//! One electron pass scatters the joint state with
//! `S = exp(g b a† - g* b† a)`, a displacement operator whose argument
//! carries the electron shift operator `b`. Its matrix elements factorize
//! as `⟨k,n|S|k',n'⟩ = s_{n,n'} δ_{k+n,k'+n'}`, with
//!
//! ```text
//! s_{n,n'} = e^{-|g|²/2} g^{n-n'} √(n! n'!)
//!            Σ_{r=max(0,n'-n)}^{n'} (-|g|²)^r / [r! (n'-r)! (r+n-n')!]
//! ```
//!
//! The same closed form with `g` replaced by a plain complex α is the Fock
//! matrix of the ordinary displacement operator `D(α)`, which is why
//! [`displacement_element`] is shared with `fockspace`.
//!
//! The alternating sum overflows naive factorial evaluation near n ~ 10³
//! and loses leading digits to cancellation, so every term is formed in
//! log-magnitude + sign form and accumulated with compensated summation,
//! with early exit once terms fall past the peak of the (log-concave)
//! magnitude profile.

use nalgebra::DMatrix;

use crate::numeric::{LnFactorial, ScaledLogSum, SERIES_CUTOFF_LN};
use crate::C64;

/// Dimensionless coupling of a single electron pass to the cavity mode.
/// Relates to the conventional interaction strength via `g = g_qu |α|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling(C64);

impl Coupling {
    pub fn new(g: C64) -> Self {
        Self(g)
    }

    pub fn value(&self) -> C64 {
        self.0
    }

    pub fn abs(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.re.is_finite() && self.0.im.is_finite()
    }
}

impl From<C64> for Coupling {
    fn from(g: C64) -> Self {
        Self(g)
    }
}

/// `⟨n|D(α)|n'⟩` evaluated from the closed-form series.
pub(crate) fn displacement_element(alpha: C64, n: usize, np: usize, lf: &LnFactorial) -> C64 {
    if alpha == C64::new(0.0, 0.0) {
        return if n == np {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
    }
    // exact symmetry s_{n',n} = s_{n,n'} (-1)^{n-n'} e^{2i(n'-n)arg α};
    // evaluate with n >= n' so the r-sum starts at zero
    if np > n {
        let swapped = displacement_element(alpha, np, n, lf);
        let delta = (np - n) as f64;
        let sign = if (np - n) % 2 == 0 { 1.0 } else { -1.0 };
        return swapped * sign * C64::from_polar(1.0, -2.0 * delta * alpha.arg());
    }

    let x = alpha.norm_sqr();
    let ln_x = x.ln();
    let diff = n - np;

    let mut sum = ScaledLogSum::new();
    let mut prev = f64::NEG_INFINITY;
    let mut best = f64::NEG_INFINITY;
    for r in 0..=np {
        let log_mag = r as f64 * ln_x - lf.get(r) - lf.get(np - r) - lf.get(r + diff);
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
    let log_pre = -0.5 * x + diff as f64 * alpha.norm().ln() + 0.5 * (lf.get(n) + lf.get(np));
    let mag = scaled * (log_scale + log_pre).exp();
    C64::from_polar(mag, diff as f64 * alpha.arg())
}

/// Single matrix element `s_{n,n'}` of the scattering kernel.
pub fn kernel_element(g: Coupling, n: usize, np: usize) -> C64 {
    let lf = LnFactorial::up_to(n.max(np));
    displacement_element(g.value(), n, np, &lf)
}

/// Dense scattering kernel `s_{n,n'}` over `n, n' ∈ [0, n_max]`.
///
/// Columns are orthonormal away from the truncation boundary; the margin
/// `⌈8|g|(√n_max + 1)⌉` bounds how far boundary leakage reaches inward.
#[derive(Clone, Debug)]
pub struct ScatteringKernel {
    g: Coupling,
    s: DMatrix<C64>,
    interior_margin: usize,
    max_col_norm_defect: f64,
}

impl ScatteringKernel {
    pub fn g(&self) -> Coupling {
        self.g
    }

    pub fn n_max(&self) -> usize {
        self.s.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.s
    }

    pub fn element(&self, n: usize, np: usize) -> C64 {
        self.s[(n, np)]
    }

    /// Boundary margin: columns with `n' ≤ n_max - margin` are orthonormal
    /// to within the kernel tolerance.
    pub fn interior_margin(&self) -> usize {
        self.interior_margin
    }

    /// Max deviation of interior column norms from 1 (build diagnostic).
    pub fn max_col_norm_defect(&self) -> f64 {
        self.max_col_norm_defect
    }
}

/// Truncation margin heuristic for a displacement-type operator of
/// magnitude `|g|` on a window of size `n_max`.
pub fn boundary_margin(g_abs: f64, n_max: usize) -> usize {
    ((8.0 * g_abs * ((n_max as f64).sqrt() + 1.0)).ceil() as usize).min(n_max)
}

/// Build the full kernel matrix.
pub fn build_kernel(g: Coupling, n_max: usize) -> ScatteringKernel {
    let lf = LnFactorial::up_to(n_max);
    let alpha = g.value();
    let mut s = DMatrix::zeros(n_max + 1, n_max + 1);
    // fill the lower triangle, mirror the rest via the exact symmetry
    let sym_phase = C64::from_polar(1.0, -2.0 * alpha.arg());
    for n in 0..=n_max {
        for np in 0..=n {
            let v = displacement_element(alpha, n, np, &lf);
            s[(n, np)] = v;
            if np != n {
                let sign = if (n - np) % 2 == 0 { 1.0 } else { -1.0 };
                s[(np, n)] = v * sign * sym_phase.powu((n - np) as u32);
            }
        }
    }

    let interior_margin = boundary_margin(g.abs(), n_max);
    let mut max_defect = 0.0f64;
    let interior_hi = n_max.saturating_sub(interior_margin);
    for np in 0..=interior_hi {
        let norm_sq: f64 = (0..=n_max).map(|n| s[(n, np)].norm_sqr()).sum();
        max_defect = max_defect.max((norm_sq - 1.0).abs());
    }

    ScatteringKernel {
        g,
        s,
        interior_margin,
        max_col_norm_defect: max_defect,
    }
}
