//! Free-electron states on a finite window of the energy ladder.
//!
//! The electron basis is `|k⟩` at energy `E_0 + k·ħω` with k any integer;
//! we hold amplitudes on a finite window `[k_lo, k_hi]`. The ladder shift
//! operators act as `b|k⟩ = |k-1⟩` and `b†|k⟩ = |k+1⟩`; amplitude shifted
//! past a window edge is dropped and its weight recorded, so finite-window
//! artifacts are visible instead of silently renormalized away.

use crate::error::{Error, Result};
use crate::C64;

/// Pure electron state over the window `[k_lo, k_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectronPure {
    k_lo: i64,
    k_hi: i64,
    amps: Vec<C64>,
    /// Squared-norm weight dropped at window edges by shift operators.
    leakage: f64,
}

impl ElectronPure {
    /// Single-peak ("delta") electron at ladder index `k0`.
    pub fn delta(k0: i64, k_lo: i64, k_hi: i64) -> Result<Self> {
        check_window(k_lo, k_hi)?;
        if k0 < k_lo || k0 > k_hi {
            return Err(Error::WindowBounds { k: k0, k_lo, k_hi });
        }
        let mut amps = vec![C64::new(0.0, 0.0); (k_hi - k_lo + 1) as usize];
        amps[(k0 - k_lo) as usize] = C64::new(1.0, 0.0);
        Ok(Self {
            k_lo,
            k_hi,
            amps,
            leakage: 0.0,
        })
    }

    /// Energy comb: equal magnitudes `1/√(K + K' + 1)` on `[-K, K']` with
    /// phase `β^k` per tooth. β must be unimodular or the state is not
    /// normalizable in the infinite-comb limit.
    pub fn comb(k_down: u32, k_up: u32, beta: C64) -> Result<Self> {
        if (beta.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "comb phase must satisfy |beta| = 1, got |beta| = {}",
                beta.norm()
            )));
        }
        let k_lo = -(k_down as i64);
        let k_hi = k_up as i64;
        let teeth = (k_down + k_up + 1) as f64;
        let mag = 1.0 / teeth.sqrt();
        let arg = beta.arg();
        let amps = (k_lo..=k_hi)
            .map(|k| C64::from_polar(mag, arg * k as f64))
            .collect();
        Ok(Self {
            k_lo,
            k_hi,
            amps,
            leakage: 0.0,
        })
    }

    /// Same amplitudes embedded in a wider window (zero-padded). Needed when
    /// the joint evolution must leave room for electron energy changes.
    pub fn embed(&self, k_lo: i64, k_hi: i64) -> Result<Self> {
        check_window(k_lo, k_hi)?;
        if k_lo > self.k_lo || k_hi < self.k_hi {
            return Err(Error::WindowBounds {
                k: self.k_lo,
                k_lo,
                k_hi,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); (k_hi - k_lo + 1) as usize];
        for (i, a) in self.amps.iter().enumerate() {
            amps[(self.k_lo - k_lo) as usize + i] = *a;
        }
        Ok(Self {
            k_lo,
            k_hi,
            amps,
            leakage: self.leakage,
        })
    }

    pub fn window(&self) -> (i64, i64) {
        (self.k_lo, self.k_hi)
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Amplitude at ladder index `k` (zero outside the window).
    pub fn amp(&self, k: i64) -> C64 {
        if k < self.k_lo || k > self.k_hi {
            C64::new(0.0, 0.0)
        } else {
            self.amps[(k - self.k_lo) as usize]
        }
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Ladder lowering `b`: amplitude at `k` moves to `k - 1`. Weight pushed
    /// below `k_lo` is dropped and recorded. The result is not renormalized.
    pub fn apply_b(&self) -> Self {
        let mut out = self.clone();
        let dropped = self.amps[0].norm_sqr();
        for i in 0..self.amps.len() - 1 {
            out.amps[i] = self.amps[i + 1];
        }
        *out.amps.last_mut().unwrap() = C64::new(0.0, 0.0);
        out.leakage += dropped;
        out
    }

    /// Ladder raising `b†`: amplitude at `k` moves to `k + 1`.
    pub fn apply_b_dagger(&self) -> Self {
        let mut out = self.clone();
        let dropped = self.amps.last().unwrap().norm_sqr();
        for i in (1..self.amps.len()).rev() {
            out.amps[i] = self.amps[i - 1];
        }
        out.amps[0] = C64::new(0.0, 0.0);
        out.leakage += dropped;
        out
    }
}

fn check_window(k_lo: i64, k_hi: i64) -> Result<()> {
    if k_lo > k_hi {
        return Err(Error::Domain(format!(
            "empty electron window [{k_lo}, {k_hi}]"
        )));
    }
    Ok(())
}
