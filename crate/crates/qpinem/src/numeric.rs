//! Internal numerical helpers: log-factorials, compensated summation and
//! log-space evaluation of alternating factorial series.
//!
//! Every factorial-bearing formula in this crate is evaluated through
//! these helpers so that truncations up to n ~ 10^3-10^4 neither overflow
//! nor lose the leading digits to cancellation.

/// Table of ln(n!) for integer arguments.
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    /// Precompute ln(n!) for n in 0..=max_n.
    pub fn up_to(max_n: usize) -> Self {
        let table = (0..=max_n)
            .map(|n| statrs::function::gamma::ln_gamma(n as f64 + 1.0))
            .collect();
        Self { table }
    }

    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.table[n]
    }
}

/// Neumaier variant of Kahan compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Accumulates sum_i s_i * exp(l_i) where the l_i are log-magnitudes and
/// s_i = ±1, keeping everything scaled relative to the largest magnitude
/// seen so far. Single pass, no allocation, compensated.
#[derive(Clone, Copy, Debug)]
pub struct ScaledLogSum {
    log_max: f64,
    acc: CompensatedSum,
}

impl ScaledLogSum {
    pub fn new() -> Self {
        Self {
            log_max: f64::NEG_INFINITY,
            acc: CompensatedSum::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, log_mag: f64, negative: bool) {
        if log_mag == f64::NEG_INFINITY {
            return;
        }
        if log_mag > self.log_max {
            if self.log_max > f64::NEG_INFINITY {
                self.acc.scale((self.log_max - log_mag).exp());
            }
            self.log_max = log_mag;
        }
        let term = (log_mag - self.log_max).exp();
        self.acc.add(if negative { -term } else { term });
    }

    /// Signed total as (log-magnitude of the scale, scaled sum); the value
    /// represented is `scaled_sum * exp(log_scale)`.
    #[inline]
    pub fn parts(&self) -> (f64, f64) {
        (self.log_max, self.acc.total())
    }

    /// The represented value, exponentiated. Underflows gracefully to 0.
    #[inline]
    pub fn value(&self) -> f64 {
        if self.log_max == f64::NEG_INFINITY {
            return 0.0;
        }
        let (l, s) = self.parts();
        s * l.exp()
    }
}

impl Default for ScaledLogSum {
    fn default() -> Self {
        Self::new()
    }
}

/// Complex counterpart of [`ScaledLogSum`]: accumulates
/// sum_i exp(l_i) * e^{i phi_i} with a shared running scale.
#[derive(Clone, Copy, Debug)]
pub struct ScaledLogSumC {
    log_max: f64,
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ScaledLogSumC {
    pub fn new() -> Self {
        Self {
            log_max: f64::NEG_INFINITY,
            re: CompensatedSum::new(),
            im: CompensatedSum::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, log_mag: f64, phase: f64) {
        if log_mag == f64::NEG_INFINITY {
            return;
        }
        if log_mag > self.log_max {
            if self.log_max > f64::NEG_INFINITY {
                let f = (self.log_max - log_mag).exp();
                self.re.scale(f);
                self.im.scale(f);
            }
            self.log_max = log_mag;
        }
        let m = (log_mag - self.log_max).exp();
        self.re.add(m * phase.cos());
        self.im.add(m * phase.sin());
    }

    /// The represented complex value; underflows gracefully to 0.
    #[inline]
    pub fn value(&self) -> num_complex::Complex64 {
        if self.log_max == f64::NEG_INFINITY {
            return num_complex::Complex64::new(0.0, 0.0);
        }
        let scale = self.log_max.exp();
        num_complex::Complex64::new(self.re.total() * scale, self.im.total() * scale)
    }
}

impl Default for ScaledLogSumC {
    fn default() -> Self {
        Self::new()
    }
}

/// Terms past the peak of a log-concave sequence are skipped once they drop
/// this far (in ln units) below the running maximum; exp(-74) < 1e-32.
pub const SERIES_CUTOFF_LN: f64 = 74.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_matches_direct_products() {
        let lf = LnFactorial::up_to(20);
        let mut f = 1.0f64;
        for n in 1..=20usize {
            f *= n as f64;
            assert!((lf.get(n) - f.ln()).abs() < 1e-12);
        }
        assert_eq!(lf.get(0), 0.0);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut cs = CompensatedSum::new();
        let mut naive = 0.0f64;
        for _ in 0..1_000_000 {
            cs.add(0.1);
            naive += 0.1;
        }
        assert!((cs.total() - 100_000.0).abs() < 1e-9);
        assert!((naive - 100_000.0).abs() > (cs.total() - 100_000.0).abs());
    }

    #[test]
    fn scaled_log_sum_handles_rescaling() {
        // 1e-300 + 1e300 - 1e300 = 1e-300 exactly in scaled space is too
        // much to ask; check the simpler e^2 - e^1 + e^0 case.
        let mut s = ScaledLogSum::new();
        s.add(0.0, false);
        s.add(1.0, true);
        s.add(2.0, false);
        let expect = 2.0f64.exp() - 1.0f64.exp() + 1.0;
        assert!((s.value() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn scaled_log_sum_empty_is_zero() {
        assert_eq!(ScaledLogSum::new().value(), 0.0);
    }
}
