//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A Fock index lies outside the truncated basis.
    #[error("fock index {n} exceeds truncation n_max = {n_max}")]
    TruncationBounds { n: usize, n_max: usize },

    /// The truncated window cannot hold the requested state to the
    /// configured tail margin.
    #[error("truncation inadequate: {what} needs n_max >= {needed}, got {n_max}")]
    TruncationInadequate {
        what: String,
        needed: usize,
        n_max: usize,
    },

    /// An electron ladder index lies outside the state's window.
    #[error("electron index {k} outside window [{k_lo}, {k_hi}]")]
    WindowBounds { k: i64, k_lo: i64, k_hi: i64 },

    /// Invalid scalar argument (non-positive temperature parameter,
    /// non-unimodular comb phase, malformed field profile, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Post-selection on an electron outcome of negligible probability.
    #[error("zero-probability post-selection branch (p = {p:.3e})")]
    ZeroProbabilityBranch { p: f64 },

    /// Mandel Q is undefined for a state with zero mean photon number.
    #[error("Mandel Q undefined: mean photon number is zero")]
    UndefinedMandelQ,

    /// A least-squares fit had too little data to be meaningful.
    #[error("fit error: {0}")]
    Fit(String),

    /// A stochastic run hit its step cap before reaching its goal.
    #[error("incomplete run: {0}")]
    IncompleteRun(String),

    /// State validation failed (norm, Hermiticity or positivity).
    #[error("state validation failed: {0}")]
    Validation(String),
}
