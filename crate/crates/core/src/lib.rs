//! # qchain
//!
//! Single-copy chain rules for quantum relative entropy, checked numerically.
//!
//! The crate builds the objects that appear in chain-rule style bounds on the
//! loss of relative entropy under a pair of channels, and evaluates each bound
//! on concrete finite-dimensional instances:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`linalg`] | Hermitian eigendecomposition, support projectors, `log`, complex powers |
//! | [`quantum`] | density matrices, POVMs, Kraus channels, pinching, cq channels, bipartite states |
//! | [`divergences`] | KL, Umegaki relative entropy, measured relative entropies, fidelity |
//! | [`partitions`] | POVM ensemble partitions and the induced stochastic matrices |
//! | [`recovery`] | Petz / rotated / twisted recovery maps, β₀-averaged maps, trace condition |
//! | [`inequalities`] | one verifier per inequality, each returning a [`VerdictReport`] |
//! | [`counterexample`] | the qubit family that violates the unconditional chain rule |
//! | [`cli`] | the `qchain` command line (verify, audit, scan, quadcheck) |
//!
//! ## Conventions
//!
//! - Logarithms use a single process-wide base, 2 by default ([`set_log_base`]).
//!   Every inequality is base-invariant; only reported magnitudes change.
//! - Supports are relative: an eigenvalue counts when `λ > 1e-10 · λ_max`.
//! - Divergences are extended reals; `+∞` is an ordinary return value.
//!
//! ## Quick start
//!
//! ```
//! use qchain::quantum::{random_channel, random_density};
//! use qchain::divergences::umegaki;
//!
//! let rho = random_density(3, 3, 1).unwrap();
//! let sigma = random_density(3, 3, 2).unwrap();
//! let m = random_channel(3, 2, 2, 3).unwrap();
//!
//! let before = umegaki(&rho, sigma.psd()).unwrap();
//! let after = umegaki(&m.apply_state(&rho).unwrap(), m.apply_state(&sigma).unwrap().psd()).unwrap();
//! assert!(after.value() <= before.value() + 1e-8);
//! ```

#![forbid(unsafe_code)]

use std::sync::atomic::{AtomicU64, Ordering};

pub mod cli;
pub mod counterexample;
pub mod divergences;
pub mod error;
pub mod inequalities;
pub mod linalg;
pub mod partitions;
pub mod quantum;
pub mod recovery;
pub mod rng;

pub use divergences::{ExtendedReal, ProbVec};
pub use error::{Error, Result};
pub use inequalities::{InequalityId, Pairing, VerdictReport};
pub use linalg::{CMatrix, HermitianMatrix, PsdMatrix, Spectral};
pub use quantum::{BipartiteState, Channel, CpMap, DensityMatrix, Povm};
pub use recovery::{QuadratureScheme, Superoperator};

pub use num_complex::Complex64;

// f64 bits of 2.0
static LOG_BASE_BITS: AtomicU64 = AtomicU64::new(0x4000_0000_0000_0000);

/// Current logarithm base used by every divergence in the crate.
pub fn log_base() -> f64 {
    f64::from_bits(LOG_BASE_BITS.load(Ordering::Relaxed))
}

/// Set the process-wide logarithm base. Must be positive, finite and not 1.
pub fn set_log_base(base: f64) -> Result<()> {
    if !(base.is_finite() && base > 0.0 && (base - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "log base must be positive and != 1, got {base}"
        )));
    }
    LOG_BASE_BITS.store(base.to_bits(), Ordering::Relaxed);
    Ok(())
}

/// Logarithm in the configured base.
#[inline]
pub fn log_b(x: f64) -> f64 {
    x.ln() / log_base().ln()
}

/// Inverse of [`log_b`].
#[inline]
pub fn exp_b(x: f64) -> f64 {
    (x * log_base().ln()).exp()
}
