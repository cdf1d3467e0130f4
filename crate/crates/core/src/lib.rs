//! Numerical laboratory for a stationary process whose partial sums admit a
//! martingale approximation in several classical senses, yet converge to a
//! normal law along one subsequence of horizons and to a symmetrized Poisson
//! law along another.
//!
//! - [`params`]: weights a_k, dyadic lengths n_k = 2^k and block layouts.
//! - [`exact`]: closed-form second moments and condition statistics.
//! - [`sim`]: exact-in-law Monte Carlo of S_N and of its i.i.d. approximation.
//! - [`laws`]: limit and finite-N laws, KS distances, the dichotomy report.
//! - [`spectral`]: normal Markov operators in their eigenbasis.
//! - [`experiment`]: scenario presets behind the `cltlab` binary.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod experiment;
pub mod laws;
pub mod numeric;
pub mod params;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
