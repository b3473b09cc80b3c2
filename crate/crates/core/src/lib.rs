//! Spectral pricing for the local volatility model
//!
//! ```text
//! dX = (a^2 + eps * X^beta)^(1/2) X dW,   beta < 0
//! ```
//!
//! European prices are written as a power series in `eps` whose terms
//! collapse to a single contour integral over the Fourier variable. The
//! same series feeds an exact recursion for the implied-volatility
//! expansion, a transition-density approximation (Dirac payoff), and is
//! checked against an Euler Monte Carlo simulator.
//!
//! The crate is `no_std` (with `alloc`). Enabling the `std` feature runs
//! the Monte Carlo path chunks on rayon; results are bit-identical either way.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(x > 0.0)` is deliberate: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod black_scholes;
pub mod divdiff;
mod error;
pub mod eta;
pub mod general_eta;
pub mod mc;
pub mod model;
pub mod pricer;
pub mod quadrature;
pub mod smile;
pub mod transforms;

pub use error::{Error, Result};
pub use model::ModelParams;
pub use num_complex::Complex64;
