//! Payoff coefficients `(psi_lambda, h)` on a horizontal contour.
//!
//! For a call `(e^y - e^k)^+` the coefficient
//! `-e^{k - i k lambda} / (sqrt(2 pi) (i lambda + lambda^2))` exists only
//! for `Im(lambda) < -1`; for a Dirac mass at `y_target` it is
//! `e^{-i lambda y_target} / sqrt(2 pi)` on any contour. Digital and put
//! payoffs are not provided here; a put follows from a call and the forward
//! `e^y` by parity.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Default imaginary part of the call contour.
pub const DEFAULT_CALL_OFFSET: f64 = -1.5;
/// Distance from a bad offset that triggers a nudge.
pub const NUDGE_WINDOW: f64 = 0.01;
/// Size of a nudge.
pub const NUDGE_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    /// `(e^y - e^k)^+` with log-strike `k`.
    Call { k: f64 },
    /// `delta(y - y_target)`; pricing it yields the transition density.
    Dirac { y_target: f64 },
}

impl Payoff {
    pub fn call(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::invalid("call log-strike must be finite"));
        }
        Ok(Payoff::Call { k })
    }

    pub fn dirac(y_target: f64) -> Result<Self> {
        if !y_target.is_finite() {
            return Err(Error::invalid("dirac target must be finite"));
        }
        Ok(Payoff::Dirac { y_target })
    }

    /// Whether the horizontal line `Im(lambda) = offset` is admissible.
    pub fn admits_offset(&self, offset: f64) -> bool {
        match self {
            Payoff::Call { .. } => offset < -1.0,
            Payoff::Dirac { .. } => offset.is_finite(),
        }
    }

    /// Payoff at the log-price `y`; zero for the Dirac mass away from its atom.
    pub fn intrinsic(&self, y: f64) -> f64 {
        match *self {
            Payoff::Call { k } => (libm::exp(y) - libm::exp(k)).max(0.0),
            Payoff::Dirac { .. } => 0.0,
        }
    }
}

/// Integration contour `lambda = xi + i offset`, `xi in [-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub offset: f64,
    /// Truncation of `Re(lambda)`; `None` selects it from the decay of `e^{t phi}`.
    pub half_width: Option<f64>,
    pub rel_tol: f64,
    /// Absolute floor under the relative tolerance.
    pub abs_tol: f64,
    /// Budget of integrand evaluations.
    pub max_nodes: usize,
    /// Move the offset away from removable-singularity lines (see [`nudge_offset`]).
    pub auto_nudge: bool,
}

impl ContourSpec {
    pub fn call() -> Self {
        Self {
            offset: DEFAULT_CALL_OFFSET,
            half_width: None,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_nodes: 4_000_000,
            auto_nudge: true,
        }
    }

    /// Real-line contour used for Dirac payoffs.
    pub fn density() -> Self {
        Self {
            offset: 0.0,
            auto_nudge: false,
            ..Self::call()
        }
    }

    pub fn default_for(payoff: &Payoff) -> Self {
        match payoff {
            Payoff::Call { .. } => Self::call(),
            Payoff::Dirac { .. } => Self::density(),
        }
    }

    pub fn with_offset(self, offset: f64) -> Self {
        Self {
            offset,
            auto_nudge: false,
            ..self
        }
    }

    pub fn validate(&self, payoff: &Payoff) -> Result<()> {
        if !payoff.admits_offset(self.offset) {
            return Err(Error::ContourViolation {
                offset: self.offset,
            });
        }
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0) {
            return Err(Error::invalid("contour tolerances must be positive"));
        }
        if let Some(w) = self.half_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid("contour half-width must be positive"));
            }
        }
        if self.max_nodes == 0 {
            return Err(Error::invalid("node budget must be positive"));
        }
        Ok(())
    }
}

/// `(psi_lambda, h)`.
pub fn payoff_coefficient(payoff: &Payoff, lambda: Complex64) -> Result<Complex64> {
    match *payoff {
        Payoff::Call { k } => {
            if !(lambda.im < -1.0) {
                return Err(Error::ContourViolation { offset: lambda.im });
            }
            Ok(call_coefficient(k, lambda))
        }
        Payoff::Dirac { y_target } => Ok(dirac_coefficient(y_target, lambda)),
    }
}

#[inline]
pub(crate) fn call_coefficient(k: f64, lambda: Complex64) -> Complex64 {
    let i = Complex64::i();
    let num = (Complex64::new(k, 0.0) - i * k * lambda).exp();
    // i lambda + lambda^2 = lambda (lambda + i)
    -num / (lambda * (lambda + i) * libm::sqrt(2.0 * PI))
}

#[inline]
pub(crate) fn dirac_coefficient(y_target: f64, lambda: Complex64) -> Complex64 {
    (-Complex64::i() * lambda * y_target).exp() / libm::sqrt(2.0 * PI)
}

/// Upper bound on `|(psi_lambda, h)|` for `|Re(lambda)| >= half_width` on the contour.
///
/// Call: `|e^{k - i k lambda}| = e^{k (1 + offset)}` and
/// `|lambda| |lambda + i| >= half_width^2`, so the envelope is
/// `e^{k (1 + offset)} / (sqrt(2 pi) half_width^2)`. Dirac: `e^{y_target offset} / sqrt(2 pi)`,
/// which is `1/sqrt(2 pi)` on the real line.
pub fn coefficient_decay_bound(payoff: &Payoff, offset: f64, half_width: f64) -> Result<f64> {
    if !payoff.admits_offset(offset) {
        return Err(Error::ContourViolation { offset });
    }
    if !(half_width > 0.0) {
        return Err(Error::invalid("half-width must be positive"));
    }
    let root = libm::sqrt(2.0 * PI);
    Ok(match *payoff {
        Payoff::Call { k } => libm::exp(k * (1.0 + offset)) / (root * half_width * half_width),
        Payoff::Dirac { y_target } => libm::exp(y_target * offset) / root,
    })
}

/// Contour offsets on which two shifted eigenvalues `phi_{lambda - i j beta}`,
/// `phi_{lambda - i k beta}` (`0 <= j < k <= order`) coincide at `Re(lambda) = 0`:
/// `-(1 - (j + k) beta) / 2`. Sorted, duplicates removed. Empty for `beta = 0`
/// (all nodes coincide everywhere).
pub fn bad_offsets(order: usize, beta: f64) -> Vec<f64> {
    if order == 0 || beta == 0.0 {
        return Vec::new();
    }
    // j + k runs over 1..=2*order-1
    let mut out: Vec<f64> = (1..2 * order)
        .map(|m| -(1.0 - m as f64 * beta) / 2.0)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// Moves `offset` by `NUDGE_STEP` (downwards first, keeping it admissible)
/// when it lies within `NUDGE_WINDOW` of a bad offset.
pub fn nudge_offset(offset: f64, order: usize, beta: f64) -> f64 {
    let bad = bad_offsets(order, beta);
    let near = |c: f64| bad.iter().any(|b| (c - b).abs() < NUDGE_WINDOW);
    if !near(offset) {
        return offset;
    }
    for &cand in &[
        offset - NUDGE_STEP,
        offset + NUDGE_STEP,
        offset - 2.0 * NUDGE_STEP,
    ] {
        let still_call_ok = offset >= -1.0 || cand < -1.0;
        if still_call_ok && !near(cand) {
            return cand;
        }
    }
    offset - 2.0 * NUDGE_STEP
}
