//! Model parameters, eigenvalue symbols and the series validity checks.
//!
//! The log-price `Y = log X` has generator `A0 + eps * e^{beta y} * A1` with
//! `A0 = a^2/2 (d^2 - d)` and `A1 = 1/2 (d^2 - d)`. Both act on
//! `psi_lambda(y) = e^{i lambda y} / sqrt(2 pi)` by multiplication with the
//! symbols returned by [`phi0`] and [`chi`].

use alloc::format;

use num_complex::Complex64;

use crate::{Error, Result};

/// Offset below the pricing point used for the truncated-domain norm of
/// `e^{beta y}` when no explicit floor is given.
pub const DEFAULT_NORM_OFFSET: f64 = 5.0;

/// `(a, eps, beta, y)` for `dX = (a^2 + eps X^beta)^{1/2} X dW`, with `y = log X_0`.
///
/// `beta = 0` is accepted: the model is then geometric Brownian motion with
/// variance `a^2 + eps`, and every shifted eigenvalue coincides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    a: f64,
    eps: f64,
    beta: f64,
    y: f64,
}

impl ModelParams {
    pub fn new(a: f64, eps: f64, beta: f64, y: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid(format!(
                "a must be positive and finite, got {a}"
            )));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::invalid(format!(
                "eps must be non-negative, got {eps}"
            )));
        }
        if !(beta.is_finite() && beta <= 0.0) {
            return Err(Error::invalid(format!(
                "beta must be negative (or zero), got {beta}"
            )));
        }
        if !y.is_finite() {
            return Err(Error::invalid(format!(
                "log-spot y must be finite, got {y}"
            )));
        }
        Ok(Self { a, eps, beta, y })
    }

    /// Same as [`ModelParams::new`] with `eps = sqrt_eps^2`, the usual way to quote it.
    pub fn from_sqrt_eps(a: f64, sqrt_eps: f64, beta: f64, y: f64) -> Result<Self> {
        Self::new(a, sqrt_eps * sqrt_eps, beta, y)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.a, eps, self.beta, self.y)
    }

    pub fn with_y(self, y: f64) -> Result<Self> {
        Self::new(self.a, self.eps, self.beta, y)
    }

    /// Local variance `a^2 + eps e^{beta y}` of the log-price at `y`.
    pub fn local_variance(&self, y: f64) -> f64 {
        self.a * self.a + self.eps * libm::exp(self.beta * y)
    }

    /// Advisory convergence diagnostics for pricing at the stored `y`.
    pub fn diagnostics(&self, norm_offset: f64) -> SeriesDiagnostics {
        let floor = self.y - norm_offset;
        let threshold = validity_threshold(self);
        SeriesDiagnostics {
            norm_floor: floor,
            bound_satisfied: check_series_bound(self, floor),
            threshold,
            below_threshold: self.y < threshold,
        }
    }
}

/// Warnings attached to a price; never turned into hard failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesDiagnostics {
    /// Lower edge `y0` of the truncated domain used for the norm of `e^{beta y}`.
    pub norm_floor: f64,
    /// `eps <= a^2 / ||e_beta||_0`.
    pub bound_satisfied: bool,
    /// Log-spot level below which convergence is not guaranteed.
    pub threshold: f64,
    pub below_threshold: bool,
}

impl SeriesDiagnostics {
    pub fn is_clean(&self) -> bool {
        self.bound_satisfied && !self.below_threshold
    }
}

/// Symbol of `A0`: `a^2/2 (-lambda^2 - i lambda)`.
#[inline]
pub fn phi0(lambda: Complex64, a: f64) -> Complex64 {
    chi(lambda) * (a * a)
}

/// Symbol of `A1`: `1/2 (-lambda^2 - i lambda)`.
#[inline]
pub fn chi(lambda: Complex64) -> Complex64 {
    // -(lambda^2 + i lambda) / 2 = -lambda (lambda + i) / 2
    -lambda * (lambda + Complex64::i()) * 0.5
}

/// Norm of `e^{beta y}` on `(y0, inf)`: `e^{beta y0} / sqrt(-2 beta)`.
pub fn eta_norm(beta: f64, y0: f64) -> Result<f64> {
    if !(beta < 0.0) {
        return Err(Error::invalid(format!(
            "eta_norm needs beta < 0, got {beta}"
        )));
    }
    Ok(libm::exp(beta * y0) / libm::sqrt(-2.0 * beta))
}

/// Log-spot `y*` below which the series is not guaranteed to converge:
/// `(1/beta) log(a^2 sqrt(-2 beta) / eps)`.
///
/// Returns `-inf` when `eps = 0` (no restriction) and `+inf` when
/// `beta = 0 < eps` (the constant perturbation has infinite norm).
pub fn validity_threshold(params: &ModelParams) -> f64 {
    let ModelParams { a, eps, beta, .. } = *params;
    if eps == 0.0 {
        return f64::NEG_INFINITY;
    }
    if beta == 0.0 {
        return f64::INFINITY;
    }
    libm::log(a * a * libm::sqrt(-2.0 * beta) / eps) / beta
}

/// `eps <= a^2 / ||e_beta||_0` with the norm taken on `(y0, inf)`.
pub fn check_series_bound(params: &ModelParams, y0: f64) -> bool {
    if params.eps == 0.0 {
        return true;
    }
    match eta_norm(params.beta, y0) {
        Ok(norm) => params.eps <= params.a * params.a / norm,
        Err(_) => false,
    }
}
