//! First-order term for an arbitrary perturbation shape, by nested quadrature.
//!
//! ```text
//! u_1(t, y) = integral dlambda integral dmu (psi_lambda, h) chi_lambda
//!             * eta_hat(mu - lambda) / sqrt(2 pi) * psi_mu(y)
//!             * e^{t .}[phi_lambda, phi_mu]
//! ```
//!
//! This is slow and only meant as a cross-check of the collapsed pricer and
//! of Monte Carlo sensitivities. `lambda` runs on the payoff contour, `mu` on
//! its own horizontal line, which must keep `eta_hat(mu - lambda)` defined.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::divdiff::divided_diff_exp;
use crate::eta::FourierPerturbation;
use crate::model::{chi, phi0};
use crate::quadrature::{integrate, QuadConfig};
use crate::transforms::{payoff_coefficient, ContourSpec, Payoff};
use crate::{Error, Result};

/// Relative bound on the discarded imaginary part.
const IMAG_RESIDUAL_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralEtaConfig {
    /// `Im(lambda)`; `None` uses the payoff's default contour.
    pub lambda_offset: Option<f64>,
    /// `Im(mu)`.
    pub mu_offset: f64,
    /// Truncation of `Re(lambda)`; `None` derives it from `t` and `a`.
    pub lambda_half_width: Option<f64>,
    /// Truncation of `Re(mu)`; `None` reuses the `lambda` truncation.
    pub mu_half_width: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Evaluation budget of each one-dimensional pass.
    pub max_evals: usize,
}

impl Default for GeneralEtaConfig {
    fn default() -> Self {
        Self {
            lambda_offset: None,
            mu_offset: 0.0,
            lambda_half_width: None,
            mu_half_width: None,
            rel_tol: 1e-8,
            abs_tol: 1e-13,
            max_evals: 200_000,
        }
    }
}

fn default_half_width(a: f64, t: f64, rel_tol: f64) -> f64 {
    (libm::sqrt(2.0 * libm::log(1.0 / rel_tol) / (t * a * a)) + 10.0).max(40.0)
}

/// `u_1(t, y)` for base volatility `a` and perturbation `eta`.
pub fn u1_general_eta<E: FourierPerturbation>(
    a: f64,
    y: f64,
    eta: &E,
    t: f64,
    payoff: &Payoff,
    cfg: &GeneralEtaConfig,
) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("base volatility must be positive"));
    }
    if !y.is_finite() {
        return Err(Error::invalid("log-spot must be finite"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("maturity must be positive"));
    }
    if !(cfg.rel_tol > 0.0 && cfg.abs_tol >= 0.0 && cfg.max_evals > 0) {
        return Err(Error::invalid("quadrature settings must be positive"));
    }
    let c_lambda = cfg
        .lambda_offset
        .unwrap_or_else(|| ContourSpec::default_for(payoff).offset);
    if !payoff.admits_offset(c_lambda) {
        return Err(Error::ContourViolation { offset: c_lambda });
    }
    let c_mu = cfg.mu_offset;
    let w_lambda = cfg
        .lambda_half_width
        .unwrap_or_else(|| default_half_width(a, t, cfg.rel_tol));
    let w_mu = cfg.mu_half_width.unwrap_or(w_lambda);
    let quad = QuadConfig {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_evals: cfg.max_evals,
        ..QuadConfig::default()
    };
    let norm = 1.0 / libm::sqrt(2.0 * PI);

    // (psi_lambda, h) chi_lambda / sqrt(2 pi) on the lambda contour
    let lambda_factor = |lambda: Complex64| -> Complex64 {
        payoff_coefficient(payoff, lambda).expect("offset checked") * chi(lambda) * norm
    };

    let mut inner_error: Option<Error> = None;
    let outer = integrate(
        |xi_mu, out| {
            out[0] = Complex64::new(0.0, 0.0);
            if inner_error.is_some() {
                return;
            }
            let mu = Complex64::new(xi_mu, c_mu);
            let phi_mu = phi0(mu, a);
            let psi_mu = (Complex64::i() * mu * y).exp() * norm;
            let inner = integrate(
                |xi, o| {
                    let lambda = Complex64::new(xi, c_lambda);
                    let dd = divided_diff_exp(t, &[phi0(lambda, a), phi_mu]);
                    o[0] = lambda_factor(lambda) * eta.fourier(mu - lambda) * dd;
                },
                -w_lambda,
                w_lambda,
                1,
                &quad,
            );
            match inner {
                Ok(r) => out[0] = r.values[0] * psi_mu,
                Err(e) => inner_error = Some(e),
            }
        },
        -w_mu,
        w_mu,
        1,
        &quad,
    );
    if let Some(e) = inner_error {
        return Err(e);
    }
    let outer = outer?;
    let v = outer.values[0];
    let floor = (10.0 * cfg.abs_tol).max(2.0 * outer.error);
    if v.im.abs() > IMAG_RESIDUAL_REL * v.re.abs() + floor {
        return Err(Error::ImaginaryResidual {
            real: v.re,
            imag: v.im,
        });
    }
    Ok(v.re)
}
