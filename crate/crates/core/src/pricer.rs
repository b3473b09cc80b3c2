//! Truncated series price `u^(N) = sum_{n<=N} eps^n u_n` as one contour integral.
//!
//! With `eta = e^{beta y}` the operator `e^{beta y} A1` maps `psi_lambda` to
//! `chi_lambda psi_{lambda - i beta}`, so the `n`-th term only involves the
//! shifted family `lambda_k = lambda - i k beta`, `k = 0..n`:
//!
//! ```text
//! u_n(t, y) = e^{n beta y} * integral dlambda (psi_lambda, h) psi_lambda(y)
//!             * e^{t .}[phi_{lambda_0}, ..., phi_{lambda_n}]
//!             * prod_{k<n} chi_{lambda_k}
//! ```
//!
//! All orders are integrated together on one set of nodes.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::divdiff::divided_diff_exp_prefixes;
use crate::model::{chi, phi0, SeriesDiagnostics, DEFAULT_NORM_OFFSET};
use crate::quadrature::{integrate, QuadConfig};
use crate::transforms::{nudge_offset, ContourSpec, Payoff};
use crate::{Error, ModelParams, Result};

/// Relative bound on the discarded imaginary part of a price.
pub const IMAG_RESIDUAL_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub t: f64,
    pub payoff: Payoff,
    pub order: usize,
    /// `eps^n u_n` for `n = 0..=order`.
    pub terms: Vec<f64>,
    /// `terms[0] + terms[1] + ... + terms[order]`, summed in that order.
    pub total: f64,
    /// `|terms[order]| / |total|`.
    pub tail_proxy: f64,
    /// Contour offset actually used (after any nudge).
    pub offset: f64,
    pub half_width: f64,
    pub evaluations: usize,
    pub diagnostics: SeriesDiagnostics,
}

impl PriceSeries {
    /// `u_0 + eps u_1 + ... + eps^m u_m`.
    pub fn partial_sum(&self, m: usize) -> f64 {
        self.terms[..=m.min(self.order)].iter().sum()
    }

    /// The `eps`-free coefficient `u_n = terms[n] / eps^n`; needs `eps > 0`
    /// unless `n = 0`.
    pub fn coefficient(&self, n: usize, eps: f64) -> Result<f64> {
        if n > self.order {
            return Err(Error::UnsupportedOrder {
                order: n,
                max: self.order,
            });
        }
        if n == 0 {
            return Ok(self.terms[0]);
        }
        if !(eps > 0.0) {
            return Err(Error::invalid("eps-free coefficients need eps > 0"));
        }
        Ok(self.terms[n] / libm::pow(eps, n as f64))
    }
}

/// Transition-density approximations `p^(0..=n)` on a grid of log-prices.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub t: f64,
    pub y0: f64,
    pub y_values: Vec<f64>,
    /// Row `m` holds the cumulative sum `p_0 + eps p_1 + ... + eps^m p_m`.
    pub p_orders: Vec<Vec<f64>>,
}

/// Truncation of `Re(lambda)` used when the contour does not fix one.
pub fn auto_half_width(params: &ModelParams, t: f64, order: usize, rel_tol: f64) -> f64 {
    let a2 = params.a() * params.a();
    let gauss = libm::sqrt(2.0 * libm::log(1.0 / rel_tol) / (t * a2));
    (gauss + (order as f64 * params.beta()).abs() + 10.0).max(40.0)
}

/// Grows `start` until every order's integrand is below `abs_tol` at both
/// ends of the contour. The Gaussian decay in `auto_half_width` can be
/// overtaken by the polynomial growth of `prod chi` at high orders.
fn widen_half_width(integrand: &mut Integrand<'_>, offset: f64, start: f64, abs_tol: f64) -> f64 {
    let mut out = vec![Complex64::new(0.0, 0.0); integrand.order + 1];
    let mut w = start;
    for _ in 0..MAX_WIDENINGS {
        let mut edge: f64 = 0.0;
        for xi in [-w, w] {
            integrand.eval(Complex64::new(xi, offset), &mut out);
            edge = out.iter().fold(edge, |m, v| m.max(v.norm()));
        }
        if edge * w <= abs_tol {
            break;
        }
        w *= 1.25;
    }
    w
}

const MAX_WIDENINGS: usize = 32;

/// Fixed per-integrand data, hoisted out of the quadrature loop.
struct Integrand<'a> {
    params: &'a ModelParams,
    payoff: Payoff,
    t: f64,
    order: usize,
    nodes: Vec<Complex64>,
    dd: Vec<Complex64>,
}

impl<'a> Integrand<'a> {
    fn new(params: &'a ModelParams, payoff: Payoff, t: f64, order: usize) -> Self {
        Self {
            params,
            payoff,
            t,
            order,
            nodes: vec![Complex64::new(0.0, 0.0); order + 1],
            dd: vec![Complex64::new(0.0, 0.0); order + 1],
        }
    }

    /// `(psi_lambda, h) psi_lambda(y)` evaluated as a single exponential.
    fn spectral_factor(&self, lambda: Complex64) -> Complex64 {
        let y = self.params.y();
        match self.payoff {
            Payoff::Call { k } => {
                let i = Complex64::i();
                let phase = (Complex64::new(k, 0.0) + i * lambda * (y - k)).exp();
                -phase / (lambda * (lambda + i) * (2.0 * PI))
            }
            Payoff::Dirac { y_target } => {
                (Complex64::i() * lambda * (y - y_target)).exp() / (2.0 * PI)
            }
        }
    }

    fn eval(&mut self, lambda: Complex64, out: &mut [Complex64]) {
        let p = self.params;
        let a = p.a();
        let shift = Complex64::new(0.0, -p.beta());
        for (k, node) in self.nodes.iter_mut().enumerate() {
            *node = phi0(lambda + shift * k as f64, a);
        }
        divided_diff_exp_prefixes(self.t, &self.nodes, &mut self.dd);

        let base = self.spectral_factor(lambda);
        let step = p.eps() * libm::exp(p.beta() * p.y());
        let mut weight = 1.0;
        let mut chi_prod = Complex64::new(1.0, 0.0);
        for n in 0..=self.order {
            out[n] = base * self.dd[n] * chi_prod * weight;
            if n < self.order {
                chi_prod *= chi(lambda + shift * n as f64);
                weight *= step;
            }
        }
    }
}

/// The integrand of `u^(N)` at one contour point (sum over orders).
pub fn series_integrand(
    params: &ModelParams,
    payoff: &Payoff,
    t: f64,
    order: usize,
    lambda: Complex64,
) -> Result<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    series_integrand_terms(params, payoff, t, order, lambda, &mut out)?;
    Ok(out.iter().sum())
}

/// Per-order integrand values `eps^n e^{n beta y} (...)` at one contour point.
pub fn series_integrand_terms(
    params: &ModelParams,
    payoff: &Payoff,
    t: f64,
    order: usize,
    lambda: Complex64,
    out: &mut [Complex64],
) -> Result<()> {
    if out.len() != order + 1 {
        return Err(Error::invalid("output slice must hold order + 1 values"));
    }
    if !payoff.admits_offset(lambda.im) {
        return Err(Error::ContourViolation { offset: lambda.im });
    }
    Integrand::new(params, *payoff, t, order).eval(lambda, out);
    Ok(())
}

/// Prices `payoff` at maturity `t` from the spot stored in `params`, keeping
/// every order up to `order`.
pub fn price(
    params: &ModelParams,
    payoff: &Payoff,
    t: f64,
    order: usize,
    contour: &ContourSpec,
) -> Result<PriceSeries> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("maturity must be positive"));
    }
    contour.validate(payoff)?;

    let offset = if contour.auto_nudge {
        nudge_offset(contour.offset, order, params.beta())
    } else {
        contour.offset
    };
    let mut integrand = Integrand::new(params, *payoff, t, order);
    let half_width = match contour.half_width {
        Some(w) => w,
        None => widen_half_width(
            &mut integrand,
            offset,
            auto_half_width(params, t, order, contour.rel_tol),
            contour.abs_tol,
        ),
    };
    let cfg = QuadConfig {
        rel_tol: contour.rel_tol,
        abs_tol: contour.abs_tol,
        max_evals: contour.max_nodes,
        ..QuadConfig::default()
    };

    let result = integrate(
        |xi, out| integrand.eval(Complex64::new(xi, offset), out),
        -half_width,
        half_width,
        order + 1,
        &cfg,
    )?;

    let mut total = Complex64::new(0.0, 0.0);
    for v in &result.values {
        total += v;
    }
    let floor = (10.0 * contour.abs_tol).max(2.0 * result.error);
    if total.im.abs() > IMAG_RESIDUAL_REL * total.re.abs() + floor {
        return Err(Error::ImaginaryResidual {
            real: total.re,
            imag: total.im,
        });
    }

    let terms: Vec<f64> = result.values.iter().map(|v| v.re).collect();
    let total: f64 = terms.iter().sum();
    let last = terms[order].abs();
    let tail_proxy = if total != 0.0 {
        last / total.abs()
    } else if last == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    Ok(PriceSeries {
        t,
        payoff: *payoff,
        order,
        terms,
        total,
        tail_proxy,
        offset,
        half_width,
        evaluations: result.evals,
        diagnostics: params.diagnostics(DEFAULT_NORM_OFFSET),
    })
}

/// `p^(0..=n)(t, y; y0)` on `y_grid` by pricing Dirac payoffs from the spot `y0`.
pub fn density(
    params: &ModelParams,
    t: f64,
    y0: f64,
    n: usize,
    y_grid: &[f64],
    contour: &ContourSpec,
) -> Result<DensityGrid> {
    if y_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("density grid must be strictly increasing"));
    }
    let from = params.with_y(y0)?;
    let mut p_orders = vec![Vec::with_capacity(y_grid.len()); n + 1];
    for &y in y_grid {
        let series = price(&from, &Payoff::dirac(y)?, t, n, contour)?;
        let mut acc = 0.0;
        for (row, term) in p_orders.iter_mut().zip(&series.terms) {
            acc += term;
            row.push(acc);
        }
    }
    Ok(DensityGrid {
        t,
        y0,
        y_values: y_grid.to_vec(),
        p_orders,
    })
}
