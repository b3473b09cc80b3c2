//! Black-Scholes call in log coordinates (zero rates, no dividends).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::{Error, Result};

/// Highest supported `d^n/dsigma^n`.
pub const MAX_SIGMA_ORDER: usize = 8;

const SIGMA_LO: f64 = 1e-6;
const SIGMA_HI: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsPoint {
    pub sigma: f64,
    pub t: f64,
    /// Log-spot.
    pub y: f64,
    /// Log-strike.
    pub k: f64,
}

impl BsPoint {
    pub fn new(sigma: f64, t: f64, y: f64, k: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!(
                "maturity must be positive, got {t}"
            )));
        }
        if !(y.is_finite() && !k.is_nan()) {
            return Err(Error::invalid("log-spot must be finite"));
        }
        Ok(Self { sigma, t, y, k })
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    fn d1_d2(&self) -> (f64, f64) {
        let s = self.sigma * libm::sqrt(self.t);
        let d1 = (self.y - self.k) / s + 0.5 * s;
        (d1, d1 - s)
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// `e^y N(d1) - e^k N(d2)`.
pub fn bs_price(p: &BsPoint) -> f64 {
    let (d1, d2) = p.d1_d2();
    let v = libm::exp(p.y) * norm_cdf(d1) - libm::exp(p.k) * norm_cdf(d2);
    v.max(0.0)
}

/// Vega `e^y phi(d1) sqrt(t)`.
pub fn bs_vega(p: &BsPoint) -> f64 {
    let (d1, _) = p.d1_d2();
    libm::exp(p.y) * norm_pdf(d1) * libm::sqrt(p.t)
}

/// `d^n u / dsigma^n` for `n = 1..=MAX_SIGMA_ORDER`.
pub fn bs_sigma_derivative(p: &BsPoint, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("derivative order must be at least 1"));
    }
    Ok(bs_sigma_derivatives(p, n)?[n - 1])
}

/// `[d u/dsigma, ..., d^n u/dsigma^n]`.
///
/// With `x = y - k`, vega is `C exp(g(sigma))` where
/// `g(sigma) = -A sigma^{-2} - B sigma^2`, `A = x^2 / (2t)`, `B = t / 8` and
/// `C` does not depend on `sigma`. Writing `d^m vega = vega * q_m`, the
/// Leibniz rule on `(e^g)' = g' e^g` gives
/// `q_{m+1} = sum_{j=0}^{m} binom(m, j) g^{(j+1)} q_{m-j}` with `q_0 = 1`.
pub fn bs_sigma_derivatives(p: &BsPoint, n: usize) -> Result<Vec<f64>> {
    if n > MAX_SIGMA_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n,
            max: MAX_SIGMA_ORDER,
        });
    }
    let vega = bs_vega(p);
    let s = p.sigma;
    let x = p.y - p.k;
    let a = x * x / (2.0 * p.t);
    let b = p.t / 8.0;

    // g^{(j)} for j = 1..=n
    let mut g = vec![0.0; n + 1];
    for (j, gj) in g.iter_mut().enumerate().skip(1) {
        // d^j sigma^{-2} = (-1)^j (j+1)! sigma^{-2-j}
        let mut fact = 1.0;
        for m in 2..=j + 1 {
            fact *= m as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let inv = sign * fact * libm::pow(s, -2.0 - j as f64);
        let sq = match j {
            1 => 2.0 * s,
            2 => 2.0,
            _ => 0.0,
        };
        *gj = -a * inv - b * sq;
    }

    let mut q = vec![0.0; n];
    q[0] = 1.0;
    for m in 0..n.saturating_sub(1) {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=m {
            acc += binom * g[j + 1] * q[m - j];
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        q[m + 1] = acc;
    }
    Ok(q.into_iter().map(|qm| vega * qm).collect())
}

/// Black-Scholes volatility reproducing `price`, by Newton steps on vega
/// kept inside a shrinking bracket of `[1e-6, 5]`, bisecting whenever a
/// Newton step leaves the bracket.
pub fn implied_vol(price: f64, t: f64, y: f64, k: f64) -> Result<f64> {
    let upper = libm::exp(y);
    let lower = (upper - libm::exp(k)).max(0.0);
    if !(price > lower && price < upper) {
        return Err(Error::PriceOutOfBounds {
            price,
            lower,
            upper,
        });
    }
    let point = BsPoint::new(0.2, t, y, k)?;
    let tol = 1e-12 * upper;
    let f = |s: f64| bs_price(&point.with_sigma(s)) - price;

    let (mut lo, mut hi) = (SIGMA_LO, SIGMA_HI);
    if f(hi) < 0.0 || f(lo) > tol {
        return Err(Error::NoConvergence);
    }
    // Start from the at-the-money-ish guess that matches the time value.
    let mut s = libm::sqrt(2.0 * (y - k).abs() / t).max(0.2).min(hi);
    for _ in 0..200 {
        let fs = f(s);
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let vega = bs_vega(&point.with_sigma(s));
        let mut next = if vega > 0.0 { s - fs / vega } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - s).abs();
        s = next;
        if step <= 4.0 * f64::EPSILON * s || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    if f(s).abs() <= tol {
        Ok(s)
    } else {
        Err(Error::NoConvergence)
    }
}
