//! Implied-volatility expansion `sigma^eps = sum_k eps^k sigma_k`.
//!
//! Matching powers of `eps` in `u^BS(sigma_0 + delta) = sum_k eps^k u_k`
//! with `sigma_0 = a` gives, for `k >= 1`,
//!
//! ```text
//! sigma_k = ( u_k - sum_{m=2}^{k} 1/m! (sum_{j_1+..+j_m = k} prod_i sigma_{j_i}) d^m u^BS(a) ) / d u^BS(a)
//! ```
//!
//! where the inner sum runs over ordered compositions of `k` into `m`
//! positive parts. The right-hand side only uses `sigma_j`, `j < k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::black_scholes::{bs_sigma_derivatives, implied_vol, BsPoint, MAX_SIGMA_ORDER};
use crate::pricer::{price, PriceSeries};
use crate::transforms::{ContourSpec, Payoff};
use crate::{Error, ModelParams, Result};

/// Below this vega the expansion is numerically meaningless.
pub const VEGA_FLOOR: f64 = 1e-14;
/// Series order used for the price feeding the expansion and the reference.
pub const REFERENCE_ORDER: usize = 10;

/// Ordered compositions of `k`, grouped by number of parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionTable {
    pub k: usize,
    /// `by_parts[m - 1]` lists the compositions with `m` parts.
    pub by_parts: Vec<Vec<Vec<usize>>>,
}

impl CompositionTable {
    pub fn len(&self) -> usize {
        self.by_parts.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_parts(&self, m: usize) -> &[Vec<usize>] {
        if m == 0 || m > self.by_parts.len() {
            &[]
        } else {
            &self.by_parts[m - 1]
        }
    }
}

pub fn compositions(k: usize) -> Result<CompositionTable> {
    if k == 0 || k > MAX_SIGMA_ORDER {
        return Err(Error::UnsupportedOrder {
            order: k,
            max: MAX_SIGMA_ORDER,
        });
    }
    let mut by_parts = vec![Vec::new(); k];
    // Bit i of `mask` set means a cut after position i + 1.
    for mask in 0u32..(1 << (k - 1)) {
        let mut parts = Vec::with_capacity(k);
        let mut run = 1;
        for i in 0..k - 1 {
            if mask & (1 << i) != 0 {
                parts.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        parts.push(run);
        by_parts[parts.len() - 1].push(parts);
    }
    for group in &mut by_parts {
        group.sort_by(|a, b| b.cmp(a));
    }
    Ok(CompositionTable { k, by_parts })
}

/// Composition tables for `k = 1..=MAX_SIGMA_ORDER`, built once and shared.
#[derive(Debug, Clone)]
pub struct CompositionCache {
    tables: Vec<CompositionTable>,
}

impl CompositionCache {
    pub fn new() -> Self {
        let tables = (1..=MAX_SIGMA_ORDER)
            .map(|k| compositions(k).expect("k within cap"))
            .collect();
        Self { tables }
    }

    pub fn get(&self, k: usize) -> Option<&CompositionTable> {
        k.checked_sub(1).and_then(|i| self.tables.get(i))
    }
}

impl Default for CompositionCache {
    fn default() -> Self {
        Self::new()
    }
}

/// `[sigma_0, ..., sigma_n]` from eps-free price coefficients `u_0..u_n`
/// and `d^m u^BS(sigma_0)`, `m = 1..=n`.
pub fn sigma_recursion(
    sigma0: f64,
    coefficients: &[f64],
    bs_derivs: &[f64],
    cache: &CompositionCache,
) -> Result<Vec<f64>> {
    let n = coefficients.len().saturating_sub(1);
    if n > MAX_SIGMA_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n,
            max: MAX_SIGMA_ORDER,
        });
    }
    if bs_derivs.len() < n {
        return Err(Error::invalid(
            "need one Black-Scholes derivative per order",
        ));
    }
    let mut sigmas = Vec::with_capacity(n + 1);
    sigmas.push(sigma0);
    if n == 0 {
        return Ok(sigmas);
    }
    let vega = bs_derivs[0];
    if !(vega.abs() >= VEGA_FLOOR) {
        return Err(Error::VegaUnderflow { vega });
    }
    for k in 1..=n {
        let table = cache.get(k).expect("k within cap");
        let mut correction = 0.0;
        let mut inv_fact = 1.0;
        for m in 2..=k {
            inv_fact /= m as f64;
            let sum: f64 = table
                .with_parts(m)
                .iter()
                .map(|parts| parts.iter().map(|&j| sigmas[j]).product::<f64>())
                .sum();
            correction += inv_fact * sum * bs_derivs[m - 1];
        }
        sigmas.push((coefficients[k] - correction) / vega);
    }
    Ok(sigmas)
}

/// `[sigma_0 = a, sigma_1, ..., sigma_n]` at log-strike `k`, from a price
/// series computed at the same `(t, k)` with order at least `n`.
pub fn sigma_coefficients(
    params: &ModelParams,
    t: f64,
    k: f64,
    n: usize,
    series: &PriceSeries,
) -> Result<Vec<f64>> {
    sigma_coefficients_cached(params, t, k, n, series, &CompositionCache::new())
}

fn sigma_coefficients_cached(
    params: &ModelParams,
    t: f64,
    k: f64,
    n: usize,
    series: &PriceSeries,
    cache: &CompositionCache,
) -> Result<Vec<f64>> {
    if n > MAX_SIGMA_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n,
            max: MAX_SIGMA_ORDER,
        });
    }
    if series.order < n {
        return Err(Error::invalid(
            "price series order is below the requested smile order",
        ));
    }
    match series.payoff {
        Payoff::Call { k: sk } if sk == k && series.t == t => {}
        _ => {
            return Err(Error::invalid(
                "price series was computed for another option",
            ))
        }
    }
    let a = params.a();
    if params.eps() == 0.0 {
        let mut out = vec![0.0; n + 1];
        out[0] = a;
        return Ok(out);
    }
    let point = BsPoint::new(a, t, params.y(), k)?;
    let derivs = if n > 0 {
        bs_sigma_derivatives(&point, n)?
    } else {
        Vec::new()
    };
    let coefficients = (0..=n)
        .map(|m| series.coefficient(m, params.eps()))
        .collect::<Result<Vec<f64>>>()?;
    sigma_recursion(a, &coefficients, &derivs, cache)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmilePoint {
    pub k: f64,
    /// `(k - y) / t`.
    pub lmmr: f64,
    /// `sigma^(0), ..., sigma^(n)` with `sigma^(m) = sum_{j<=m} eps^j sigma_j`.
    pub sigmas: Vec<f64>,
    /// Implied volatility of the full series price, when requested.
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmileCurve {
    pub t: f64,
    pub y: f64,
    pub order: usize,
    pub points: Vec<SmilePoint>,
    /// Strikes whose computation failed, with the reason.
    pub failures: Vec<(f64, Error)>,
}

pub fn smile_point(
    params: &ModelParams,
    t: f64,
    k: f64,
    n: usize,
    contour: &ContourSpec,
    with_reference: bool,
    cache: &CompositionCache,
) -> Result<SmilePoint> {
    let y = params.y();
    let payoff = Payoff::call(k)?;
    let series = price(params, &payoff, t, n.max(REFERENCE_ORDER), contour)?;
    let coeffs = sigma_coefficients_cached(params, t, k, n, &series, cache)?;
    let eps = params.eps();
    let mut sigmas = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    let mut pow = 1.0;
    for (j, c) in coeffs.iter().enumerate() {
        if j > 0 {
            pow *= eps;
        }
        acc += pow * c;
        sigmas.push(acc);
    }
    let reference = if with_reference {
        Some(implied_vol(series.total, t, y, k)?)
    } else {
        None
    };
    Ok(SmilePoint {
        k,
        lmmr: (k - y) / t,
        sigmas,
        reference,
    })
}

/// Truncated smiles `sigma^(0..=n)` for each log-strike in `k_grid`.
/// Failures are per strike: the curve keeps every point that succeeded.
pub fn smile_curve(
    params: &ModelParams,
    t: f64,
    k_grid: &[f64],
    n: usize,
    contour: &ContourSpec,
    with_reference: bool,
) -> Result<SmileCurve> {
    if n > MAX_SIGMA_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n,
            max: MAX_SIGMA_ORDER,
        });
    }
    if !(t > 0.0) {
        return Err(Error::invalid("maturity must be positive"));
    }
    let cache = CompositionCache::new();
    let mut points = Vec::with_capacity(k_grid.len());
    let mut failures = Vec::new();
    for &k in k_grid {
        match smile_point(params, t, k, n, contour, with_reference, &cache) {
            Ok(p) => points.push(p),
            Err(e) => failures.push((k, e)),
        }
    }
    Ok(SmileCurve {
        t,
        y: params.y(),
        order: n,
        points,
        failures,
    })
}
