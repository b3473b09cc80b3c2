//! Euler Monte Carlo for the log-price
//!
//! ```text
//! dY = -1/2 v(Y) dt + sqrt(v(Y)) dW,   v(y) = a^2 + eps * eta(y)
//! ```
//!
//! Paths are simulated in fixed-size chunks. Chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, and chunk sums are
//! reduced in chunk order, so an estimate depends only on the config and
//! never on how many workers ran it. Normals come from the ziggurat
//! `StandardNormal` of `rand_distr` 0.5; changing either crate's major
//! version changes the streams.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::eta::{ExpEta, Perturbation};
use crate::{Error, ModelParams, Result};

/// Paths per chunk (pairs count twice when antithetic).
pub const CHUNK_PATHS: usize = 2048;
pub const DEFAULT_SEED: u64 = 0x5eed_2012_0001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    /// Requested time step in years; the grid uses `ceil(t / dt)` equal steps.
    pub dt: f64,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 200_000,
            dt: 1e-3,
            seed: DEFAULT_SEED,
            antithetic: false,
        }
    }
}

impl McConfig {
    pub fn validate(&self, t: f64) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::invalid("Monte Carlo needs at least 100 paths"));
        }
        if !(self.dt > 0.0 && self.dt <= t) {
            return Err(Error::invalid("time step must lie in (0, t]"));
        }
        Ok(())
    }

    fn steps(&self, t: f64) -> usize {
        libm::ceil(t / self.dt - 1e-9).max(1.0) as usize
    }

    /// Independent samples: paths, or antithetic pairs.
    fn samples(&self) -> usize {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

/// Running sums for one output quantity.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: &Moments) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn mean_and_error(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let mean = self.sum / nf;
        let var = ((self.sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        (mean, libm::sqrt(var / nf))
    }
}

/// Local-vol dynamics driven by a perturbation shape.
struct Dynamics<'a, P: Perturbation> {
    a2: f64,
    eps: f64,
    eta: &'a P,
}

impl<P: Perturbation> Dynamics<'_, P> {
    #[inline]
    fn step(&self, y: f64, dt: f64, sqrt_dt: f64, z: f64) -> f64 {
        let v = self.a2 + self.eps * self.eta.value(y);
        y - 0.5 * v * dt + libm::sqrt(v) * sqrt_dt * z
    }
}

/// Runs `samples` paths (antithetic pairs when enabled) of chunk `chunk`.
///
/// `state` holds one or more coupled log-prices, all driven by the same
/// normals; `step` advances it by one Euler step and `finish` receives the
/// terminal state of each sample and of its antithetic partner.
fn run_chunk<S, F>(
    cfg: &McConfig,
    t: f64,
    chunk: usize,
    samples: usize,
    init: &[f64],
    step: S,
    mut finish: F,
) where
    S: Fn(&mut [f64], f64, f64, f64),
    F: FnMut(&[f64], Option<&[f64]>),
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chunk as u64);
    let steps = cfg.steps(t);
    let dt = t / steps as f64;
    let sqrt_dt = libm::sqrt(dt);
    let mut state = init.to_vec();
    let mut anti = init.to_vec();
    for _ in 0..samples {
        state.copy_from_slice(init);
        anti.copy_from_slice(init);
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            step(&mut state, dt, sqrt_dt, z);
            if cfg.antithetic {
                step(&mut anti, dt, sqrt_dt, -z);
            }
        }
        finish(&state, cfg.antithetic.then_some(&anti[..]));
    }
}

fn chunk_ranges(total: usize) -> Vec<(usize, usize)> {
    let per = if total == 0 { 0 } else { CHUNK_PATHS };
    let mut out = Vec::new();
    let mut start = 0;
    let mut c = 0;
    while start < total {
        let len = per.min(total - start);
        out.push((c, len));
        start += len;
        c += 1;
    }
    out
}

#[cfg(feature = "std")]
fn map_chunks<T, F>(chunks: &[(usize, usize)], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync,
{
    use rayon::prelude::*;
    chunks.par_iter().map(|&(c, n)| f(c, n)).collect()
}

#[cfg(not(feature = "std"))]
fn map_chunks<T, F>(chunks: &[(usize, usize)], f: F) -> Vec<T>
where
    F: Fn(usize, usize) -> T,
{
    chunks.iter().map(|&(c, n)| f(c, n)).collect()
}

/// What one output column averages over the terminal log-price.
#[derive(Debug, Clone, Copy)]
enum Claim {
    Call {
        strike: f64,
    },
    /// `(K - S)^+ + S_0 - K`, the call through put-call parity.
    ParityPut {
        strike: f64,
        spot: f64,
    },
    Forward,
}

impl Claim {
    /// Call on log-strike `k`, estimated from the out-of-the-money side.
    fn call(k: f64, y: f64) -> Self {
        if k < y {
            Claim::ParityPut {
                strike: libm::exp(k),
                spot: libm::exp(y),
            }
        } else {
            Claim::Call {
                strike: libm::exp(k),
            }
        }
    }

    #[inline]
    fn payoff(&self, s: f64) -> f64 {
        match *self {
            Claim::Call { strike } => (s - strike).max(0.0),
            Claim::ParityPut { strike, spot } => (strike - s).max(0.0) + (spot - strike),
            Claim::Forward => s,
        }
    }
}

fn simulate_claims<P: Perturbation>(
    a: f64,
    eps: f64,
    eta: &P,
    y: f64,
    t: f64,
    claims: &[Claim],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    cfg.validate(t)?;
    let dynamics = Dynamics {
        a2: a * a,
        eps,
        eta,
    };
    let chunks = chunk_ranges(cfg.samples());

    let per_chunk = map_chunks(&chunks, |chunk, samples| {
        let mut moments = vec![Moments::default(); claims.len()];
        run_chunk(
            cfg,
            t,
            chunk,
            samples,
            &[y],
            |s, dt, sqrt_dt, z| s[0] = dynamics.step(s[0], dt, sqrt_dt, z),
            |s, anti| {
                let s1 = libm::exp(s[0]);
                let s2 = anti.map(|v| libm::exp(v[0]));
                for (m, claim) in moments.iter_mut().zip(claims) {
                    let mut pay = claim.payoff(s1);
                    if let Some(s2) = s2 {
                        pay = 0.5 * (pay + claim.payoff(s2));
                    }
                    m.push(pay);
                }
            },
        );
        moments
    });

    let n = cfg.samples();
    let mut total = vec![Moments::default(); claims.len()];
    for chunk in &per_chunk {
        for (acc, m) in total.iter_mut().zip(chunk) {
            acc.merge(m);
        }
    }
    Ok(total
        .iter()
        .map(|m| {
            let (price, std_error) = m.mean_and_error(n);
            McEstimate {
                price,
                std_error,
                n_paths: cfg.n_paths,
                dt: cfg.dt,
                seed: cfg.seed,
            }
        })
        .collect())
}

/// Call prices for every log-strike in `ks` from one set of paths, for a
/// general perturbation shape.
///
/// Strikes below the spot are priced as puts plus the parity term
/// `e^y - e^k`. The log-Euler step keeps `e^Y` an exact martingale, so this
/// is unbiased and avoids the large variance of deep in-the-money calls.
pub fn simulate_calls_with<P: Perturbation>(
    a: f64,
    eps: f64,
    eta: &P,
    y: f64,
    t: f64,
    ks: &[f64],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    if ks.iter().any(|k| k.is_nan()) {
        return Err(Error::invalid("log-strike must not be NaN"));
    }
    let claims: Vec<Claim> = ks.iter().map(|&k| Claim::call(k, y)).collect();
    simulate_claims(a, eps, eta, y, t, &claims, cfg)
}

/// Call prices for the `e^{beta y}` model.
pub fn simulate_calls(
    params: &ModelParams,
    t: f64,
    ks: &[f64],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    let eta = ExpEta {
        beta: params.beta(),
    };
    simulate_calls_with(params.a(), params.eps(), &eta, params.y(), t, ks, cfg)
}

pub fn simulate_call(params: &ModelParams, t: f64, k: f64, cfg: &McConfig) -> Result<McEstimate> {
    Ok(simulate_calls(params, t, &[k], cfg)?[0])
}

/// Plain average of `e^{Y_t}`; equals `e^y` up to noise for a martingale.
pub fn simulate_forward(params: &ModelParams, t: f64, cfg: &McConfig) -> Result<McEstimate> {
    let eta = ExpEta {
        beta: params.beta(),
    };
    Ok(simulate_claims(
        params.a(),
        params.eps(),
        &eta,
        params.y(),
        t,
        &[Claim::Forward],
        cfg,
    )?[0])
}

/// `(C(eps + d_eps) - C(eps)) / d_eps` with both legs driven by the same normals
/// (out-of-the-money side, as in [`simulate_calls_with`]).
#[allow(clippy::too_many_arguments)]
pub fn eps_sensitivity_with<P: Perturbation>(
    a: f64,
    eps: f64,
    eta: &P,
    y: f64,
    t: f64,
    k: f64,
    cfg: &McConfig,
    d_eps: f64,
) -> Result<McEstimate> {
    cfg.validate(t)?;
    if !(d_eps > 0.0) {
        return Err(Error::invalid("d_eps must be positive"));
    }
    if eps > 0.0 && d_eps > eps {
        return Err(Error::invalid("d_eps must not exceed eps"));
    }
    let base = Dynamics {
        a2: a * a,
        eps,
        eta,
    };
    let bumped = Dynamics {
        a2: a * a,
        eps: eps + d_eps,
        eta,
    };
    if k.is_nan() {
        return Err(Error::invalid("log-strike must not be NaN"));
    }
    let claim = Claim::call(k, y);
    let chunks = chunk_ranges(cfg.samples());

    let per_chunk = map_chunks(&chunks, |chunk, samples| {
        let mut m = Moments::default();
        let diff =
            |s: &[f64]| (claim.payoff(libm::exp(s[1])) - claim.payoff(libm::exp(s[0]))) / d_eps;
        run_chunk(
            cfg,
            t,
            chunk,
            samples,
            &[y, y],
            |s, dt, sqrt_dt, z| {
                s[0] = base.step(s[0], dt, sqrt_dt, z);
                s[1] = bumped.step(s[1], dt, sqrt_dt, z);
            },
            |s, anti| {
                let mut d = diff(s);
                if let Some(other) = anti {
                    d = 0.5 * (d + diff(other));
                }
                m.push(d);
            },
        );
        m
    });

    let mut total = Moments::default();
    for m in &per_chunk {
        total.merge(m);
    }
    let (price, std_error) = total.mean_and_error(cfg.samples());
    Ok(McEstimate {
        price,
        std_error,
        n_paths: cfg.n_paths,
        dt: cfg.dt,
        seed: cfg.seed,
    })
}

/// Common-random-numbers `eps` sensitivity of a call in the `e^{beta y}` model.
pub fn eps_sensitivity(
    params: &ModelParams,
    t: f64,
    k: f64,
    cfg: &McConfig,
    d_eps: f64,
) -> Result<McEstimate> {
    let eta = ExpEta {
        beta: params.beta(),
    };
    eps_sensitivity_with(params.a(), params.eps(), &eta, params.y(), t, k, cfg, d_eps)
}
