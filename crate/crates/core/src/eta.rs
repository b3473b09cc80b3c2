//! Perturbation shapes `eta` entering the local variance `a^2 + eps * eta(y)`.
//!
//! [`Perturbation`] is all the Monte Carlo simulator needs. The general
//! first-order cross-check additionally needs the Fourier transform
//!
//! ```text
//! eta_hat(w) = 1/sqrt(2 pi) * integral e^{-i w x} eta(x) dx
//! ```
//!
//! at complex `w`, provided by [`FourierPerturbation`].

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

pub trait Perturbation: Sync {
    fn value(&self, y: f64) -> f64;
}

pub trait FourierPerturbation: Perturbation {
    fn fourier(&self, omega: Complex64) -> Complex64;
}

/// `eta(y) = e^{beta y}`, the CEV-like choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpEta {
    pub beta: f64,
}

impl Perturbation for ExpEta {
    #[inline]
    fn value(&self, y: f64) -> f64 {
        libm::exp(self.beta * y)
    }
}

/// `amplitude * exp(-(y - center)^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Perturbation for GaussianBump {
    #[inline]
    fn value(&self, y: f64) -> f64 {
        let z = (y - self.center) / self.width;
        self.amplitude * libm::exp(-0.5 * z * z)
    }
}

impl FourierPerturbation for GaussianBump {
    fn fourier(&self, omega: Complex64) -> Complex64 {
        let w = self.width;
        let arg = -Complex64::i() * omega * self.center - omega * omega * (0.5 * w * w);
        arg.exp() * (self.amplitude * w)
    }
}

/// `e^{beta y}` restricted to `y > floor`.
///
/// Its transform only exists for `Im(w) < -beta`; callers must keep the
/// inner contour below that line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedExp {
    pub beta: f64,
    pub floor: f64,
}

impl Perturbation for TruncatedExp {
    #[inline]
    fn value(&self, y: f64) -> f64 {
        if y > self.floor {
            libm::exp(self.beta * y)
        } else {
            0.0
        }
    }
}

impl FourierPerturbation for TruncatedExp {
    fn fourier(&self, omega: Complex64) -> Complex64 {
        let i = Complex64::i();
        let rate = Complex64::new(self.beta, 0.0) - i * omega;
        (rate * self.floor).exp() / ((i * omega - self.beta) * libm::sqrt(2.0 * PI))
    }
}

/// `eta` given by samples on a uniform grid; linear interpolation between
/// samples, zero outside. The transform is the trapezoid sum, which is
/// spectrally accurate for smooth samples that decay to zero at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEta {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl SampledEta {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite() && x0.is_finite()) {
            return Err(Error::invalid("sample grid needs finite x0 and dx > 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("eta samples must be finite"));
        }
        Ok(Self { x0, dx, values })
    }

    /// Samples `f` at `n` points starting at `x0`.
    pub fn from_fn(x0: f64, dx: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|j| f(x0 + dx * j as f64)).collect();
        Self::new(x0, dx, values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

impl Perturbation for SampledEta {
    fn value(&self, y: f64) -> f64 {
        let s = (y - self.x0) / self.dx;
        if !(s >= 0.0) || self.values.is_empty() {
            return 0.0;
        }
        let j = s as usize;
        if j + 1 >= self.values.len() {
            return if j + 1 == self.values.len() && s == j as f64 {
                self.values[j]
            } else {
                0.0
            };
        }
        let frac = s - j as f64;
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }
}

impl FourierPerturbation for SampledEta {
    fn fourier(&self, omega: Complex64) -> Complex64 {
        let n = self.values.len();
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        // e^{-i w x_j} by recurrence: e^{-i w x0} * r^j with r = e^{-i w dx}
        let minus_i = -Complex64::i();
        let mut phase = (minus_i * omega * self.x0).exp();
        let step = (minus_i * omega * self.dx).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in self.values.iter().enumerate() {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += phase * (v * w);
            phase *= step;
        }
        acc * (self.dx / libm::sqrt(2.0 * PI))
    }
}
