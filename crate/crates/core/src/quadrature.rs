//! Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued complex integrands.
//!
//! The interval is split into uniform starting panels, a global scale is
//! estimated from them, and each panel is bisected depth-first until its
//! share of the tolerance is met. Accepted panels are summed left to right,
//! so the result is a deterministic function of the inputs. All components
//! share the same nodes: the sum of the component integrals equals the
//! integral of the component sum exactly.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd Kronrod abscissae 1, 3, 5 and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const EVALS_PER_PANEL: usize = 15;
const MAX_DEPTH: usize = 60;
const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    pub initial_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_evals: 4_000_000,
            initial_panels: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub values: Vec<Complex64>,
    /// Sum over accepted panels of `sum_j |K15_j - G7_j|`.
    pub error: f64,
    pub evals: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
    depth: usize,
    kronrod: Vec<Complex64>,
    error: f64,
    /// Kronrod estimate of `integral sum_j |f_j|` over the panel.
    mass: f64,
}

impl Panel {
    /// Differences this small are rounding noise and cannot be refined away.
    fn roundoff_limited(&self) -> bool {
        self.error <= ROUNDOFF * self.mass
    }
}

/// Integrates `f(x, out)` (which must fill `out`, length `dim`) over `[lo, hi]`.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, dim: usize, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [Complex64]),
{
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::invalid(
            "integration bounds must be finite with hi > lo",
        ));
    }
    if dim == 0 {
        return Err(Error::invalid("integrand dimension must be positive"));
    }
    let panels = cfg.initial_panels.max(1);
    let mut scratch = Scratch::new(dim);
    let mut evals = 0usize;

    let width = (hi - lo) / panels as f64;
    let mut initial = Vec::with_capacity(panels);
    let mut scale = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..panels {
        let a = lo + width * j as f64;
        let b = if j + 1 == panels { hi } else { a + width };
        let p = gk15(&mut f, a, b, 0, &mut scratch);
        evals += EVALS_PER_PANEL;
        for (s, v) in scale.iter_mut().zip(&p.kronrod) {
            *s += v;
        }
        initial.push(p);
    }
    let magnitude: f64 = scale.iter().map(|v| v.norm()).sum();
    let tol = (cfg.rel_tol * magnitude).max(cfg.abs_tol);
    let total_width = hi - lo;

    let mut values = vec![Complex64::new(0.0, 0.0); dim];
    let mut error = 0.0;
    // Depth-first, left child processed first: accepted panels arrive in order.
    let mut stack: Vec<Panel> = initial.into_iter().rev().collect();
    while let Some(p) = stack.pop() {
        let local = tol * (p.hi - p.lo) / total_width;
        let converged = p.error <= local || p.roundoff_limited();
        if converged || p.depth >= MAX_DEPTH {
            if !converged {
                return Err(Error::QuadratureFailure {
                    tolerance: tol,
                    estimate: p.error,
                    evaluations: evals,
                });
            }
            for (v, k) in values.iter_mut().zip(&p.kronrod) {
                *v += k;
            }
            error += p.error;
            continue;
        }
        if evals + 2 * EVALS_PER_PANEL > cfg.max_evals {
            return Err(Error::QuadratureFailure {
                tolerance: tol,
                estimate: p.error,
                evaluations: evals,
            });
        }
        let mid = 0.5 * (p.lo + p.hi);
        let left = gk15(&mut f, p.lo, mid, p.depth + 1, &mut scratch);
        let right = gk15(&mut f, mid, p.hi, p.depth + 1, &mut scratch);
        evals += 2 * EVALS_PER_PANEL;
        stack.push(right);
        stack.push(left);
    }

    Ok(QuadResult {
        values,
        error,
        evals,
    })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<(Complex64, f64)>
where
    F: FnMut(f64) -> Complex64,
{
    let r = integrate(|x, out| out[0] = f(x), lo, hi, 1, cfg)?;
    Ok((r.values[0], r.error))
}

struct Scratch {
    fx: Vec<Complex64>,
    gauss: Vec<Complex64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            fx: vec![Complex64::new(0.0, 0.0); dim],
            gauss: vec![Complex64::new(0.0, 0.0); dim],
        }
    }
}

fn gk15<F>(f: &mut F, lo: f64, hi: f64, depth: usize, s: &mut Scratch) -> Panel
where
    F: FnMut(f64, &mut [Complex64]),
{
    let dim = s.fx.len();
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kronrod = vec![Complex64::new(0.0, 0.0); dim];
    for g in s.gauss.iter_mut() {
        *g = Complex64::new(0.0, 0.0);
    }

    let mut mass = 0.0;
    f(center, &mut s.fx);
    for j in 0..dim {
        mass += WGK[7] * s.fx[j].norm();
        kronrod[j] = s.fx[j] * WGK[7];
        s.gauss[j] = s.fx[j] * WG[3];
    }
    for i in 0..7 {
        let dx = half * XGK[i];
        for x in [center - dx, center + dx] {
            f(x, &mut s.fx);
            for j in 0..dim {
                kronrod[j] += s.fx[j] * WGK[i];
                mass += WGK[i] * s.fx[j].norm();
                if i % 2 == 1 {
                    s.gauss[j] += s.fx[j] * WG[i / 2];
                }
            }
        }
    }
    let mut error = 0.0;
    for j in 0..dim {
        kronrod[j] *= half;
        error += (kronrod[j] - s.gauss[j] * half).norm();
    }
    Panel {
        lo,
        hi,
        depth,
        kronrod,
        error,
        mass: mass * half,
    }
}
