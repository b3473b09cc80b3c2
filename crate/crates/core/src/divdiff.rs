//! Divided differences of `z -> e^{t z}`.
//!
//! For nodes `z_0..z_n` the lower bidiagonal matrix
//!
//! ```text
//!     | t z_0                |
//! M = | t     t z_1          |
//!     |       t     t z_2    |
//!     |             ...      |
//! ```
//!
//! has `exp(M)[m][0] = e^{t .}[z_0, ..., z_m]` for every prefix `m`. We
//! propagate `e_0` through `v' = M v` on `[0, 1]` with short Taylor steps,
//! after pulling out `e^{t z_p}` for the node of largest real part. Coincident or nearly coincident nodes
//! need no special casing and there is no division by node gaps, so the
//! result is accurate for the clustered shifted-eigenvalue families the
//! pricer produces (where the textbook recurrence loses every digit).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Taylor step length in the scaled (norm <= STEP_NORM) variable.
const STEP_NORM: f64 = 2.0;
const MAX_TERMS: usize = 64;
/// Two nodes farther apart than this (scaled by t) use the plain quotient.
const SEPARATED: f64 = 0.5;

/// `e^{t .}[z_0, ..., z_n]`.
pub fn divided_diff_exp(t: f64, nodes: &[Complex64]) -> Complex64 {
    assert!(
        !nodes.is_empty(),
        "divided difference needs at least one node"
    );
    let mut out = vec![Complex64::new(0.0, 0.0); nodes.len()];
    divided_diff_exp_prefixes(t, nodes, &mut out);
    out[nodes.len() - 1]
}

/// Writes `e^{t .}[z_0, ..., z_m]` into `out[m]` for `m = 0..nodes.len()`.
pub fn divided_diff_exp_prefixes(t: f64, nodes: &[Complex64], out: &mut [Complex64]) {
    let n = nodes.len();
    assert!(n > 0, "divided difference needs at least one node");
    assert_eq!(out.len(), n);
    let z0 = nodes[0];
    if n == 1 {
        out[0] = (z0 * t).exp();
        return;
    }
    if n == 2 {
        let gap = nodes[1] - z0;
        if (gap * t).norm() > SEPARATED {
            out[0] = (z0 * t).exp();
            out[1] = ((nodes[1] * t).exp() - out[0]) / gap;
            return;
        }
    }
    // Shift by the node of largest real part so the scaled system only decays.
    let pivot = nodes
        .iter()
        .copied()
        .fold(z0, |best, z| if z.re > best.re { z } else { best });
    let lead = (pivot * t).exp();

    // Diagonal of M - t pivot I; the sub-diagonal is the constant t.
    let mut diag = [Complex64::new(0.0, 0.0); 16];
    let mut diag_heap: Vec<Complex64>;
    let diag: &mut [Complex64] = if n <= diag.len() {
        &mut diag[..n]
    } else {
        diag_heap = vec![Complex64::new(0.0, 0.0); n];
        &mut diag_heap
    };
    let mut radius = t.abs();
    for (d, z) in diag.iter_mut().zip(nodes) {
        *d = (z - pivot) * t;
        radius = radius.max(d.norm() + t.abs());
    }

    let steps = libm::ceil(radius / STEP_NORM).max(1.0) as usize;
    let h = 1.0 / steps as f64;

    for o in out.iter_mut() {
        *o = Complex64::new(0.0, 0.0);
    }
    out[0] = Complex64::new(1.0, 0.0);
    let mut term = vec![Complex64::new(0.0, 0.0); n];
    let mut next = vec![Complex64::new(0.0, 0.0); n];

    for _ in 0..steps {
        term.copy_from_slice(out);
        for m in 1..MAX_TERMS {
            // next = h/m * M' term, M' bidiagonal
            let scale = h / m as f64;
            next[0] = diag[0] * term[0] * scale;
            for j in 1..n {
                next[j] = (diag[j] * term[j] + term[j - 1] * t) * scale;
            }
            let mut done = m >= n;
            for j in 0..n {
                out[j] += next[j];
                let nj = next[j].norm();
                if nj != 0.0 && nj > 1e-18 * out[j].norm() {
                    done = false;
                }
            }
            core::mem::swap(&mut term, &mut next);
            if done {
                break;
            }
        }
    }

    for o in out.iter_mut() {
        *o *= lead;
    }
}
