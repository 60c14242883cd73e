//! Lower bounds on the implicitness parameter `theta` for unconditional
//! von Neumann stability.
//!
//! Two families of bounds are provided for each scheme, parameterized by the
//! space dimension `k` and the relative mixed-derivative size
//! `gamma = max |d_ij| / sqrt(d_ii d_jj)`:
//!
//! * [`sufficient_lower_bound`] — stability is guaranteed for every `theta`
//!   at or above the bound (available for `k = 2, 3`);
//! * [`necessary_lower_bound`] — for every `theta` below the bound some
//!   Fourier mode is amplified (available for every `k >= 2`).
//!
//! For `k = 2` and `k = 3` the two families coincide, so the bounds are
//! sharp.  The sufficient proofs for the second-order schemes reduce to the
//! nonnegativity of the symmetric cubic `alpha + u^2 + v^2 + w^2 + uvw -
//! delta (u + v + w)` on the nonnegative octant, exposed here together with
//! a brute-force grid oracle.

use crate::adi::SchemeKind;
use crate::{Error, Result};

/// Which family a bound belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    /// Stability holds for all `theta` at or above the bound.
    Sufficient,
    /// Some mode is unstable for every `theta` below the bound.
    Necessary,
}

/// A computed bound together with the inputs and named constants behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub kind: SchemeKind,
    pub k: usize,
    pub gamma: f64,
    pub theta_min: f64,
    pub source: BoundSource,
    /// Scheme-family constants used by the formula, e.g. the HV root.
    pub constants: Vec<(&'static str, f64)>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    Ok(())
}

/// Smallest `theta` with guaranteed unconditional stability (`k = 2` or 3).
///
/// ```text
/// Do:  1/2 (k=2)                 max{1/2, 2(2 gamma + 1)/9} (k=3)
/// CS:  1/2                       1/2
/// MCS: max{1/4, (gamma+1)/6}     max{1/4, 2(2 gamma + 1)/13}
/// HV:  max{1/4, (gamma+1)/(4+2 sqrt 2)}
///                                max{1/4, (2 gamma + 1)/(4 + 2 sqrt 3)}
/// ```
pub fn sufficient_lower_bound(kind: SchemeKind, k: usize, gamma: f64) -> Result<BoundResult> {
    check_gamma(gamma)?;
    let theta_min = match (kind, k) {
        (SchemeKind::Do, 2) => 0.5,
        (SchemeKind::Do, 3) => (2.0 * (2.0 * gamma + 1.0) / 9.0).max(0.5),
        (SchemeKind::Cs, 2) | (SchemeKind::Cs, 3) => 0.5,
        (SchemeKind::Mcs, 2) => ((gamma + 1.0) / 6.0).max(0.25),
        (SchemeKind::Mcs, 3) => (2.0 * (2.0 * gamma + 1.0) / 13.0).max(0.25),
        (SchemeKind::Hv, 2) => ((gamma + 1.0) / (4.0 + 2.0 * 2.0_f64.sqrt())).max(0.25),
        (SchemeKind::Hv, 3) => ((2.0 * gamma + 1.0) / (4.0 + 2.0 * 3.0_f64.sqrt())).max(0.25),
        (_, k) => {
            return Err(Error::UnsupportedDimension {
                k,
                reason: "sufficient bounds are only proven for k = 2 and k = 3",
            });
        }
    };
    Ok(BoundResult {
        kind,
        k,
        gamma,
        theta_min,
        source: BoundSource::Sufficient,
        constants: Vec::new(),
    })
}

/// Smallest `theta` not excluded by an explicit unstable mode family
/// (any `k >= 2`).
///
/// With `e_k = (k - 1) gamma + 1`:
///
/// ```text
/// Do:  max{1/2, c e_k / 2},  c = (1 - 1/k)^(k-1)
/// CS:  max{1/2, c k gamma / 2},  c = (1 - 1/k)^k
/// MCS: max{1/4, c e_k / 2},  c = 1 / (1 + (1 + 1/(k-1))^(k-1))
/// HV:  max{1/4, c e_k / 2},  c = root of 2c (1 + (1-c)/(k-1))^(k-1) = 1
/// ```
pub fn necessary_lower_bound(kind: SchemeKind, k: usize, gamma: f64) -> Result<BoundResult> {
    check_gamma(gamma)?;
    if k < 2 {
        return Err(Error::UnsupportedDimension {
            k,
            reason: "splitting bounds need k >= 2",
        });
    }
    let km1 = (k - 1) as f64;
    let e = km1 * gamma + 1.0;
    let (theta_min, constants) = match kind {
        SchemeKind::Do => {
            let c = (1.0 - 1.0 / k as f64).powi(k as i32 - 1);
            ((0.5 * c * e).max(0.5), vec![("c_do", c)])
        }
        SchemeKind::Cs => {
            let c = (1.0 - 1.0 / k as f64).powi(k as i32);
            ((0.5 * c * k as f64 * gamma).max(0.5), vec![("c_cs", c)])
        }
        SchemeKind::Mcs => {
            let c = 1.0 / (1.0 + (1.0 + 1.0 / km1).powi(k as i32 - 1));
            ((0.5 * c * e).max(0.25), vec![("c_mcs", c)])
        }
        SchemeKind::Hv => {
            let c = hv_constant(k);
            ((0.5 * c * e).max(0.25), vec![("c_hv", c)])
        }
    };
    Ok(BoundResult {
        kind,
        k,
        gamma,
        theta_min,
        source: BoundSource::Necessary,
        constants,
    })
}

/// The HV bound constant: the unique root in `(0, 1/2)` of
/// `2a (1 + (1 - a)/(k - 1))^(k-1) = 1`, found by bisection to an interval
/// width of `1e-15`.
///
/// Closed forms exist in low dimensions (`1 - sqrt(2)/2` for `k = 2`,
/// `2 - sqrt(3)` for `k = 3`) and serve as test oracles.
pub fn hv_constant(k: usize) -> f64 {
    assert!(k >= 2, "splitting bounds need k >= 2");
    let km1 = (k - 1) as f64;
    let f = |a: f64| 2.0 * a * (1.0 + (1.0 - a) / km1).powi(k as i32 - 1) - 1.0;
    let mut lo = 1e-9;
    let mut hi = 0.5 - 1e-9;
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    debug_assert!(f(root).abs() <= 1e-14);
    root
}

/// The symmetric cubic `P(u, v, w) = alpha + u^2 + v^2 + w^2 + uvw -
/// delta (u + v + w)` whose nonnegativity on the octant underlies the
/// second-order sufficient bounds.
pub fn symmetric_cubic(alpha: f64, delta: f64, u: f64, v: f64, w: f64) -> f64 {
    alpha + u * u + v * v + w * w + u * v * w - delta * (u + v + w)
}

fn check_octant_params(alpha: f64, delta: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    if !(delta > 0.0 && delta <= 4.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 4], got {delta}"
        )));
    }
    Ok(())
}

/// Exact criterion for `P >= 0` on `u, v, w >= 0` (for `0 < delta <= 4`):
/// both `(delta + 1)(3 - 2 sqrt(delta + 1)) >= 1 - alpha` (interior critical
/// point at `u = v = w = sqrt(delta + 1) - 1`) and `delta^2 <= 2 alpha`
/// (boundary minimum at `u = v = delta / 2`, `w = 0`).
pub fn octant_nonneg_criterion(alpha: f64, delta: f64) -> Result<bool> {
    check_octant_params(alpha, delta)?;
    let interior = (delta + 1.0) * (3.0 - 2.0 * (delta + 1.0).sqrt()) >= 1.0 - alpha;
    let boundary = delta * delta <= 2.0 * alpha;
    Ok(interior && boundary)
}

/// Grid used by [`octant_min_bruteforce`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctantGrid {
    /// Upper end of the scan cube (must be `>= 5`; the cubic grows like
    /// `u^2` far out, so minima live well inside).
    pub max: f64,
    /// Grid step (must be in `(0, 0.05]`).
    pub step: f64,
}

impl Default for OctantGrid {
    fn default() -> Self {
        Self { max: 8.0, step: 0.02 }
    }
}

/// Exhaustive minimum of the symmetric cubic over the grid
/// `{0, h, 2h, ...} ^ 3` capped at `grid.max`.  An intentionally naive
/// oracle for [`octant_nonneg_criterion`]: the grid minimum is within
/// `O(h (1 + delta))` of the true octant minimum.
pub fn octant_min_bruteforce(alpha: f64, delta: f64, grid: &OctantGrid) -> Result<f64> {
    check_octant_params(alpha, delta)?;
    if !(grid.max >= 5.0) || !grid.max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid max must be >= 5, got {}",
            grid.max
        )));
    }
    if !(grid.step > 0.0 && grid.step <= 0.05) {
        return Err(Error::InvalidParameter(format!(
            "grid step must lie in (0, 0.05], got {}",
            grid.step
        )));
    }
    let n = (grid.max / grid.step).floor() as usize + 1;
    let coord = |i: usize| i as f64 * grid.step;
    let mut min = f64::INFINITY;
    for iu in 0..n {
        let u = coord(iu);
        let pu = alpha + u * u - delta * u;
        for iv in 0..n {
            let v = coord(iv);
            let puv = pu + v * v - delta * v;
            let uv = u * v;
            for iw in 0..n {
                let w = coord(iw);
                let p = puv + w * w + uv * w - delta * w;
                if p < min {
                    min = p;
                }
            }
        }
    }
    Ok(min)
}

/// Rounds to three decimals, halves away from zero (display convention for
/// bound tables).
pub fn round3(x: f64) -> f64 {
    ((x.abs() * 1000.0 + 0.5).floor() / 1000.0).copysign(x)
}
