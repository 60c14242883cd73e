//! Fourier symbols of the split operator and scheme amplification factors.
//!
//! On a periodic grid every split term is diagonalized by the discrete
//! Fourier modes.  For mode angles `phi = (phi_1, ..., phi_k)` and mesh
//! ratios `r_ij = dt / (dx_i dx_j)` the scaled (by `dt`) eigenvalues are
//!
//! ```text
//! z_0 = sum_{i != j} r_ij d_ij [ -sin(phi_i) sin(phi_j)
//!                                + beta_ij (1 - cos phi_i)(1 - cos phi_j) ]
//! z_j = -2 r_jj d_jj (1 - cos phi_j),   j = 1..k
//! ```
//!
//! One ADI step multiplies the mode by a rational amplification factor in
//! `z_0, ..., z_k`; a scheme is stable for the mode iff its factor has
//! modulus at most one.  [`stability_sweep`] scans these factors over a grid
//! of angles and mesh ratios.

use crate::adi::SchemeKind;
use crate::model::{DiffusionMatrix, MixedStencilParams};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::fmt;

/// Scaled per-mode eigenvalues of the split terms: `z0` for the mixed part,
/// `zj[a]` for direction `a + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledEigenvalues {
    pub z0: f64,
    pub zj: Vec<f64>,
}

impl ScaledEigenvalues {
    /// Space dimension `k`.
    pub fn k(&self) -> usize {
        self.zj.len()
    }

    /// Sum of the directional eigenvalues `z = z_1 + ... + z_k`.
    pub fn z(&self) -> f64 {
        self.zj.iter().sum()
    }

    /// The implicit-factor product `p = prod_j (1 - theta z_j)`.
    pub fn p(&self, theta: f64) -> f64 {
        self.zj.iter().map(|z| 1.0 - theta * z).product()
    }
}

/// Computes the scaled eigenvalues for one Fourier mode.
///
/// `dt` and the mesh widths `dx` determine every ratio `r_ij = dt/(dx_i dx_j)`
/// consistently (so `r_ij^2 = r_ii r_jj` holds by construction).
pub fn scaled_eigenvalues(
    d: &DiffusionMatrix,
    beta: &MixedStencilParams,
    dt: f64,
    dx: &[f64],
    phi: &[f64],
) -> Result<ScaledEigenvalues> {
    let k = d.dim();
    if beta.dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: beta.dim(),
        });
    }
    if dx.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: dx.len(),
        });
    }
    if phi.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: phi.len(),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be finite and > 0, got {dt}"
        )));
    }
    if let Some(&bad) = dx.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mesh widths must be finite and > 0, got {bad}"
        )));
    }

    let sin: Vec<f64> = phi.iter().map(|p| p.sin()).collect();
    let one_minus_cos: Vec<f64> = phi.iter().map(|p| 1.0 - p.cos()).collect();

    let zj: Vec<f64> = (0..k)
        .map(|a| -2.0 * dt / (dx[a] * dx[a]) * d.entry(a, a) * one_minus_cos[a])
        .collect();
    let mut z0 = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let r = dt / (dx[i] * dx[j]);
            // Both orderings of the pair contribute equally.
            z0 += 2.0
                * r
                * d.entry(i, j)
                * (-sin[i] * sin[j]
                    + beta.weight(i, j) * one_minus_cos[i] * one_minus_cos[j]);
        }
    }
    Ok(ScaledEigenvalues { z0, zj })
}

/// Amplification factor of one ADI step acting on a Fourier mode.
///
/// With `s = z_0 + z` and `p = prod_j (1 - theta z_j)`:
///
/// ```text
/// Do:  1 + s/p
/// CS:  1 + s/p + z_0 s / (2 p^2)
/// MCS: 1 + s/p + theta z_0 s / p^2 + (1/2 - theta) s^2 / p^2
/// HV:  1 + 2s/p - s/p^2 + s^2 / (2 p^2)
/// ```
pub fn amplification(kind: SchemeKind, theta: f64, zs: &ScaledEigenvalues) -> Result<f64> {
    let p = zs.p(theta);
    if p == 0.0 {
        return Err(Error::InvalidParameter(
            "amplification undefined: implicit factor product is zero".into(),
        ));
    }
    let s = zs.z0 + zs.z();
    let p2 = p * p;
    Ok(match kind {
        SchemeKind::Do => 1.0 + s / p,
        SchemeKind::Cs => 1.0 + s / p + 0.5 * zs.z0 * s / p2,
        SchemeKind::Mcs => {
            1.0 + s / p + theta * zs.z0 * s / p2 + (0.5 - theta) * s * s / p2
        }
        SchemeKind::Hv => 1.0 + 2.0 * s / p - s / p2 + 0.5 * s * s / p2,
    })
}

/// Outcome of the structural eigenvalue checks for one mode.
///
/// For any positive semidefinite `D`, admissible stencil weights and real
/// angles, the scaled eigenvalues satisfy (up to roundoff):
/// every `z_j <= 0`, the total `z_0 + z <= 0`, and the mixed eigenvalue obeys
/// `|z_0| <= gamma * sum_{i != j} sqrt(z_i z_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lemma1Report {
    /// `z_j <= 0` for every direction.
    pub directional_nonpositive: bool,
    /// `z_0 + z_1 + ... + z_k <= 0`.
    pub total_nonpositive: bool,
    /// `|z_0| <= gamma * sum_{i != j} sqrt(z_i z_j)`.
    pub mixed_bounded: bool,
}

impl Lemma1Report {
    /// True when all three properties hold.
    pub fn passed(&self) -> bool {
        self.directional_nonpositive && self.total_nonpositive && self.mixed_bounded
    }
}

impl fmt::Display for Lemma1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("all eigenvalue properties hold");
        }
        let mut failed = Vec::new();
        if !self.directional_nonpositive {
            failed.push("directional eigenvalue positive");
        }
        if !self.total_nonpositive {
            failed.push("total eigenvalue positive");
        }
        if !self.mixed_bounded {
            failed.push("mixed eigenvalue exceeds gamma bound");
        }
        write!(f, "failed: {}", failed.join(", "))
    }
}

/// Checks the structural eigenvalue properties with tolerance
/// `1e-12 * (1 + max |z|)`.
pub fn lemma1_check(zs: &ScaledEigenvalues, gamma: f64) -> Lemma1Report {
    let max_abs = zs
        .zj
        .iter()
        .fold(zs.z0.abs(), |m, z| m.max(z.abs()));
    let tol = 1e-12 * (1.0 + max_abs);
    let directional_nonpositive = zs.zj.iter().all(|&z| z <= tol);
    let total_nonpositive = zs.z0 + zs.z() <= tol;
    let k = zs.k();
    let mut cross = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            // Ordered pairs count twice; clamp tiny negative products that
            // can only arise from invalid (positive) directional inputs.
            cross += 2.0 * (zs.zj[i] * zs.zj[j]).max(0.0).sqrt();
        }
    }
    let mixed_bounded = zs.z0.abs() <= gamma * cross + tol;
    Lemma1Report {
        directional_nonpositive,
        total_nonpositive,
        mixed_bounded,
    }
}

/// The two conditions equivalent to `|T| <= 1` for the HV factor:
/// `2p^2 + (2p - 1)s + s^2/2 >= 0` (true for every `p >= 1/4` by the sign of
/// the discriminant) and `2p - 1 + s/2 >= 0`.
pub fn hv_conditions(theta: f64, zs: &ScaledEigenvalues) -> (bool, bool) {
    let p = zs.p(theta);
    let s = zs.z0 + zs.z();
    let quadratic = 2.0 * p * p + (2.0 * p - 1.0) * s + 0.5 * s * s >= 0.0;
    let linear = 2.0 * p - 1.0 + 0.5 * s >= 0.0;
    (quadratic, linear)
}

/// `n` logarithmically spaced values from `a` to `b` inclusive.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0 && n >= 1);
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Sampling plan for [`stability_sweep`].
#[derive(Debug, Clone)]
pub struct SweepSampling {
    /// Angles per direction, uniform on `[0, 2 pi)`; `pi` is appended when
    /// the count is odd so the worst high-frequency mode is always present.
    pub n_phi: usize,
    /// Scalar mesh ratios `r = dt/dx^2` to scan.
    pub mesh_ratios: Vec<f64>,
    /// Optional per-direction multipliers: direction `a` uses `r_aa =
    /// anisotropy[a] * r`.  `None` means isotropic.
    pub anisotropy: Option<Vec<f64>>,
}

impl SweepSampling {
    /// Default plan: 64 angles per direction in 2D, 32 in higher dimensions,
    /// mesh ratios log-spaced over `[1e-2, 1e6]` with 25 points, isotropic.
    pub fn standard(k: usize) -> Self {
        Self {
            n_phi: if k == 2 { 64 } else { 32 },
            mesh_ratios: logspace(1e-2, 1e6, 25),
            anisotropy: None,
        }
    }
}

/// Stability margin used to call a sweep stable: `max |M| <= 1 + 1e-12`.
pub const SWEEP_STABILITY_TOL: f64 = 1e-12;

/// Summary of a stability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Largest modulus of the amplification factor over all samples.
    pub max_abs_amplification: f64,
    /// Mesh ratio at which the maximum was attained.
    pub argmax_mesh_ratio: f64,
    /// Mode angles at which the maximum was attained.
    pub argmax_angles: Vec<f64>,
    /// Number of `(r, phi)` samples evaluated.
    pub samples: usize,
}

impl SweepResult {
    /// True when every sampled mode is amplified by at most
    /// `1 + `[`SWEEP_STABILITY_TOL`].
    pub fn is_stable(&self) -> bool {
        self.max_abs_amplification <= 1.0 + SWEEP_STABILITY_TOL
    }
}

/// Scans `|M|` over the sampling plan and reports the maximum.
pub fn stability_sweep(
    kind: SchemeKind,
    theta: f64,
    d: &DiffusionMatrix,
    beta: &MixedStencilParams,
    sampling: &SweepSampling,
) -> Result<SweepResult> {
    stability_sweep_visit(kind, theta, d, beta, sampling, |_, _, _| {})
}

/// Like [`stability_sweep`] but also hands every sample `(r, phi, |M|)` to a
/// visitor, in deterministic order (mesh ratios outer, angle tuples odometer
/// order with the first direction fastest).  Ties in the maximum keep the
/// earliest sample.
pub fn stability_sweep_visit(
    kind: SchemeKind,
    theta: f64,
    d: &DiffusionMatrix,
    beta: &MixedStencilParams,
    sampling: &SweepSampling,
    mut visit: impl FnMut(f64, &[f64], f64),
) -> Result<SweepResult> {
    let k = d.dim();
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1], got {theta}"
        )));
    }
    if sampling.n_phi < 2 {
        return Err(Error::InvalidParameter(
            "need at least two angles per direction".into(),
        ));
    }
    if sampling.mesh_ratios.is_empty() {
        return Err(Error::InvalidParameter("need at least one mesh ratio".into()));
    }
    if let Some(&bad) = sampling
        .mesh_ratios
        .iter()
        .find(|&&r| !(r > 0.0) || !r.is_finite())
    {
        return Err(Error::InvalidParameter(format!(
            "mesh ratios must be finite and > 0, got {bad}"
        )));
    }
    let dx: Vec<f64> = match &sampling.anisotropy {
        None => vec![1.0; k],
        Some(scales) => {
            if scales.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: scales.len(),
                });
            }
            if let Some(&bad) = scales.iter().find(|&&s| !(s > 0.0) || !s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "anisotropy multipliers must be finite and > 0, got {bad}"
                )));
            }
            scales.iter().map(|s| 1.0 / s.sqrt()).collect()
        }
    };

    let mut angles: Vec<f64> = (0..sampling.n_phi)
        .map(|i| 2.0 * PI * i as f64 / sampling.n_phi as f64)
        .collect();
    if !sampling.n_phi.is_multiple_of(2) {
        angles.push(PI);
    }

    let mut max_abs = f64::NEG_INFINITY;
    let mut argmax_r = sampling.mesh_ratios[0];
    let mut argmax_phi = vec![0.0; k];
    let mut samples = 0usize;
    let mut phi = vec![0.0; k];
    let mut idx = vec![0usize; k];
    for &r in &sampling.mesh_ratios {
        idx.iter_mut().for_each(|i| *i = 0);
        'tuples: loop {
            for a in 0..k {
                phi[a] = angles[idx[a]];
            }
            let zs = scaled_eigenvalues(d, beta, r, &dx, &phi)?;
            let m = amplification(kind, theta, &zs)?.abs();
            visit(r, &phi, m);
            samples += 1;
            if m > max_abs {
                max_abs = m;
                argmax_r = r;
                argmax_phi.copy_from_slice(&phi);
            }
            // Odometer over angle indices, first direction fastest.
            let mut a = 0;
            loop {
                idx[a] += 1;
                if idx[a] < angles.len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
                if a == k {
                    break 'tuples;
                }
            }
        }
    }
    Ok(SweepResult {
        max_abs_amplification: max_abs,
        argmax_mesh_ratio: argmax_r,
        argmax_angles: argmax_phi,
        samples,
    })
}
