//! Exact solutions of the semidiscrete system for convergence studies.
//!
//! On a periodic grid the discrete operator `A` is diagonalized by the
//! discrete Fourier basis, so `u'(t) = A u(t)` is solved exactly by scaling
//! each Fourier coefficient with `exp(lambda(l) t)`, where `lambda(l)` is
//! the operator's eigenvalue on the complex exponential mode `l`.  This
//! gives a time-discretization-free reference: the error it assigns to a
//! time stepper contains no spatial component.
//!
//! Transforms are plain `O(m^2)` per line, which is far below the cost of
//! the time-stepping runs being measured; no FFT is needed.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::discretization::{Field, GridSpec};
use crate::model::ProblemSpec;
use crate::{Error, Result};

/// Relative threshold on the imaginary residue left after the inverse
/// transform of a real-symbol evolution (anything above it indicates a
/// programming error, not roundoff).
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Eigenvalues `lambda(l)` of the discrete operator on every Fourier mode
/// of a grid, stored in flat grid order.
///
/// With `phi_a = 2 pi l_a / m_a`:
///
/// ```text
/// lambda(l) = - sum_a 2 d_aa (1 - cos phi_a) / dx_a^2
///             + sum_{i<j} 2 d_ij (-sin phi_i sin phi_j
///                 + beta_ij (1 - cos phi_i)(1 - cos phi_j)) / (dx_i dx_j)
/// ```
#[derive(Debug, Clone)]
pub struct OperatorSymbolTable {
    grid: GridSpec,
    values: Vec<f64>,
}

impl OperatorSymbolTable {
    /// Tabulates the symbol of the operator for `problem` on `grid`.
    pub fn new(problem: &ProblemSpec, grid: &GridSpec) -> Result<Self> {
        let k = grid.k();
        if problem.k() != k {
            return Err(Error::DimensionMismatch {
                expected: problem.k(),
                got: k,
            });
        }
        // Per-axis tables of sin(phi) and 1 - cos(phi).
        let mut sin_tab: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut omc_tab: Vec<Vec<f64>> = Vec::with_capacity(k);
        for a in 0..k {
            let m = grid.size(a);
            let mut sins = Vec::with_capacity(m);
            let mut omcs = Vec::with_capacity(m);
            for l in 0..m {
                let phi = 2.0 * PI * l as f64 / m as f64;
                sins.push(phi.sin());
                omcs.push(1.0 - phi.cos());
            }
            sin_tab.push(sins);
            omc_tab.push(omcs);
        }
        let diag_coeff: Vec<f64> = (0..k)
            .map(|a| -2.0 * problem.d.entry(a, a) / (grid.dx(a) * grid.dx(a)))
            .collect();
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let d = problem.d.entry(i, j);
                if d != 0.0 {
                    pairs.push((i, j, 2.0 * d / (grid.dx(i) * grid.dx(j)), problem.beta.weight(i, j)));
                }
            }
        }

        let mut values = Vec::with_capacity(grid.total());
        let mut ell = vec![0usize; k];
        for _ in 0..grid.total() {
            let mut lam = 0.0;
            for a in 0..k {
                lam += diag_coeff[a] * omc_tab[a][ell[a]];
            }
            for &(i, j, c, b) in &pairs {
                lam += c
                    * (-sin_tab[i][ell[i]] * sin_tab[j][ell[j]]
                        + b * omc_tab[i][ell[i]] * omc_tab[j][ell[j]]);
            }
            values.push(lam);
            // Odometer increment, axis 0 fastest (flat order).
            for (a, slot) in ell.iter_mut().enumerate() {
                *slot += 1;
                if *slot < grid.size(a) {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Eigenvalue for the mode with integer frequencies `ell`.
    pub fn value(&self, ell: &[usize]) -> f64 {
        self.values[self.grid.flat(ell)]
    }

    /// All eigenvalues in flat grid order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One unnormalized DFT (or normalized inverse) along `axis` of a flattened
/// complex grid function.
fn dft_axis(grid: &GridSpec, axis: usize, data: &mut [Complex64], inverse: bool) {
    let m = grid.size(axis);
    let stride = grid.stride(axis);
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = if inverse { 1.0 / m as f64 } else { 1.0 };
    let twiddle: Vec<Complex64> = (0..m)
        .map(|r| {
            let ang = sign * 2.0 * PI * r as f64 / m as f64;
            Complex64::new(ang.cos(), ang.sin())
        })
        .collect();
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let block = m * stride;
    let blocks = grid.total() / block;
    for b in 0..blocks {
        for inner in 0..stride {
            let base = b * block + inner;
            for (p, slot) in line.iter_mut().enumerate() {
                *slot = data[base + p * stride];
            }
            for q in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for (p, &lp) in line.iter().enumerate() {
                    acc += lp * twiddle[(p * q) % m];
                }
                data[base + q * stride] = acc.scale(scale);
            }
        }
    }
}

/// Full forward (or inverse) transform along every axis.
fn dft_all(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    for axis in 0..grid.k() {
        dft_axis(grid, axis, data, inverse);
    }
}

/// Evolves `u0` exactly under the semidiscrete system `u' = A u` for time
/// `t >= 0`.  Rejects problems with forcing terms (the spectral shortcut
/// only covers the homogeneous part).
pub fn exact_semidiscrete(
    problem: &ProblemSpec,
    grid: &GridSpec,
    u0: &Field,
    t: f64,
) -> Result<Field> {
    if u0.len() != grid.total() {
        return Err(Error::DimensionMismatch {
            expected: grid.total(),
            got: u0.len(),
        });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "evolution time must be finite and >= 0, got {t}"
        )));
    }
    if problem.forcing.is_some() {
        return Err(Error::InvalidParameter(
            "exact semidiscrete solutions are only available without forcing".into(),
        ));
    }
    let table = OperatorSymbolTable::new(problem, grid)?;
    let mut data: Vec<Complex64> = u0
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    dft_all(grid, &mut data, false);
    for (c, &lam) in data.iter_mut().zip(table.values()) {
        *c = c.scale((lam * t).exp());
    }
    dft_all(grid, &mut data, true);

    let threshold = IMAG_RESIDUE_TOL * (1.0 + u0.inf_norm());
    let residue = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > threshold {
        return Err(Error::ImaginaryResidue { residue, threshold });
    }
    Field::new(data.iter().map(|c| c.re).collect())
}
