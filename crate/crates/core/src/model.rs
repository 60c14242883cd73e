//! Problem data: diffusion matrices, mixed-derivative stencil weights and
//! complete problem specifications.
//!
//! The continuous model problem is the diffusion equation
//! `u_t = sum_{i,j=1..k} d_ij u_{x_i x_j}` on the unit cube with periodic
//! boundary conditions.  The coefficient matrix `D = (d_ij)` must be symmetric
//! positive semidefinite; its relative off-diagonal mass is measured by
//! [`DiffusionMatrix::gamma_min`], the smallest `gamma` such that
//! `|d_ij| <= gamma * sqrt(d_ii d_jj)` for all `i != j`.

use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Relative positive-semidefiniteness tolerance used when validating
/// diffusion matrices and stencil weight matrices.
pub const PSD_REL_TOL: f64 = 1e-12;

/// Checks whether the `n x n` row-major matrix `entries` is positive
/// semidefinite: the smallest eigenvalue must be `>= -tol * scale` where
/// `scale` is the largest absolute entry (or 1 for the zero matrix).
///
/// The matrix must be square and exactly symmetric.
pub fn validate_psd(n: usize, entries: &[f64], tol: f64) -> Result<bool> {
    check_square_symmetric(n, entries)?;
    let scale = entries.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let scale = if scale == 0.0 { 1.0 } else { scale };
    let m = nalgebra::DMatrix::from_row_slice(n, n, entries);
    let min_eig = m
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(min_eig >= -tol * scale)
}

fn check_square_symmetric(n: usize, entries: &[f64]) -> Result<()> {
    if entries.len() != n * n {
        return Err(Error::NotSquare {
            rows: n,
            len: entries.len(),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (entries[i * n + j], entries[j * n + i]);
            if a != b {
                return Err(Error::NotSymmetric { i, j, a, b });
            }
        }
    }
    Ok(())
}

/// Symmetric positive semidefinite diffusion coefficient matrix `D = (d_ij)`.
///
/// Symmetry is required exactly (no tolerance); positive semidefiniteness is
/// checked with relative tolerance [`PSD_REL_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    k: usize,
    entries: Vec<f64>, // row-major, k*k
}

impl DiffusionMatrix {
    /// Builds a `k x k` diffusion matrix from row-major entries.
    pub fn new(k: usize, entries: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "space dimension must be >= 2, got {k}"
            )));
        }
        if !entries.iter().all(|e| e.is_finite()) {
            return Err(Error::InvalidParameter(
                "diffusion matrix entries must be finite".into(),
            ));
        }
        if !validate_psd(k, &entries, PSD_REL_TOL)? {
            let m = nalgebra::DMatrix::from_row_slice(k, k, &entries);
            let min_eigenvalue = m
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let scale = entries.iter().fold(0.0_f64, |m, e| m.max(e.abs())).max(1.0);
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue,
                tol: PSD_REL_TOL * scale,
            });
        }
        Ok(Self { k, entries })
    }

    /// Space dimension `k`.
    pub fn dim(&self) -> usize {
        self.k
    }

    /// Entry `d_ij` (zero-based indices).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Smallest `gamma` with `|d_ij| <= gamma * sqrt(d_ii d_jj)` for all
    /// `i != j`.  Pairs with `d_ij = 0` contribute zero even when a diagonal
    /// entry vanishes; a nonzero `d_ij` over a vanishing diagonal product is
    /// an error because no finite ratio exists.
    ///
    /// For a positive semidefinite matrix the result is at most 1 up to
    /// roundoff; `gamma = 0` characterizes a diagonal matrix.
    pub fn gamma_min(&self) -> Result<f64> {
        let mut gamma: f64 = 0.0;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                let off = self.entry(i, j);
                if off == 0.0 {
                    continue;
                }
                let prod = self.entry(i, i) * self.entry(j, j);
                if prod <= 0.0 {
                    return Err(Error::UndefinedMixingRatio { i, j, off });
                }
                gamma = gamma.max(off.abs() / prod.sqrt());
            }
        }
        Ok(gamma)
    }
}

/// Weights `beta_ij in [-1, 1]` selecting the finite-difference stencil used
/// for each mixed derivative `u_{x_i x_j}`: `beta_ij = 0` is the standard
/// 4-point cross stencil, nonzero values blend in the 9-point correction.
///
/// The matrix `B` with unit diagonal and off-diagonal entries `-beta_ij` must
/// be positive semidefinite; this is the structural condition under which the
/// mixed stencils cannot destabilize the spatial discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStencilParams {
    k: usize,
    beta: Vec<f64>, // row-major, k*k, zero diagonal
}

impl MixedStencilParams {
    /// All-zero weights (plain 4-point mixed stencils) in dimension `k`.
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            beta: vec![0.0; k * k],
        }
    }

    /// Builds stencil weights from a row-major `k x k` matrix whose diagonal
    /// must be zero.
    pub fn new(k: usize, beta: Vec<f64>) -> Result<Self> {
        check_square_symmetric(k, &beta)?;
        for i in 0..k {
            if beta[i * k + i] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "stencil weight diagonal must be zero, got beta[{i}][{i}] = {}",
                    beta[i * k + i]
                )));
            }
        }
        if let Some(bad) = beta.iter().find(|b| !(b.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "stencil weights must satisfy |beta_ij| <= 1, got {bad}"
            )));
        }
        // B = I on the diagonal, -beta_ij off the diagonal.
        let mut b = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                b[i * k + j] = if i == j { 1.0 } else { -beta[i * k + j] };
            }
        }
        if !validate_psd(k, &b, PSD_REL_TOL)? {
            return Err(Error::InvalidParameter(
                "stencil weight matrix B = (delta_ij - beta_ij) must be positive semidefinite"
                    .into(),
            ));
        }
        Ok(Self { k, beta })
    }

    /// Space dimension `k`.
    pub fn dim(&self) -> usize {
        self.k
    }

    /// Weight `beta_ij` (zero on the diagonal).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.beta[i * self.k + j]
    }
}

/// A function of the grid point coordinates.
pub type SpaceFunction = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Initial condition, either from the built-in catalog or a custom closure.
#[derive(Clone)]
pub enum InitialFunction {
    /// `exp(-4 (sin^2(pi x1) + cos^2(pi x2)))`, a smooth periodic bump (2D).
    Bump2d,
    /// `exp(-(cos^2(pi x1) + cos^2(pi x2) + cos^2(pi x3)))` (3D).
    Bump3d,
    /// Spatially constant value (any dimension).
    Constant(f64),
    /// Arbitrary user function of the grid point coordinates.
    Custom(SpaceFunction),
}

impl InitialFunction {
    /// Evaluates the initial condition at a point `x` of length `k`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        use std::f64::consts::PI;
        match self {
            InitialFunction::Bump2d => {
                let (s, c) = ((PI * x[0]).sin(), (PI * x[1]).cos());
                (-4.0 * (s * s + c * c)).exp()
            }
            InitialFunction::Bump3d => {
                let sum: f64 = x
                    .iter()
                    .take(3)
                    .map(|&xi| {
                        let c = (PI * xi).cos();
                        c * c
                    })
                    .sum();
                (-sum).exp()
            }
            InitialFunction::Constant(v) => *v,
            InitialFunction::Custom(f) => f(x),
        }
    }

    /// Dimension this function is tied to, if any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            InitialFunction::Bump2d => Some(2),
            InitialFunction::Bump3d => Some(3),
            InitialFunction::Constant(_) | InitialFunction::Custom(_) => None,
        }
    }

    /// Looks up a catalog name: `bump2d`, `bump3d`, `constant:<value>`.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "bump2d" => Ok(InitialFunction::Bump2d),
            "bump3d" => Ok(InitialFunction::Bump3d),
            _ => {
                if let Some(v) = name.strip_prefix("constant:") {
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad constant value {v:?}")))?;
                    Ok(InitialFunction::Constant(v))
                } else {
                    Err(Error::Config(format!(
                        "unknown initial function {name:?} (expected bump2d, bump3d or constant:<v>)"
                    )))
                }
            }
        }
    }
}

impl fmt::Debug for InitialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialFunction::Bump2d => write!(f, "Bump2d"),
            InitialFunction::Bump3d => write!(f, "Bump3d"),
            InitialFunction::Constant(v) => write!(f, "Constant({v})"),
            InitialFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Per-term forcing function `g_j(t, x)`, evaluated per grid point.
pub type ForcingTerm = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Full specification of a diffusion problem: coefficients, mixed-stencil
/// weights, initial condition and optional split forcing.
///
/// When forcing is present it holds one term per split operator piece
/// (`g_0` for the mixed part, `g_1..g_k` for the directional parts), matching
/// the splitting `F_j(t, v) = A_j v + g_j(t)` used by the ADI schemes.
#[derive(Clone)]
pub struct ProblemSpec {
    pub d: DiffusionMatrix,
    pub beta: MixedStencilParams,
    pub u0: InitialFunction,
    pub forcing: Option<Vec<ForcingTerm>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("d", &self.d)
            .field("beta", &self.beta)
            .field("u0", &self.u0)
            .field(
                "forcing",
                &self.forcing.as_ref().map(|g| format!("[{} terms]", g.len())),
            )
            .finish()
    }
}

impl ProblemSpec {
    /// Builds a problem without forcing, validating dimensional consistency.
    pub fn new(
        d: DiffusionMatrix,
        beta: MixedStencilParams,
        u0: InitialFunction,
    ) -> Result<Self> {
        if beta.dim() != d.dim() {
            return Err(Error::DimensionMismatch {
                expected: d.dim(),
                got: beta.dim(),
            });
        }
        if let Some(dim) = u0.dimension() {
            if dim != d.dim() {
                return Err(Error::DimensionMismatch {
                    expected: d.dim(),
                    got: dim,
                });
            }
        }
        Ok(Self {
            d,
            beta,
            u0,
            forcing: None,
        })
    }

    /// Attaches per-term forcing functions (`k + 1` terms, mixed part first).
    pub fn with_forcing(mut self, forcing: Vec<ForcingTerm>) -> Result<Self> {
        if forcing.len() != self.k() + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.k() + 1,
                got: forcing.len(),
            });
        }
        self.forcing = Some(forcing);
        Ok(self)
    }

    /// Space dimension `k`.
    pub fn k(&self) -> usize {
        self.d.dim()
    }

    /// Two-dimensional benchmark family
    /// `D = 0.025 * [[1, 2 gamma], [2 gamma, 4]]` with the 2D bump initial
    /// condition; positive semidefinite exactly for `gamma <= 1`.
    pub fn template_2d(gamma: f64) -> Result<Self> {
        let g = 0.05 * gamma;
        let d = DiffusionMatrix::new(2, vec![0.025, g, g, 0.1])?;
        Self::new(d, MixedStencilParams::zeros(2), InitialFunction::Bump2d)
    }

    /// Three-dimensional benchmark family
    /// `D = 0.025 * [[1, 2g, g], [2g, 4, 2g], [g, 2g, 1]]` with the 3D bump
    /// initial condition; positive semidefinite exactly for `gamma <= 1`.
    pub fn template_3d(gamma: f64) -> Result<Self> {
        let (g1, g2) = (0.025 * gamma, 0.05 * gamma);
        let d = DiffusionMatrix::new(
            3,
            vec![0.025, g2, g1, g2, 0.1, g2, g1, g2, 0.025],
        )?;
        Self::new(d, MixedStencilParams::zeros(3), InitialFunction::Bump3d)
    }

    /// Looks up a named template: `2d-gamma` or `3d-gamma`.
    pub fn template(name: &str, gamma: f64) -> Result<Self> {
        match name {
            "2d-gamma" => Self::template_2d(gamma),
            "3d-gamma" => Self::template_3d(gamma),
            _ => Err(Error::Config(format!(
                "unknown template {name:?} (expected 2d-gamma or 3d-gamma)"
            ))),
        }
    }

    /// Parses a problem from plain key/value text.
    ///
    /// Recognized keys: `k` (dimension), `d` (row-major entries), `beta`
    /// (row-major entries, optional, default zero) and `u0` (catalog name,
    /// optional, default `constant:1`).  Matrix entries may reference the
    /// substitution parameter as `gamma` or `<coeff>*gamma`, in which case a
    /// `gamma` value must be supplied.
    ///
    /// ```text
    /// k = 2
    /// d = 0.025, 0.05*gamma, 0.05*gamma, 0.1
    /// u0 = bump2d
    /// ```
    pub fn from_config_str(text: &str, gamma: Option<f64>) -> Result<Self> {
        let mut k: Option<usize> = None;
        let mut d_raw: Option<Vec<f64>> = None;
        let mut beta_raw: Option<Vec<f64>> = None;
        let mut u0: Option<InitialFunction> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            match key.trim() {
                "k" => {
                    let v: usize = value.trim().parse().map_err(|_| {
                        Error::Config(format!("line {}: bad dimension {value:?}", lineno + 1))
                    })?;
                    k = Some(v);
                }
                "d" => d_raw = Some(parse_entries(value, gamma)?),
                "beta" => beta_raw = Some(parse_entries(value, gamma)?),
                "u0" => u0 = Some(InitialFunction::from_name(value)?),
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )));
                }
            }
        }

        let k = k.ok_or_else(|| Error::Config("missing key `k`".into()))?;
        let d_raw = d_raw.ok_or_else(|| Error::Config("missing key `d`".into()))?;
        let d = DiffusionMatrix::new(k, d_raw)?;
        let beta = match beta_raw {
            Some(b) => MixedStencilParams::new(k, b)?,
            None => MixedStencilParams::zeros(k),
        };
        Self::new(d, beta, u0.unwrap_or(InitialFunction::Constant(1.0)))
    }
}

/// Parses a comma/whitespace separated list of entries, each a float literal,
/// `gamma`, or `<coeff>*gamma`.
fn parse_entries(value: &str, gamma: Option<f64>) -> Result<Vec<f64>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| parse_entry(tok, gamma))
        .collect()
}

fn parse_entry(tok: &str, gamma: Option<f64>) -> Result<f64> {
    let resolve_gamma = || {
        gamma.ok_or_else(|| {
            Error::Config(format!(
                "entry {tok:?} references gamma but no gamma value was supplied"
            ))
        })
    };
    if tok == "gamma" {
        return resolve_gamma();
    }
    if tok == "-gamma" {
        return Ok(-resolve_gamma()?);
    }
    if let Some(coeff) = tok.strip_suffix("*gamma") {
        let c: f64 = coeff
            .parse()
            .map_err(|_| Error::Config(format!("bad coefficient in {tok:?}")))?;
        return Ok(c * resolve_gamma()?);
    }
    tok.parse()
        .map_err(|_| Error::Config(format!("bad matrix entry {tok:?}")))
}
