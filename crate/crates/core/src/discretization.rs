//! Uniform periodic grids, flattened grid fields and the matrix-free split
//! finite-difference operator.
//!
//! The unit cube is discretized with `m_j` points per direction and mesh
//! widths `dx_j = 1/m_j`, identifying `x_j = 0` with `x_j = 1`.  Fields are
//! stored flattened with the first coordinate fastest-varying.  The operator
//! is split as `A = A_0 + A_1 + ... + A_k` where `A_0` collects every mixed
//! derivative term (treated explicitly by the ADI schemes) and `A_j` the
//! second derivative in direction `j` (treated implicitly).
//!
//! Stencils: pure second derivatives use the standard 3-point central
//! difference.  A mixed derivative `u_{x_i x_j}` uses the 4-point cross
//! stencil blended with a 9-point correction weighted by `beta_ij`:
//!
//! ```text
//! [(1+b)(u_{+i+j} + u_{-i-j}) - (1-b)(u_{-i+j} + u_{+i-j})] / (4 dx_i dx_j)
//!   + b [4 u - 2(u_{+i} + u_{+j} + u_{-i} + u_{-j})] / (4 dx_i dx_j)
//! ```

use crate::model::ProblemSpec;
use crate::{Error, Result};

/// Uniform periodic grid: `m_j >= 3` points in each of `k >= 2` directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    dims: Vec<usize>,
}

impl GridSpec {
    /// Builds a grid from per-direction point counts.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 directions, got {}",
                dims.len()
            )));
        }
        if let Some(&m) = dims.iter().find(|&&m| m < 3) {
            return Err(Error::InvalidParameter(format!(
                "periodic stencils need m >= 3 points per direction, got {m}"
            )));
        }
        Ok(Self { dims })
    }

    /// Same number of points in every direction.
    pub fn uniform(k: usize, m: usize) -> Result<Self> {
        Self::new(vec![m; k])
    }

    /// Space dimension.
    pub fn k(&self) -> usize {
        self.dims.len()
    }

    /// Points along axis `a` (zero-based).
    pub fn size(&self, a: usize) -> usize {
        self.dims[a]
    }

    /// Mesh width along axis `a`.
    pub fn dx(&self, a: usize) -> f64 {
        1.0 / self.dims[a] as f64
    }

    /// All mesh widths.
    pub fn dx_all(&self) -> Vec<f64> {
        (0..self.k()).map(|a| self.dx(a)).collect()
    }

    /// Total number of grid points.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat-index stride of axis `a` (axis 0 is fastest-varying).
    pub fn stride(&self, a: usize) -> usize {
        self.dims[..a].iter().product()
    }

    /// Coordinates of a flat index.
    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let mut c = Vec::with_capacity(self.k());
        for &m in &self.dims {
            c.push(flat % m);
            flat /= m;
        }
        c
    }

    /// Flat index of coordinates.
    pub fn flat(&self, coords: &[usize]) -> usize {
        let mut flat = 0;
        for a in (0..self.k()).rev() {
            flat = flat * self.dims[a] + coords[a];
        }
        flat
    }

    /// Physical location of a grid point given by coordinates.
    pub fn point(&self, coords: &[usize]) -> Vec<f64> {
        coords
            .iter()
            .zip(&self.dims)
            .map(|(&c, &m)| c as f64 / m as f64)
            .collect()
    }
}

/// A scalar grid function stored flattened (axis 0 fastest-varying).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    /// Wraps values, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    /// Wraps values without the finiteness check; used internally and by the
    /// overflow-tolerant integration mode where non-finite values are data.
    pub fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// All-zero field of length `n`.
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    /// Constant field of length `n`.
    pub fn constant(n: usize, v: f64) -> Self {
        Self { values: vec![v; n] }
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the field holds no values.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable raw values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute entry.
    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Field) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    /// `self += a * (x - y)`, the shape of every ADI correction term.
    pub fn axpy_diff(&mut self, a: f64, x: &Field, y: &Field) {
        debug_assert_eq!(self.len(), x.len());
        debug_assert_eq!(self.len(), y.len());
        for ((s, vx), vy) in self.values.iter_mut().zip(&x.values).zip(&y.values) {
            *s += a * (vx - vy);
        }
    }
}

/// Matrix-free split operator `A = A_0 + A_1 + ... + A_k` on a periodic grid.
///
/// No matrix is ever assembled: each term is applied through its stencil with
/// precomputed wrap-around neighbor offsets.
#[derive(Debug, Clone)]
pub struct SplitOperator {
    problem: ProblemSpec,
    grid: GridSpec,
    /// Per axis: `kappa_a = d_aa / dx_a^2`, the coefficient multiplying the
    /// raw 3-point second difference.
    kappa: Vec<f64>,
    /// Mixed-derivative pairs `(axis_i, axis_j, coeff, beta_ij)` with
    /// `axis_i < axis_j` and `coeff = d_ij / (2 dx_i dx_j)` (both symmetric
    /// orderings folded together).  Pairs with `d_ij = 0` are dropped.
    pairs: Vec<(usize, usize, f64, f64)>,
    /// Per axis, per coordinate: flat-index offset of the forward/backward
    /// periodic neighbor.
    fwd: Vec<Vec<isize>>,
    bwd: Vec<Vec<isize>>,
}

impl SplitOperator {
    /// Binds a problem to a grid.
    pub fn new(problem: &ProblemSpec, grid: GridSpec) -> Result<Self> {
        let k = problem.k();
        if grid.k() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: grid.k(),
            });
        }
        let kappa = (0..k)
            .map(|a| problem.d.entry(a, a) / (grid.dx(a) * grid.dx(a)))
            .collect();
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let d = problem.d.entry(i, j);
                if d != 0.0 {
                    let coeff = d / (2.0 * grid.dx(i) * grid.dx(j));
                    pairs.push((i, j, coeff, problem.beta.weight(i, j)));
                }
            }
        }
        let mut fwd = Vec::with_capacity(k);
        let mut bwd = Vec::with_capacity(k);
        for a in 0..k {
            let (m, s) = (grid.size(a), grid.stride(a) as isize);
            fwd.push(
                (0..m)
                    .map(|p| if p + 1 < m { s } else { s * (1 - m as isize) })
                    .collect(),
            );
            bwd.push(
                (0..m)
                    .map(|p| if p > 0 { -s } else { s * (m as isize - 1) })
                    .collect(),
            );
        }
        Ok(Self {
            problem: problem.clone(),
            grid,
            kappa,
            pairs,
            fwd,
            bwd,
        })
    }

    /// The bound problem.
    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    /// The bound grid.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Space dimension.
    pub fn k(&self) -> usize {
        self.grid.k()
    }

    /// Coefficient `d_aa / dx_a^2` of the raw second difference on axis `a`.
    pub fn kappa(&self, a: usize) -> f64 {
        self.kappa[a]
    }

    /// Applies split term `j` (`0` = all mixed derivatives, `1..=k` =
    /// second derivative in direction `j`) to a field.
    pub fn apply_term(&self, j: usize, u: &Field) -> Result<Field> {
        if j > self.k() {
            return Err(Error::InvalidParameter(format!(
                "split term index {j} out of range 0..={}",
                self.k()
            )));
        }
        if u.len() != self.grid.total() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.total(),
                got: u.len(),
            });
        }
        let mut out = Field::zeros(u.len());
        self.accumulate_term(j, u, &mut out);
        Ok(out)
    }

    /// Applies the full operator `A` to a field.
    pub fn apply_full(&self, u: &Field) -> Result<Field> {
        if u.len() != self.grid.total() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.total(),
                got: u.len(),
            });
        }
        let mut out = Field::zeros(u.len());
        for j in 0..=self.k() {
            self.accumulate_term(j, u, &mut out);
        }
        Ok(out)
    }

    /// Adds `A_j u` into `out`; `j` and sizes must already be valid.
    pub(crate) fn accumulate_term(&self, j: usize, u: &Field, out: &mut Field) {
        if j == 0 {
            self.accumulate_mixed(u, out);
        } else {
            self.accumulate_axis(j - 1, u, out);
        }
    }

    /// Second difference along one axis: `kappa * (u_+ - 2u + u_-)`.
    fn accumulate_axis(&self, a: usize, u: &Field, out: &mut Field) {
        let kappa = self.kappa[a];
        if kappa == 0.0 {
            return;
        }
        let (uv, ov) = (u.values(), out.values_mut());
        let (fwd, bwd) = (&self.fwd[a], &self.bwd[a]);
        let m = self.grid.size(a);
        let stride = self.grid.stride(a);
        let block = stride * m;
        let total = uv.len();
        let mut base_hi = 0;
        while base_hi < total {
            for lo in 0..stride {
                let base = base_hi + lo;
                for p in 0..m {
                    let l = base + p * stride;
                    let up = uv[(l as isize + fwd[p]) as usize];
                    let dn = uv[(l as isize + bwd[p]) as usize];
                    ov[l] += kappa * (up - 2.0 * uv[l] + dn);
                }
            }
            base_hi += block;
        }
    }

    /// All mixed-derivative contributions in one sweep over the grid.
    fn accumulate_mixed(&self, u: &Field, out: &mut Field) {
        if self.pairs.is_empty() {
            return;
        }
        let (uv, ov) = (u.values(), out.values_mut());
        let k = self.k();
        let mut coords = vec![0usize; k];
        for l in 0..uv.len() {
            let li = l as isize;
            let mut acc = 0.0;
            for &(a, b, coeff, beta) in &self.pairs {
                let (fa, ba) = (self.fwd[a][coords[a]], self.bwd[a][coords[a]]);
                let (fb, bb) = (self.fwd[b][coords[b]], self.bwd[b][coords[b]]);
                let upp = uv[(li + fa + fb) as usize];
                let umm = uv[(li + ba + bb) as usize];
                let ump = uv[(li + ba + fb) as usize];
                let upm = uv[(li + fa + bb) as usize];
                let mut s = (1.0 + beta) * (upp + umm) - (1.0 - beta) * (ump + upm);
                if beta != 0.0 {
                    let singles =
                        uv[(li + fa) as usize] + uv[(li + ba) as usize]
                            + uv[(li + fb) as usize] + uv[(li + bb) as usize];
                    s += beta * (4.0 * uv[l] - 2.0 * singles);
                }
                acc += coeff * s;
            }
            ov[l] += acc;
            // Odometer increment of the coordinate vector.
            for (c, &m) in coords.iter_mut().zip(&self.grid.dims) {
                *c += 1;
                if *c < m {
                    break;
                }
                *c = 0;
            }
        }
    }

    /// Samples the problem's initial condition on the grid.
    pub fn sample_initial(&self) -> Field {
        let mut values = Vec::with_capacity(self.grid.total());
        let k = self.k();
        let mut coords = vec![0usize; k];
        let mut x = vec![0.0; k];
        for _ in 0..self.grid.total() {
            for a in 0..k {
                x[a] = coords[a] as f64 / self.grid.size(a) as f64;
            }
            values.push(self.problem.u0.eval(&x));
            for (c, &m) in coords.iter_mut().zip(&self.grid.dims) {
                *c += 1;
                if *c < m {
                    break;
                }
                *c = 0;
            }
        }
        Field::from_raw(values)
    }

    /// Samples forcing term `g_j(t, .)` on the grid, or `None` when the
    /// problem carries no forcing.
    pub fn forcing_field(&self, j: usize, t: f64) -> Option<Field> {
        let g = self.problem.forcing.as_ref()?.get(j)?;
        let k = self.k();
        let mut values = Vec::with_capacity(self.grid.total());
        let mut coords = vec![0usize; k];
        let mut x = vec![0.0; k];
        for _ in 0..self.grid.total() {
            for a in 0..k {
                x[a] = coords[a] as f64 / self.grid.size(a) as f64;
            }
            values.push(g(t, &x));
            for (c, &m) in coords.iter_mut().zip(&self.grid.dims) {
                *c += 1;
                if *c < m {
                    break;
                }
                *c = 0;
            }
        }
        Some(Field::from_raw(values))
    }

    /// True when the problem carries forcing terms.
    pub fn has_forcing(&self) -> bool {
        self.problem.forcing.is_some()
    }
}
