//! Alternating direction implicit (ADI) time stepping.
//!
//! All four schemes share the same first-order predictor sweep and differ in
//! their corrector treatment of the explicit mixed-derivative term `A_0`:
//!
//! * **Do** (Douglas): predictor only, `k` implicit line solves per step;
//! * **CS** (Craig–Sneyd): one explicit correction of the mixed term with
//!   fixed weight 1/2, then a second implicit sweep;
//! * **MCS** (modified Craig–Sneyd): mixed-term correction with weight
//!   `theta` plus a full-operator correction with weight `1/2 - theta`;
//! * **HV** (Hundsdorfer–Verwer): full-operator correction with weight 1/2
//!   and a second sweep relative to the predictor output.
//!
//! Each implicit stage solves `(I - theta dt A_j) x = rhs`, which on a
//! periodic grid is one cyclic tridiagonal system per grid line.  The systems
//! have constant coefficients, so one factorization per direction is shared
//! by every line and every step.

use crate::discretization::{Field, SplitOperator};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// The four splitting schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Do,
    Cs,
    Mcs,
    Hv,
}

impl SchemeKind {
    /// All schemes in canonical order.
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Do, SchemeKind::Cs, SchemeKind::Mcs, SchemeKind::Hv];

    /// Lower-case name used in CLI arguments and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Do => "do",
            SchemeKind::Cs => "cs",
            SchemeKind::Mcs => "mcs",
            SchemeKind::Hv => "hv",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "do" => Ok(SchemeKind::Do),
            "cs" => Ok(SchemeKind::Cs),
            "mcs" => Ok(SchemeKind::Mcs),
            "hv" => Ok(SchemeKind::Hv),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?} (expected do, cs, mcs or hv)"
            ))),
        }
    }
}

/// A scheme together with its implicitness parameter `theta in (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub theta: f64,
}

impl SchemeConfig {
    /// Validates `0 < theta <= 1`.
    pub fn new(kind: SchemeKind, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1], got {theta}"
            )));
        }
        Ok(Self { kind, theta })
    }
}

/// What to do when field values stop being finite during time stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverflowPolicy {
    /// Fail with [`Error::InstabilityOverflow`] at the first non-finite stage.
    Strict,
    /// Let values grow without checks; callers inspect the result.  Used by
    /// instability experiments where divergence is the expected outcome.
    Tolerant,
}

/// Factorization of one cyclic tridiagonal system
/// `(1 + 2c) x_p - c x_{p-1} - c x_{p+1} = r_p` (indices mod `n`), i.e.
/// `(I - a A_j)` restricted to a single grid line.
///
/// The periodic corner entries are handled with a rank-one update: the
/// tridiagonal core is factored once (Thomas algorithm, no pivoting needed —
/// the matrix is strictly diagonally dominant for `c >= 0`) and the
/// Sherman–Morrison correction vector is precomputed.
#[derive(Debug, Clone)]
pub struct LineSolver {
    n: usize,
    c: f64,
    /// Reciprocals of the eliminated diagonal.
    inv_diag: Vec<f64>,
    /// Solution of the core system for the rank-one carrier vector.
    z: Vec<f64>,
    /// `v = (1, 0, ..., 0, c/b)` dotted with the core solution, rescaled by
    /// `1 / (1 + v . z)`.
    v_last: f64,
    denom_inv: f64,
}

impl LineSolver {
    /// Factors the system for a line of `n >= 3` points and coefficient
    /// `c = a * kappa >= 0`.  `c = 0` yields the identity.
    pub fn new(n: usize, c: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "cyclic line solver needs n >= 3, got {n}"
            )));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "line solver coefficient must be finite and >= 0, got {c}"
            )));
        }
        if c == 0.0 {
            return Ok(Self {
                n,
                c,
                inv_diag: Vec::new(),
                z: Vec::new(),
                v_last: 0.0,
                denom_inv: 0.0,
            });
        }
        let b = 1.0 + 2.0 * c;
        // Rank-one split: corners are reproduced by u v^T with
        // u = (-b, 0, ..., 0, -c), v = (1, 0, ..., 0, c/b); the core keeps
        // diag[0] = 2b and diag[n-1] = b + c^2/b.
        let mut inv_diag = Vec::with_capacity(n);
        let mut diag_prev = 2.0 * b;
        inv_diag.push(1.0 / diag_prev);
        for p in 1..n {
            let d = if p + 1 < n { b } else { b + c * c / b };
            let d = d - c * c / diag_prev;
            inv_diag.push(1.0 / d);
            diag_prev = d;
        }
        let mut solver = Self {
            n,
            c,
            inv_diag,
            z: Vec::new(),
            v_last: c / b,
            denom_inv: 0.0,
        };
        let mut z = vec![0.0; n];
        z[0] = -b;
        z[n - 1] = -c;
        solver.solve_core(&mut z);
        let denom = 1.0 + z[0] + solver.v_last * z[n - 1];
        debug_assert!(denom.abs() > 1e-12, "singular rank-one correction");
        solver.z = z;
        solver.denom_inv = 1.0 / denom;
        Ok(solver)
    }

    /// Number of points per line (at least 3, so never empty).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the solver is the identity (`c = 0`).
    pub fn is_identity(&self) -> bool {
        self.c == 0.0
    }

    /// Thomas solve of the corner-free core, in place.
    fn solve_core(&self, x: &mut [f64]) {
        let c = self.c;
        for p in 1..self.n {
            x[p] += c * self.inv_diag[p - 1] * x[p - 1];
        }
        x[self.n - 1] *= self.inv_diag[self.n - 1];
        for p in (0..self.n - 1).rev() {
            x[p] = (x[p] + c * x[p + 1]) * self.inv_diag[p];
        }
    }

    /// Solves one line in place.
    pub fn solve(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        if self.c == 0.0 {
            return;
        }
        self.solve_core(x);
        let factor = (x[0] + self.v_last * x[self.n - 1]) * self.denom_inv;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi -= factor * zi;
        }
    }
}

/// Solves `(I - a A_j) x = rhs` for one directional term `j in 1..=k`.
///
/// This is the one-shot entry point; repeated stepping goes through
/// [`Stepper`], which factors each direction once.
pub fn solve_line_system(op: &SplitOperator, j: usize, a: f64, rhs: &Field) -> Result<Field> {
    if j == 0 || j > op.k() {
        return Err(Error::InvalidParameter(format!(
            "implicit solves exist for directional terms 1..={}, got {j}",
            op.k()
        )));
    }
    if rhs.len() != op.grid().total() {
        return Err(Error::DimensionMismatch {
            expected: op.grid().total(),
            got: rhs.len(),
        });
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "implicit weight must be finite and >= 0, got {a}"
        )));
    }
    let axis = j - 1;
    let solver = LineSolver::new(op.grid().size(axis), a * op.kappa(axis))?;
    let mut out = rhs.clone();
    let mut scratch = vec![0.0; op.grid().size(axis)];
    solve_axis(op, axis, &solver, &mut out, &mut scratch);
    Ok(out)
}

/// Applies a line solver to every grid line along `axis`, in place.
fn solve_axis(
    op: &SplitOperator,
    axis: usize,
    solver: &LineSolver,
    field: &mut Field,
    scratch: &mut [f64],
) {
    if solver.is_identity() {
        return;
    }
    let grid = op.grid();
    let m = grid.size(axis);
    let stride = grid.stride(axis);
    let block = stride * m;
    let total = grid.total();
    let values = field.values_mut();
    let mut base_hi = 0;
    while base_hi < total {
        for lo in 0..stride {
            let base = base_hi + lo;
            for p in 0..m {
                scratch[p] = values[base + p * stride];
            }
            solver.solve(&mut scratch[..m]);
            for p in 0..m {
                values[base + p * stride] = scratch[p];
            }
        }
        base_hi += block;
    }
}

/// Reusable stepping state: one factored line solver per direction plus the
/// scheme and step size they were built for.
pub struct Stepper<'a> {
    scheme: SchemeConfig,
    op: &'a SplitOperator,
    dt: f64,
    solvers: Vec<LineSolver>,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    /// Factors the per-direction implicit systems for weight `theta * dt`.
    pub fn new(scheme: SchemeConfig, op: &'a SplitOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step size must be finite and > 0, got {dt}"
            )));
        }
        let solvers = (0..op.k())
            .map(|a| LineSolver::new(op.grid().size(a), scheme.theta * dt * op.kappa(a)))
            .collect::<Result<Vec<_>>>()?;
        let max_m = (0..op.k()).map(|a| op.grid().size(a)).max().unwrap_or(0);
        Ok(Self {
            scheme,
            op,
            dt,
            solvers,
            scratch: vec![0.0; max_m],
        })
    }

    /// The step size the solvers were factored for.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances one step from `(t, u)` to `t + dt`.  `step_index` is only
    /// used to label overflow errors in strict mode.
    pub fn advance(
        &mut self,
        u: &Field,
        t: f64,
        policy: OverflowPolicy,
        step_index: usize,
    ) -> Result<Field> {
        let op = self.op;
        let k = op.k();
        let theta = self.scheme.theta;
        let dt = self.dt;
        let t_new = t + dt;
        let check = |f: &Field, stage: &'static str| -> Result<()> {
            if policy == OverflowPolicy::Strict && !f.is_finite() {
                return Err(Error::InstabilityOverflow {
                    step: step_index,
                    stage,
                });
            }
            Ok(())
        };

        // F_j(t, u) = A_j u + g_j(t), computed once and reused everywhere.
        let mut f_prev: Vec<Field> = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let mut f = Field::zeros(u.len());
            op.accumulate_term(j, u, &mut f);
            if let Some(g) = op.forcing_field(j, t) {
                f.axpy(1.0, &g);
            }
            f_prev.push(f);
        }
        let g_new: Option<Vec<Field>> = if op.has_forcing() {
            Some((0..=k).map(|j| op.forcing_field(j, t_new).unwrap()).collect())
        } else {
            None
        };

        // Predictor: explicit full step, then one implicit correction per
        // direction: (I - theta dt A_j) Y_j = Y_{j-1} - theta dt F_j(t, u)
        //                                     [+ theta dt g_j(t_new)].
        let mut y0 = u.clone();
        for f in &f_prev {
            y0.axpy(dt, f);
        }
        check(&y0, "explicit predictor")?;
        let mut y = y0.clone();
        for j in 1..=k {
            y.axpy(-theta * dt, &f_prev[j]);
            if let Some(gn) = &g_new {
                y.axpy(theta * dt, &gn[j]);
            }
            solve_axis(op, j - 1, &self.solvers[j - 1], &mut y, &mut self.scratch);
            check(&y, "predictor solve")?;
        }
        if self.scheme.kind == SchemeKind::Do {
            return Ok(y);
        }

        // Corrector start value per scheme.
        let mut yt = match self.scheme.kind {
            SchemeKind::Do => unreachable!(),
            SchemeKind::Cs => {
                // Y_0 + 1/2 dt (F_0(t_new, Y_k) - F_0(t, u)).
                let mut f0_new = Field::zeros(u.len());
                op.accumulate_term(0, &y, &mut f0_new);
                if let Some(gn) = &g_new {
                    f0_new.axpy(1.0, &gn[0]);
                }
                let mut yt = y0;
                yt.axpy_diff(0.5 * dt, &f0_new, &f_prev[0]);
                yt
            }
            SchemeKind::Mcs => {
                // Y_0 + theta dt (F_0 diff) + (1/2 - theta) dt (full F diff).
                let mut f0_new = Field::zeros(u.len());
                op.accumulate_term(0, &y, &mut f0_new);
                let mut f_new_sum = f0_new.clone();
                for j in 1..=k {
                    op.accumulate_term(j, &y, &mut f_new_sum);
                }
                if let Some(gn) = &g_new {
                    f0_new.axpy(1.0, &gn[0]);
                    for g in gn {
                        f_new_sum.axpy(1.0, g);
                    }
                }
                let mut f_prev_sum = Field::zeros(u.len());
                for f in &f_prev {
                    f_prev_sum.axpy(1.0, f);
                }
                let mut yt = y0;
                yt.axpy_diff(theta * dt, &f0_new, &f_prev[0]);
                yt.axpy_diff((0.5 - theta) * dt, &f_new_sum, &f_prev_sum);
                yt
            }
            SchemeKind::Hv => {
                // Y_0 + 1/2 dt (F(t_new, Y_k) - F(t, u)).
                let mut f_new_sum = Field::zeros(u.len());
                for j in 0..=k {
                    op.accumulate_term(j, &y, &mut f_new_sum);
                }
                if let Some(gn) = &g_new {
                    for g in gn {
                        f_new_sum.axpy(1.0, g);
                    }
                }
                let mut f_prev_sum = Field::zeros(u.len());
                for f in &f_prev {
                    f_prev_sum.axpy(1.0, f);
                }
                let mut yt = y0;
                yt.axpy_diff(0.5 * dt, &f_new_sum, &f_prev_sum);
                yt
            }
        };
        check(&yt, "explicit corrector")?;

        // Second implicit sweep.  CS and MCS correct against F_j(t, u); HV
        // corrects against F_j(t_new, Y_k), whose forcing contribution
        // cancels, leaving only A_j Y_k.
        for j in 1..=k {
            match self.scheme.kind {
                SchemeKind::Cs | SchemeKind::Mcs => {
                    yt.axpy(-theta * dt, &f_prev[j]);
                    if let Some(gn) = &g_new {
                        yt.axpy(theta * dt, &gn[j]);
                    }
                }
                SchemeKind::Hv => {
                    let mut aj_y = Field::zeros(u.len());
                    op.accumulate_term(j, &y, &mut aj_y);
                    yt.axpy(-theta * dt, &aj_y);
                }
                SchemeKind::Do => unreachable!(),
            }
            solve_axis(op, j - 1, &self.solvers[j - 1], &mut yt, &mut self.scratch);
            check(&yt, "corrector solve")?;
        }
        Ok(yt)
    }
}

/// Performs one ADI step from `(t, u)`; factors the line systems on the fly.
pub fn step(
    scheme: SchemeConfig,
    op: &SplitOperator,
    u: &Field,
    t: f64,
    dt: f64,
    policy: OverflowPolicy,
) -> Result<Field> {
    if u.len() != op.grid().total() {
        return Err(Error::DimensionMismatch {
            expected: op.grid().total(),
            got: u.len(),
        });
    }
    Stepper::new(scheme, op, dt)?.advance(u, t, policy, 0)
}

/// Integrates from `u0` at `t = 0` to `t = t_final` in `n_steps` equal steps
/// of size `dt = t_final / n_steps`, evaluating time as `t_n = n * dt`.
pub fn integrate(
    scheme: SchemeConfig,
    op: &SplitOperator,
    u0: &Field,
    t_final: f64,
    n_steps: usize,
    policy: OverflowPolicy,
) -> Result<Field> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "final time must be finite and > 0, got {t_final}"
        )));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    if u0.len() != op.grid().total() {
        return Err(Error::DimensionMismatch {
            expected: op.grid().total(),
            got: u0.len(),
        });
    }
    let dt = t_final / n_steps as f64;
    let mut stepper = Stepper::new(scheme, op, dt)?;
    let mut u = u0.clone();
    for n in 0..n_steps {
        u = stepper.advance(&u, n as f64 * dt, policy, n + 1)?;
    }
    Ok(u)
}
