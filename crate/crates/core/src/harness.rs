//! Experiment plumbing: `theta` selection policies, bound tables,
//! convergence runs against the exact semidiscrete solution, order fits,
//! and deterministic CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::adi::{integrate, OverflowPolicy, SchemeConfig, SchemeKind};
use crate::bounds::{necessary_lower_bound, round3, sufficient_lower_bound};
use crate::discretization::{Field, GridSpec, SplitOperator};
use crate::model::ProblemSpec;
use crate::reference::exact_semidiscrete;
use crate::symbol::{logspace, stability_sweep_visit, SweepResult, SweepSampling};
use crate::{Error, Result};

/// How to pick the implicitness parameter for a scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaPolicy {
    /// The sharp sufficient stability bound for the problem's coupling.
    Sufficient,
    /// The necessary stability bound (coincides with the sufficient one for
    /// `k = 2, 3`, but exists for every dimension).
    Necessary,
    /// A multiple of the sufficient bound, e.g. `fraction:0.9`.
    Fraction(f64),
    /// A fixed value, e.g. `value:0.5`.
    Value(f64),
    /// Benchmark presets for the 2D test problem:
    /// Do 0.45, CS 0.45, MCS 0.29, HV 0.25.
    Preset2d,
    /// Benchmark presets for the 3D test problem:
    /// Do 0.50, CS 0.45, MCS 0.35, HV 0.30.
    Preset3d,
}

impl FromStr for ThetaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_tail = |tail: &str, what: &str| -> Result<f64> {
            tail.parse::<f64>().map_err(|_| {
                Error::Config(format!("invalid {what} in theta policy: {tail:?}"))
            })
        };
        match s {
            "sufficient" => Ok(Self::Sufficient),
            "necessary" => Ok(Self::Necessary),
            "preset-2d" => Ok(Self::Preset2d),
            "preset-3d" => Ok(Self::Preset3d),
            _ => {
                if let Some(tail) = s.strip_prefix("fraction:") {
                    let f = parse_tail(tail, "fraction")?;
                    if !(f > 0.0) || !f.is_finite() {
                        return Err(Error::Config(format!(
                            "theta fraction must be finite and > 0, got {f}"
                        )));
                    }
                    Ok(Self::Fraction(f))
                } else if let Some(tail) = s.strip_prefix("value:") {
                    let v = parse_tail(tail, "value")?;
                    Ok(Self::Value(v))
                } else {
                    Err(Error::Config(format!(
                        "unknown theta policy {s:?}; expected sufficient, necessary, \
                         fraction:F, value:V, preset-2d, or preset-3d"
                    )))
                }
            }
        }
    }
}

impl ThetaPolicy {
    /// Resolves the policy to a concrete `theta` for one scheme on a
    /// `k`-dimensional problem with coupling `gamma`.
    pub fn resolve(&self, kind: SchemeKind, k: usize, gamma: f64) -> Result<f64> {
        match self {
            Self::Sufficient => Ok(sufficient_lower_bound(kind, k, gamma)?.theta_min),
            Self::Necessary => Ok(necessary_lower_bound(kind, k, gamma)?.theta_min),
            Self::Fraction(f) => {
                Ok(f * sufficient_lower_bound(kind, k, gamma)?.theta_min)
            }
            Self::Value(v) => Ok(*v),
            Self::Preset2d => {
                if k != 2 {
                    return Err(Error::UnsupportedDimension {
                        k,
                        reason: "preset-2d applies to two-dimensional problems",
                    });
                }
                Ok(match kind {
                    SchemeKind::Do => 0.45,
                    SchemeKind::Cs => 0.45,
                    SchemeKind::Mcs => 0.29,
                    SchemeKind::Hv => 0.25,
                })
            }
            Self::Preset3d => {
                if k != 3 {
                    return Err(Error::UnsupportedDimension {
                        k,
                        reason: "preset-3d applies to three-dimensional problems",
                    });
                }
                Ok(match kind {
                    SchemeKind::Do => 0.5,
                    SchemeKind::Cs => 0.45,
                    SchemeKind::Mcs => 0.35,
                    SchemeKind::Hv => 0.3,
                })
            }
        }
    }

    /// Resolves the policy for several schemes at once.
    pub fn resolve_all(
        &self,
        kinds: &[SchemeKind],
        k: usize,
        gamma: f64,
    ) -> Result<Vec<SchemeConfig>> {
        kinds
            .iter()
            .map(|&kind| SchemeConfig::new(kind, self.resolve(kind, k, gamma)?))
            .collect()
    }
}

/// Grid-normalized discrete L2 distance `sqrt(sum (a_i - b_i)^2 / n)`;
/// infinite when either field has blown up.
pub fn global_error(reference: &Field, numeric: &Field) -> f64 {
    assert_eq!(reference.len(), numeric.len(), "field sizes differ");
    if !reference.is_finite() || !numeric.is_finite() {
        return f64::INFINITY;
    }
    let sum: f64 = reference
        .values()
        .iter()
        .zip(numeric.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (sum / reference.len() as f64).sqrt()
}

/// One row of a [`BoundTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub kind: SchemeKind,
    /// Absent above three dimensions, where only necessary bounds exist.
    pub sufficient: Option<f64>,
    pub necessary: f64,
}

/// Both bound families for all four schemes at a given `(k, gamma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTable {
    pub k: usize,
    pub gamma: f64,
    pub rows: Vec<BoundRow>,
}

/// Computes the bound table for dimension `k >= 2` and coupling `gamma`.
pub fn bound_table(k: usize, gamma: f64) -> Result<BoundTable> {
    let mut rows = Vec::with_capacity(SchemeKind::ALL.len());
    for kind in SchemeKind::ALL {
        let sufficient = if k <= 3 {
            Some(sufficient_lower_bound(kind, k, gamma)?.theta_min)
        } else {
            None
        };
        let necessary = necessary_lower_bound(kind, k, gamma)?.theta_min;
        rows.push(BoundRow {
            kind,
            sufficient,
            necessary,
        });
    }
    Ok(BoundTable { k, gamma, rows })
}

impl fmt::Display for BoundTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "theta lower bounds (k = {}, gamma = {:.3})",
            self.k, self.gamma
        )?;
        writeln!(f, "{:<8}{:>12}{:>12}", "scheme", "sufficient", "necessary")?;
        for row in &self.rows {
            match row.sufficient {
                Some(s) => writeln!(
                    f,
                    "{:<8}{:>12.3}{:>12.3}",
                    row.kind.name(),
                    round3(s),
                    round3(row.necessary)
                )?,
                None => writeln!(
                    f,
                    "{:<8}{:>12}{:>12.3}",
                    row.kind.name(),
                    "n/a",
                    round3(row.necessary)
                )?,
            }
        }
        Ok(())
    }
}

/// Default step densities for convergence studies: about 25 log-spaced
/// integer counts of steps per unit time between 1 and 1000, deduplicated.
pub fn default_step_densities() -> Vec<usize> {
    let mut out: Vec<usize> = logspace(1.0, 1000.0, 25)
        .into_iter()
        .map(|x| (x.round() as usize).clamp(1, 1000))
        .collect();
    out.dedup();
    out
}

/// A convergence experiment: several schemes and grids, one problem.
#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub problem: ProblemSpec,
    /// Uniform grid sizes `m` (each direction gets `m` points).
    pub grid_sizes: Vec<usize>,
    pub schemes: Vec<SchemeConfig>,
    pub t_final: f64,
    /// Steps per unit time; the step size is `1/n` (up to rounding the
    /// total step count to an integer).
    pub step_densities: Vec<usize>,
}

/// Outcome of one (scheme, grid, step size) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub kind: SchemeKind,
    pub theta: f64,
    pub m: usize,
    pub steps_per_unit: usize,
    pub dt: f64,
    /// Grid-normalized L2 distance to the exact semidiscrete solution at
    /// `t_final`; infinite when the run blew up.
    pub error: f64,
}

/// Runs every (scheme, grid, step density) combination against the exact
/// semidiscrete endpoint, computing one reference per grid.  Records are
/// sorted by scheme, then `theta`, grid size, and descending step size.
/// Unstable runs are reported as infinite error rather than failing.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRecord>> {
    if cfg.grid_sizes.is_empty() || cfg.schemes.is_empty() || cfg.step_densities.is_empty() {
        return Err(Error::InvalidParameter(
            "convergence runs need at least one grid, scheme, and step density".into(),
        ));
    }
    if !(cfg.t_final > 0.0) || !cfg.t_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "final time must be finite and > 0, got {}",
            cfg.t_final
        )));
    }
    if let Some(&bad) = cfg.step_densities.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidParameter(format!(
            "step densities must be >= 1, got {bad}"
        )));
    }
    let mut records = Vec::new();
    for &m in &cfg.grid_sizes {
        let grid = GridSpec::uniform(cfg.problem.k(), m)?;
        let op = SplitOperator::new(&cfg.problem, grid.clone())?;
        let u0 = op.sample_initial();
        let u_ref = exact_semidiscrete(&cfg.problem, &grid, &u0, cfg.t_final)?;
        for &scheme in &cfg.schemes {
            for &n in &cfg.step_densities {
                let steps = (cfg.t_final * n as f64).round().max(1.0) as usize;
                let dt = cfg.t_final / steps as f64;
                let u = integrate(
                    scheme,
                    &op,
                    &u0,
                    cfg.t_final,
                    steps,
                    OverflowPolicy::Tolerant,
                )?;
                records.push(ConvergenceRecord {
                    kind: scheme.kind,
                    theta: scheme.theta,
                    m,
                    steps_per_unit: n,
                    dt,
                    error: global_error(&u_ref, &u),
                });
            }
        }
    }
    records.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then(a.theta.total_cmp(&b.theta))
            .then(a.m.cmp(&b.m))
            .then(a.steps_per_unit.cmp(&b.steps_per_unit))
    });
    Ok(records)
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn fit_order(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &logs {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    if den == 0.0 {
        return None;
    }
    Some(num / den)
}

/// Fits the observed order of one scheme on one grid over step sizes in
/// `[dt_min, dt_max]` (inclusive, with a tiny tolerance for endpoint
/// roundoff).
pub fn convergence_order(
    records: &[ConvergenceRecord],
    kind: SchemeKind,
    m: usize,
    dt_min: f64,
    dt_max: f64,
) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| {
            r.kind == kind
                && r.m == m
                && r.dt >= dt_min * (1.0 - 1e-9)
                && r.dt <= dt_max * (1.0 + 1e-9)
        })
        .map(|r| (r.dt, r.error))
        .collect();
    fit_order(&pts)
}

/// True when the errors of one scheme on one grid never increase as the
/// step size shrinks (up to a tiny relative slack).
pub fn errors_monotone(records: &[ConvergenceRecord], kind: SchemeKind, m: usize) -> bool {
    let mut rows: Vec<&ConvergenceRecord> = records
        .iter()
        .filter(|r| r.kind == kind && r.m == m)
        .collect();
    rows.sort_by(|a, b| b.dt.total_cmp(&a.dt));
    rows.windows(2)
        .all(|w| w[1].error <= w[0].error * (1.0 + 1e-12) || w[1].error == w[0].error)
}

/// Writes convergence records as CSV (`scheme,theta,m,dt,error`), floats in
/// full-precision scientific notation, `\n` line endings.  Output is
/// byte-identical across runs for the same records.
pub fn write_convergence_csv(records: &[ConvergenceRecord], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "scheme,theta,m,dt,error")?;
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{},{:.16e},{:.16e}",
            r.kind.name(),
            r.theta,
            r.m,
            r.dt,
            r.error
        )?;
    }
    Ok(())
}

/// Streams a stability sweep as CSV
/// (`scheme,theta,r,phi_1,...,phi_k,abs_amplification`) and returns the
/// sweep summary.  Row order follows the sweep's deterministic sample
/// order.
pub fn write_sweep_csv(
    kind: SchemeKind,
    theta: f64,
    problem: &ProblemSpec,
    sampling: &SweepSampling,
    out: &mut dyn Write,
) -> Result<SweepResult> {
    let k = problem.k();
    let mut header = String::from("scheme,theta,r");
    for a in 1..=k {
        header.push_str(&format!(",phi_{a}"));
    }
    header.push_str(",abs_amplification");
    writeln!(out, "{header}")?;

    let mut io_err: Option<std::io::Error> = None;
    let result = stability_sweep_visit(
        kind,
        theta,
        &problem.d,
        &problem.beta,
        sampling,
        |r, phi, m| {
            if io_err.is_some() {
                return;
            }
            let mut row = format!("{},{:.16e},{:.16e}", kind.name(), theta, r);
            for p in phi {
                row.push_str(&format!(",{p:.16e}"));
            }
            row.push_str(&format!(",{m:.16e}"));
            if let Err(e) = writeln!(out, "{row}") {
                io_err = Some(e);
            }
        },
    )?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_policies_parse_and_reject() {
        assert_eq!("sufficient".parse::<ThetaPolicy>().unwrap(), ThetaPolicy::Sufficient);
        assert_eq!("necessary".parse::<ThetaPolicy>().unwrap(), ThetaPolicy::Necessary);
        assert_eq!("preset-2d".parse::<ThetaPolicy>().unwrap(), ThetaPolicy::Preset2d);
        assert_eq!("preset-3d".parse::<ThetaPolicy>().unwrap(), ThetaPolicy::Preset3d);
        assert_eq!(
            "fraction:0.9".parse::<ThetaPolicy>().unwrap(),
            ThetaPolicy::Fraction(0.9)
        );
        assert_eq!("value:0.5".parse::<ThetaPolicy>().unwrap(), ThetaPolicy::Value(0.5));
        assert!("optimal".parse::<ThetaPolicy>().is_err());
        assert!("fraction:x".parse::<ThetaPolicy>().is_err());
        assert!("fraction:-1".parse::<ThetaPolicy>().is_err());
    }

    #[test]
    fn theta_policies_resolve() {
        let p2 = ThetaPolicy::Preset2d;
        assert_eq!(p2.resolve(SchemeKind::Do, 2, 0.9).unwrap(), 0.45);
        assert_eq!(p2.resolve(SchemeKind::Mcs, 2, 0.9).unwrap(), 0.29);
        assert!(p2.resolve(SchemeKind::Do, 3, 0.9).is_err());
        let p3 = ThetaPolicy::Preset3d;
        assert_eq!(p3.resolve(SchemeKind::Hv, 3, 0.75).unwrap(), 0.3);

        let suff = ThetaPolicy::Sufficient.resolve(SchemeKind::Mcs, 2, 0.9).unwrap();
        assert!((suff - 1.9 / 6.0).abs() < 1e-15);
        let frac = ThetaPolicy::Fraction(0.9).resolve(SchemeKind::Mcs, 2, 0.9).unwrap();
        assert!((frac - 0.9 * 1.9 / 6.0).abs() < 1e-15);
        assert_eq!(
            ThetaPolicy::Value(0.77).resolve(SchemeKind::Cs, 2, 0.9).unwrap(),
            0.77
        );

        let schemes = ThetaPolicy::Sufficient
            .resolve_all(&SchemeKind::ALL, 2, 0.9)
            .unwrap();
        assert_eq!(schemes.len(), 4);
        assert_eq!(schemes[0].theta, 0.5);
    }

    #[test]
    fn global_error_is_a_grid_normalized_l2_distance() {
        let a = Field::from_raw(vec![0.0, 0.0, 3.0, 4.0]);
        let b = Field::zeros(4);
        assert!((global_error(&a, &b) - 2.5).abs() < 1e-15);
        let bad = Field::from_raw(vec![0.0, f64::NAN, 0.0, 0.0]);
        assert!(global_error(&a, &bad).is_infinite());
    }

    #[test]
    fn bound_table_renders_rounded_values() {
        let text = bound_table(2, 0.9).unwrap().to_string();
        assert!(text.contains("0.317"), "{text}");
        assert!(text.contains("0.278"), "{text}");
        assert!(text.contains("mcs"), "{text}");

        let high = bound_table(4, 0.9).unwrap();
        assert!(high.rows.iter().all(|r| r.sufficient.is_none()));
        assert!(high.to_string().contains("n/a"));
    }

    #[test]
    fn default_densities_cover_three_decades() {
        let n = default_step_densities();
        assert_eq!(*n.first().unwrap(), 1);
        assert_eq!(*n.last().unwrap(), 1000);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
        assert!(n.len() >= 20);
    }

    #[test]
    fn fit_order_recovers_exact_power_laws() {
        let pts: Vec<(f64, f64)> = (1..6)
            .map(|i| {
                let dt = 10.0_f64.powi(-i);
                (dt, 3.7 * dt * dt)
            })
            .collect();
        let slope = fit_order(&pts).unwrap();
        assert!((slope - 2.0).abs() < 1e-9, "{slope}");
        assert!(fit_order(&pts[..1]).is_none());
        assert!(fit_order(&[(0.1, f64::INFINITY), (0.01, 1.0)]).is_none());
    }

    #[test]
    fn convergence_runner_produces_sorted_finite_records() {
        let cfg = ConvergenceConfig {
            problem: ProblemSpec::template_2d(0.9).unwrap(),
            grid_sizes: vec![6],
            schemes: vec![
                SchemeConfig::new(SchemeKind::Cs, 0.5).unwrap(),
                SchemeConfig::new(SchemeKind::Do, 0.5).unwrap(),
            ],
            t_final: 1.0,
            step_densities: vec![2, 4],
        };
        let records = run_convergence(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        // Canonical order: Do before CS, then increasing density.
        assert_eq!(records[0].kind, SchemeKind::Do);
        assert_eq!(records[0].steps_per_unit, 2);
        assert_eq!(records[1].steps_per_unit, 4);
        assert_eq!(records[2].kind, SchemeKind::Cs);
        for r in &records {
            assert!(r.error.is_finite() && r.error > 0.0, "{r:?}");
            assert!((r.dt - 1.0 / r.steps_per_unit as f64).abs() < 1e-15);
        }
        // Halving the step should not increase the error for stable theta.
        assert!(records[1].error <= records[0].error);
        assert!(errors_monotone(&records, SchemeKind::Do, 6));
    }

    #[test]
    fn convergence_csv_is_deterministic() {
        let records = vec![ConvergenceRecord {
            kind: SchemeKind::Hv,
            theta: 0.3,
            m: 8,
            steps_per_unit: 10,
            dt: 0.1,
            error: 1.25e-4,
        }];
        let mut first = Vec::new();
        write_convergence_csv(&records, &mut first).unwrap();
        let mut second = Vec::new();
        write_convergence_csv(&records, &mut second).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("scheme,theta,m,dt,error\n"));
        assert!(text.contains("hv,"), "{text}");
        assert!(text.contains("1.2500000000000000e-4"), "{text}");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn sweep_csv_streams_every_sample() {
        let problem = ProblemSpec::template_2d(1.0).unwrap();
        let sampling = SweepSampling {
            n_phi: 4,
            mesh_ratios: vec![0.5, 50.0],
            anisotropy: None,
        };
        let mut buf = Vec::new();
        let result =
            write_sweep_csv(SchemeKind::Cs, 0.5, &problem, &sampling, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scheme,theta,r,phi_1,phi_2,abs_amplification");
        assert_eq!(lines.len(), 1 + result.samples);
        assert_eq!(result.samples, 2 * 4 * 4);
    }
}
