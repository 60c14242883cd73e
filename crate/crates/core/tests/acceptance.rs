//! Acceptance suite: one test per shipping criterion, each printing a
//! single pass/fail line (visible with `--nocapture`).
//!
//! Tolerances are pinned in the assertions; timings are informational.

// Stability verdicts use `!(x <= bound)` on purpose: unlike `x > bound`, the
// negated form also treats NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use adi_diffusion::adi::{self, OverflowPolicy, SchemeConfig, SchemeKind};
use adi_diffusion::bounds::{
    hv_constant, necessary_lower_bound, octant_min_bruteforce, octant_nonneg_criterion,
    sufficient_lower_bound, OctantGrid,
};
use adi_diffusion::discretization::{Field, GridSpec, SplitOperator};
use adi_diffusion::harness::{
    convergence_order, default_step_densities, errors_monotone, run_convergence,
    ConvergenceConfig, ConvergenceRecord, ThetaPolicy,
};
use adi_diffusion::model::ProblemSpec;
use adi_diffusion::symbol::{
    amplification, lemma1_check, scaled_eigenvalues, stability_sweep, SweepSampling,
};

fn report(num: usize, name: &str, started: Instant, pass: bool, detail: &str) {
    println!(
        "criterion {num:2} {name}: {} ({:.1} s){}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        if pass || detail.is_empty() {
            String::new()
        } else {
            format!(" — {detail}")
        }
    );
    assert!(pass, "criterion {num} ({name}) failed: {detail}");
}

fn table_row_contains(text: &str, scheme: &str, value: &str) -> bool {
    text.lines()
        .any(|l| l.split_whitespace().next() == Some(scheme) && l.contains(value))
}

#[test]
fn criterion_01_bound_table_reproduction() {
    let t0 = Instant::now();
    let run = |k: &str, gamma: &str| -> String {
        let out = Command::new(env!("CARGO_BIN_EXE_adi"))
            .args(["bounds", "--k", k, "--gamma", gamma])
            .output()
            .expect("bounds runs");
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let t2 = run("2", "0.9");
    let t3 = run("3", "0.75");
    let mut missing = Vec::new();
    for (text, scheme, value) in [
        (&t2, "mcs", "0.317"),
        (&t2, "hv", "0.278"),
        (&t3, "do", "0.556"),
        (&t3, "mcs", "0.385"),
        (&t3, "hv", "0.335"),
        (&t3, "cs", "0.500"),
    ] {
        if !table_row_contains(text, scheme, value) {
            missing.push(format!("{scheme}={value}"));
        }
    }
    report(
        1,
        "bound-table-reproduction",
        t0,
        missing.is_empty(),
        &format!("missing {missing:?}\n2D table:\n{t2}\n3D table:\n{t3}"),
    );
}

#[test]
fn criterion_02_bound_families_sharp() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for k in [2, 3] {
        for i in 0..=100 {
            let gamma = i as f64 / 100.0;
            for kind in SchemeKind::ALL {
                let s = sufficient_lower_bound(kind, k, gamma).unwrap().theta_min;
                let n = necessary_lower_bound(kind, k, gamma).unwrap().theta_min;
                worst = worst.max((s - n).abs());
            }
        }
    }
    report(
        2,
        "sufficient-equals-necessary-k23",
        t0,
        worst <= 1e-12,
        &format!("largest gap {worst:e}"),
    );
}

#[test]
fn criterion_03_full_coupling_regression() {
    let t0 = Instant::now();
    let douglas = sufficient_lower_bound(SchemeKind::Do, 3, 1.0).unwrap().theta_min;
    let a2 = hv_constant(2);
    let pass = douglas == 2.0 / 3.0 && (a2 - (1.0 - 2.0_f64.sqrt() / 2.0)).abs() <= 1e-14;
    report(
        3,
        "full-coupling-constants",
        t0,
        pass,
        &format!("Do(3,1) = {douglas}, hv constant = {a2}"),
    );
}

/// Fields holding the real and imaginary parts of the Fourier mode `ell`.
fn mode_fields(grid: &GridSpec, ell: &[usize]) -> (Field, Field) {
    let mut cos_part = Field::zeros(grid.total());
    let mut sin_part = Field::zeros(grid.total());
    for flat in 0..grid.total() {
        let x = grid.point(&grid.coords(flat));
        let phase: f64 = 2.0 * PI
            * ell
                .iter()
                .zip(&x)
                .map(|(&l, xi)| l as f64 * xi)
                .sum::<f64>();
        cos_part.values_mut()[flat] = phase.cos();
        sin_part.values_mut()[flat] = phase.sin();
    }
    (cos_part, sin_part)
}

#[test]
fn criterion_04_mode_amplification_oracle() {
    let t0 = Instant::now();
    let cases = [
        (ProblemSpec::template_2d(0.9).unwrap(), GridSpec::uniform(2, 8).unwrap()),
        (ProblemSpec::template_3d(0.75).unwrap(), GridSpec::uniform(3, 6).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for (problem, grid) in cases {
        let op = SplitOperator::new(&problem, grid.clone()).unwrap();
        let dx = grid.dx_all();
        for flat in 0..grid.total() {
            let ell = grid.coords(flat);
            let phi: Vec<f64> = ell
                .iter()
                .enumerate()
                .map(|(a, &l)| 2.0 * PI * l as f64 / grid.size(a) as f64)
                .collect();
            let (cos_part, sin_part) = mode_fields(&grid, &ell);
            for dt in [0.37, 2.0] {
                let zs = scaled_eigenvalues(&problem.d, &problem.beta, dt, &dx, &phi).unwrap();
                for theta in [0.25, 0.5, 0.8] {
                    for kind in SchemeKind::ALL {
                        let m = amplification(kind, theta, &zs).unwrap();
                        let scheme = SchemeConfig::new(kind, theta).unwrap();
                        for part in [&cos_part, &sin_part] {
                            let stepped = adi::step(
                                scheme,
                                &op,
                                part,
                                0.0,
                                dt,
                                OverflowPolicy::Strict,
                            )
                            .unwrap();
                            for (got, init) in stepped.values().iter().zip(part.values()) {
                                let err = (got - m * init).abs() / (1.0 + m.abs());
                                if err > worst {
                                    worst = err;
                                    worst_at = format!(
                                        "k={} ell={ell:?} {kind} theta={theta} dt={dt}",
                                        grid.k()
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    report(
        4,
        "step-matches-amplification-factor",
        t0,
        worst <= 1e-12,
        &format!("worst relative deviation {worst:e} at {worst_at}"),
    );
}

fn sweep_max(problem: &ProblemSpec, kind: SchemeKind, theta: f64) -> f64 {
    let sampling = SweepSampling::standard(problem.k());
    stability_sweep(kind, theta, &problem.d, &problem.beta, &sampling)
        .unwrap()
        .max_abs_amplification
}

#[test]
fn criterion_05_stable_at_the_bound() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    for problem in [
        ProblemSpec::template_2d(0.9).unwrap(),
        ProblemSpec::template_3d(0.75).unwrap(),
    ] {
        let gamma = problem.d.gamma_min().unwrap();
        for kind in SchemeKind::ALL {
            let theta = sufficient_lower_bound(kind, problem.k(), gamma)
                .unwrap()
                .theta_min;
            let max = sweep_max(&problem, kind, theta);
            if !(max <= 1.0 + 1e-12) {
                failures.push(format!("k={} {kind}: max |M| = {max}", problem.k()));
            }
        }
    }
    report(
        5,
        "sweep-stable-at-sufficient-bound",
        t0,
        failures.is_empty(),
        &failures.join("; "),
    );
}

#[test]
fn criterion_06_unstable_below_the_bound() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    for (problem, policy) in [
        (ProblemSpec::template_2d(0.9).unwrap(), ThetaPolicy::Preset2d),
        (ProblemSpec::template_3d(0.75).unwrap(), ThetaPolicy::Preset3d),
    ] {
        for kind in SchemeKind::ALL {
            let theta = policy.resolve(kind, problem.k(), 0.0).unwrap();
            let max = sweep_max(&problem, kind, theta);
            if !(max > 1.0) {
                failures.push(format!(
                    "k={} {kind} theta={theta}: max |M| = {max}",
                    problem.k()
                ));
            }
        }
    }
    report(
        6,
        "sweep-unstable-at-preset-theta",
        t0,
        failures.is_empty(),
        &failures.join("; "),
    );
}

fn convergence_records(
    problem: ProblemSpec,
    policy: &ThetaPolicy,
    m: usize,
    densities: Vec<usize>,
) -> Vec<ConvergenceRecord> {
    let k = problem.k();
    let gamma = problem.d.gamma_min().unwrap();
    let schemes = policy.resolve_all(&SchemeKind::ALL, k, gamma).unwrap();
    run_convergence(&ConvergenceConfig {
        problem,
        grid_sizes: vec![m],
        schemes,
        t_final: 5.0,
        step_densities: densities,
    })
    .unwrap()
}

fn check_orders(
    records: &[ConvergenceRecord],
    m: usize,
    do_tol: f64,
    second_tol: f64,
    failures: &mut Vec<String>,
) {
    for kind in SchemeKind::ALL {
        let slope = convergence_order(records, kind, m, 1e-3, 1e-1)
            .expect("enough points in the fit window");
        let expected = if kind == SchemeKind::Do { 1.0 } else { 2.0 };
        let tol = if kind == SchemeKind::Do { do_tol } else { second_tol };
        if (slope - expected).abs() > tol {
            failures.push(format!("{kind}: slope {slope:.3} not within {expected} +- {tol}"));
        }
        if !errors_monotone(records, kind, m) {
            let errs: Vec<String> = records
                .iter()
                .filter(|r| r.kind == kind)
                .map(|r| format!("({:.3e}, {:.3e})", r.dt, r.error))
                .collect();
            failures.push(format!("{kind}: errors not monotone: {}", errs.join(" ")));
        }
    }
}

#[test]
fn criterion_07_convergence_orders_2d() {
    let t0 = Instant::now();
    let records = convergence_records(
        ProblemSpec::template_2d(0.9).unwrap(),
        &ThetaPolicy::Sufficient,
        40,
        default_step_densities(),
    );
    let mut failures = Vec::new();
    check_orders(&records, 40, 0.15, 0.2, &mut failures);
    report(
        7,
        "convergence-orders-2d",
        t0,
        failures.is_empty(),
        &failures.join("; "),
    );
}

#[test]
fn criterion_08_preset_theta_blows_up_2d() {
    let t0 = Instant::now();
    // Step sizes between 1e-2 and 1 <=> densities between 1 and 100.
    let densities: Vec<usize> = default_step_densities()
        .into_iter()
        .filter(|&n| n <= 100)
        .collect();
    let problem = ProblemSpec::template_2d(0.9).unwrap();
    let stable = convergence_records(
        problem.clone(),
        &ThetaPolicy::Sufficient,
        40,
        densities.clone(),
    );
    let preset = convergence_records(problem, &ThetaPolicy::Preset2d, 40, densities.clone());
    let mut failures = Vec::new();
    for kind in SchemeKind::ALL {
        let mut max_ratio: f64 = 0.0;
        let blew_up = densities.iter().any(|&n| {
            let find = |records: &[ConvergenceRecord]| {
                records
                    .iter()
                    .find(|r| r.kind == kind && r.steps_per_unit == n)
                    .map(|r| r.error)
                    .expect("record exists")
            };
            let bad = find(&preset);
            let good = find(&stable);
            max_ratio = max_ratio.max(bad / good);
            bad.is_infinite() || bad > 10.0 * good
        });
        if !blew_up {
            // Known red for cs: at 90% of its bound the scheme is von
            // Neumann unstable on this grid (criterion 6 confirms
            // amplification above 1), but every unstable mode carries
            // negligible content in the smooth benchmark initial data and
            // the growth factor reachable with dt in [1e-2, 1] (about
            // 2.6e3 at dt ~ 0.056) stays below the smooth truncation
            // error, so the observed global-error ratio peaks near 2.5.
            // The blowup surfaces only on finer grids (m = 80: ratio ~ 48
            // at dt ~ 0.015), where rounding noise is amplified by ~1e14.
            failures.push(format!(
                "{kind}: no step size with a 10x error blowup (max ratio {max_ratio:.2})"
            ));
        }
    }
    report(
        8,
        "preset-theta-error-blowup-2d",
        t0,
        failures.is_empty(),
        &failures.join("; "),
    );
}

#[test]
fn criterion_09_eigenvalue_and_octant_lemmas() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();

    // Structural eigenvalue properties on random modes and mesh ratios.
    for problem in [
        ProblemSpec::template_2d(0.9).unwrap(),
        ProblemSpec::template_3d(0.75).unwrap(),
    ] {
        let k = problem.k();
        let gamma = problem.d.gamma_min().unwrap();
        let dx = vec![1.0; k];
        for i in 0..10_000 {
            let r = (rng.random_range(1e-3_f64.ln()..1e6_f64.ln())).exp();
            let phi: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            let zs = scaled_eigenvalues(&problem.d, &problem.beta, r, &dx, &phi).unwrap();
            let rep = lemma1_check(&zs, gamma);
            if !rep.passed() {
                failures.push(format!("k={k} sample {i}: {rep} (r={r:.3e}, phi={phi:?})"));
                break;
            }
        }
    }

    // Octant criterion versus the exhaustive grid minimum.
    let grid = OctantGrid { max: 5.0, step: 0.05 };
    for i in 0..100 {
        let alpha = rng.random_range(0.0..3.0);
        let delta = rng.random_range(1e-3..4.0);
        let ok = octant_nonneg_criterion(alpha, delta).unwrap();
        let min = octant_min_bruteforce(alpha, delta, &grid).unwrap();
        let eps = 10.0 * grid.step * (1.0 + delta);
        let consistent = if ok { min >= -1e-9 } else { min < eps };
        if !consistent {
            failures.push(format!(
                "octant case {i}: alpha={alpha:.4} delta={delta:.4} ok={ok} min={min:.4e}"
            ));
        }
    }
    report(
        9,
        "eigenvalue-and-octant-lemmas",
        t0,
        failures.is_empty(),
        &failures.join("; "),
    );
}

#[test]
fn criterion_10_convergence_orders_3d() {
    let t0 = Instant::now();
    // A trimmed density list: full coverage at the coarse end for the
    // monotonicity check, log-spaced points across the slope window
    // [1e-3, 1e-1].  (Identical structure to the 2D run, thinned to keep
    // the 3D runtime moderate.)
    let densities: Vec<usize> = default_step_densities()
        .into_iter()
        .filter(|&n| n <= 100 || [178, 316, 562, 1000].contains(&n))
        .collect();
    let records = convergence_records(
        ProblemSpec::template_3d(0.75).unwrap(),
        &ThetaPolicy::Sufficient,
        40,
        densities,
    );
    let mut failures = Vec::new();
    check_orders(&records, 40, 0.2, 0.25, &mut failures);
    report(
        10,
        "convergence-orders-3d",
        t0,
        failures.is_empty(),
        &failures.join("; "),
    );
}
