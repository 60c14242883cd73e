//! Property-based invariants: model validation, operator structure, scheme
//! algebra, and bound relationships on randomized inputs.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use adi_diffusion::adi::{self, OverflowPolicy, SchemeConfig, SchemeKind};
use adi_diffusion::bounds::{
    necessary_lower_bound, octant_min_bruteforce, octant_nonneg_criterion, sufficient_lower_bound,
    OctantGrid,
};
use adi_diffusion::discretization::{Field, GridSpec, SplitOperator};
use adi_diffusion::model::{
    validate_psd, DiffusionMatrix, InitialFunction, MixedStencilParams, ProblemSpec, PSD_REL_TOL,
};

/// Entries of a symmetric positive semidefinite matrix `G^T G + 0.05 I`
/// built from a raw coefficient vector of length `k*k`.
fn gram_entries(k: usize, g: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for l in 0..k {
                s += g[l * k + i] * g[l * k + j];
            }
            d[i * k + j] = s;
        }
    }
    for i in 0..k {
        d[i * k + i] += 0.05;
    }
    d
}

/// Stencil weights whose associated check matrix is a correlation matrix
/// (hence positive semidefinite by construction).
fn correlation_beta(k: usize, h: &[f64]) -> Vec<f64> {
    let b = gram_entries(k, h);
    let mut beta = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                beta[i * k + j] = -b[i * k + j] / (b[i * k + i] * b[j * k + j]).sqrt();
            }
        }
    }
    beta
}

fn diffusion(k: usize) -> impl Strategy<Value = DiffusionMatrix> {
    proptest::collection::vec(-1.0..1.0_f64, k * k)
        .prop_map(move |g| DiffusionMatrix::new(k, gram_entries(k, &g)).expect("gram matrix"))
}

fn stencil(k: usize) -> impl Strategy<Value = MixedStencilParams> {
    proptest::collection::vec(-1.0..1.0_f64, k * k).prop_map(move |h| {
        MixedStencilParams::new(k, correlation_beta(k, &h)).expect("correlation weights")
    })
}

fn problem(k: usize) -> impl Strategy<Value = ProblemSpec> {
    (diffusion(k), stencil(k)).prop_map(|(d, beta)| {
        ProblemSpec::new(d, beta, InitialFunction::Constant(1.0)).expect("problem")
    })
}

fn grid(k: usize) -> impl Strategy<Value = GridSpec> {
    proptest::collection::vec(3usize..=6, k).prop_map(|dims| GridSpec::new(dims).expect("grid"))
}

fn field(n: usize) -> impl Strategy<Value = Field> {
    proptest::collection::vec(-1.0..1.0_f64, n).prop_map(Field::from_raw)
}

fn dims() -> impl Strategy<Value = usize> {
    2usize..=3
}

/// A conservative bound on the spectral radius of the discrete operator.
fn operator_scale(problem: &ProblemSpec, grid: &GridSpec) -> f64 {
    let k = grid.k();
    let mut scale = 0.0;
    for i in 0..k {
        for j in 0..k {
            scale += 4.0 * problem.d.entry(i, j).abs() / (grid.dx(i) * grid.dx(j));
        }
    }
    scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_min_is_invariant_under_diagonal_scaling(
        k in dims(),
        g in proptest::collection::vec(-1.0..1.0_f64, 9),
        s in proptest::collection::vec(0.2..5.0_f64, 3),
    ) {
        let d = DiffusionMatrix::new(k, gram_entries(k, &g[..k * k])).unwrap();
        let scaled: Vec<f64> = (0..k * k)
            .map(|idx| s[idx / k] * s[idx % k] * d.entries()[idx])
            .collect();
        let ds = DiffusionMatrix::new(k, scaled).unwrap();
        let a = d.gamma_min().unwrap();
        let b = ds.gamma_min().unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a), "{a} vs {b}");
    }

    #[test]
    fn psd_validation_agrees_with_quadratic_forms(
        k in dims(),
        g in proptest::collection::vec(-1.0..1.0_f64, 9),
        seed in any::<u64>(),
    ) {
        let entries = gram_entries(k, &g[..k * k]);
        prop_assert!(validate_psd(k, &entries, PSD_REL_TOL).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let quad = |m: &[f64], x: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..k {
                for j in 0..k {
                    s += x[i] * m[i * k + j] * x[j];
                }
            }
            s
        };
        let scale: f64 = entries.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        for _ in 0..20 {
            let x: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            prop_assert!(quad(&entries, &x) >= -1e-10 * scale);
        }

        // Shift down by more than the largest eigenvalue: every unit vector
        // becomes a witness of indefiniteness.
        let trace: f64 = (0..k).map(|i| entries[i * k + i]).sum();
        let c = trace + 1.0;
        let mut shifted = entries.clone();
        for i in 0..k {
            shifted[i * k + i] -= c;
        }
        prop_assert!(!validate_psd(k, &shifted, PSD_REL_TOL).unwrap());
        for _ in 0..5 {
            let x: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!(quad(&shifted, &x) < c * norm2 * 1e-12 - norm2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_splits_dissipates_and_preserves_mass(
        (problem, grid, u) in dims().prop_flat_map(|k| (problem(k), grid(k)))
            .prop_flat_map(|(p, g)| {
                let n = g.total();
                (Just(p), Just(g), field(n))
            }),
    ) {
        let op = SplitOperator::new(&problem, grid.clone()).unwrap();
        let full = op.apply_full(&u).unwrap();

        // Splitting identity: the directional and mixed terms sum to the
        // full operator.
        let mut sum = Field::zeros(grid.total());
        for j in 0..=grid.k() {
            sum.axpy(1.0, &op.apply_term(j, &u).unwrap());
        }
        let scale = 1.0 + operator_scale(&problem, &grid);
        for (a, b) in sum.values().iter().zip(full.values()) {
            prop_assert!((a - b).abs() <= 1e-11 * scale);
        }

        // Dissipativity: u^T A u <= 0 up to roundoff (the symbol is real
        // and nonpositive).
        let dot: f64 = u
            .values()
            .iter()
            .zip(full.values())
            .map(|(a, b)| a * b)
            .sum();
        let norm2: f64 = u.values().iter().map(|v| v * v).sum();
        prop_assert!(dot <= 1e-9 * scale * (1.0 + norm2), "u^T A u = {dot}");

        // Mass conservation: column sums of A vanish on periodic grids.
        let mass: f64 = full.values().iter().sum();
        prop_assert!(mass.abs() <= 1e-9 * scale * grid.total() as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steps_are_linear_in_the_state(
        (problem, grid, u, v, kind_idx, theta, dt) in dims()
            .prop_flat_map(|k| (problem(k), grid(k)))
            .prop_flat_map(|(p, g)| {
                let n = g.total();
                (Just(p), Just(g), field(n), field(n), 0usize..4, 0.05..=1.0_f64, 0.01..0.5_f64)
            }),
    ) {
        let op = SplitOperator::new(&problem, grid.clone()).unwrap();
        let kind = SchemeKind::ALL[kind_idx];
        let scheme = SchemeConfig::new(kind, theta).unwrap();
        let mut combo = Field::zeros(grid.total());
        combo.axpy(2.0, &u);
        combo.axpy(-3.0, &v);
        let left = adi::step(scheme, &op, &combo, 0.0, dt, OverflowPolicy::Strict).unwrap();
        let su = adi::step(scheme, &op, &u, 0.0, dt, OverflowPolicy::Strict).unwrap();
        let sv = adi::step(scheme, &op, &v, 0.0, dt, OverflowPolicy::Strict).unwrap();
        let scale = 1.0 + operator_scale(&problem, &grid) * dt;
        for ((l, a), b) in left.values().iter().zip(su.values()).zip(sv.values()) {
            let right = 2.0 * a - 3.0 * b;
            prop_assert!((l - right).abs() <= 1e-9 * scale * (1.0 + right.abs()));
        }
    }

    #[test]
    fn cs_and_mcs_coincide_at_theta_half(
        (problem, grid, u, dt) in dims()
            .prop_flat_map(|k| (problem(k), grid(k)))
            .prop_flat_map(|(p, g)| {
                let n = g.total();
                (Just(p), Just(g), field(n), 0.01..0.5_f64)
            }),
    ) {
        let op = SplitOperator::new(&problem, grid).unwrap();
        let cs = adi::step(
            SchemeConfig::new(SchemeKind::Cs, 0.5).unwrap(),
            &op, &u, 0.0, dt, OverflowPolicy::Strict,
        ).unwrap();
        let mcs = adi::step(
            SchemeConfig::new(SchemeKind::Mcs, 0.5).unwrap(),
            &op, &u, 0.0, dt, OverflowPolicy::Strict,
        ).unwrap();
        for (a, b) in cs.values().iter().zip(mcs.values()) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn cs_reduces_to_do_without_mixed_terms(
        (k, diag, dims_raw, seed, theta, dt) in dims().prop_flat_map(|k| (
            Just(k),
            proptest::collection::vec(0.05..2.0_f64, k),
            proptest::collection::vec(3usize..=6, k),
            any::<u64>(),
            0.05..=1.0_f64,
            0.01..0.5_f64,
        )),
    ) {
        let mut entries = vec![0.0; k * k];
        for i in 0..k {
            entries[i * k + i] = diag[i];
        }
        let d = DiffusionMatrix::new(k, entries).unwrap();
        let problem =
            ProblemSpec::new(d, MixedStencilParams::zeros(k), InitialFunction::Constant(1.0))
                .unwrap();
        let grid = GridSpec::new(dims_raw).unwrap();
        let op = SplitOperator::new(&problem, grid.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Field::from_raw(
            (0..grid.total()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let cs = adi::step(
            SchemeConfig::new(SchemeKind::Cs, theta).unwrap(),
            &op, &u, 0.0, dt, OverflowPolicy::Strict,
        ).unwrap();
        let douglas = adi::step(
            SchemeConfig::new(SchemeKind::Do, theta).unwrap(),
            &op, &u, 0.0, dt, OverflowPolicy::Strict,
        ).unwrap();
        for (a, b) in cs.values().iter().zip(douglas.values()) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bounds_are_sharp_in_low_dimensions_and_monotone(
        k in dims(),
        gamma in 0.0..=1.0_f64,
        gamma2 in 0.0..=1.0_f64,
    ) {
        for kind in SchemeKind::ALL {
            let s = sufficient_lower_bound(kind, k, gamma).unwrap().theta_min;
            let n = necessary_lower_bound(kind, k, gamma).unwrap().theta_min;
            prop_assert!((s - n).abs() <= 1e-12, "{kind} k={k} gamma={gamma}: {s} vs {n}");

            let (lo, hi) = if gamma <= gamma2 { (gamma, gamma2) } else { (gamma2, gamma) };
            for kk in [2, 3, 4, 6] {
                let a = necessary_lower_bound(kind, kk, lo).unwrap().theta_min;
                let b = necessary_lower_bound(kind, kk, hi).unwrap().theta_min;
                prop_assert!(a <= b + 1e-15);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn octant_criterion_is_consistent_with_grid_minimum(
        alpha in 0.0..=3.0_f64,
        delta in 0.05..=4.0_f64,
    ) {
        let grid = OctantGrid { max: 5.0, step: 0.05 };
        let ok = octant_nonneg_criterion(alpha, delta).unwrap();
        let min = octant_min_bruteforce(alpha, delta, &grid).unwrap();
        let eps = 10.0 * grid.step * (1.0 + delta);
        if ok {
            // Grid points are actual octant points: a nonnegative cubic
            // cannot dip below zero there.
            prop_assert!(min >= -1e-9, "criterion holds but grid min = {min}");
        } else {
            prop_assert!(min < eps, "criterion fails but grid min = {min}");
        }
    }
}
