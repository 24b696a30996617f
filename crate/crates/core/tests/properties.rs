use arbrepair::constraints::cousot::enumerate_full_cousot;
use arbrepair::constraints::{
    build_constraints, detect_violations, ConstraintKind, STRIKE_MATCH_TOL,
};
use arbrepair::lp::{LpSolver, LpStatus, SimplexSolver};
use arbrepair::normalize::{denormalize_prices, NormalizedSurface};
use arbrepair::repair::{
    ba_cost, compute_delta0, count_perturbations, primal_l1_lp, primal_l1ba_lp, repair_l1,
    repair_l1ba, RepairConfig,
};
use arbrepair::synthetic::random_lattice_surface;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lattice(seed: u64, noise: f64) -> NormalizedSurface {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_lattice_surface(&mut rng, 4, 8, noise)
        .normalize()
        .unwrap()
}

/// Lattice surface with random half-spreads in `[0.001, 0.05]`.
fn lattice_with_bands(seed: u64, noise: f64) -> NormalizedSurface {
    let s = lattice(seed, noise);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = s.n_vars();
    let ask: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.05)).collect();
    let bid: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.05)).collect();
    s.with_spreads(&ask, &bid).unwrap()
}

fn full_clean(s: &NormalizedSurface, prices: &[f64], tol: f64) -> bool {
    enumerate_full_cousot(s, prices, tol, STRIKE_MATCH_TOL)
        .unwrap()
        .is_clean()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_and_full_families_agree(seed in any::<u64>(), noise in 0.0f64..0.4) {
        let s = lattice(seed, noise);
        let sys = build_constraints(&s);
        let c = s.prices();
        let reduced = detect_violations(&sys, &c, 0.0).unwrap().is_clean();
        prop_assert_eq!(reduced, full_clean(&s, &c, 0.0));
    }

    #[test]
    fn row_counts(seed in any::<u64>()) {
        let s = lattice(seed, 0.1);
        let sys = build_constraints(&s);
        let m = s.n_expiries();
        let n = s.n_vars();
        prop_assert_eq!(sys.count(ConstraintKind::Outright), m);
        prop_assert_eq!(
            sys.count(ConstraintKind::VerticalSpreadLower) + sys.count(ConstraintKind::VerticalSpreadUpperAtZero),
            n + m
        );
        prop_assert_eq!(sys.count(ConstraintKind::VerticalButterfly), n - m);
        prop_assert_eq!(sys.counts().values().sum::<usize>(), sys.len());
    }

    #[test]
    fn repair_is_feasible_and_idempotent(seed in any::<u64>(), noise in 0.0f64..0.5) {
        let s = lattice_with_bands(seed, noise);
        let sys = build_constraints(&s);
        for r in [
            repair_l1(&s, &sys, &RepairConfig::default()).unwrap(),
            repair_l1ba(&s, &sys, &RepairConfig::default()).unwrap(),
        ] {
            prop_assert!(r.min_residual.unwrap_or(0.0) >= -1e-9);
            prop_assert!(full_clean(&s, &r.repaired, 1e-7));
            prop_assert!(r.n_effective <= r.n_perturbed);
            let fixed = s.with_prices(&r.repaired).unwrap();
            let again = repair_l1(&fixed, &sys, &RepairConfig::default()).unwrap();
            prop_assert!(again.objective_value <= 1e-8);
        }
    }

    #[test]
    fn dual_route_matches_primal_lp(seed in any::<u64>(), noise in 0.0f64..0.5) {
        let s = lattice_with_bands(seed, noise);
        let sys = build_constraints(&s);
        let c = s.prices();
        let solver = SimplexSolver::default();

        let dual = repair_l1(&s, &sys, &RepairConfig::default()).unwrap();
        let primal = solver.solve(&primal_l1_lp(&sys, &c)).unwrap();
        prop_assert_eq!(primal.status, LpStatus::Optimal);
        prop_assert!((dual.objective_value - primal.objective).abs() <= 1e-7);

        let d0 = compute_delta0(&s);
        let dual = repair_l1ba(&s, &sys, &RepairConfig::default()).unwrap();
        let lp = primal_l1ba_lp(&sys, &c, &s.ask_spreads(), &s.bid_spreads(), d0);
        let primal = solver.solve(&lp).unwrap();
        prop_assert_eq!(primal.status, LpStatus::Optimal);
        prop_assert!((dual.objective_value - primal.objective).abs() <= 1e-7);
    }

    #[test]
    fn uniform_minimal_bands_reduce_to_l1(seed in any::<u64>(), noise in 0.0f64..0.5) {
        let s = lattice(seed, noise);
        let d = 0.5 / s.n_vars() as f64;
        let band = vec![d; s.n_vars()];
        let s = s.with_spreads(&band, &band).unwrap();
        prop_assert_eq!(compute_delta0(&s), d);
        let sys = build_constraints(&s);
        let a = repair_l1(&s, &sys, &RepairConfig::default()).unwrap();
        let b = repair_l1ba(&s, &sys, &RepairConfig::default()).unwrap();
        prop_assert!((a.objective_value - b.objective_value).abs() <= 1e-8);
    }

    #[test]
    fn repair_is_deterministic(seed in any::<u64>()) {
        let s = lattice_with_bands(seed, 0.3);
        let sys = build_constraints(&s);
        let a = repair_l1ba(&s, &sys, &RepairConfig::default()).unwrap();
        let b = repair_l1ba(&s, &sys, &RepairConfig::default()).unwrap();
        prop_assert_eq!(
            a.repaired.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.repaired.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn counts_are_nested(seed in any::<u64>(), noise in 0.0f64..0.5) {
        let s = lattice_with_bands(seed, noise);
        let eps: Vec<f64> = s.prices().iter().map(|c| c * noise - 0.02).collect();
        let (ne, ned) = count_perturbations(&eps, &s, 1e-7).unwrap();
        prop_assert!(ned <= ne);
    }

    #[test]
    fn ba_cost_shape(x in -1.0f64..1.0, da in 1e-4f64..0.2, db in 1e-4f64..0.2, frac in 0.01f64..1.0) {
        let d0 = frac * da.min(db);
        let v = ba_cost(x, da, db, d0);
        prop_assert!(v >= 0.0);
        if x >= -db && x <= da {
            prop_assert!(v <= d0 + 1e-12);
        } else if x > da {
            prop_assert!((v - (x - da + d0)).abs() <= 1e-12);
        } else {
            prop_assert!((v - (-x - db + d0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalization_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_lattice_surface(&mut rng, 4, 8, 0.1);
        let s = raw.normalize().unwrap();
        for (qi, premium) in denormalize_prices(&s, &s.prices()).unwrap() {
            let mid = raw.quotes[qi].mid;
            prop_assert!((premium - mid).abs() <= 1e-12 * mid.abs());
        }
    }
}
