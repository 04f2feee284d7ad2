mod common;

use std::fs;

use detdiff::partition::PartitionEquationSystem;
use detdiff::transfer::stationary_density;
use detdiff::{
    build_transition_matrices, closed_form_d, diffusion_spectral, estimate_stats, evolve, second_moment,
    simulate_ensemble, solve_partition_system, Error, ErrorKind, EnsembleConfig, Execution, LatticeDensity,
    LiftMap, MapSpec, MarkovPartition,
};
use proptest::prelude::*;

use common::{data_dir, golden_cases};

// Closed form, spectral and Monte Carlo agree on maps where all three apply.
#[test]
fn consistency_triangle() {
    for (l, seed) in [(3.0, 1), (5.0, 2)] {
        let map = LiftMap::linear(l).unwrap();
        let closed = closed_form_d(&map).unwrap();
        let spectral = diffusion_spectral(&build_transition_matrices(&map, &MarkovPartition::unit()).unwrap()).unwrap();
        let stats = estimate_stats(&simulate_ensemble(&map, &EnsembleConfig::new(40_000, 40, seed)).unwrap()).unwrap();
        assert!((closed - spectral.d).abs() < 1e-10);
        assert!((stats.d_estimate - spectral.d).abs() < 4.0 * stats.stderr, "L={l}: {stats:?}");
    }
}

// One cell: D is half the variance of the jump law.
#[test]
fn scalar_degeneration() {
    for l in [3.0, 5.0, 7.0] {
        let set = build_transition_matrices(&LiftMap::linear(l).unwrap(), &MarkovPartition::unit()).unwrap();
        let (s1, s2) = second_moment(&set).unwrap();
        let r = diffusion_spectral(&set).unwrap();
        assert!(s1.abs() < 1e-15);
        assert!((r.d - 0.5 * (s2 - s1 * s1)).abs() < 1e-10);
        assert_eq!(r.alpha.unwrap(), vec![1.0]);
    }
}

#[test]
fn solved_systems_drive_the_spectral_engine() {
    for g in golden_cases() {
        let Some(file) = g.system else { continue };
        let text = fs::read_to_string(data_dir().join("systems").join(file)).unwrap();
        let sol = solve_partition_system(&PartitionEquationSystem::from_json(&text).unwrap()).unwrap();
        let map = LiftMap::linear(sol.lambda).unwrap();
        let set = build_transition_matrices(&map, &sol.partition).unwrap();
        let r = diffusion_spectral(&set).unwrap();
        let direct = diffusion_spectral(&g.matrices()).unwrap();
        assert!((r.d - direct.d).abs() < 1e-9, "{}", g.name);
        assert!(r.drift.abs() < 1e-12);
    }
}

#[test]
fn map_files_parse() {
    for entry in fs::read_dir(data_dir().join("maps")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let spec: MapSpec = serde_json::from_str(&text).unwrap();
        assert!(spec.build().unwrap().min_stretch() > 1.0);
    }
}

#[test]
fn evolution_conserves_mass_and_spreads_at_rate_two_d() {
    let g = &golden_cases()[0];
    let set = g.matrices();
    let d = diffusion_spectral(&set).unwrap().d;
    let start = LatticeDensity::delta(&g.lengths());
    let a = evolve(&set, &start, 200, Execution::default()).unwrap();
    let b = evolve(&set, &a, 200, Execution::Sequential).unwrap();
    assert!((a.total_mass() - 1.0).abs() < 1e-10);
    assert!((b.total_mass() - 1.0).abs() < 1e-10);
    let rate = (b.lattice_variance() - a.lattice_variance()) / 200.0;
    assert!((rate - 2.0 * d).abs() < 1e-6, "{rate} vs {}", 2.0 * d);
}

#[test]
fn inconsistent_partition_is_a_validation_error() {
    let err = build_transition_matrices(&LiftMap::linear(3.3).unwrap(), &MarkovPartition::unit()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Validation);
    assert!(matches!(err, Error::Inconsistent { .. }));
}

#[test]
fn reducible_chain_is_a_numerical_error() {
    // Left half-cells map onto left half-cells and right onto right, so the
    // cell chain has two closed classes.
    let quarters = vec![-0.5, -0.25, 0.0, 0.25, 0.5];
    let partition = MarkovPartition::new(quarters.clone()).unwrap();
    let map =
        LiftMap::from_pieces(quarters, vec![[-1.5, -1.0], [0.5, 1.0], [-1.0, -0.5], [1.0, 1.5]]).unwrap();
    match build_transition_matrices(&map, &partition).and_then(|s| stationary_density(&s)) {
        Err(e) => assert_eq!(e.kind(), ErrorKind::Numerical),
        Ok(alpha) => panic!("expected a reducible chain, got {alpha:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Odd integer slopes satisfy the closed-form hypothesis.
    #[test]
    fn closed_form_matches_spectral(half_slope in 1i64..6) {
        let l = (2 * half_slope + 1) as f64;
        let map = LiftMap::linear(l).unwrap();
        let set = build_transition_matrices(&map, &MarkovPartition::unit()).unwrap();
        let s = diffusion_spectral(&set).unwrap().d;
        prop_assert!((s - closed_form_d(&map).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn stationary_density_is_normalised(k in 0usize..9) {
        let g = &golden_cases()[k];
        let alpha = stationary_density(&g.matrices()).unwrap();
        let norm: f64 = alpha.iter().zip(g.lengths()).map(|(a, l)| a * l).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
        prop_assert!(alpha.iter().all(|&a| a > 0.0));
    }
}
