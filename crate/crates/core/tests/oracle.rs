use proptest::prelude::*;
use snap_lab::env::{grid_step, GridWorld, RewardSpec};
use snap_lab::harness::coverage::monte_carlo_occupancy;
use snap_lab::oracle::{
    enumerate_open_loop_return, exact_visitation, optimal_return_under_persistence, sequence_return, OracleStrategy,
    TabularMDP, DEFAULT_AUGMENTED_CAP,
};
use snap_lab::persistence::PersistenceStrategy;

fn oracle_strategies() -> Vec<OracleStrategy> {
    vec![
        OracleStrategy::Random,
        OracleStrategy::Fixed { kappa: 3 },
        OracleStrategy::ConstantRepeat { p: 0.7 },
        OracleStrategy::RandomZeta { mu: 2.0, n_max: 6 },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occupancy_is_conserved(seed in any::<u64>(), ns in 1usize..6, na in 1usize..4, steps in 1usize..12) {
        let mdp = TabularMDP::random(ns, na, steps, seed).unwrap();
        for s in oracle_strategies() {
            let v = exact_visitation(&mdp, &s, steps, DEFAULT_AUGMENTED_CAP).unwrap();
            prop_assert_eq!(v.per_step.len(), steps);
            for row in &v.per_step {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                prop_assert!(row.iter().all(|&p| p >= 0.0));
            }
            prop_assert!((v.mean.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn coarser_persistence_never_wins(seed in any::<u64>(), horizon in 1usize..9, gamma in prop::sample::select(vec![0.9, 0.99, 1.0])) {
        let mdp = TabularMDP::random(4, 3, horizon, seed).unwrap();
        let v: Vec<f64> = (1..=8).map(|k| optimal_return_under_persistence(&mdp, k, gamma).unwrap()).collect();
        for k1 in 1..=8 {
            prop_assert!(v[0] >= v[k1 - 1] - 1e-9, "kappa 1 dominates");
            for k2 in (k1..=8).step_by(k1) {
                prop_assert!(v[k1 - 1] >= v[k2 - 1] - 1e-9, "{} | {}", k1, k2);
            }
        }
    }

    #[test]
    fn deterministic_dp_equals_enumeration(seed in any::<u64>(), horizon in 1usize..7, kappa in 1usize..7) {
        let mdp = TabularMDP::random(3, 3, horizon, seed).unwrap().determinized();
        let dp = optimal_return_under_persistence(&mdp, kappa, 0.95).unwrap();
        let en = enumerate_open_loop_return(&mdp, kappa, 0.95, 10_000).unwrap();
        prop_assert!((dp - en).abs() < 1e-9);
    }
}

#[test]
fn stochastic_dp_bounds_every_open_loop_sequence() {
    for seed in 0..20 {
        let mdp = TabularMDP::random(3, 2, 5, seed).unwrap();
        let dp = optimal_return_under_persistence(&mdp, 1, 0.9).unwrap();
        for code in 0..32u32 {
            let seq: Vec<usize> = (0..5).map(|t| ((code >> t) & 1) as usize).collect();
            assert!(sequence_return(&mdp, &seq, 0.9) <= dp + 1e-12);
        }
    }
}

#[test]
fn enumeration_respects_its_limit() {
    let mdp = TabularMDP::random(2, 3, 9, 0).unwrap();
    assert!(enumerate_open_loop_return(&mdp, 1, 0.99, 10_000).is_err(), "3^9 sequences");
    assert!(enumerate_open_loop_return(&mdp, 3, 0.99, 10_000).is_ok());
}

#[test]
fn grid_mdp_follows_grid_dynamics() {
    let mdp = TabularMDP::grid(5, (1, 3), 10).unwrap();
    mdp.validate().unwrap();
    let g = GridWorld::new(5, (1, 3), None, RewardSpec::None, 10).unwrap();
    for x in 0..5 {
        for y in 0..5 {
            for a in 0..4 {
                let next = grid_step(5, (x, y), a).unwrap();
                assert_eq!(mdp.transitions[g.cell_index((x, y))][a][g.cell_index(next)], 1.0);
            }
        }
    }
    assert_eq!(mdp.initial[g.cell_index((1, 3))], 1.0);
}

#[test]
fn zero_repeat_probability_is_the_random_walk() {
    let mdp = TabularMDP::grid(5, (2, 2), 8).unwrap();
    let a = exact_visitation(&mdp, &OracleStrategy::Random, 8, DEFAULT_AUGMENTED_CAP).unwrap();
    let b = exact_visitation(&mdp, &OracleStrategy::ConstantRepeat { p: 0.0 }, 8, DEFAULT_AUGMENTED_CAP).unwrap();
    let c = exact_visitation(&mdp, &OracleStrategy::Fixed { kappa: 1 }, 8, DEFAULT_AUGMENTED_CAP).unwrap();
    for t in 0..8 {
        for s in 0..25 {
            assert!((a.per_step[t][s] - b.per_step[t][s]).abs() < 1e-15);
            assert!((a.per_step[t][s] - c.per_step[t][s]).abs() < 1e-15);
        }
    }
}

#[test]
fn zeta_walk_matches_simulation() {
    let (size, start, steps) = (5, (2, 2), 6);
    let strategy = PersistenceStrategy::random_zeta(2.0);
    let mdp = TabularMDP::grid(size, start, steps).unwrap();
    let exact = exact_visitation(&mdp, &OracleStrategy::try_from(&strategy).unwrap(), steps, DEFAULT_AUGMENTED_CAP)
        .unwrap();
    let mc = monte_carlo_occupancy(size, start, &strategy, steps, 200_000, 17).unwrap();
    for c in 0..size * size {
        let se = mc.stderr[c].max(1e-12);
        assert!((mc.mean[c] - exact.mean[c]).abs() <= 4.0 * se, "cell {c}");
    }
}

#[test]
fn snap_has_no_exact_oracle() {
    assert!(OracleStrategy::try_from(&PersistenceStrategy::snap(1.0)).is_err());
}

#[test]
fn augmented_cap_is_enforced() {
    let mdp = TabularMDP::grid(5, (2, 2), 10).unwrap();
    assert!(exact_visitation(&mdp, &OracleStrategy::Fixed { kappa: 3 }, 10, 10).is_err());
}

#[test]
fn mdp_json_round_trip() {
    let mdp = TabularMDP::random(4, 3, 8, 42).unwrap();
    let back = TabularMDP::from_json_str(&mdp.to_json().unwrap()).unwrap();
    assert_eq!(mdp, back);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mdp.json");
    std::fs::write(&path, mdp.to_json().unwrap()).unwrap();
    assert_eq!(TabularMDP::load(&path).unwrap(), mdp);
    let mut bad = mdp.clone();
    bad.transitions[0][0][0] += 0.1;
    assert!(bad.validate().is_err());
    assert!(TabularMDP::load(&dir.path().join("missing.json")).is_err());
}
