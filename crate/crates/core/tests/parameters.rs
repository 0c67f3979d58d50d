mod common;

use datahide::random::DEFAULT_C;
use datahide::scheme::derive_parameters;
use proptest::prelude::*;

fn assert_matches(n: usize, k: usize, d: usize, eps: f64, delta: f64) {
    let got = derive_parameters(n, k, d, eps, delta, DEFAULT_C).unwrap();
    let want = common::oracle_derive(n as u64, k as u64, d as u64, eps, delta);
    let f = &got.feasibility;
    let tuple = (n, k, d, eps, delta);
    assert_eq!(got.r, want.r, "r at {tuple:?}");
    assert_eq!(got.s, want.s, "s at {tuple:?}");
    assert_eq!(f.dk_condition, want.dk_condition, "d^k flag at {tuple:?}");
    assert_eq!(f.dn_condition, want.dn_condition, "d^n flag at {tuple:?}");
    assert_eq!(f.k1_condition, want.k1_condition, "k = 1 flag at {tuple:?}");
    assert_eq!(f.s_positive, want.s_positive, "s flag at {tuple:?}");
    assert_eq!(f.feasible, want.feasible, "feasibility at {tuple:?}");
}

#[test]
fn grid_matches_interval_oracle() {
    let grid = common::parameter_grid();
    assert_eq!(grid.len(), 100);
    for (n, k, d, eps, delta) in grid {
        assert_matches(n, k, d, eps, delta);
    }
}

#[test]
fn grid_has_both_outcomes() {
    let feasible = common::parameter_grid()
        .into_iter()
        .filter(|&(n, k, d, e, dl)| common::oracle_derive(n as u64, k as u64, d as u64, e, dl).feasible)
        .count();
    assert!(feasible > 0 && feasible < 100, "{feasible} feasible tuples");
}

#[test]
fn tiny_full_access_is_infeasible() {
    let got = derive_parameters(2, 2, 2, 1.0, 1.0, DEFAULT_C).unwrap();
    assert_eq!(got.s, 0u32.into());
    assert!(!got.feasibility.feasible);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_tuples_match_oracle(
        n in 1usize..7,
        kfrac in 0.0f64..1.0,
        d in 2usize..5_000_000,
        e in 1u32..=100,
        dl in 1u32..=100,
    ) {
        let k = 1 + ((n as f64 * kfrac) as usize).min(n - 1);
        assert_matches(n, k, d, e as f64 / 100.0, dl as f64 / 100.0);
    }
}
