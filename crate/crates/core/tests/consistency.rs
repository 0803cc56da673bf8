mod common;

use proptest::prelude::*;
use vcsp_core::consistency::{kl_minimality, kl_minimality_with_order, Minimality, Order};
use vcsp_core::{ExtRat, DEFAULT_BUDGET};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_sat_refutation_matches_brute_force(seed in any::<u64>(), n in 3usize..=9) {
        let mut rng = common::rng(seed);
        let inst = common::crisp_2sat(&mut rng, n, 2 * n);
        let satisfiable = inst.brute_force_opt(DEFAULT_BUDGET).unwrap().0 != ExtRat::Infinite;
        let fifo = kl_minimality(&inst, 2, 3, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(fifo == Minimality::Empty, !satisfiable);
        let lifo = kl_minimality_with_order(&inst, 2, 3, DEFAULT_BUDGET, Order::Lifo).unwrap();
        prop_assert_eq!(&fifo, &lifo);
        if let Minimality::Minimal(state) = &fifo {
            prop_assert!(state.is_minimal());
        }
    }

    #[test]
    fn surviving_tuples_contain_every_solution(seed in any::<u64>(), n in 3usize..=7) {
        let inst = common::crisp_2sat(&mut common::rng(seed), n, n + 1);
        let Minimality::Minimal(state) = kl_minimality(&inst, 1, 2, DEFAULT_BUDGET).unwrap() else {
            return Ok(());
        };
        let mut sigma = vec![0; n];
        loop {
            if inst.evaluate(&sigma).unwrap() == ExtRat::ZERO {
                for i in 0..state.index().num_scopes() {
                    let scope = state.index().scope(i);
                    let s = scope.iter().fold(0, |acc, &v| acc * 2 + sigma[v]);
                    prop_assert!(state.allowed(i)[s], "solution pruned from {:?}", scope);
                }
            }
            if !vcsp_core::tuples::advance(&mut sigma, 2) {
                break;
            }
        }
    }
}
