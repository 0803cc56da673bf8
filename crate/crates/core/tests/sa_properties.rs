mod common;

use proptest::prelude::*;
use vcsp_core::algebra::{FractionalOperation, Operation};
use vcsp_core::sa::{
    extend_width1, extract_assignment, solve_sa, symmetrize, verify_sa_feasible, Extraction, SaSolution, ScopeIndex,
};
use vcsp_core::{ExtRat, Rational, DEFAULT_BUDGET};

const LEVELS: [(usize, usize); 5] = [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)];

fn min_max() -> FractionalOperation {
    let half = Rational::new(1, 2);
    FractionalOperation::new(vec![
        (Operation::min(2, 2).unwrap(), half.clone()),
        (Operation::max(2, 2).unwrap(), half),
    ])
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relaxation_values_climb_towards_the_optimum(seed in any::<u64>(), n in 3usize..=5, d in 2usize..=3) {
        let inst = common::mixed_instance(&mut common::rng(seed), d, n, 0.15);
        let (opt, _) = inst.brute_force_opt(DEFAULT_BUDGET).unwrap();
        let mut prev = None;
        for (k, l) in LEVELS {
            let res = solve_sa(&inst, k, l, DEFAULT_BUDGET).unwrap();
            let value = res.value();
            prop_assert!(value <= opt, "SA({k},{l}) = {value} above optimum {opt}");
            if let Some(p) = &prev {
                prop_assert!(*p <= value, "SA({k},{l}) = {value} below previous level {p}");
            }
            if let Some(sol) = res.solution() {
                let report = verify_sa_feasible(&inst, sol, k, l, DEFAULT_BUDGET).unwrap();
                prop_assert!(report.is_feasible(), "{:?}", report.violation);
                prop_assert_eq!(&report.objective, &value);
            }
            prev = Some(value);
        }
        if n == 3 {
            prop_assert_eq!(prev.unwrap(), opt);
        }
    }

    #[test]
    fn integral_points_are_feasible(seed in any::<u64>(), n in 2usize..=5) {
        let inst = common::mixed_instance(&mut common::rng(seed), 2, n, 0.1);
        let (opt, witness) = inst.brute_force_opt(DEFAULT_BUDGET).unwrap();
        let Some(sigma) = witness else { return Ok(()); };
        let l = n.min(3);
        let lambda = SaSolution::integral(ScopeIndex::new(&inst, 2.min(l), l, DEFAULT_BUDGET).unwrap(), &sigma).unwrap();
        let report = verify_sa_feasible(&inst, &lambda, 2.min(l), l, DEFAULT_BUDGET).unwrap();
        prop_assert!(report.is_feasible());
        prop_assert_eq!(report.objective, opt);
    }

    #[test]
    fn min_max_symmetrization_keeps_cut_optima(seed in any::<u64>(), n in 2usize..=6) {
        let inst = common::cut_instance(&mut common::rng(seed), n);
        let res = solve_sa(&inst, 1, 1, DEFAULT_BUDGET).unwrap();
        let lambda = res.solution().unwrap();
        let sym = symmetrize(lambda, &min_max(), DEFAULT_BUDGET).unwrap();
        let report = verify_sa_feasible(&inst, &sym, 1, 1, DEFAULT_BUDGET).unwrap();
        prop_assert!(report.is_feasible(), "{:?}", report.violation);
        prop_assert_eq!(report.objective, res.value());
    }

    #[test]
    fn width_one_points_extend(seed in any::<u64>(), n in 3usize..=6) {
        let inst = common::cut_instance(&mut common::rng(seed), n);
        let res = solve_sa(&inst, 1, 1, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(res.value(), inst.brute_force_opt(DEFAULT_BUDGET).unwrap().0);
        let ext = extend_width1(res.solution().unwrap(), &inst, 3, DEFAULT_BUDGET).unwrap();
        let report = verify_sa_feasible(&inst, &ext, 1, 3, DEFAULT_BUDGET).unwrap();
        prop_assert!(report.is_feasible(), "{:?}", report.violation);
        prop_assert_eq!(report.objective, res.value());
    }

    #[test]
    fn two_sat_with_costs_is_solved_exactly(seed in any::<u64>(), n in 3usize..=7) {
        let inst = common::two_sat_with_costs(&mut common::rng(seed), n);
        let (opt, _) = inst.brute_force_opt(DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(solve_sa(&inst, 2, 3, DEFAULT_BUDGET).unwrap().value(), opt.clone());
        match extract_assignment(&inst, 2, 3, DEFAULT_BUDGET).unwrap() {
            Extraction::Found { assignment, value } => {
                prop_assert_eq!(inst.evaluate(&assignment).unwrap(), ExtRat::from(value));
                prop_assert_eq!(inst.evaluate(&assignment).unwrap(), opt);
            }
            Extraction::Infeasible => prop_assert_eq!(opt, ExtRat::Infinite),
            other => prop_assert!(false, "extraction failed: {:?}", other),
        }
    }
}
