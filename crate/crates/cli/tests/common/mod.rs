#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcsp_core::{ExtRat, Instance, Rational, WeightedRelation};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.gen_range(0..=6), rng.gen_range(1..=3))
}

fn distinct_pair(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut vars: Vec<usize> = (0..n).collect();
    vars.shuffle(rng);
    vars.truncate(2);
    vars
}

/// `(x = sx) ∨ (y = sy)` as a crisp Boolean relation.
pub fn clause(sx: usize, sy: usize) -> WeightedRelation {
    WeightedRelation::crisp(2, 2, |t| t[0] == sx || t[1] == sy).unwrap()
}

/// Crisp 2-SAT clauses only.
pub fn crisp_2sat(rng: &mut ChaCha8Rng, n: usize, clauses: usize) -> Instance {
    let mut inst = Instance::new(2, n);
    for _ in 0..clauses {
        let rel = clause(rng.gen_range(0..2), rng.gen_range(0..2));
        let id = inst.intern_relation(&rel).unwrap();
        inst.add_constraint(id, distinct_pair(rng, n)).unwrap();
    }
    inst
}

/// 2-SAT clauses, rational unary costs and the occasional constant.
pub fn two_sat_with_costs(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let clauses = rng.gen_range(n / 2..=n + 2);
    let mut inst = crisp_2sat(rng, n, clauses);
    for v in 0..n {
        if rng.gen_bool(0.7) {
            let (a, b) = (small_rational(rng), small_rational(rng));
            let rel = WeightedRelation::new(2, 1, vec![a.into(), b.into()]).unwrap();
            let id = inst.intern_relation(&rel).unwrap();
            inst.add_constraint(id, vec![v]).unwrap();
        }
    }
    if rng.gen_bool(0.3) {
        let rel = WeightedRelation::constant(2, rng.gen_range(0..2)).unwrap();
        let id = inst.intern_relation(&rel).unwrap();
        inst.add_constraint(id, vec![rng.gen_range(0..n)]).unwrap();
    }
    inst
}

/// Weighted cut terms `w·[x ≠ y]` plus arbitrary unary costs: a submodular instance.
pub fn cut_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let mut inst = Instance::new(2, n);
    for _ in 0..rng.gen_range(n..=2 * n) {
        let w = small_rational(rng);
        let rel = WeightedRelation::from_fn(2, 2, |t| {
            if t[0] == t[1] {
                ExtRat::ZERO
            } else {
                w.clone().into()
            }
        })
        .unwrap();
        let id = inst.intern_relation(&rel).unwrap();
        inst.add_constraint(id, distinct_pair(rng, n)).unwrap();
    }
    for v in 0..n {
        if rng.gen_bool(0.6) {
            let rel = WeightedRelation::new(2, 1, vec![small_rational(rng).into(), small_rational(rng).into()]).unwrap();
            let id = inst.intern_relation(&rel).unwrap();
            inst.add_constraint(id, vec![v]).unwrap();
        }
    }
    inst
}

/// Random relations of arity 1 to 3 with rational values and some `∞` entries.
pub fn mixed_instance(rng: &mut ChaCha8Rng, d: usize, n: usize, inf_prob: f64) -> Instance {
    let mut inst = Instance::new(d, n);
    for _ in 0..rng.gen_range(2..=n + 1) {
        let arity = rng.gen_range(1..=3.min(n));
        let rel = WeightedRelation::from_fn(d, arity, |_| {
            if rng.gen_bool(inf_prob) {
                ExtRat::Infinite
            } else {
                small_rational(rng).into()
            }
        })
        .unwrap();
        let id = inst.intern_relation(&rel).unwrap();
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(rng);
        vars.truncate(arity);
        inst.add_constraint(id, vars).unwrap();
    }
    inst
}

pub fn binary() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_vcsp"))
}

/// Run the binary, returning exit code, stdout and stderr.
pub fn vcsp(args: &[&str]) -> (i32, String, String) {
    let out = binary().args(args).env_remove("VCSP_SA_BUDGET").output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}
