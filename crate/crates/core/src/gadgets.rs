//! Table-level constructions on instances: expressibility by minimising out
//! auxiliary variables, equality contraction, and the gadgets that replace
//! `opt(φ)` / `feas(φ)` constraints by weighted copies of `φ`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{check_budget, invalid, pow_saturating, Result};
use crate::instance::{Constraint, Instance};
use crate::rational::{common_denominator, ExtRat, Rational};
use crate::relation::WeightedRelation;
use crate::tuples;

/// The weighted relation `φ(x_1..x_m) = min over the other variables of φ_I`.
pub fn express(instance: &Instance, designated: &[usize], budget: u64) -> Result<WeightedRelation> {
    if designated.is_empty() {
        return Err(invalid!("at least one designated variable is required"));
    }
    let n = instance.num_vars();
    let mut seen = vec![false; n];
    for &v in designated {
        if v >= n {
            return Err(invalid!("designated variable {v} out of range"));
        }
        if core::mem::replace(&mut seen[v], true) {
            return Err(invalid!("designated variable {v} repeated"));
        }
    }
    let d = instance.domain_size();
    check_budget("expressibility enumeration", pow_saturating(d, n), budget)?;
    let mut table = vec![ExtRat::Infinite; tuples::count(d, designated.len())];
    let mut sigma = vec![0; n];
    loop {
        let idx = designated.iter().fold(0, |acc, &v| acc * d + sigma[v]);
        let val = instance.evaluate_unchecked(&sigma);
        if val < table[idx] {
            table[idx] = val;
        }
        if !tuples::advance(&mut sigma, d) {
            break;
        }
    }
    WeightedRelation::new(d, designated.len(), table)
}

/// Result of [`contract_equalities`].
#[derive(Clone, Debug)]
pub struct Contraction {
    pub instance: Instance,
    /// `class_of[v]` is the quotient variable representing original variable `v`.
    pub class_of: Vec<usize>,
}

impl Contraction {
    /// Pull a quotient assignment back to the original variables.
    pub fn lift(&self, quotient: &[usize]) -> Vec<usize> {
        self.class_of.iter().map(|&c| quotient[c]).collect()
    }
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Merge variables joined by equality constraints and drop those constraints.
///
/// Classes are numbered by their smallest member.
pub fn contract_equalities(instance: &Instance, eq_relation: usize) -> Result<Contraction> {
    if eq_relation >= instance.relations().len() {
        return Err(invalid!("unknown relation id {eq_relation}"));
    }
    if instance.relation(eq_relation) != &WeightedRelation::equality(instance.domain_size())? {
        return Err(invalid!(
            "relation `{}` is not the binary equality relation",
            instance.relation_name(eq_relation)
        ));
    }
    let n = instance.num_vars();
    let mut parent: Vec<usize> = (0..n).collect();
    for c in instance.constraints().iter().filter(|c| c.relation == eq_relation) {
        let (a, b) = (find(&mut parent, c.scope[0]), find(&mut parent, c.scope[1]));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi] = lo;
        }
    }
    let mut class_of_root = vec![usize::MAX; n];
    let mut class_of = vec![0; n];
    let mut classes = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if class_of_root[r] == usize::MAX {
            class_of_root[r] = classes;
            classes += 1;
        }
        class_of[v] = class_of_root[r];
    }
    let mut quotient = Instance::new(instance.domain_size(), classes);
    for (id, rel) in instance.relations().iter().enumerate() {
        quotient.add_named_relation(instance.relation_name(id), rel.clone())?;
    }
    let constraints = instance
        .constraints()
        .iter()
        .filter(|c| c.relation != eq_relation)
        .map(|c| Constraint {
            relation: c.relation,
            scope: c.scope.iter().map(|&v| class_of[v]).collect(),
            multiplicity: c.multiplicity,
        })
        .collect();
    quotient.set_constraints(constraints)?;
    Ok(Contraction {
        instance: quotient,
        class_of,
    })
}

/// Output of [`opt_gadget`] and [`feas_gadget`].
#[derive(Clone, Debug)]
pub struct Gadget {
    pub instance: Instance,
    /// Number of copies `C`.
    pub copies: u64,
    /// The bound `U` entering the formula for `C`.
    pub bound: Rational,
    /// `δ`, absent when `φ` takes a single finite value (then `C = 1`).
    pub delta: Option<Rational>,
    /// The constant subtracted from `φ` to make its minimum zero.
    pub shift: Rational,
    /// Number of replaced constraints (counting multiplicity).
    pub replaced: u64,
    /// `Σ_i max(φ_i)` over the original constraints; a gadget optimum above
    /// this value (including `∞`) certifies that the original instance has no
    /// satisfying assignment. Only meaningful for [`opt_gadget`].
    pub threshold: Rational,
}

fn ceil_to_u64(x: &Rational) -> Result<u64> {
    x.ceil()
        .to_u64()
        .ok_or_else(|| invalid!("copy count {} does not fit in 64 bits", x))
}

fn normalized(phi: &WeightedRelation) -> Result<(WeightedRelation, Rational)> {
    let min = phi
        .min_finite()
        .cloned()
        .ok_or_else(|| invalid!("relation takes no finite value"))?;
    Ok((phi.shifted(&-&min), min))
}

/// Replace every `opt(φ)` constraint by `C` copies of `φ` (normalised to minimum 0).
///
/// `C = 1` when `φ` has a single finite value; otherwise `C = ⌈(U+1)/δ⌉` with
/// `U = Σ_i (max φ_i − min φ_i)` over the constraints of `instance` and `δ`
/// the least non-zero value of the normalised `φ`. When every relation has
/// minimum 0 this `U` is the plain sum of maxima.
pub fn opt_gadget(instance: &Instance, phi: &WeightedRelation) -> Result<Gadget> {
    let (phi0, shift) = normalized(phi)?;
    let target = phi.opt()?;
    let mut bound = Rational::zero();
    let mut threshold = Rational::zero();
    for c in instance.constraints() {
        let rel = instance.relation(c.relation);
        if let (Some(lo), Some(hi)) = (rel.min_finite(), rel.max_finite()) {
            let m = Rational::from(c.multiplicity);
            bound += (hi - lo) * &m;
            threshold += hi * &m;
        }
    }
    let (copies, delta) = if phi0.distinct_finite_values() == 1 {
        (1, None)
    } else {
        let delta = phi0
            .table()
            .iter()
            .filter_map(ExtRat::finite)
            .filter(|r| !r.is_zero())
            .min()
            .cloned()
            .expect("two distinct finite values with minimum 0");
        (ceil_to_u64(&((&bound + Rational::one()) / &delta))?, Some(delta))
    };
    let mut out = instance.clone();
    let phi_id = out.intern_relation(&phi0)?;
    let mut replaced = 0u64;
    let constraints = instance
        .constraints()
        .iter()
        .map(|c| {
            if instance.relation(c.relation) == &target {
                replaced += c.multiplicity;
                let multiplicity = c
                    .multiplicity
                    .checked_mul(copies)
                    .ok_or_else(|| invalid!("multiplicity overflow"))?;
                Ok(Constraint {
                    relation: phi_id,
                    scope: c.scope.clone(),
                    multiplicity,
                })
            } else {
                Ok(c.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    out.set_constraints(constraints)?;
    Ok(Gadget {
        instance: out,
        copies,
        bound,
        delta,
        shift,
        replaced,
        threshold,
    })
}

/// Replace every `feas(φ)` constraint by one copy of `φ` (normalised to
/// minimum 0) and multiply every other constraint by `C`.
///
/// `C = 1` when `φ` has a single finite value; otherwise
/// `C = ⌈N(U+1)/δ⌉` with `U = max φ`, `N` the number of `feas(φ)`
/// occurrences and `δ = 1/M` for the least `M` making every finite value in
/// the instance integral. With no occurrences `C` is 1.
pub fn feas_gadget(instance: &Instance, phi: &WeightedRelation) -> Result<Gadget> {
    let (phi0, shift) = normalized(phi)?;
    let target = phi.feas();
    let occurrences: u64 = instance
        .constraints()
        .iter()
        .filter(|c| instance.relation(c.relation) == &target)
        .map(|c| c.multiplicity)
        .sum();
    let bound = phi0.max_finite().cloned().unwrap_or_else(Rational::zero);
    let (copies, delta) = if phi0.distinct_finite_values() == 1 {
        (1, None)
    } else {
        let finite = instance
            .constraints()
            .iter()
            .flat_map(|c| instance.relation(c.relation).table().iter())
            .chain(phi0.table().iter())
            .filter_map(ExtRat::finite);
        let m: BigInt = common_denominator(finite);
        let delta = Rational::one() / Rational::from(m);
        let c = Rational::from(occurrences) * (&bound + Rational::one()) / &delta;
        (ceil_to_u64(&c)?.max(1), Some(delta))
    };
    let mut out = instance.clone();
    let phi_id = out.intern_relation(&phi0)?;
    let constraints = instance
        .constraints()
        .iter()
        .map(|c| {
            if instance.relation(c.relation) == &target {
                Ok(Constraint {
                    relation: phi_id,
                    scope: c.scope.clone(),
                    multiplicity: c.multiplicity,
                })
            } else {
                let multiplicity = c
                    .multiplicity
                    .checked_mul(copies)
                    .ok_or_else(|| invalid!("multiplicity overflow"))?;
                Ok(Constraint {
                    multiplicity,
                    ..c.clone()
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    out.set_constraints(constraints)?;
    Ok(Gadget {
        instance: out,
        copies,
        bound,
        delta,
        shift,
        replaced: occurrences,
        threshold: Rational::zero(),
    })
}
