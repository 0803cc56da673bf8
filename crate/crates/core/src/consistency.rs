//! (k, ℓ)-minimality for crisp instances.
//!
//! Each indexed scope `X` (every set of at most `ℓ` variables, plus larger
//! constraint scopes) keeps a set `P_X` of surviving assignments. For every
//! pair `X_j ⊆ X_i` with `|X_j| ≤ k`, assignments of `X_i` whose restriction
//! is not in `P_{X_j}` are removed, and so are assignments of `X_j` that are
//! not a restriction of anything in `P_{X_i}`, until nothing changes.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::instance::Instance;
use crate::sa::{scope_set, ScopeIndex};
use crate::tuples;

/// Order in which pending containment pairs are processed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Order {
    #[default]
    Fifo,
    Lifo,
}

/// The sets `P_X` at a fixpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalityState {
    index: ScopeIndex,
    allowed: Vec<bool>,
}

impl MinimalityState {
    pub fn index(&self) -> &ScopeIndex {
        &self.index
    }

    /// Membership bits of `P_X` for scope `i`, indexed by assignment.
    pub fn allowed(&self, i: usize) -> &[bool] {
        let a = self.index.entry_start(i);
        &self.allowed[a..a + self.index.num_assignments(i)]
    }

    /// The surviving assignments of scope `i` in lexicographic order.
    pub fn tuples(&self, i: usize) -> Vec<Vec<usize>> {
        let r = self.index.scope(i).len();
        self.allowed(i)
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(s, _)| {
                let mut t = vec![0; r];
                tuples::decode(s, self.index.domain_size(), &mut t);
                t
            })
            .collect()
    }

    /// `P_X` for the variable set `set` (sorted, distinct).
    pub fn get(&self, set: &[usize]) -> Option<&[bool]> {
        self.index.find(set).map(|i| self.allowed(i))
    }

    /// Re-check `P_{X_j} = π_{X_j}(P_{X_i})` for every containment pair.
    pub fn is_minimal(&self) -> bool {
        self.index.pairs().all(|(j, i)| {
            let proj = self.index.projection(j, i);
            let mut image = vec![false; self.index.num_assignments(j)];
            for (s, &ok) in self.allowed(i).iter().enumerate() {
                if ok {
                    image[proj[s]] = true;
                }
            }
            image == self.allowed(j)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Minimality {
    /// Some `P_X` became empty: the instance is unsatisfiable.
    Empty,
    Minimal(MinimalityState),
}

/// Establish (k, ℓ)-minimality with FIFO propagation.
pub fn kl_minimality(instance: &Instance, k: usize, l: usize, budget: u64) -> Result<Minimality> {
    kl_minimality_with_order(instance, k, l, budget, Order::Fifo)
}

pub fn kl_minimality_with_order(
    instance: &Instance,
    k: usize,
    l: usize,
    budget: u64,
    order: Order,
) -> Result<Minimality> {
    if let Some(c) = instance
        .constraints()
        .iter()
        .find(|c| !instance.relation(c.relation).is_crisp())
    {
        return Err(invalid!(
            "minimality needs crisp relations; `{}` is not",
            instance.relation_name(c.relation)
        ));
    }
    let index = ScopeIndex::new(instance, k, l, budget)?;
    let d = instance.domain_size();
    let mut allowed = vec![true; index.num_entries()];
    for c in instance.constraints() {
        let set = scope_set(&c.scope);
        let i = index.find(&set).expect("constraint scopes are indexed");
        let rel = instance.relation(c.relation);
        let pos: Vec<usize> = c
            .scope
            .iter()
            .map(|v| set.iter().position(|w| w == v).unwrap())
            .collect();
        let base = index.entry_start(i);
        let mut sigma = vec![0; set.len()];
        let mut s = 0;
        loop {
            let t = pos.iter().fold(0, |acc, &p| acc * d + sigma[p]);
            if rel.value_at(t).is_infinite() {
                allowed[base + s] = false;
            }
            s += 1;
            if !tuples::advance(&mut sigma, d) {
                break;
            }
        }
    }

    let pairs: Vec<(usize, usize)> = index.pairs().collect();
    let projections: Vec<Vec<usize>> = pairs.iter().map(|&(j, i)| index.projection(j, i)).collect();
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); index.num_scopes()];
    for (p, &(j, i)) in pairs.iter().enumerate() {
        touching[j].push(p);
        touching[i].push(p);
    }
    let mut queued = vec![true; pairs.len()];
    let mut queue: VecDeque<usize> = (0..pairs.len()).collect();
    let is_empty = |allowed: &[bool], i: usize| {
        let a = index.entry_start(i);
        !allowed[a..a + index.num_assignments(i)].iter().any(|&b| b)
    };
    if (0..index.num_scopes()).any(|i| is_empty(&allowed, i)) {
        return Ok(Minimality::Empty);
    }
    let mut image = Vec::new();
    loop {
        let next = match order {
            Order::Fifo => queue.pop_front(),
            Order::Lifo => queue.pop_back(),
        };
        let Some(p) = next else {
            break;
        };
        queued[p] = false;
        let (j, i) = pairs[p];
        let proj = &projections[p];
        let (bi, bj) = (index.entry_start(i), index.entry_start(j));
        let mut changed_i = false;
        for (s, &t) in proj.iter().enumerate() {
            if allowed[bi + s] && !allowed[bj + t] {
                allowed[bi + s] = false;
                changed_i = true;
            }
        }
        image.clear();
        image.resize(index.num_assignments(j), false);
        for (s, &t) in proj.iter().enumerate() {
            if allowed[bi + s] {
                image[t] = true;
            }
        }
        let mut changed_j = false;
        for (t, &seen) in image.iter().enumerate() {
            if allowed[bj + t] && !seen {
                allowed[bj + t] = false;
                changed_j = true;
            }
        }
        for (scope, changed) in [(i, changed_i), (j, changed_j)] {
            if !changed {
                continue;
            }
            if is_empty(&allowed, scope) {
                return Ok(Minimality::Empty);
            }
            for &q in &touching[scope] {
                if q != p && !queued[q] {
                    queued[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    Ok(Minimality::Minimal(MinimalityState { index, allowed }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DEFAULT_BUDGET;
    use crate::relation::WeightedRelation;

    fn neq_cycle(len: usize) -> Instance {
        let mut inst = Instance::new(2, len);
        let ne = inst.add_relation(WeightedRelation::crisp(2, 2, |t| t[0] != t[1]).unwrap()).unwrap();
        for v in 0..len {
            inst.add_constraint(ne, vec![v, (v + 1) % len]).unwrap();
        }
        inst
    }

    #[test]
    fn odd_cycle_is_refuted() {
        assert_eq!(kl_minimality(&neq_cycle(3), 2, 3, DEFAULT_BUDGET).unwrap(), Minimality::Empty);
    }

    #[test]
    fn even_cycle_survives() {
        let Minimality::Minimal(state) = kl_minimality(&neq_cycle(4), 2, 3, DEFAULT_BUDGET).unwrap() else {
            panic!("4-cycle is satisfiable");
        };
        assert!(state.is_minimal());
        assert_eq!(state.tuples(state.index().find(&[0, 1]).unwrap()), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn single_constraint_is_already_minimal() {
        let mut inst = Instance::new(3, 3);
        let r = inst
            .add_relation(WeightedRelation::crisp(3, 3, |t| t[0] + t[1] == t[2]).unwrap())
            .unwrap();
        inst.add_constraint(r, vec![0, 1, 2]).unwrap();
        let Minimality::Minimal(state) = kl_minimality(&inst, 2, 3, DEFAULT_BUDGET).unwrap() else {
            panic!();
        };
        let top = state.index().find(&[0, 1, 2]).unwrap();
        assert_eq!(
            state.allowed(top),
            inst.relation(r).table().iter().map(|v| v.is_finite()).collect::<Vec<_>>().as_slice()
        );
        assert_eq!(state.tuples(state.index().find(&[2]).unwrap()), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(state.tuples(state.index().find(&[0]).unwrap()), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(state.tuples(state.index().find(&[0, 2]).unwrap()).len(), 6);
    }

    #[test]
    fn repeated_variables_restrict_to_the_diagonal() {
        let mut inst = Instance::new(2, 1);
        let ne = inst.add_relation(WeightedRelation::crisp(2, 2, |t| t[0] != t[1]).unwrap()).unwrap();
        inst.add_constraint(ne, vec![0, 0]).unwrap();
        assert_eq!(kl_minimality(&inst, 1, 1, DEFAULT_BUDGET).unwrap(), Minimality::Empty);
    }

    #[test]
    fn weighted_relations_are_rejected() {
        let mut inst = Instance::new(2, 1);
        let r = inst
            .add_relation(WeightedRelation::from_fn(2, 1, |t| crate::ExtRat::from(t[0] as i64)).unwrap())
            .unwrap();
        inst.add_constraint(r, vec![0]).unwrap();
        assert!(kl_minimality(&inst, 1, 1, DEFAULT_BUDGET).is_err());
    }
}
