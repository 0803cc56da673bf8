//! VCSP instances, exact evaluation and the brute-force optimum.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{check_budget, invalid, pow_saturating, Result};
use crate::rational::{ExtRat, Rational};
use crate::relation::WeightedRelation;
use crate::tuples;

/// A valued constraint `φ(x_1, …, x_r)`, taken `multiplicity` times.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub relation: usize,
    pub scope: Vec<usize>,
    /// Repeating a constraint `m` times and storing it once with
    /// multiplicity `m` evaluate identically.
    pub multiplicity: u64,
}

/// A map from variables to domain labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<usize>);

impl Deref for Assignment {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(v: Vec<usize>) -> Self {
        Assignment(v)
    }
}

/// A VCSP instance: variables `0..num_vars`, a store of weighted relations
/// and an ordered list of constraints referencing the store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    domain_size: usize,
    num_vars: usize,
    relations: Vec<WeightedRelation>,
    names: Vec<String>,
    constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(domain_size: usize, num_vars: usize) -> Self {
        Instance {
            domain_size,
            num_vars,
            relations: Vec::new(),
            names: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn relations(&self) -> &[WeightedRelation] {
        &self.relations
    }

    pub fn relation(&self, id: usize) -> &WeightedRelation {
        &self.relations[id]
    }

    pub fn relation_name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Append variables, returning the index of the first new one.
    pub fn add_vars(&mut self, count: usize) -> usize {
        let first = self.num_vars;
        self.num_vars += count;
        first
    }

    /// Add `rel` under a generated name (`r<id>`, skipping taken names).
    pub fn add_relation(&mut self, rel: WeightedRelation) -> Result<usize> {
        let mut id = self.relations.len();
        let mut name = format!("r{id}");
        while self.relation_id(&name).is_some() {
            id += 1;
            name = format!("r{id}");
        }
        self.add_named_relation(&name, rel)
    }

    pub fn add_named_relation(&mut self, name: &str, rel: WeightedRelation) -> Result<usize> {
        if rel.domain_size() != self.domain_size {
            return Err(invalid!(
                "relation `{name}` has domain {} but the instance has {}",
                rel.domain_size(),
                self.domain_size
            ));
        }
        if self.relation_id(name).is_some() {
            return Err(invalid!("duplicate relation name `{name}`"));
        }
        self.relations.push(rel);
        self.names.push(String::from(name));
        Ok(self.relations.len() - 1)
    }

    /// Id of a relation with exactly this table, adding it if absent.
    pub fn intern_relation(&mut self, rel: &WeightedRelation) -> Result<usize> {
        match self.relations.iter().position(|r| r == rel) {
            Some(id) => Ok(id),
            None => self.add_relation(rel.clone()),
        }
    }

    pub fn add_constraint(&mut self, relation: usize, scope: Vec<usize>) -> Result<()> {
        self.add_constraint_with_multiplicity(relation, scope, 1)
    }

    pub fn add_constraint_with_multiplicity(
        &mut self,
        relation: usize,
        scope: Vec<usize>,
        multiplicity: u64,
    ) -> Result<()> {
        let c = Constraint {
            relation,
            scope,
            multiplicity,
        };
        self.check_constraint(&c)?;
        self.constraints.push(c);
        Ok(())
    }

    fn check_constraint(&self, c: &Constraint) -> Result<()> {
        let rel = self
            .relations
            .get(c.relation)
            .ok_or_else(|| invalid!("unknown relation id {}", c.relation))?;
        if c.scope.len() != rel.arity() {
            return Err(invalid!(
                "scope of length {} for relation `{}` of arity {}",
                c.scope.len(),
                self.names[c.relation],
                rel.arity()
            ));
        }
        if let Some(&v) = c.scope.iter().find(|&&v| v >= self.num_vars) {
            return Err(invalid!("variable {v} out of range (n = {})", self.num_vars));
        }
        if c.multiplicity == 0 {
            return Err(invalid!("constraint multiplicity must be positive"));
        }
        Ok(())
    }

    /// Replace the constraint list wholesale (each one is validated).
    pub fn set_constraints(&mut self, constraints: Vec<Constraint>) -> Result<()> {
        for c in &constraints {
            self.check_constraint(c)?;
        }
        self.constraints = constraints;
        Ok(())
    }

    /// The same objective with every multiplicity expanded into repeated constraints.
    pub fn expand_multiplicities(&self) -> Instance {
        let mut out = self.clone();
        out.constraints = self
            .constraints
            .iter()
            .flat_map(|c| {
                (0..c.multiplicity).map(move |_| Constraint {
                    multiplicity: 1,
                    ..c.clone()
                })
            })
            .collect();
        out
    }

    pub fn is_crisp(&self) -> bool {
        self.constraints
            .iter()
            .all(|c| self.relations[c.relation].is_crisp())
    }

    pub fn check_assignment(&self, assignment: &[usize]) -> Result<()> {
        if assignment.len() != self.num_vars {
            return Err(invalid!(
                "assignment has length {}, instance has {} variables",
                assignment.len(),
                self.num_vars
            ));
        }
        if let Some(&v) = assignment.iter().find(|&&v| v >= self.domain_size) {
            return Err(invalid!("value {v} outside domain of size {}", self.domain_size));
        }
        Ok(())
    }

    /// `Σ_i φ_i(σ(x_i))` with `∞` absorbing.
    pub fn evaluate(&self, assignment: &[usize]) -> Result<ExtRat> {
        self.check_assignment(assignment)?;
        Ok(self.evaluate_unchecked(assignment))
    }

    pub(crate) fn evaluate_unchecked(&self, assignment: &[usize]) -> ExtRat {
        let mut total = Rational::zero();
        for c in &self.constraints {
            let rel = &self.relations[c.relation];
            let idx = c
                .scope
                .iter()
                .fold(0, |acc, &v| acc * self.domain_size + assignment[v]);
            match rel.value_at(idx) {
                ExtRat::Infinite => return ExtRat::Infinite,
                ExtRat::Finite(r) => {
                    if c.multiplicity == 1 {
                        total += r;
                    } else {
                        total += r * Rational::from(c.multiplicity);
                    }
                }
            }
        }
        ExtRat::Finite(total)
    }

    /// Exhaustive minimum over all `|D|^n` assignments.
    ///
    /// The witness is the lexicographically smallest optimal assignment and
    /// is absent exactly when the optimum is `∞`.
    pub fn brute_force_opt(&self, budget: u64) -> Result<(ExtRat, Option<Assignment>)> {
        check_budget(
            "brute-force enumeration",
            pow_saturating(self.domain_size, self.num_vars),
            budget,
        )?;
        let mut best = ExtRat::Infinite;
        let mut witness = None;
        let mut sigma = vec![0; self.num_vars];
        loop {
            let val = self.evaluate_unchecked(&sigma);
            if val < best {
                best = val;
                witness = Some(Assignment(sigma.clone()));
            }
            if !tuples::advance(&mut sigma, self.domain_size) {
                break;
            }
        }
        Ok((best, witness))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::error::DEFAULT_BUDGET;

    pub(crate) fn cut() -> WeightedRelation {
        WeightedRelation::from_fn(2, 2, |t| ExtRat::from((t[0] != t[1]) as i64)).unwrap()
    }

    pub(crate) fn triangle_cut() -> Instance {
        let mut inst = Instance::new(2, 3);
        let c = inst.add_named_relation("cut", cut()).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            inst.add_constraint(c, vec![a, b]).unwrap();
        }
        inst
    }

    #[test]
    fn evaluate_triangle() {
        let inst = triangle_cut();
        assert_eq!(inst.evaluate(&[0, 0, 0]).unwrap(), ExtRat::ZERO);
        assert_eq!(inst.evaluate(&[0, 1, 0]).unwrap(), ExtRat::from(2));
        assert!(inst.evaluate(&[0, 1]).is_err());
        assert!(inst.evaluate(&[0, 2, 0]).is_err());
    }

    #[test]
    fn conflicting_constants_are_infinite() {
        let mut inst = Instance::new(2, 1);
        let c0 = inst.add_relation(WeightedRelation::constant(2, 0).unwrap()).unwrap();
        let c1 = inst.add_relation(WeightedRelation::constant(2, 1).unwrap()).unwrap();
        inst.add_constraint(c0, vec![0]).unwrap();
        inst.add_constraint(c1, vec![0]).unwrap();
        assert_eq!(inst.evaluate(&[0]).unwrap(), ExtRat::Infinite);
        assert_eq!(inst.evaluate(&[1]).unwrap(), ExtRat::Infinite);
        assert_eq!(inst.brute_force_opt(DEFAULT_BUDGET).unwrap(), (ExtRat::Infinite, None));
    }

    #[test]
    fn brute_force_pinned_triangle() {
        let mut inst = triangle_cut();
        let c0 = inst.add_relation(WeightedRelation::constant(2, 0).unwrap()).unwrap();
        let c1 = inst.add_relation(WeightedRelation::constant(2, 1).unwrap()).unwrap();
        inst.add_constraint(c0, vec![0]).unwrap();
        inst.add_constraint(c1, vec![2]).unwrap();
        // Enumerating the 8 assignments by hand: (0,0,1) and (0,1,1) both cost 2.
        let (val, wit) = inst.brute_force_opt(DEFAULT_BUDGET).unwrap();
        assert_eq!(val, ExtRat::from(2));
        assert_eq!(wit.unwrap().0, vec![0, 0, 1]);
    }

    #[test]
    fn brute_force_null_relation() {
        let mut inst = Instance::new(3, 2);
        let z = inst.add_relation(WeightedRelation::null(3, 2).unwrap()).unwrap();
        inst.add_constraint(z, vec![0, 1]).unwrap();
        let (val, wit) = inst.brute_force_opt(DEFAULT_BUDGET).unwrap();
        assert_eq!(val, ExtRat::ZERO);
        assert_eq!(wit.unwrap().0, vec![0, 0]);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = Instance::new(2, 30);
        assert!(matches!(
            inst.brute_force_opt(1 << 20),
            Err(crate::Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn multiplicity_matches_repetition() {
        let mut inst = triangle_cut();
        let id = inst.relation_id("cut").unwrap();
        inst.add_constraint_with_multiplicity(id, vec![1, 0], 3).unwrap();
        let expanded = inst.expand_multiplicities();
        assert_eq!(expanded.constraints().len(), 6);
        let mut s = vec![0; 3];
        loop {
            assert_eq!(inst.evaluate(&s).unwrap(), expanded.evaluate(&s).unwrap());
            if !tuples::advance(&mut s, 2) {
                break;
            }
        }
    }

    #[test]
    fn constraint_validation() {
        let mut inst = triangle_cut();
        assert!(inst.add_constraint(0, vec![0]).is_err());
        assert!(inst.add_constraint(0, vec![0, 3]).is_err());
        assert!(inst.add_constraint(7, vec![0, 1]).is_err());
    }
}
