//! Polymorphism tests and exhaustive, pruned polymorphism enumeration.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashSet;

use super::{Language, Operation};
use crate::error::{invalid, Error, Result};
use crate::tuples;

/// A block of feasible tuples of one relation whose image under `f` is infeasible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub relation: usize,
    /// The `m` feasible tuples `x_1, …, x_m`.
    pub tuples: Vec<Vec<usize>>,
    /// `f(x_1, …, x_m)` computed coordinate-wise.
    pub image: Vec<usize>,
}

/// Apply `f` coordinate-wise to the block of `m` tuples of length `r`.
pub fn apply_to_block(f: &Operation, block: &[&[usize]]) -> Vec<usize> {
    let r = block.first().map_or(0, |t| t.len());
    let mut column = vec![0; block.len()];
    (0..r)
        .map(|p| {
            for (slot, t) in column.iter_mut().zip(block) {
                *slot = t[p];
            }
            f.apply(&column)
        })
        .collect()
}

/// The first block (relations in order, blocks lexicographically) mapped outside `feas(φ)`.
pub fn polymorphism_counterexample(f: &Operation, lang: &Language) -> Option<Counterexample> {
    let m = f.arity();
    for (id, rel) in lang.relations().iter().enumerate() {
        let feasible = rel.feasible_tuples();
        if feasible.is_empty() {
            continue;
        }
        let mut pick = vec![0; m];
        loop {
            let block: Vec<&[usize]> = pick.iter().map(|&q| feasible[q].as_slice()).collect();
            let image = apply_to_block(f, &block);
            if rel.value(&image).is_infinite() {
                return Some(Counterexample {
                    relation: id,
                    tuples: block.iter().map(|t| t.to_vec()).collect(),
                    image,
                });
            }
            if !tuples::advance(&mut pick, feasible.len()) {
                break;
            }
        }
    }
    None
}

/// `f` maps every block of feasible tuples of every relation to a feasible tuple.
pub fn is_polymorphism(f: &Operation, lang: &Language) -> bool {
    f.domain_size() == lang.domain_size() && polymorphism_counterexample(f, lang).is_none()
}

/// Which operations an enumeration ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpFilter {
    All,
    Idempotent,
    /// Weak near-unanimity operations (arity at least 3).
    Wnu,
    Symmetric,
    IdempotentSymmetric,
}

/// A family of operation tables: cells in one class share a value, and some
/// classes have a prescribed value.
#[derive(Clone, Debug)]
pub struct OpShape {
    domain_size: usize,
    arity: usize,
    class_of: Vec<usize>,
    fixed: Vec<Option<usize>>,
}

impl OpShape {
    /// Every cell free.
    pub fn free(domain_size: usize, arity: usize) -> Result<Self> {
        if domain_size == 0 || arity == 0 {
            return Err(invalid!("empty domain or zero arity"));
        }
        let cells = tuples::count(domain_size, arity);
        Ok(OpShape {
            domain_size,
            arity,
            class_of: (0..cells).collect(),
            fixed: vec![None; cells],
        })
    }

    pub fn with_filter(domain_size: usize, arity: usize, filter: OpFilter) -> Result<Self> {
        let mut shape = Self::free(domain_size, arity)?;
        match filter {
            OpFilter::All => {}
            OpFilter::Idempotent => shape.make_idempotent()?,
            OpFilter::Wnu => shape.make_wnu()?,
            OpFilter::Symmetric => shape.make_symmetric()?,
            OpFilter::IdempotentSymmetric => {
                shape.make_symmetric()?;
                shape.make_idempotent()?;
            }
        }
        Ok(shape)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    fn cell(&self, args: &[usize]) -> usize {
        tuples::encode(args, self.domain_size)
    }

    fn merge(&mut self, a: usize, b: usize) -> Result<()> {
        let (ca, cb) = (self.class_of[a], self.class_of[b]);
        if ca == cb {
            return Ok(());
        }
        let (keep, drop) = (ca.min(cb), ca.max(cb));
        let value = match (self.fixed[keep], self.fixed[drop]) {
            (Some(x), Some(y)) if x != y => {
                return Err(invalid!("contradictory operation identities"));
            }
            (x, y) => x.or(y),
        };
        for c in self.class_of.iter_mut() {
            if *c == drop {
                *c = keep;
            }
        }
        self.fixed[keep] = value;
        self.fixed[drop] = None;
        Ok(())
    }

    /// Prescribe `f(args) = value`.
    pub fn fix(&mut self, args: &[usize], value: usize) -> Result<()> {
        if args.len() != self.arity || args.iter().chain([&value]).any(|&a| a >= self.domain_size) {
            return Err(invalid!("cell or value out of range"));
        }
        let c = self.class_of[self.cell(args)];
        match self.fixed[c] {
            Some(v) if v != value => Err(invalid!("contradictory operation identities")),
            _ => {
                self.fixed[c] = Some(value);
                Ok(())
            }
        }
    }

    pub fn make_idempotent(&mut self) -> Result<()> {
        for a in 0..self.domain_size {
            self.fix(&vec![a; self.arity], a)?;
        }
        Ok(())
    }

    pub fn make_wnu(&mut self) -> Result<()> {
        if self.arity < 3 {
            return Err(invalid!("WNU needs arity at least 3"));
        }
        self.make_idempotent()?;
        let m = self.arity;
        for x in 0..self.domain_size {
            for y in 0..self.domain_size {
                if x == y {
                    continue;
                }
                let mut first = vec![x; m];
                first[0] = y;
                let c0 = self.cell(&first);
                for p in 1..m {
                    let mut args = vec![x; m];
                    args[p] = y;
                    let c = self.cell(&args);
                    self.merge(c0, c)?;
                }
            }
        }
        Ok(())
    }

    pub fn make_symmetric(&mut self) -> Result<()> {
        if self.arity < 2 {
            return Err(invalid!("symmetry needs arity at least 2"));
        }
        let mut x = vec![0; self.arity];
        let mut sorted = vec![0; self.arity];
        loop {
            sorted.copy_from_slice(&x);
            sorted.sort_unstable();
            let (a, b) = (self.cell(&x), self.cell(&sorted));
            self.merge(a, b)?;
            if !tuples::advance(&mut x, self.domain_size) {
                return Ok(());
            }
        }
    }

    /// Number of operations in the family.
    pub fn size(&self) -> u128 {
        let free = (0..self.class_of.len())
            .filter(|&c| self.class_of[c] == c && self.fixed[c].is_none())
            .count();
        crate::error::pow_saturating(self.domain_size, free)
    }
}

/// One pruning test: the cells (as class ids) whose values must form a feasible tuple.
struct Check {
    classes: Vec<usize>,
    feasible: usize,
}

/// All polymorphisms of `lang` of the given shape, in lexicographic table order.
///
/// The search assigns one value per class and evaluates each feasibility
/// test as soon as its cells are known. `budget` caps visited search nodes.
pub fn enumerate_with_shape(lang: &Language, shape: &OpShape, budget: u64) -> Result<Vec<Operation>> {
    let d = shape.domain_size;
    if lang.domain_size() != d {
        return Err(invalid!("language and operation domains differ"));
    }
    let m = shape.arity;
    let cells = shape.class_of.len();
    // Classes in order of their smallest cell: class ids are already that order.
    let classes: Vec<usize> = (0..cells).filter(|&c| shape.class_of[c] == c).collect();
    let mut position = vec![usize::MAX; cells];
    for (p, &c) in classes.iter().enumerate() {
        position[c] = p;
    }

    let feasible_sets: Vec<Vec<bool>> = lang
        .relations()
        .iter()
        .map(|r| r.table().iter().map(|v| v.is_finite()).collect())
        .collect();
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    let mut checks_at: Vec<Vec<Check>> = (0..=classes.len()).map(|_| Vec::new()).collect();
    let mut column = vec![0; m];
    for (id, rel) in lang.relations().iter().enumerate() {
        let feasible = rel.feasible_tuples();
        if feasible.is_empty() {
            continue;
        }
        let r = rel.arity();
        let mut pick = vec![0; m];
        loop {
            let cls: Vec<usize> = (0..r)
                .map(|p| {
                    for (slot, &q) in column.iter_mut().zip(&pick) {
                        *slot = feasible[q][p];
                    }
                    shape.class_of[tuples::encode(&column, d)]
                })
                .collect();
            if seen.insert((id, cls.clone())) {
                let last = cls
                    .iter()
                    .filter(|&&c| shape.fixed[c].is_none())
                    .map(|&c| position[c] + 1)
                    .max()
                    .unwrap_or(0);
                checks_at[last].push(Check {
                    classes: cls,
                    feasible: id,
                });
            }
            if !tuples::advance(&mut pick, feasible.len()) {
                break;
            }
        }
    }

    let mut value: Vec<usize> = shape.fixed.iter().map(|v| v.unwrap_or(0)).collect();
    let passes = |checks: &[Check], value: &[usize]| {
        checks.iter().all(|ch| {
            let idx = ch.classes.iter().fold(0, |acc, &c| acc * d + value[c]);
            feasible_sets[ch.feasible][idx]
        })
    };
    let mut out = Vec::new();
    if !passes(&checks_at[0], &value) {
        return Ok(out);
    }
    let free: Vec<usize> = classes.iter().copied().filter(|&c| shape.fixed[c].is_none()).collect();
    let mut nodes: u64 = 0;
    let mut depth = 0;
    let mut cursor = vec![0usize; free.len() + 1];
    // Iterative depth-first search over the free classes.
    loop {
        if depth == free.len() {
            let table = shape.class_of.iter().map(|&c| value[c]).collect();
            out.push(Operation::new(d, m, table)?);
            if depth == 0 {
                break;
            }
            depth -= 1;
            cursor[depth] += 1;
            continue;
        }
        if cursor[depth] == d {
            cursor[depth] = 0;
            if depth == 0 {
                break;
            }
            depth -= 1;
            cursor[depth] += 1;
            continue;
        }
        nodes += 1;
        if nodes > budget {
            return Err(Error::BudgetExceeded {
                what: "polymorphism search",
                required: nodes as u128,
                budget,
            });
        }
        let c = free[depth];
        value[c] = cursor[depth];
        if passes(&checks_at[position[c] + 1], &value) {
            depth += 1;
            cursor[depth] = 0;
        } else {
            cursor[depth] += 1;
        }
    }
    Ok(out)
}

/// All `m`-ary polymorphisms of `lang` passing `filter`.
pub fn enumerate_polymorphisms(lang: &Language, m: usize, filter: OpFilter, budget: u64) -> Result<Vec<Operation>> {
    let shape = OpShape::with_filter(lang.domain_size(), m, filter)?;
    enumerate_with_shape(lang, &shape, budget)
}
