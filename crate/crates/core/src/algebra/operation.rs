//! Finite operations `D^m → D` and fractional operations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::rational::Rational;
use crate::tuples;

/// An `m`-ary operation on `{0, …, domain_size-1}`, tabulated in lexicographic order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Operation {
    arity: usize,
    domain_size: usize,
    table: Vec<usize>,
}

impl core::fmt::Debug for Operation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Operation({}-ary on {}: {:?})", self.arity, self.domain_size, self.table)
    }
}

impl Operation {
    pub fn new(domain_size: usize, arity: usize, table: Vec<usize>) -> Result<Self> {
        if domain_size == 0 || arity == 0 {
            return Err(invalid!("operations need a non-empty domain and positive arity"));
        }
        let expected = crate::error::pow_saturating(domain_size, arity);
        if table.len() as u128 != expected {
            return Err(invalid!("operation table has {} entries, expected {expected}", table.len()));
        }
        if let Some(v) = table.iter().find(|&&v| v >= domain_size) {
            return Err(invalid!("operation value {v} outside domain of size {domain_size}"));
        }
        Ok(Operation {
            arity,
            domain_size,
            table,
        })
    }

    pub fn from_fn(domain_size: usize, arity: usize, mut f: impl FnMut(&[usize]) -> usize) -> Result<Self> {
        if domain_size == 0 || arity == 0 {
            return Err(invalid!("operations need a non-empty domain and positive arity"));
        }
        let mut table = Vec::with_capacity(tuples::count(domain_size, arity));
        let mut x = vec![0; arity];
        loop {
            table.push(f(&x));
            if !tuples::advance(&mut x, domain_size) {
                break;
            }
        }
        Self::new(domain_size, arity, table)
    }

    /// `proj_i(x_1, …, x_m) = x_i` (0-based `i`).
    pub fn projection(domain_size: usize, arity: usize, i: usize) -> Result<Self> {
        if i >= arity {
            return Err(invalid!("projection index {i} for arity {arity}"));
        }
        Self::from_fn(domain_size, arity, |x| x[i])
    }

    pub fn constant(domain_size: usize, arity: usize, a: usize) -> Result<Self> {
        Self::from_fn(domain_size, arity, |_| a)
    }

    pub fn min(domain_size: usize, arity: usize) -> Result<Self> {
        Self::from_fn(domain_size, arity, |x| *x.iter().min().unwrap())
    }

    pub fn max(domain_size: usize, arity: usize) -> Result<Self> {
        Self::from_fn(domain_size, arity, |x| *x.iter().max().unwrap())
    }

    /// Ternary majority: the repeated value if two arguments agree, else the first.
    pub fn majority(domain_size: usize) -> Result<Self> {
        Self::from_fn(domain_size, 3, |x| if x[1] == x[2] { x[1] } else { x[0] })
    }

    /// Ternary minority `x - y + z` modulo the domain size.
    pub fn minority(domain_size: usize) -> Result<Self> {
        Self::from_fn(domain_size, 3, |x| (x[0] + domain_size - x[1] + x[2]) % domain_size)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        self.table[tuples::encode(args, self.domain_size)]
    }

    pub fn is_idempotent(&self) -> bool {
        (0..self.domain_size).all(|a| self.apply(&vec![a; self.arity]) == a)
    }

    /// The index `i` with `self = proj_i`, if any.
    pub fn projection_index(&self) -> Option<usize> {
        (0..self.arity).find(|&i| {
            let mut x = vec![0; self.arity];
            let mut k = 0;
            loop {
                if self.table[k] != x[i] {
                    return false;
                }
                k += 1;
                if !tuples::advance(&mut x, self.domain_size) {
                    return true;
                }
            }
        })
    }

    /// Sorted image `f(D^m)`.
    pub fn image(&self) -> Vec<usize> {
        let mut im = self.table.clone();
        im.sort_unstable();
        im.dedup();
        im
    }

    /// Idempotent, and `f(y,x,…,x) = f(x,y,x,…,x) = … = f(x,…,x,y)` for all `x, y`.
    pub fn is_wnu(&self) -> Result<bool> {
        if self.arity < 3 {
            return Err(invalid!("WNU needs arity at least 3"));
        }
        if !self.is_idempotent() {
            return Ok(false);
        }
        let m = self.arity;
        for x in 0..self.domain_size {
            for y in 0..self.domain_size {
                if x == y {
                    continue;
                }
                let mut args = vec![x; m];
                args[0] = y;
                let first = self.apply(&args);
                for p in 1..m {
                    let mut args = vec![x; m];
                    args[p] = y;
                    if self.apply(&args) != first {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Invariant under every permutation of the arguments.
    pub fn is_symmetric(&self) -> Result<bool> {
        if self.arity < 2 {
            return Err(invalid!("symmetry needs arity at least 2"));
        }
        let mut x = vec![0; self.arity];
        let mut sorted = vec![0; self.arity];
        let mut k = 0;
        loop {
            sorted.copy_from_slice(&x);
            sorted.sort_unstable();
            if self.table[k] != self.apply(&sorted) {
                return Ok(false);
            }
            k += 1;
            if !tuples::advance(&mut x, self.domain_size) {
                return Ok(true);
            }
        }
    }
}

/// `f[g_1, …, g_m](x) = f(g_1(x), …, g_m(x))`.
pub fn compose(f: &Operation, gs: &[Operation]) -> Result<Operation> {
    if gs.len() != f.arity {
        return Err(invalid!("composition of a {}-ary operation with {} operations", f.arity, gs.len()));
    }
    let n = gs[0].arity;
    let d = f.domain_size;
    if gs.iter().any(|g| g.arity != n || g.domain_size != d) {
        return Err(invalid!("inner operations must share arity and domain"));
    }
    let mut inner = vec![0; f.arity];
    Operation::from_fn(d, n, |x| {
        for (slot, g) in inner.iter_mut().zip(gs) {
            *slot = g.apply(x);
        }
        f.apply(&inner)
    })
}

/// A probability distribution over `m`-ary operations with rational weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalOperation {
    arity: usize,
    domain_size: usize,
    support: Vec<(Operation, Rational)>,
}

impl FractionalOperation {
    /// Weights must be positive and sum to 1; repeated operations are merged.
    pub fn new(weights: Vec<(Operation, Rational)>) -> Result<Self> {
        let first = weights
            .first()
            .ok_or_else(|| invalid!("fractional operation with empty support"))?;
        let (arity, domain_size) = (first.0.arity, first.0.domain_size);
        let mut support: Vec<(Operation, Rational)> = Vec::with_capacity(weights.len());
        let mut sorted = weights;
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for (op, w) in sorted {
            if op.arity != arity || op.domain_size != domain_size {
                return Err(invalid!("operations of a fractional operation must share arity and domain"));
            }
            if !w.is_positive() {
                return Err(invalid!("fractional operation weights must be positive"));
            }
            match support.last_mut() {
                Some((last, acc)) if *last == op => *acc += w,
                _ => support.push((op, w)),
            }
        }
        let total: Rational = support.iter().map(|(_, w)| w).sum();
        if total != Rational::one() {
            return Err(invalid!("fractional operation weights sum to {total}, not 1"));
        }
        Ok(FractionalOperation {
            arity,
            domain_size,
            support,
        })
    }

    /// The point mass on `f`.
    pub fn dirac(f: Operation) -> Self {
        FractionalOperation {
            arity: f.arity,
            domain_size: f.domain_size,
            support: vec![(f, Rational::one())],
        }
    }

    /// `τ_m`: uniform over the `m` projections.
    pub fn projections(domain_size: usize, arity: usize) -> Result<Self> {
        let w = Rational::new(1, arity as i64);
        Self::new(
            (0..arity)
                .map(|i| Ok((Operation::projection(domain_size, arity, i)?, w.clone())))
                .collect::<Result<_>>()?,
        )
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    /// `(operation, weight)` pairs sorted by operation table.
    pub fn support(&self) -> &[(Operation, Rational)] {
        &self.support
    }

    pub fn weight(&self, f: &Operation) -> Rational {
        self.support
            .iter()
            .find(|(g, _)| g == f)
            .map_or_else(Rational::zero, |(_, w)| w.clone())
    }
}
