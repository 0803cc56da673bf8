//! Weighted relations: total tables `D^r → ℚ ∪ {∞}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::rational::{ExtRat, Rational};
use crate::tuples;

/// An `arity`-ary weighted relation over the domain `{0, …, domain_size-1}`,
/// stored as a dense table in lexicographic tuple order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WeightedRelation {
    arity: usize,
    domain_size: usize,
    table: Vec<ExtRat>,
}

impl core::fmt::Debug for WeightedRelation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "WeightedRelation(arity={}, domain={}, {:?})",
            self.arity, self.domain_size, self.table
        )
    }
}

impl WeightedRelation {
    pub fn new(domain_size: usize, arity: usize, table: Vec<ExtRat>) -> Result<Self> {
        if domain_size == 0 {
            return Err(invalid!("domain must be non-empty"));
        }
        if arity == 0 {
            return Err(invalid!("relation arity must be positive"));
        }
        let expected = crate::error::pow_saturating(domain_size, arity);
        if table.len() as u128 != expected {
            return Err(invalid!(
                "table has {} entries, expected {}^{} = {}",
                table.len(),
                domain_size,
                arity,
                expected
            ));
        }
        Ok(WeightedRelation {
            arity,
            domain_size,
            table,
        })
    }

    /// Tabulate `f` over all tuples in lexicographic order.
    pub fn from_fn(
        domain_size: usize,
        arity: usize,
        mut f: impl FnMut(&[usize]) -> ExtRat,
    ) -> Result<Self> {
        if domain_size == 0 || arity == 0 {
            return Err(invalid!("empty domain or zero arity"));
        }
        let mut table = Vec::with_capacity(tuples::count(domain_size, arity));
        let mut t = vec![0; arity];
        loop {
            table.push(f(&t));
            if !tuples::advance(&mut t, domain_size) {
                break;
            }
        }
        Self::new(domain_size, arity, table)
    }

    /// The crisp relation `{t : pred(t)}`.
    pub fn crisp(
        domain_size: usize,
        arity: usize,
        mut pred: impl FnMut(&[usize]) -> bool,
    ) -> Result<Self> {
        Self::from_fn(domain_size, arity, |t| {
            if pred(t) {
                ExtRat::ZERO
            } else {
                ExtRat::Infinite
            }
        })
    }

    /// The null relation, identically zero.
    pub fn null(domain_size: usize, arity: usize) -> Result<Self> {
        Self::crisp(domain_size, arity, |_| true)
    }

    /// The constant unary relation `{(a)}`.
    pub fn constant(domain_size: usize, a: usize) -> Result<Self> {
        if a >= domain_size {
            return Err(invalid!("constant {a} outside domain of size {domain_size}"));
        }
        Self::crisp(domain_size, 1, |t| t[0] == a)
    }

    /// Binary equality `{(a, a)}`.
    pub fn equality(domain_size: usize) -> Result<Self> {
        Self::crisp(domain_size, 2, |t| t[0] == t[1])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn table(&self) -> &[ExtRat] {
        &self.table
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity);
        tuples::encode(tuple, self.domain_size)
    }

    pub fn value(&self, tuple: &[usize]) -> &ExtRat {
        &self.table[self.index_of(tuple)]
    }

    pub fn value_at(&self, index: usize) -> &ExtRat {
        &self.table[index]
    }

    pub fn is_crisp(&self) -> bool {
        self.table
            .iter()
            .all(|v| matches!(v, ExtRat::Infinite) || v == &ExtRat::ZERO)
    }

    pub fn is_finite_valued(&self) -> bool {
        self.table.iter().all(ExtRat::is_finite)
    }

    /// Table indices of the feasible (finite) tuples, ascending.
    pub fn feasible_indices(&self) -> Vec<usize> {
        (0..self.table.len())
            .filter(|&i| self.table[i].is_finite())
            .collect()
    }

    /// The feasible tuples themselves, in lexicographic order.
    pub fn feasible_tuples(&self) -> Vec<Vec<usize>> {
        self.feasible_indices()
            .into_iter()
            .map(|i| {
                let mut t = vec![0; self.arity];
                tuples::decode(i, self.domain_size, &mut t);
                t
            })
            .collect()
    }

    pub fn min_finite(&self) -> Option<&Rational> {
        self.table.iter().filter_map(ExtRat::finite).min()
    }

    pub fn max_finite(&self) -> Option<&Rational> {
        self.table.iter().filter_map(ExtRat::finite).max()
    }

    /// Number of distinct finite values.
    pub fn distinct_finite_values(&self) -> usize {
        let mut vals: Vec<&Rational> = self.table.iter().filter_map(ExtRat::finite).collect();
        vals.sort();
        vals.dedup();
        vals.len()
    }

    /// `feas(φ)`: 0 where `φ` is finite, `∞` elsewhere.
    pub fn feas(&self) -> Self {
        WeightedRelation {
            arity: self.arity,
            domain_size: self.domain_size,
            table: self
                .table
                .iter()
                .map(|v| {
                    if v.is_finite() {
                        ExtRat::ZERO
                    } else {
                        ExtRat::Infinite
                    }
                })
                .collect(),
        }
    }

    /// `opt(φ)`: 0 exactly on the minimum-attaining tuples.
    pub fn opt(&self) -> Result<Self> {
        let min = self
            .min_finite()
            .cloned()
            .ok_or_else(|| invalid!("opt of a relation with no finite value"))?;
        Ok(WeightedRelation {
            arity: self.arity,
            domain_size: self.domain_size,
            table: self
                .table
                .iter()
                .map(|v| match v {
                    ExtRat::Finite(r) if *r == min => ExtRat::ZERO,
                    _ => ExtRat::Infinite,
                })
                .collect(),
        })
    }

    /// `φ + c` on finite entries.
    pub fn shifted(&self, c: &Rational) -> Self {
        WeightedRelation {
            arity: self.arity,
            domain_size: self.domain_size,
            table: self
                .table
                .iter()
                .map(|v| match v {
                    ExtRat::Finite(r) => ExtRat::Finite(r + c),
                    ExtRat::Infinite => ExtRat::Infinite,
                })
                .collect(),
        }
    }

    /// Restriction to the sub-domain `sub` (sorted, distinct labels), relabelled
    /// so that `sub[i]` becomes `i`.
    pub fn restrict(&self, sub: &[usize]) -> Result<Self> {
        if sub.is_empty() || sub.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("sub-domain must be sorted, distinct and non-empty"));
        }
        if sub.iter().any(|&a| a >= self.domain_size) {
            return Err(invalid!("sub-domain label out of range"));
        }
        let mut full = vec![0; self.arity];
        Self::from_fn(sub.len(), self.arity, |t| {
            for (slot, &x) in full.iter_mut().zip(t) {
                *slot = sub[x];
            }
            self.value(&full).clone()
        })
    }
}
