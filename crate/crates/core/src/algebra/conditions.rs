//! Cores and the bounded-width / symmetric-operation conditions on `supp(Γ)`.

use alloc::vec::Vec;

use super::{
    enumerate_polymorphisms, enumerate_with_shape, in_support, in_support_among, Language, Membership, OpFilter,
    OpShape, Operation,
};
use crate::error::{invalid, Result};

/// Membership queries of one arity sharing a lazily enumerated column set.
struct SupportOracle<'a> {
    lang: &'a Language,
    budget: u64,
    columns: Vec<Option<Vec<Operation>>>,
}

impl<'a> SupportOracle<'a> {
    fn new(lang: &'a Language, budget: u64) -> Self {
        SupportOracle {
            lang,
            budget,
            columns: Vec::new(),
        }
    }

    fn contains(&mut self, f: &Operation) -> Result<bool> {
        if self.lang.is_crisp() {
            return Ok(in_support(f, self.lang, self.budget)?.is_yes());
        }
        let m = f.arity();
        if self.columns.len() <= m {
            self.columns.resize(m + 1, None);
        }
        if self.columns[m].is_none() {
            self.columns[m] = Some(enumerate_polymorphisms(self.lang, m, OpFilter::All, self.budget)?);
        }
        let columns = self.columns[m].as_ref().unwrap();
        if columns.binary_search(f).is_err() {
            return Ok(false);
        }
        Ok(matches!(in_support_among(f, self.lang, columns, self.budget)?, Membership::Yes(_)))
    }
}

/// A core of a language: the sub-domain (in original labels) and the restricted language.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Core {
    pub domain: Vec<usize>,
    pub language: Language,
}

/// Shrink the domain along non-bijective unary operations in the support
/// until every unary support operation is a bijection.
///
/// Candidates are tried by image size, then table order.
pub fn find_core(lang: &Language, budget: u64) -> Result<Core> {
    let mut domain: Vec<usize> = (0..lang.domain_size()).collect();
    let mut current = lang.clone();
    'shrink: loop {
        let mut unary = enumerate_polymorphisms(&current, 1, OpFilter::All, budget)?;
        unary.retain(|f| f.image().len() < current.domain_size());
        unary.sort_by_key(|f| f.image().len());
        let mut oracle = SupportOracle::new(&current, budget);
        for f in unary {
            if oracle.contains(&f)? {
                let image = f.image();
                current = current.restrict(&image)?;
                domain = image.iter().map(|&a| domain[a]).collect();
                continue 'shrink;
            }
        }
        return Ok(Core {
            domain,
            language: current,
        });
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bwc {
    /// A ternary WNU `f` and quaternary WNU `g` in the support with `f(y,x,x) = g(y,x,x,x)`.
    Satisfied { ternary: Operation, quaternary: Operation },
    Violated,
}

/// Test for a linked pair of ternary and quaternary WNU operations in `supp(Γ)`.
///
/// The language must contain every constant relation.
pub fn test_bwc(lang: &Language, budget: u64) -> Result<Bwc> {
    let d = lang.domain_size();
    if lang.with_constants().len() != lang.len() {
        return Err(invalid!("the bounded-width test needs all constant relations in the language"));
    }
    let mut oracle = SupportOracle::new(lang, budget);
    for f in enumerate_polymorphisms(lang, 3, OpFilter::Wnu, budget)? {
        if !oracle.contains(&f)? {
            continue;
        }
        let mut shape = OpShape::with_filter(d, 4, OpFilter::Wnu)?;
        for x in 0..d {
            for y in 0..d {
                if x != y {
                    shape.fix(&[y, x, x, x], f.apply(&[y, x, x]))?;
                }
            }
        }
        for g in enumerate_with_shape(lang, &shape, budget)? {
            if oracle.contains(&g)? {
                return Ok(Bwc::Satisfied {
                    ternary: f,
                    quaternary: g,
                });
            }
        }
    }
    Ok(Bwc::Violated)
}

/// Reduce to a core, add the constants, then run [`test_bwc`].
pub fn test_bwc_pipeline(lang: &Language, budget: u64) -> Result<(Core, Bwc)> {
    let core = find_core(lang, budget)?;
    let with_constants = core.language.with_constants();
    let result = test_bwc(&with_constants, budget)?;
    Ok((core, result))
}

/// First symmetric operation of one arity found in the support, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymReport {
    pub arity: usize,
    pub found: Option<Operation>,
}

/// For each arity `2..=max_arity`, search `supp(Γ)` for a symmetric
/// operation, idempotent ones first.
pub fn test_sym(lang: &Language, max_arity: usize, budget: u64) -> Result<Vec<SymReport>> {
    let mut out = Vec::new();
    let mut oracle = SupportOracle::new(lang, budget);
    for m in 2..=max_arity {
        let idempotent = enumerate_polymorphisms(lang, m, OpFilter::IdempotentSymmetric, budget)?;
        let rest: Vec<Operation> = enumerate_polymorphisms(lang, m, OpFilter::Symmetric, budget)?
            .into_iter()
            .filter(|f| !f.is_idempotent())
            .collect();
        let mut found = None;
        for f in idempotent.into_iter().chain(rest) {
            if oracle.contains(&f)? {
                found = Some(f);
                break;
            }
        }
        out.push(SymReport { arity: m, found });
    }
    Ok(out)
}
