//! Membership in the support clone `supp(Γ)` via linear programming.
//!
//! `f` lies in the support of some `m`-ary fractional polymorphism iff the
//! system "ω ≥ 0, Σ ω = 1, E_{g∼ω} φ(g(x̄)) ≤ avg_i φ(x_i) for every block
//! x̄, ω(f) > 0" has a solution, the columns being all `m`-ary
//! polymorphisms. When it has none, a non-negative integral combination `z`
//! of the block inequalities is violated by `f` and satisfied by every
//! polymorphism; [`separating_instance`] turns it into an instance on which
//! the projections are optimal and `f` is not.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::polymorphism::{apply_to_block, polymorphism_counterexample, Counterexample};
use super::{enumerate_polymorphisms, FractionalOperation, Language, OpFilter, Operation};
use crate::error::{check_budget, invalid, Error, Result};
use crate::instance::Instance;
use crate::lp::{solve_lp, solve_with_multipliers, LinearProgram, LpResult, Sense, SolverOptions};
use crate::rational::{ExtRat, Rational};
use crate::tuples;

/// One weighted block `z(φ, x_1, …, x_m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateEntry {
    pub relation: usize,
    pub tuples: Vec<Vec<usize>>,
    pub weight: u64,
}

/// Integral multipliers of the block inequalities refuting `f ∈ supp(Γ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub arity: usize,
    pub entries: Vec<CertificateEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refutation {
    /// `f` is not even a polymorphism.
    NotPolymorphism(Counterexample),
    Certificate(FarkasCertificate),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// A fractional polymorphism with `ω(f) > 0`.
    Yes(FractionalOperation),
    No(Refutation),
}

impl Membership {
    pub fn is_yes(&self) -> bool {
        matches!(self, Membership::Yes(_))
    }
}

/// A block inequality scaled by `m`: `Σ_g coeff_g ω(g) ≤ 0` with
/// `coeff_g = m·φ(g(x̄)) − Σ_i φ(x_i)`.
struct BlockRow {
    relation: usize,
    tuples: Vec<Vec<usize>>,
    coeffs: Vec<Rational>,
}

/// Distinct rows for the blocks whose inequality is not implied by `ω ≥ 0, Σω = 1`.
fn block_rows(lang: &Language, columns: &[Operation], m: usize, budget: u64) -> Result<Vec<BlockRow>> {
    let mut rows = Vec::new();
    // Identical inequalities only need one representative block.
    let mut seen = HashSet::new();
    let mut work: u128 = 0;
    for (id, rel) in lang.relations().iter().enumerate() {
        if rel.is_crisp() {
            // Polymorphisms keep every block at cost 0 = average.
            continue;
        }
        let feasible = rel.feasible_tuples();
        if feasible.is_empty() {
            continue;
        }
        work = work.saturating_add(
            crate::error::pow_saturating(feasible.len(), m).saturating_mul(columns.len() as u128),
        );
        check_budget("membership LP", work, budget)?;
        let mut pick = vec![0; m];
        loop {
            let block: Vec<&[usize]> = pick.iter().map(|&q| feasible[q].as_slice()).collect();
            let total: Rational = block
                .iter()
                .map(|t| rel.value(t).finite().expect("feasible").clone())
                .sum();
            let scale = Rational::from(m);
            let coeffs: Vec<Rational> = columns
                .iter()
                .map(|g| {
                    let image = apply_to_block(g, &block);
                    match rel.value(&image) {
                        ExtRat::Finite(v) => Ok(&scale * v - &total),
                        ExtRat::Infinite => Err(invalid!("candidate operation is not a polymorphism")),
                    }
                })
                .collect::<Result<_>>()?;
            if coeffs.iter().any(Rational::is_positive) && seen.insert(coeffs.clone()) {
                rows.push(BlockRow {
                    relation: id,
                    tuples: block.iter().map(|t| t.to_vec()).collect(),
                    coeffs,
                });
            }
            if !tuples::advance(&mut pick, feasible.len()) {
                break;
            }
        }
    }
    Ok(rows)
}

/// Decide `f ∈ supp(Γ)` with all `m`-ary polymorphisms as columns.
pub fn in_support(f: &Operation, lang: &Language, budget: u64) -> Result<Membership> {
    if let Some(ce) = precheck(f, lang)? {
        return Ok(Membership::No(Refutation::NotPolymorphism(ce)));
    }
    if lang.is_crisp() {
        return Ok(Membership::Yes(FractionalOperation::dirac(f.clone())));
    }
    let columns = enumerate_polymorphisms(lang, f.arity(), OpFilter::All, budget)?;
    in_support_among(f, lang, &columns, budget)
}

fn precheck(f: &Operation, lang: &Language) -> Result<Option<Counterexample>> {
    if f.domain_size() != lang.domain_size() {
        return Err(invalid!("operation and language domains differ"));
    }
    Ok(polymorphism_counterexample(f, lang))
}

/// Decide membership with the given candidate polymorphisms as columns.
///
/// A `Yes` is always a genuine fractional polymorphism. A `No` refutes `f`
/// only relative to `columns`; it is conclusive when `columns` contains every
/// `m`-ary polymorphism.
pub fn in_support_among(f: &Operation, lang: &Language, columns: &[Operation], budget: u64) -> Result<Membership> {
    if let Some(ce) = precheck(f, lang)? {
        return Ok(Membership::No(Refutation::NotPolymorphism(ce)));
    }
    let m = f.arity();
    if columns.iter().any(|g| g.arity() != m || g.domain_size() != f.domain_size()) {
        return Err(invalid!("candidate columns must match the operation's arity and domain"));
    }
    let mut columns = columns.to_vec();
    let target = match columns.iter().position(|g| g == f) {
        Some(p) => p,
        None => {
            columns.push(f.clone());
            columns.len() - 1
        }
    };
    let rows = block_rows(lang, &columns, m, budget)?;
    let n = columns.len();

    let mut lp = LinearProgram::new(n);
    lp.set_cost(target, -Rational::one());
    lp.add_sparse_row((0..n).map(|g| (g, Rational::one())).collect(), Sense::Eq, Rational::one())?;
    for row in &rows {
        let coeffs = row
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(g, c)| (g, c.clone()))
            .collect();
        lp.add_sparse_row(coeffs, Sense::Le, Rational::zero())?;
    }
    let point = match solve_lp(&lp)? {
        LpResult::Optimal { point, .. } => point,
        // ω = τ_m is always feasible when the projections are among the columns.
        LpResult::Infeasible => return farkas(f, target, &columns, &rows, m),
        LpResult::Unbounded => return Err(Error::Internal("membership LP unbounded".into())),
    };
    if point[target].is_positive() {
        let weights = columns
            .into_iter()
            .zip(point)
            .filter(|(_, w)| w.is_positive())
            .collect();
        return Ok(Membership::Yes(FractionalOperation::new(weights)?));
    }
    farkas(f, target, &columns, &rows, m)
}

/// Solve the alternative system: `z ≥ 0`, `Σ_b z_b coeff_{b,g} ≥ 0` for every
/// column `g`, `≥ 1` for `f`, minimising `Σ z`; then clear denominators.
///
/// The system is solved through its dual `max w_f` s.t. `Σ_g coeff_{b,g} w_g ≤ 1`,
/// `w ≥ 0`, whose slack basis is feasible from the start. `z` is read off the
/// optimal multipliers and checked exactly against every row.
fn farkas(f: &Operation, target: usize, columns: &[Operation], rows: &[BlockRow], m: usize) -> Result<Membership> {
    let mut lp = LinearProgram::new(columns.len());
    lp.set_cost(target, -Rational::one());
    for row in rows {
        let coeffs = row
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(g, c)| (g, c.clone()))
            .collect();
        lp.add_sparse_row(coeffs, Sense::Le, Rational::one())?;
    }
    let (result, multipliers) = solve_with_multipliers(&lp, SolverOptions::default())?;
    let (LpResult::Optimal { value, .. }, Some(multipliers)) = (result, multipliers) else {
        return Err(Error::Internal(alloc::format!(
            "neither a witness nor a certificate for {f:?}"
        )));
    };
    let point: Vec<Rational> = multipliers.into_iter().map(|p| -p).collect();
    let audit = point.iter().all(|z| !z.is_negative())
        && point.iter().sum::<Rational>() == -value
        && (0..columns.len()).all(|g| {
            let total: Rational = rows.iter().zip(&point).map(|(r, z)| z * &r.coeffs[g]).sum();
            total >= if g == target { Rational::one() } else { Rational::zero() }
        });
    if !audit {
        return Err(Error::Internal("recovered Farkas point violates the alternative system".into()));
    }
    let lcm = crate::rational::common_denominator(point.iter());
    let scaled: Vec<BigInt> = point.iter().map(|z| (z * &Rational::from_integer(lcm.clone())).numer()).collect();
    let g = scaled.iter().fold(BigInt::zero(), |acc, z| num_integer::Integer::gcd(&acc, z));
    let g = if g.is_zero() { BigInt::one() } else { g };
    let mut entries = Vec::new();
    for (row, z) in rows.iter().zip(scaled) {
        let z = z / &g;
        debug_assert!(!z.is_negative());
        if z.is_zero() {
            continue;
        }
        let weight = z
            .to_u64()
            .ok_or_else(|| Error::Internal("certificate weight overflows u64".into()))?;
        entries.push(CertificateEntry {
            relation: row.relation,
            tuples: row.tuples.clone(),
            weight,
        });
    }
    Ok(Membership::No(Refutation::Certificate(FarkasCertificate { arity: m, entries })))
}

fn validate_entry(entry: &CertificateEntry, lang: &Language, m: usize) -> Result<()> {
    let rel = lang
        .relations()
        .get(entry.relation)
        .ok_or_else(|| invalid!("certificate names unknown relation {}", entry.relation))?;
    if entry.tuples.len() != m {
        return Err(invalid!("certificate block has {} tuples, expected {m}", entry.tuples.len()));
    }
    for t in &entry.tuples {
        if t.len() != rel.arity() || t.iter().any(|&a| a >= lang.domain_size()) || rel.value(t).is_infinite() {
            return Err(invalid!("certificate block contains a tuple outside feas(φ)"));
        }
    }
    Ok(())
}

/// `Σ_b z_b (m·φ(g(x̄_b)) − Σ_i φ(x_{b,i}))`, or `∞` if `g` sends a block outside `feas(φ)`.
pub fn certificate_margin(cert: &FarkasCertificate, g: &Operation, lang: &Language) -> ExtRat {
    let m = Rational::from(cert.arity);
    let mut total = Rational::zero();
    for e in &cert.entries {
        let rel = &lang.relations()[e.relation];
        let block: Vec<&[usize]> = e.tuples.iter().map(Vec::as_slice).collect();
        let ExtRat::Finite(img) = rel.value(&apply_to_block(g, &block)).clone() else {
            return ExtRat::Infinite;
        };
        let avg: Rational = e.tuples.iter().map(|t| rel.value(t).finite().unwrap().clone()).sum();
        total += (&m * &img - avg) * Rational::from(e.weight);
    }
    ExtRat::Finite(total)
}

/// Exact check: margin `> 0` for `f` and `≥ 0` for every operation in `columns`.
pub fn check_certificate(cert: &FarkasCertificate, f: &Operation, lang: &Language, columns: &[Operation]) -> Result<bool> {
    if cert.entries.iter().all(|e| e.weight == 0) {
        return Ok(false);
    }
    for e in &cert.entries {
        validate_entry(e, lang, cert.arity)?;
    }
    let strict = certificate_margin(cert, f, lang) > ExtRat::ZERO;
    Ok(strict && columns.iter().all(|g| certificate_margin(cert, g, lang) >= ExtRat::ZERO))
}

/// The instance witnessing `f ∉ supp(Γ)`.
///
/// Variables are `v_x` for `x ∈ D^m`, numbered in lexicographic order, so the
/// assignment induced by an operation `g` is its table. Each certificate block
/// `(φ, x_1, …, x_m)` contributes `φ(v_{c_1}, …, v_{c_r})` with multiplicity
/// `z`, where `c_p = (x_1[p], …, x_m[p])`. For every relation that is not
/// finite-valued, `feas(φ)` is additionally imposed on every block of
/// feasible tuples, so that finite-cost assignments are exactly the
/// polymorphisms; for crisp `φ` this is `φ` itself.
pub fn separating_instance(cert: &FarkasCertificate, f: &Operation, lang: &Language) -> Result<Instance> {
    let m = cert.arity;
    let d = lang.domain_size();
    if f.arity() != m || f.domain_size() != d {
        return Err(invalid!("certificate arity or domain does not match the operation"));
    }
    if cert.entries.iter().all(|e| e.weight == 0) {
        return Err(invalid!("certificate is identically zero"));
    }
    for e in &cert.entries {
        validate_entry(e, lang, m)?;
    }
    if certificate_margin(cert, f, lang) <= ExtRat::ZERO {
        return Err(invalid!("certificate does not separate the operation"));
    }
    let mut inst = Instance::new(d, tuples::count(d, m));
    let mut ids = HashMap::new();
    let column_scope = |tuples: &[&[usize]]| -> Vec<usize> {
        let r = tuples[0].len();
        (0..r)
            .map(|p| tuples.iter().fold(0, |acc, t| acc * d + t[p]))
            .collect()
    };
    for e in &cert.entries {
        if e.weight == 0 {
            continue;
        }
        let id = match ids.get(&e.relation) {
            Some(&id) => id,
            None => {
                let id = inst.add_named_relation(&lang.names()[e.relation], lang.relations()[e.relation].clone())?;
                ids.insert(e.relation, id);
                id
            }
        };
        let block: Vec<&[usize]> = e.tuples.iter().map(Vec::as_slice).collect();
        inst.add_constraint_with_multiplicity(id, column_scope(&block), e.weight)?;
    }
    for rel in lang.relations() {
        if rel.is_finite_valued() {
            continue;
        }
        let feas = rel.feas();
        let id = inst.intern_relation(&feas)?;
        let feasible = rel.feasible_tuples();
        let mut seen = hashbrown::HashSet::new();
        let mut pick = vec![0; m];
        loop {
            let block: Vec<&[usize]> = pick.iter().map(|&q| feasible[q].as_slice()).collect();
            let scope = column_scope(&block);
            if seen.insert(scope.clone()) {
                inst.add_constraint(id, scope)?;
            }
            if !tuples::advance(&mut pick, feasible.len()) {
                break;
            }
        }
    }
    Ok(inst)
}

/// Verify the inequality system for `ω` exactly: every block's expected image
/// cost is at most its average cost.
pub fn is_fractional_polymorphism(omega: &FractionalOperation, lang: &Language) -> bool {
    let m = omega.arity();
    if omega.domain_size() != lang.domain_size() {
        return false;
    }
    for rel in lang.relations() {
        let feasible = rel.feasible_tuples();
        if feasible.is_empty() {
            continue;
        }
        let mut pick = vec![0; m];
        loop {
            let block: Vec<&[usize]> = pick.iter().map(|&q| feasible[q].as_slice()).collect();
            let avg: Rational = block.iter().map(|t| rel.value(t).finite().unwrap().clone()).sum::<Rational>()
                / Rational::from(m);
            let mut expected = Rational::zero();
            for (g, w) in omega.support() {
                match rel.value(&apply_to_block(g, &block)) {
                    ExtRat::Finite(v) => expected += v * w,
                    ExtRat::Infinite => return false,
                }
            }
            if expected > avg {
                return false;
            }
            if !tuples::advance(&mut pick, feasible.len()) {
                break;
            }
        }
    }
    true
}
