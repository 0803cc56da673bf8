//! The Sherali-Adams hierarchy SA(k, ℓ) for valued CSPs.
//!
//! Every non-empty set of at most `ℓ` variables, and every constraint scope,
//! carries a probability distribution over its assignments; distributions
//! on sets of size at most `k` must be marginals of the distributions on
//! their supersets.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::algebra::FractionalOperation;
use crate::error::{check_budget, invalid, Error, Result};
use crate::instance::{Assignment, Instance};
use crate::lp::{solve_with_multipliers, LinearProgram, LpResult, Sense, SolverOptions};
use crate::rational::{ExtRat, Rational};
use crate::relation::WeightedRelation;
use crate::tuples;

/// The scopes of an SA(k, ℓ) relaxation and their containment structure.
///
/// Scopes are stored as sorted variable sets: first every non-empty subset of
/// size at most `ℓ` (by size, then colexicographically), then the constraint
/// scopes larger than `ℓ` in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeIndex {
    num_vars: usize,
    domain_size: usize,
    k: usize,
    l: usize,
    vars: Vec<usize>,
    starts: Vec<usize>,
    entry_starts: Vec<usize>,
    level_base: Vec<usize>,
    binom: Vec<Vec<usize>>,
    extra: HashMap<Vec<usize>, usize>,
}

fn binomials(n: usize, l: usize) -> Vec<Vec<usize>> {
    let mut b = vec![vec![0usize; l + 1]; n + 1];
    for a in 0..=n {
        b[a][0] = 1;
        for c in 1..=l.min(a) {
            b[a][c] = b[a - 1][c - 1].saturating_add(if c < a { b[a - 1][c] } else { 0 });
        }
    }
    b
}

/// Colexicographic successor of a sorted combination drawn from `0..n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let s = c.len();
    for t in 0..s {
        let limit = if t + 1 < s { c[t + 1] } else { n };
        if c[t] + 1 < limit {
            c[t] += 1;
            for (u, slot) in c[..t].iter_mut().enumerate() {
                *slot = u;
            }
            return true;
        }
    }
    false
}

/// The sorted set of distinct variables in `scope`.
pub fn scope_set(scope: &[usize]) -> Vec<usize> {
    let mut s = scope.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

impl ScopeIndex {
    /// Index the scopes of SA(k, ℓ) for `instance`.
    ///
    /// `budget` bounds the total number of assignment entries.
    pub fn new(instance: &Instance, k: usize, l: usize, budget: u64) -> Result<Self> {
        let n = instance.num_vars();
        let d = instance.domain_size();
        if k == 0 || k > l {
            return Err(invalid!("need 1 <= k <= l, got k = {k}, l = {l}"));
        }
        if l > n {
            return Err(invalid!("l = {l} exceeds the number of variables {n}"));
        }
        let binom = binomials(n, l);
        let mut entries: u128 = 0;
        for s in 1..=l {
            entries = entries
                .saturating_add((binom[n][s] as u128).saturating_mul(crate::error::pow_saturating(d, s)));
        }
        check_budget("SA scope enumeration", entries, budget)?;

        let mut index = ScopeIndex {
            num_vars: n,
            domain_size: d,
            k,
            l,
            vars: Vec::new(),
            starts: vec![0],
            entry_starts: vec![0],
            level_base: vec![0; l + 2],
            binom,
            extra: HashMap::new(),
        };
        for s in 1..=l {
            index.level_base[s] = index.num_scopes();
            let mut c: Vec<usize> = (0..s).collect();
            loop {
                index.push_scope(&c);
                if !next_combination(&mut c, n) {
                    break;
                }
            }
        }
        index.level_base[l + 1] = index.num_scopes();
        for con in instance.constraints() {
            let set = scope_set(&con.scope);
            if set.len() > l && !index.extra.contains_key(&set) {
                entries = entries.saturating_add(crate::error::pow_saturating(d, set.len()));
                check_budget("SA scope enumeration", entries, budget)?;
                let id = index.num_scopes();
                index.push_scope(&set);
                index.extra.insert(set, id);
            }
        }
        Ok(index)
    }

    fn push_scope(&mut self, set: &[usize]) {
        self.vars.extend_from_slice(set);
        self.starts.push(self.vars.len());
        let last = *self.entry_starts.last().unwrap();
        self.entry_starts.push(last + tuples::count(self.domain_size, set.len()));
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn num_scopes(&self) -> usize {
        self.starts.len() - 1
    }

    /// Total number of `λ_i(σ)` entries.
    pub fn num_entries(&self) -> usize {
        *self.entry_starts.last().unwrap()
    }

    pub fn scope(&self, i: usize) -> &[usize] {
        &self.vars[self.starts[i]..self.starts[i + 1]]
    }

    /// Number of assignments to scope `i`.
    pub fn num_assignments(&self, i: usize) -> usize {
        self.entry_starts[i + 1] - self.entry_starts[i]
    }

    /// Offset of scope `i` in the flat entry numbering.
    pub fn entry_start(&self, i: usize) -> usize {
        self.entry_starts[i]
    }

    /// The scope with variable set `set` (sorted, distinct), if indexed.
    pub fn find(&self, set: &[usize]) -> Option<usize> {
        let s = set.len();
        if s == 0 || set.iter().any(|&v| v >= self.num_vars) {
            return None;
        }
        if s <= self.l {
            let rank: usize = set
                .iter()
                .enumerate()
                .map(|(t, &x)| self.binom[x][t + 1])
                .sum();
            Some(self.level_base[s] + rank)
        } else {
            self.extra.get(set).copied()
        }
    }

    fn find_positions(&self, i: usize, positions: &[usize], buf: &mut Vec<usize>) -> usize {
        let scope = self.scope(i);
        buf.clear();
        buf.extend(positions.iter().map(|&p| scope[p]));
        self.find(buf).expect("subsets of size <= l are indexed")
    }

    /// Proper non-empty subscopes `j` of scope `i` with `|X_j| <= k`, ascending.
    pub fn subscopes(&self, i: usize) -> Vec<usize> {
        let r = self.scope(i).len();
        let top = self.k.min(r.saturating_sub(1));
        let mut out = Vec::new();
        for s in 1..=top {
            self.push_subscopes_of_size(i, s, &mut out);
        }
        out.sort_unstable();
        out
    }

    /// Subscopes of size `min(k, |X_i| - 1)` only; their marginal rows imply all others.
    fn generating_subscopes(&self, i: usize) -> Vec<usize> {
        let r = self.scope(i).len();
        let mut out = Vec::new();
        if r >= 2 {
            self.push_subscopes_of_size(i, self.k.min(r - 1), &mut out);
        }
        out
    }

    fn push_subscopes_of_size(&self, i: usize, s: usize, out: &mut Vec<usize>) {
        let r = self.scope(i).len();
        let mut pos: Vec<usize> = (0..s).collect();
        let mut buf = Vec::with_capacity(s);
        loop {
            out.push(self.find_positions(i, &pos, &mut buf));
            if !next_combination(&mut pos, r) {
                break;
            }
        }
    }

    /// For each assignment index of scope `i`, the index of its restriction to scope `j`.
    pub fn projection(&self, j: usize, i: usize) -> Vec<usize> {
        let sup = self.scope(i);
        let sub = self.scope(j);
        let pos: Vec<usize> = sub
            .iter()
            .map(|v| sup.iter().position(|w| w == v).expect("subscope"))
            .collect();
        let d = self.domain_size;
        let mut sigma = vec![0; sup.len()];
        let mut out = Vec::with_capacity(self.num_assignments(i));
        loop {
            out.push(pos.iter().fold(0, |acc, &p| acc * d + sigma[p]));
            if !tuples::advance(&mut sigma, d) {
                break;
            }
        }
        out
    }

    /// Every containment pair `(j, i)`, grouped by `i` ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_scopes()).flat_map(move |i| self.subscopes(i).into_iter().map(move |j| (j, i)))
    }
}

/// Per-scope cost tables: the sum of all constraints whose variable set is the scope.
#[derive(Clone, Debug)]
pub struct ScopeCosts {
    costs: HashMap<usize, Vec<ExtRat>>,
}

impl ScopeCosts {
    pub fn new(instance: &Instance, index: &ScopeIndex) -> Self {
        let d = instance.domain_size();
        let mut costs: HashMap<usize, Vec<ExtRat>> = HashMap::new();
        for c in instance.constraints() {
            let set = scope_set(&c.scope);
            let i = index.find(&set).expect("constraint scopes are indexed");
            let rel: &WeightedRelation = instance.relation(c.relation);
            let pos: Vec<usize> = c
                .scope
                .iter()
                .map(|v| set.iter().position(|w| w == v).unwrap())
                .collect();
            let table = costs
                .entry(i)
                .or_insert_with(|| vec![ExtRat::ZERO; index.num_assignments(i)]);
            let mut sigma = vec![0; set.len()];
            let mut s = 0;
            loop {
                let t = pos.iter().fold(0, |acc, &p| acc * d + sigma[p]);
                let v = rel.value_at(t).times(c.multiplicity);
                table[s] += &v;
                s += 1;
                if !tuples::advance(&mut sigma, d) {
                    break;
                }
            }
        }
        ScopeCosts { costs }
    }

    /// Cost table of scope `i`, or `None` for a null scope.
    pub fn get(&self, i: usize) -> Option<&[ExtRat]> {
        self.costs.get(&i).map(Vec::as_slice)
    }

    pub fn is_feasible(&self, i: usize, sigma: usize) -> bool {
        self.get(i).is_none_or(|t| t[sigma].is_finite())
    }
}

/// A point of the SA(k, ℓ) polytope: one distribution per indexed scope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaSolution {
    index: ScopeIndex,
    values: Vec<Rational>,
}

impl SaSolution {
    /// All-zero entries (not yet a distribution).
    pub fn zeros(index: ScopeIndex) -> Self {
        let values = vec![Rational::zero(); index.num_entries()];
        SaSolution { index, values }
    }

    /// The point putting probability 1 on `assignment` restricted to each scope.
    pub fn integral(index: ScopeIndex, assignment: &[usize]) -> Result<Self> {
        if assignment.len() != index.num_vars()
            || assignment.iter().any(|&a| a >= index.domain_size())
        {
            return Err(invalid!("assignment does not match the scope index"));
        }
        let mut sol = Self::zeros(index);
        let d = sol.index.domain_size();
        for i in 0..sol.index.num_scopes() {
            let s = sol.index.scope(i).iter().fold(0, |acc, &v| acc * d + assignment[v]);
            sol.distribution_mut(i)[s] = Rational::one();
        }
        Ok(sol)
    }

    pub fn index(&self) -> &ScopeIndex {
        &self.index
    }

    pub fn k(&self) -> usize {
        self.index.k
    }

    pub fn l(&self) -> usize {
        self.index.l
    }

    pub fn distribution(&self, i: usize) -> &[Rational] {
        &self.values[self.index.entry_starts[i]..self.index.entry_starts[i + 1]]
    }

    pub fn distribution_mut(&mut self, i: usize) -> &mut [Rational] {
        let (a, b) = (self.index.entry_starts[i], self.index.entry_starts[i + 1]);
        &mut self.values[a..b]
    }

    /// The distribution on the variable set `set` (sorted, distinct).
    pub fn get(&self, set: &[usize]) -> Option<&[Rational]> {
        self.index.find(set).map(|i| self.distribution(i))
    }

    /// `λ_i(σ)` for the scope with set `set` and the assignment `sigma` to it.
    pub fn probability(&self, set: &[usize], sigma: &[usize]) -> Option<&Rational> {
        let i = self.index.find(set)?;
        Some(&self.distribution(i)[tuples::encode(sigma, self.index.domain_size)])
    }

    /// Unary marginal of variable `v`.
    pub fn unary(&self, v: usize) -> &[Rational] {
        self.get(&[v]).expect("singletons are always indexed")
    }

    /// `Σ_i Σ_σ λ_i(σ) φ_i(σ)`, skipping zero-probability terms.
    pub fn objective(&self, instance: &Instance) -> ExtRat {
        objective_with(&self.index, &ScopeCosts::new(instance, &self.index), |i| {
            self.distribution(i)
        })
    }
}

fn objective_with<'a>(
    index: &ScopeIndex,
    costs: &ScopeCosts,
    dist: impl Fn(usize) -> &'a [Rational],
) -> ExtRat {
    let mut total = ExtRat::ZERO;
    for i in 0..index.num_scopes() {
        let Some(table) = costs.get(i) else {
            continue;
        };
        for (p, c) in dist(i).iter().zip(table) {
            if p.is_zero() {
                continue;
            }
            match c {
                ExtRat::Infinite => return ExtRat::Infinite,
                ExtRat::Finite(c) => total += &ExtRat::Finite(p * c),
            }
        }
    }
    total
}

/// Build the SA(k, ℓ) linear program verbatim.
///
/// Column `index.entry_start(i) + σ` is `λ_i(σ)`; infeasible assignments get
/// the bounds `[0, 0]`. There is one marginal row per containment pair and
/// assignment of the smaller scope, and one normalisation row per scope.
pub fn build_sa(instance: &Instance, k: usize, l: usize, budget: u64) -> Result<(LinearProgram, ScopeIndex)> {
    let index = ScopeIndex::new(instance, k, l, budget)?;
    let costs = ScopeCosts::new(instance, &index);
    let mut lp = LinearProgram::new(index.num_entries());
    for i in 0..index.num_scopes() {
        let base = index.entry_start(i);
        if let Some(table) = costs.get(i) {
            for (s, c) in table.iter().enumerate() {
                match c {
                    ExtRat::Finite(c) => lp.set_cost(base + s, c.clone()),
                    ExtRat::Infinite => lp.set_bounds(base + s, Some(Rational::zero()), Some(Rational::zero())),
                }
            }
        }
    }
    for i in 0..index.num_scopes() {
        let base = index.entry_start(i);
        let coeffs = (0..index.num_assignments(i)).map(|s| (base + s, Rational::one())).collect();
        lp.add_sparse_row(coeffs, Sense::Eq, Rational::one())?;
    }
    for (j, i) in index.pairs() {
        let proj = index.projection(j, i);
        let (bi, bj) = (index.entry_start(i), index.entry_start(j));
        let mut rows: Vec<Vec<(usize, Rational)>> = (0..index.num_assignments(j))
            .map(|t| vec![(bj + t, -Rational::one())])
            .collect();
        for (s, &t) in proj.iter().enumerate() {
            rows[t].push((bi + s, Rational::one()));
        }
        for row in rows {
            lp.add_sparse_row(row, Sense::Eq, Rational::zero())?;
        }
    }
    Ok((lp, index))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SaResult {
    Feasible { value: Rational, solution: SaSolution },
    Infeasible,
}

impl SaResult {
    pub fn value(&self) -> ExtRat {
        match self {
            SaResult::Feasible { value, .. } => ExtRat::Finite(value.clone()),
            SaResult::Infeasible => ExtRat::Infinite,
        }
    }

    pub fn solution(&self) -> Option<&SaSolution> {
        match self {
            SaResult::Feasible { solution, .. } => Some(solution),
            SaResult::Infeasible => None,
        }
    }
}

/// Solve SA(k, ℓ) exactly.
///
/// The LP solved is equivalent to [`build_sa`] but smaller: infeasible
/// assignments have no column, marginal rows are only imposed towards
/// subscopes of size `min(k, |X_i| - 1)` (the rest follow by transitivity),
/// and one marginal row per pair, implied by the two normalisation rows, is
/// left out.
pub fn solve_sa(instance: &Instance, k: usize, l: usize, budget: u64) -> Result<SaResult> {
    solve_sa_with(instance, k, l, budget, SolverOptions::default())
}

pub fn solve_sa_with(instance: &Instance, k: usize, l: usize, budget: u64, options: SolverOptions) -> Result<SaResult> {
    let index = ScopeIndex::new(instance, k, l, budget)?;
    let costs = ScopeCosts::new(instance, &index);
    solve_indexed(index, &costs, options)
}

fn solve_indexed(index: ScopeIndex, costs: &ScopeCosts, options: SolverOptions) -> Result<SaResult> {
    // Column of each feasible entry.
    let mut column = vec![usize::MAX; index.num_entries()];
    let mut entry_of_column = Vec::new();
    for i in 0..index.num_scopes() {
        let base = index.entry_start(i);
        let mut any = false;
        for s in 0..index.num_assignments(i) {
            if costs.is_feasible(i, s) {
                column[base + s] = entry_of_column.len();
                entry_of_column.push(base + s);
                any = true;
            }
        }
        if !any {
            return Ok(SaResult::Infeasible);
        }
    }
    let ncols = entry_of_column.len();
    let mut cost = vec![Rational::zero(); ncols];
    // Costs shifted per scope to be non-negative; `shift` is the total offset.
    let mut shifted = vec![Rational::zero(); ncols];
    let mut shift = Rational::zero();
    for i in 0..index.num_scopes() {
        let Some(table) = costs.get(i) else {
            continue;
        };
        let base = index.entry_start(i);
        let min = table.iter().filter_map(ExtRat::finite).min().cloned().unwrap_or_else(Rational::zero);
        for (s, c) in table.iter().enumerate() {
            if let ExtRat::Finite(c) = c {
                cost[column[base + s]] = c.clone();
                shifted[column[base + s]] = c - &min;
            }
        }
        shift += min;
    }

    // Equality rows `A x = b` of the compact primal.
    let mut rows: Vec<(Vec<(usize, Rational)>, Rational)> = Vec::new();
    for i in 0..index.num_scopes() {
        let base = index.entry_start(i);
        let coeffs = (0..index.num_assignments(i))
            .filter(|&s| column[base + s] != usize::MAX)
            .map(|s| (column[base + s], Rational::one()))
            .collect();
        rows.push((coeffs, Rational::one()));
    }
    for i in 0..index.num_scopes() {
        for j in index.generating_subscopes(i) {
            let proj = index.projection(j, i);
            let (bi, bj) = (index.entry_start(i), index.entry_start(j));
            let nj = index.num_assignments(j);
            let mut marginal: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); nj];
            for (t, row) in marginal.iter_mut().enumerate() {
                if column[bj + t] != usize::MAX {
                    row.push((column[bj + t], -Rational::one()));
                }
            }
            for (s, &t) in proj.iter().enumerate() {
                if column[bi + s] != usize::MAX {
                    marginal[t].push((column[bi + s], Rational::one()));
                }
            }
            for row in marginal.into_iter().take(nj - 1) {
                if !row.is_empty() {
                    rows.push((row, Rational::zero()));
                }
            }
        }
    }

    // The dual `max b·y s.t. Aᵀy ≤ c'` starts from a feasible slack basis
    // since `c' ≥ 0`; its optimal multipliers are the primal optimum.
    let mut dual = LinearProgram::new(rows.len());
    let mut by_column: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); ncols];
    for (r, (coeffs, rhs)) in rows.iter().enumerate() {
        dual.set_bounds(r, None, None);
        dual.set_cost(r, -rhs);
        for (c, a) in coeffs {
            by_column[*c].push((r, a.clone()));
        }
    }
    for (c, coeffs) in by_column.into_iter().enumerate() {
        dual.add_sparse_row(coeffs, Sense::Le, shifted[c].clone())?;
    }
    let (result, multipliers) = solve_with_multipliers(&dual, options)?;
    let dual_value = match result {
        LpResult::Unbounded => return Ok(SaResult::Infeasible),
        LpResult::Infeasible => return Err(Error::Internal("SA dual infeasible at y = 0".into())),
        LpResult::Optimal { value, .. } => value,
    };
    let multipliers = multipliers.ok_or_else(|| Error::Internal("SA dual multipliers unavailable".into()))?;
    let x: Vec<Rational> = multipliers.into_iter().map(|p| -p).collect();

    // Exact audit of the recovered primal point.
    if x.iter().any(Rational::is_negative)
        || rows.iter().any(|(coeffs, rhs)| coeffs.iter().map(|(c, a)| a * &x[*c]).sum::<Rational>() != *rhs)
    {
        return Err(Error::Internal("recovered SA point violates the relaxation".into()));
    }
    let value: Rational = cost.iter().zip(&x).filter(|(_, v)| !v.is_zero()).map(|(c, v)| c * v).sum();
    if value != &shift - &dual_value {
        return Err(Error::Internal("SA primal and dual optima differ".into()));
    }
    let mut solution = SaSolution::zeros(index);
    for (c, v) in x.into_iter().enumerate() {
        solution.values[entry_of_column[c]] = v;
    }
    Ok(SaResult::Feasible { value, solution })
}

/// The first condition of the SA(k, ℓ) system that a point violates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SaViolation {
    /// `Σ_σ λ_i(σ) ≠ 1`.
    Normalization { scope: Vec<usize>, total: Rational },
    Negative { scope: Vec<usize>, assignment: Vec<usize> },
    /// Positive mass on an assignment of infinite cost.
    InfeasibleMass { scope: Vec<usize>, assignment: Vec<usize> },
    /// The marginal of `λ_sup` on `sub` differs from `λ_sub` at `assignment`.
    Marginal {
        sub: Vec<usize>,
        sup: Vec<usize>,
        assignment: Vec<usize>,
        expected: Rational,
        found: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaReport {
    pub violation: Option<SaViolation>,
    pub objective: ExtRat,
}

impl SaReport {
    pub fn is_feasible(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks points of SA(k, ℓ) scope by scope; `verify_sa_feasible` runs every check.
pub struct SaVerifier<'a> {
    index: ScopeIndex,
    costs: ScopeCosts,
    lambda: &'a SaSolution,
    /// Position of each required scope in `lambda`'s own index.
    map: Vec<usize>,
}

impl<'a> SaVerifier<'a> {
    pub fn new(instance: &Instance, lambda: &'a SaSolution, k: usize, l: usize, budget: u64) -> Result<Self> {
        if lambda.index.domain_size() != instance.domain_size() || lambda.index.num_vars() != instance.num_vars() {
            return Err(invalid!("solution does not match the instance"));
        }
        let index = ScopeIndex::new(instance, k, l, budget)?;
        let costs = ScopeCosts::new(instance, &index);
        let mut map = Vec::with_capacity(index.num_scopes());
        for i in 0..index.num_scopes() {
            let set = index.scope(i);
            match lambda.index.find(set) {
                Some(m) => map.push(m),
                None => return Err(invalid!("no distribution given for scope {:?}", set)),
            }
        }
        Ok(SaVerifier {
            index,
            costs,
            lambda,
            map,
        })
    }

    pub fn index(&self) -> &ScopeIndex {
        &self.index
    }

    fn dist(&self, i: usize) -> &'a [Rational] {
        self.lambda.distribution(self.map[i])
    }

    fn decode(&self, i: usize, s: usize) -> Vec<usize> {
        let mut t = vec![0; self.index.scope(i).len()];
        tuples::decode(s, self.index.domain_size(), &mut t);
        t
    }

    /// Normalisation, non-negativity and zero mass on infeasible assignments.
    pub fn check_scope(&self, i: usize) -> Option<SaViolation> {
        let dist = self.dist(i);
        let scope = self.index.scope(i).to_vec();
        let total: Rational = dist.iter().sum();
        if total != Rational::one() {
            return Some(SaViolation::Normalization { scope, total });
        }
        for (s, p) in dist.iter().enumerate() {
            if p.is_negative() {
                return Some(SaViolation::Negative {
                    assignment: self.decode(i, s),
                    scope,
                });
            }
            if p.is_positive() && !self.costs.is_feasible(i, s) {
                return Some(SaViolation::InfeasibleMass {
                    assignment: self.decode(i, s),
                    scope,
                });
            }
        }
        None
    }

    /// Marginal consistency of the pair `X_j ⊆ X_i`.
    pub fn check_pair(&self, j: usize, i: usize) -> Option<SaViolation> {
        let proj = self.index.projection(j, i);
        let mut marginal = vec![Rational::zero(); self.index.num_assignments(j)];
        for (p, &t) in self.dist(i).iter().zip(&proj) {
            if !p.is_zero() {
                marginal[t] += p;
            }
        }
        let sub = self.dist(j);
        for (t, (m, e)) in marginal.into_iter().zip(sub).enumerate() {
            if m != *e {
                return Some(SaViolation::Marginal {
                    sub: self.index.scope(j).to_vec(),
                    sup: self.index.scope(i).to_vec(),
                    assignment: self.decode(j, t),
                    expected: e.clone(),
                    found: m,
                });
            }
        }
        None
    }

    pub fn objective(&self) -> ExtRat {
        objective_with(&self.index, &self.costs, |i| self.dist(i))
    }

    /// Run every check; the lowest-index violation is reported.
    pub fn verify_all(&self) -> SaReport {
        let violation = (0..self.index.num_scopes())
            .find_map(|i| self.check_scope(i))
            .or_else(|| self.index.pairs().find_map(|(j, i)| self.check_pair(j, i)));
        SaReport {
            violation,
            objective: self.objective(),
        }
    }
}

/// Exact feasibility check of `lambda` against the SA(k, ℓ) system of `instance`.
pub fn verify_sa_feasible(instance: &Instance, lambda: &SaSolution, k: usize, l: usize, budget: u64) -> Result<SaReport> {
    Ok(SaVerifier::new(instance, lambda, k, l, budget)?.verify_all())
}

/// `λ^ω`: push every scope distribution through the fractional operation `ω`.
///
/// `λ^ω_i(σ) = Pr[f(σ_1, …, σ_m) = σ]` for `f ∼ ω` and independent `σ_t ∼ λ_i`,
/// computed by full enumeration of the supports.
pub fn symmetrize(lambda: &SaSolution, omega: &FractionalOperation, budget: u64) -> Result<SaSolution> {
    let index = lambda.index.clone();
    let d = index.domain_size();
    if omega.domain_size() != d {
        return Err(invalid!("operation domain differs from the instance domain"));
    }
    let m = omega.arity();
    let mut work: u128 = 0;
    for i in 0..index.num_scopes() {
        let supp = lambda.distribution(i).iter().filter(|p| !p.is_zero()).count();
        work = work.saturating_add(
            crate::error::pow_saturating(supp, m).saturating_mul(omega.support().len() as u128),
        );
    }
    check_budget("symmetrization", work, budget)?;

    let mut out = SaSolution::zeros(index.clone());
    for i in 0..index.num_scopes() {
        let r = index.scope(i).len();
        let support: Vec<(Vec<usize>, &Rational)> = lambda
            .distribution(i)
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(s, p)| {
                let mut t = vec![0; r];
                tuples::decode(s, d, &mut t);
                (t, p)
            })
            .collect();
        let target = out.distribution_mut(i);
        let mut pick = vec![0; m];
        let mut column = vec![0; m];
        loop {
            let mut prob = Rational::one();
            for &q in &pick {
                prob *= support[q].1;
            }
            for (f, w) in omega.support() {
                let mut s = 0;
                for x in 0..r {
                    for (t, &q) in pick.iter().enumerate() {
                        column[t] = support[q].0[x];
                    }
                    s = s * d + f.apply(&column);
                }
                target[s] += &prob * w;
            }
            if !tuples::advance(&mut pick, support.len()) {
                break;
            }
        }
    }
    Ok(out)
}

/// Extend an SA(1, 1) point to SA(1, ℓ).
///
/// Scopes already present keep their distribution; each new (null) scope
/// gets the product of its unary marginals.
pub fn extend_width1(lambda: &SaSolution, instance: &Instance, l: usize, budget: u64) -> Result<SaSolution> {
    if lambda.k() != 1 {
        return Err(invalid!("width-1 extension needs an SA(1, l) point"));
    }
    let index = ScopeIndex::new(instance, 1, l, budget)?;
    let d = index.domain_size();
    let mut out = SaSolution::zeros(index);
    for i in 0..out.index.num_scopes() {
        let scope = out.index.scope(i).to_vec();
        if let Some(dist) = lambda.get(&scope) {
            out.distribution_mut(i).clone_from_slice(dist);
            continue;
        }
        let mut sigma = vec![0; scope.len()];
        let mut s = 0;
        let mut table = vec![Rational::zero(); out.index.num_assignments(i)];
        loop {
            let mut p = Rational::one();
            for (v, &a) in scope.iter().zip(&sigma) {
                p *= &lambda.unary(*v)[a];
                if p.is_zero() {
                    break;
                }
            }
            table[s] = p;
            s += 1;
            if !tuples::advance(&mut sigma, d) {
                break;
            }
        }
        out.distribution_mut(i).clone_from_slice(&table);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extraction {
    /// An assignment whose value equals the SA optimum.
    Found { assignment: Assignment, value: Rational },
    /// Self-reduction got stuck or ended on an assignment worse than the SA optimum.
    NotExtractable {
        sa_value: Rational,
        /// Values fixed before the failure, in variable order.
        fixed: Vec<usize>,
    },
    /// The relaxation itself is infeasible.
    Infeasible,
}

/// Self-reduction: fix variables in index order, trying labels in order and
/// keeping a label when the SA(k, ℓ) optimum with the added constant
/// constraint is unchanged.
pub fn extract_assignment(instance: &Instance, k: usize, l: usize, budget: u64) -> Result<Extraction> {
    extract_assignment_with(instance, k, l, budget, SolverOptions::default())
}

pub fn extract_assignment_with(
    instance: &Instance,
    k: usize,
    l: usize,
    budget: u64,
    options: SolverOptions,
) -> Result<Extraction> {
    let d = instance.domain_size();
    let n = instance.num_vars();
    let mut work = instance.clone();
    let constants = (0..d)
        .map(|a| work.intern_relation(&WeightedRelation::constant(d, a)?))
        .collect::<Result<Vec<_>>>()?;
    let index = ScopeIndex::new(&work, k, l, budget)?;
    let (opt, mut current) = match solve_indexed(index.clone(), &ScopeCosts::new(&work, &index), options)? {
        SaResult::Infeasible => return Ok(Extraction::Infeasible),
        SaResult::Feasible { value, solution } => (value, solution),
    };
    let mut fixed = Vec::with_capacity(n);
    for v in 0..n {
        let mut chosen = None;
        for a in 0..d {
            work.add_constraint(constants[a], vec![v])?;
            if current.unary(v)[a] == Rational::one() {
                chosen = Some(a);
                break;
            }
            // Constant constraints live on singleton scopes, so the index is unchanged.
            match solve_indexed(index.clone(), &ScopeCosts::new(&work, &index), options)? {
                SaResult::Feasible { value, solution } if value == opt => {
                    current = solution;
                    chosen = Some(a);
                    break;
                }
                _ => {
                    let mut cs = work.constraints().to_vec();
                    cs.pop();
                    work.set_constraints(cs)?;
                }
            }
        }
        match chosen {
            Some(a) => fixed.push(a),
            None => return Ok(Extraction::NotExtractable { sa_value: opt, fixed }),
        }
    }
    match instance.evaluate(&fixed)? {
        ExtRat::Finite(value) if value == opt => Ok(Extraction::Found {
            assignment: Assignment(fixed),
            value,
        }),
        _ => Ok(Extraction::NotExtractable { sa_value: opt, fixed }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DEFAULT_BUDGET;
    use crate::instance::tests::{cut, triangle_cut};
    use crate::lp::solve_lp;

    #[test]
    fn ranking_matches_enumeration_order() {
        let inst = Instance::new(2, 6);
        let index = ScopeIndex::new(&inst, 2, 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(index.num_scopes(), 6 + 15 + 20 + 15);
        for i in 0..index.num_scopes() {
            assert_eq!(index.find(index.scope(i)), Some(i));
        }
    }

    #[test]
    fn single_binary_constraint_structure() {
        let mut inst = Instance::new(2, 2);
        let r = inst.add_relation(cut()).unwrap();
        inst.add_constraint(r, vec![0, 1]).unwrap();
        let (lp, index) = build_sa(&inst, 1, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(index.num_scopes(), 3);
        assert_eq!(index.scope(2), &[0, 1]);
        assert_eq!(lp.num_vars(), 2 + 2 + 4);
        // 3 normalisation rows, 2 pairs with 2 marginal rows each.
        assert_eq!(lp.rows().len(), 3 + 4);
        assert_eq!(index.subscopes(2), vec![0, 1]);
    }

    #[test]
    fn triangle_has_seven_scopes() {
        let (_, index) = build_sa(&triangle_cut(), 2, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(index.num_scopes(), 7);
    }

    #[test]
    fn literal_and_compact_programs_agree() {
        let mut inst = triangle_cut();
        let c0 = inst.intern_relation(&WeightedRelation::constant(2, 0).unwrap()).unwrap();
        let c1 = inst.intern_relation(&WeightedRelation::constant(2, 1).unwrap()).unwrap();
        inst.add_constraint(c0, vec![0]).unwrap();
        inst.add_constraint(c1, vec![2]).unwrap();
        for (k, l) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)] {
            let (lp, _) = build_sa(&inst, k, l, DEFAULT_BUDGET).unwrap();
            let full = solve_lp(&lp).unwrap().value().unwrap();
            let compact = solve_sa(&inst, k, l, DEFAULT_BUDGET).unwrap();
            assert_eq!(full, compact.value());
            assert_eq!(compact.value(), ExtRat::from(2));
            let sol = compact.solution().unwrap();
            let rep = verify_sa_feasible(&inst, sol, k, l, DEFAULT_BUDGET).unwrap();
            assert!(rep.is_feasible(), "{:?}", rep.violation);
            assert_eq!(rep.objective, compact.value());
        }
    }

    #[test]
    fn parameters_are_validated() {
        let inst = triangle_cut();
        assert!(ScopeIndex::new(&inst, 0, 1, DEFAULT_BUDGET).is_err());
        assert!(ScopeIndex::new(&inst, 2, 1, DEFAULT_BUDGET).is_err());
        assert!(ScopeIndex::new(&inst, 1, 4, DEFAULT_BUDGET).is_err());
        assert!(matches!(
            ScopeIndex::new(&inst, 1, 3, 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn perturbed_point_reports_marginal() {
        let inst = triangle_cut();
        let index = ScopeIndex::new(&inst, 2, 2, DEFAULT_BUDGET).unwrap();
        let mut sol = SaSolution::integral(index, &[0, 0, 0]).unwrap();
        let rep = verify_sa_feasible(&inst, &sol, 2, 2, DEFAULT_BUDGET).unwrap();
        assert!(rep.is_feasible());
        assert_eq!(rep.objective, ExtRat::ZERO);
        let i = sol.index().find(&[0, 1]).unwrap();
        let eps = Rational::new(1, 1000);
        sol.distribution_mut(i)[0] -= &eps;
        sol.distribution_mut(i)[1] += &eps;
        let rep = verify_sa_feasible(&inst, &sol, 2, 2, DEFAULT_BUDGET).unwrap();
        match rep.violation {
            Some(SaViolation::Marginal { sub, sup, .. }) => {
                assert_eq!(sub, vec![1]);
                assert_eq!(sup, vec![0, 1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_scope_is_an_input_error() {
        let inst = triangle_cut();
        let index = ScopeIndex::new(&inst, 1, 1, DEFAULT_BUDGET).unwrap();
        let sol = SaSolution::integral(index, &[0, 0, 0]).unwrap();
        assert!(verify_sa_feasible(&inst, &sol, 2, 3, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn extension_of_uniform_marginals_is_uniform() {
        let inst = Instance::new(2, 2);
        let index = ScopeIndex::new(&inst, 1, 1, DEFAULT_BUDGET).unwrap();
        let mut sol = SaSolution::zeros(index);
        for i in 0..2 {
            sol.distribution_mut(i).fill(Rational::new(1, 2));
        }
        let ext = extend_width1(&sol, &inst, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(ext.get(&[0, 1]).unwrap(), vec![Rational::new(1, 4); 4].as_slice());
        assert!(verify_sa_feasible(&inst, &ext, 1, 2, DEFAULT_BUDGET).unwrap().is_feasible());
    }

    #[test]
    fn extraction_on_pinned_instance() {
        let mut inst = Instance::new(3, 2);
        for (v, a) in [(0, 2), (1, 1)] {
            let c = inst.intern_relation(&WeightedRelation::constant(3, a).unwrap()).unwrap();
            inst.add_constraint(c, vec![v]).unwrap();
        }
        let ext = extract_assignment(&inst, 1, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(
            ext,
            Extraction::Found {
                assignment: Assignment(vec![2, 1]),
                value: Rational::zero()
            }
        );
    }
}
