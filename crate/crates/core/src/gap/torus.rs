use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_budget, invalid, pow_saturating, Error, Result};
use crate::instance::Instance;
use crate::rational::Rational;
use crate::sa::{SaSolution, ScopeIndex};
use crate::tuples;

use super::group::{eq_relation_name, shifted_sum_relation, sum_relation, AbelianGroup};

/// A variable of the torus instance: a vertex, a horizontal edge or a vertical edge.
///
/// `Y(a, b)` joins vertices `(a, b)` and `(a, b+1)`, `Z(a, b)` joins `(a, b)`
/// and `(a+1, b)`, indices modulo `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TorusVar {
    X(usize, usize),
    Y(usize, usize),
    Z(usize, usize),
}

/// The instance with constraints `y_{a,b+1} = y_{a,b} + x_{a,b} + c_{a,b}` and
/// `z_{a+1,b} = z_{a,b} + x_{a,b} + d_{a,b}` on the `n × n` torus.
#[derive(Clone, Debug)]
pub struct TorusInstance {
    group: AbelianGroup,
    n: usize,
    c: Vec<usize>,
    d: Vec<usize>,
    instance: Instance,
}

/// Relation ids in [`TorusInstance::instance`].
pub const R0: usize = 0;
pub const RG: usize = 1;

impl TorusInstance {
    /// `c_{0,0} = g` and every other parameter zero.
    pub fn canonical(group: AbelianGroup, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid!("n must be at least 1"));
        }
        let mut c = vec![group.zero(); n * n];
        c[0] = group.g();
        let d = vec![group.zero(); n * n];
        Self::with_parameters(group, n, c, d)
    }

    /// Parameters indexed `a * n + b`; each must be `0` or `g` and
    /// `Σ c − Σ d` must equal `g`.
    pub fn with_parameters(group: AbelianGroup, n: usize, c: Vec<usize>, d: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(invalid!("n must be at least 1"));
        }
        if c.len() != n * n || d.len() != n * n {
            return Err(invalid!("parameter tables must have n^2 = {} entries", n * n));
        }
        let allowed = [group.zero(), group.g()];
        if c.iter().chain(&d).any(|v| !allowed.contains(v)) {
            return Err(invalid!("parameters must be 0 or g"));
        }
        let diff = group.sub(group.sum(c.iter().copied()), group.sum(d.iter().copied()));
        if diff != group.g() {
            return Err(invalid!("sum of c minus sum of d is {diff}, not g = {}", group.g()));
        }
        let mut instance = Instance::new(group.order(), 3 * n * n);
        instance.add_named_relation("R0", shifted_sum_relation(&group, group.zero())?)?;
        instance.add_named_relation("Rg", shifted_sum_relation(&group, group.g())?)?;
        let mut torus = TorusInstance {
            group,
            n,
            c,
            d,
            instance: Instance::new(2, 0),
        };
        for a in 0..n {
            for b in 0..n {
                let [cy, dz] = torus.constraint_scopes(a, b);
                let rc = if torus.c(a, b) == torus.group.zero() { R0 } else { RG };
                let rd = if torus.d(a, b) == torus.group.zero() { R0 } else { RG };
                instance.add_constraint(rc, cy.to_vec())?;
                instance.add_constraint(rd, dz.to_vec())?;
            }
        }
        torus.instance = instance;
        Ok(torus)
    }

    /// Scopes `(y_{a,b+1}, y_{a,b}, x_{a,b})` and `(z_{a+1,b}, z_{a,b}, x_{a,b})`.
    fn constraint_scopes(&self, a: usize, b: usize) -> [[usize; 3]; 2] {
        let n = self.n;
        let x = self.id(TorusVar::X(a, b));
        [
            [self.id(TorusVar::Y(a, (b + 1) % n)), self.id(TorusVar::Y(a, b)), x],
            [self.id(TorusVar::Z((a + 1) % n, b)), self.id(TorusVar::Z(a, b)), x],
        ]
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self, a: usize, b: usize) -> usize {
        self.c[a * self.n + b]
    }

    pub fn d(&self, a: usize, b: usize) -> usize {
        self.d[a * self.n + b]
    }

    /// The instance over `{R_0, R_g}`.
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn num_vars(&self) -> usize {
        3 * self.n * self.n
    }

    pub fn id(&self, v: TorusVar) -> usize {
        let n = self.n;
        match v {
            TorusVar::X(a, b) => a * n + b,
            TorusVar::Y(a, b) => n * n + a * n + b,
            TorusVar::Z(a, b) => 2 * n * n + a * n + b,
        }
    }

    pub fn var(&self, id: usize) -> TorusVar {
        let n = self.n;
        let (kind, r) = (id / (n * n), id % (n * n));
        let (a, b) = (r / n, r % n);
        match kind {
            0 => TorusVar::X(a, b),
            1 => TorusVar::Y(a, b),
            _ => TorusVar::Z(a, b),
        }
    }

    /// The same instance over the equation language `E_{G,r}`.
    ///
    /// Every relation `R^m_a` with `m ≤ r` is declared; each constraint
    /// `x = y + z + c` becomes `R^3_c(x, y', z') + R^2_0(y', y) + R^2_0(z', z)`
    /// with two fresh variables.
    pub fn eqs_instance(&self, r: usize) -> Result<Instance> {
        if r < 3 {
            return Err(invalid!("the torus constraints need r >= 3, got {r}"));
        }
        let g = &self.group;
        let base = self.num_vars();
        let mut inst = Instance::new(g.order(), base + 2 * self.instance.constraints().len());
        for m in 1..=r {
            for a in 0..g.order() {
                inst.add_named_relation(&eq_relation_name(m, a), sum_relation(g, m, a)?)?;
            }
        }
        let two = inst.relation_id(&eq_relation_name(2, g.zero())).unwrap();
        for (t, con) in self.instance.constraints().iter().enumerate() {
            let shift = if con.relation == R0 { g.zero() } else { g.g() };
            let three = inst.relation_id(&eq_relation_name(3, shift)).unwrap();
            let (y1, z1) = (base + 2 * t, base + 2 * t + 1);
            inst.add_constraint(three, vec![con.scope[0], y1, z1])?;
            inst.add_constraint(two, vec![y1, con.scope[1]])?;
            inst.add_constraint(two, vec![z1, con.scope[2]])?;
        }
        Ok(inst)
    }

    fn touched(&self, v: usize, out: &mut Vec<(usize, usize)>) {
        let n = self.n;
        match self.var(v) {
            TorusVar::X(a, b) => out.push((a, b)),
            TorusVar::Y(a, b) => out.extend([(a, b), (a, (b + 1) % n)]),
            TorusVar::Z(a, b) => out.extend([(a, b), ((a + 1) % n, b)]),
        }
    }

    fn neighbours(&self, a: usize, b: usize) -> [(usize, usize); 4] {
        let n = self.n;
        [
            (a, (b + 1) % n),
            (a, (b + n - 1) % n),
            ((a + 1) % n, b),
            ((a + n - 1) % n, b),
        ]
    }

    /// Variables on the vertices of `mask` and the edges between them.
    fn induced_vars(&self, mask: &[bool]) -> Vec<usize> {
        let n = self.n;
        let mut vars = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if mask[a * n + b] {
                    vars.push(self.id(TorusVar::X(a, b)));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if mask[a * n + b] && mask[a * n + (b + 1) % n] {
                    vars.push(self.id(TorusVar::Y(a, b)));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if mask[a * n + b] && mask[((a + 1) % n) * n + b] {
                    vars.push(self.id(TorusVar::Z(a, b)));
                }
            }
        }
        vars
    }

    /// Connected components of the torus restricted to `mask`, labelled from 0.
    fn components(&self, mask: &[bool]) -> (Vec<Option<usize>>, usize) {
        let n = self.n;
        let mut label = vec![None; n * n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n * n {
            if !mask[start] || label[start].is_some() {
                continue;
            }
            label[start] = Some(count);
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for (a, b) in self.neighbours(v / n, v % n) {
                    let w = a * n + b;
                    if mask[w] && label[w].is_none() {
                        label[w] = Some(count);
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }
}

/// `X̄` for a variable set `X`: the vertex set `S` and `Var(T[S])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    n: usize,
    mask: Vec<bool>,
    vars: Vec<usize>,
    horizontal: usize,
    vertical: usize,
}

impl Closure {
    /// Whether vertex `(a, b)` is in `S`.
    pub fn contains_vertex(&self, a: usize, b: usize) -> bool {
        self.mask[a * self.n + b]
    }

    pub fn vertex_mask(&self) -> &[bool] {
        &self.mask
    }

    /// `S` as `(a, b)` pairs in row-major order.
    pub fn vertices(&self) -> Vec<(usize, usize)> {
        (0..self.n * self.n)
            .filter(|&v| self.mask[v])
            .map(|v| (v / self.n, v % self.n))
            .collect()
    }

    /// `X̄` as sorted variable ids.
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    /// `(C, H, V)`: vertices, horizontal and vertical edge components.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.mask.iter().filter(|&&b| b).count(), self.horizontal, self.vertical)
    }

    /// `|G|^{C+H+V}`.
    pub fn expected_solutions(&self, group_order: usize) -> u128 {
        let (c, h, v) = self.counts();
        pow_saturating(group_order, c + h + v)
    }

    /// Every assignment of `X̄` satisfying the constraints inside it, aligned
    /// with [`Closure::vars`]; fails if the count differs from `|G|^{C+H+V}`.
    pub fn solutions(&self, torus: &TorusInstance, budget: u64) -> Result<Vec<Vec<usize>>> {
        check_budget("closure enumeration", self.expected_solutions(torus.group.order()), budget)?;
        let region = Region::new(torus, &self.mask)?;
        let mut out = Vec::new();
        region.enumerate(torus, |values| out.push(self.vars.iter().map(|&v| values[v]).collect()))?;
        Ok(out)
    }
}

/// Compute `X̄` as the complement of the component of untouched vertices
/// that contains a cross.
///
/// Fails with an input error when no row and column are both untouched; this
/// always holds when `2|X| < n`.
pub fn closure_xbar(torus: &TorusInstance, x: &[usize]) -> Result<Closure> {
    let n = torus.n;
    if let Some(&v) = x.iter().find(|&&v| v >= torus.num_vars()) {
        return Err(invalid!("variable {v} is not a torus variable"));
    }
    let mut touched = Vec::new();
    for &v in x {
        torus.touched(v, &mut touched);
    }
    let mut free = vec![true; n * n];
    for &(a, b) in &touched {
        free[a * n + b] = false;
    }
    let row = (0..n).find(|&a| (0..n).all(|b| free[a * n + b]));
    let col = (0..n).find(|&b| (0..n).all(|a| free[a * n + b]));
    let (Some(row), Some(col)) = (row, col) else {
        return Err(invalid!(
            "the variables touch every row or every column of the {n}x{n} torus; no closed set excludes a cross"
        ));
    };
    let (label, count) = torus.components(&free);
    let mut crossing = Vec::new();
    for comp in 0..count {
        let full_row = (0..n).any(|a| (0..n).all(|b| label[a * n + b] == Some(comp)));
        let full_col = (0..n).any(|b| (0..n).all(|a| label[a * n + b] == Some(comp)));
        if full_row && full_col {
            crossing.push(comp);
        }
    }
    let outer = label[row * n + col].unwrap();
    if crossing != [outer] {
        return Err(Error::Internal(format!(
            "expected exactly one cross-containing component, found {}",
            crossing.len()
        )));
    }
    let mask: Vec<bool> = label.iter().map(|&l| l != Some(outer)).collect();
    let vars = torus.induced_vars(&mask);
    if x.iter().any(|v| !vars.contains(v)) {
        return Err(Error::Internal(format!("closure of {x:?} does not contain it")));
    }
    let mut sorted = vars;
    sorted.sort_unstable();
    let horizontal = runs(n, |a, b| mask[a * n + b] && mask[a * n + (b + 1) % n])?;
    let vertical = runs(n, |b, a| mask[a * n + b] && mask[((a + 1) % n) * n + b])?;
    Ok(Closure {
        n,
        mask,
        vars: sorted,
        horizontal,
        vertical,
    })
}

/// Number of maximal cyclic runs of present edges over all `n` lines.
fn runs(n: usize, present: impl Fn(usize, usize) -> bool) -> Result<usize> {
    let mut total = 0;
    for line in 0..n {
        if (0..n).all(|t| present(line, t)) {
            return Err(Error::Internal(format!("edge component wraps around line {line}")));
        }
        total += (0..n).filter(|&t| present(line, t) && !present(line, (t + n - 1) % n)).count();
    }
    Ok(total)
}

/// Solution generator for the constraints induced by a vertex set: free
/// values for every vertex and the first edge of every run, the rest
/// propagated along each run.
struct Region {
    free: Vec<usize>,
    /// `(target, previous edge, vertex, shift)`: `target = previous + vertex + shift`.
    forced: Vec<(usize, usize, usize, usize)>,
    /// Constraints whose scope lies inside the region.
    checks: Vec<usize>,
    expected: u128,
}

impl Region {
    fn new(torus: &TorusInstance, mask: &[bool]) -> Result<Self> {
        let n = torus.n;
        let at = |a: usize, b: usize| mask[(a % n) * n + b % n];
        let mut free = Vec::new();
        let mut forced = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if at(a, b) {
                    free.push(torus.id(TorusVar::X(a, b)));
                }
            }
        }
        let h = |a: usize, b: usize| at(a, b) && at(a, b + 1);
        let v = |a: usize, b: usize| at(a, b) && at(a + 1, b);
        for a in 0..n {
            if (0..n).all(|b| h(a, b)) {
                return Err(Error::Internal(format!("edge component wraps around row {a}")));
            }
            for b in 0..n {
                if h(a, b) && !h(a, b + n - 1) {
                    free.push(torus.id(TorusVar::Y(a, b)));
                    let mut t = b;
                    while h(a, t + 1) {
                        let (tm, tn) = (t % n, (t + 1) % n);
                        forced.push((
                            torus.id(TorusVar::Y(a, tn)),
                            torus.id(TorusVar::Y(a, tm)),
                            torus.id(TorusVar::X(a, tm)),
                            torus.c(a, tm),
                        ));
                        t += 1;
                    }
                }
            }
        }
        for b in 0..n {
            if (0..n).all(|a| v(a, b)) {
                return Err(Error::Internal(format!("edge component wraps around column {b}")));
            }
            for a in 0..n {
                if v(a, b) && !v(a + n - 1, b) {
                    free.push(torus.id(TorusVar::Z(a, b)));
                    let mut t = a;
                    while v(t + 1, b) {
                        let (tm, tn) = (t % n, (t + 1) % n);
                        forced.push((
                            torus.id(TorusVar::Z(tn, b)),
                            torus.id(TorusVar::Z(tm, b)),
                            torus.id(TorusVar::X(tm, b)),
                            torus.d(tm, b),
                        ));
                        t += 1;
                    }
                }
            }
        }
        let mut inside = vec![false; torus.num_vars()];
        for v in torus.induced_vars(mask) {
            inside[v] = true;
        }
        let checks = torus
            .instance
            .constraints()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.scope.iter().all(|&v| inside[v]))
            .map(|(i, _)| i)
            .collect();
        let expected = pow_saturating(torus.group.order(), free.len());
        Ok(Region {
            free,
            forced,
            checks,
            expected,
        })
    }

    /// Call `f` with every solution as a full-length value vector (entries
    /// outside the region are 0); returns the number of solutions.
    fn enumerate(&self, torus: &TorusInstance, mut f: impl FnMut(&[usize])) -> Result<u128> {
        let g = &torus.group;
        let mut values = vec![0; torus.num_vars()];
        let mut digits = vec![0; self.free.len()];
        let mut count: u128 = 0;
        loop {
            for (&v, &x) in self.free.iter().zip(&digits) {
                values[v] = x;
            }
            for &(target, prev, vertex, shift) in &self.forced {
                values[target] = g.sum([values[prev], values[vertex], shift]);
            }
            for &ci in &self.checks {
                let con = &torus.instance.constraints()[ci];
                let t = [values[con.scope[0]], values[con.scope[1]], values[con.scope[2]]];
                if torus.instance.relation(con.relation).value(&t).is_infinite() {
                    return Err(Error::Internal(format!(
                        "propagated assignment violates constraint {ci}; the counting law fails"
                    )));
                }
            }
            f(&values);
            count += 1;
            if !tuples::advance(&mut digits, g.order()) {
                break;
            }
        }
        if count != self.expected {
            return Err(Error::Internal(format!("enumerated {count} solutions, expected {}", self.expected)));
        }
        Ok(count)
    }
}

/// The SA(k, k) point `λ_X(σ) = Pr[σ̄|_X = σ]` for `σ̄` uniform on the
/// solutions of `X̄`.
///
/// Solutions of `X̄` factor over the connected components of `T[S]`, so each
/// component touched by `X` is enumerated on its own and the marginals multiplied.
pub fn build_gap_solution(torus: &TorusInstance, k: usize, budget: u64) -> Result<SaSolution> {
    if k == 0 || torus.n <= 2 * k {
        return Err(invalid!("need 1 <= k and n > 2k, got n = {}, k = {k}", torus.n));
    }
    let n = torus.n;
    let d = torus.group.order();
    let index = ScopeIndex::new(&torus.instance, k, k, budget)?;
    let mut lambda = SaSolution::zeros(index.clone());
    let mut touched = Vec::new();
    for i in 0..index.num_scopes() {
        let x = index.scope(i);
        let closure = closure_xbar(torus, x)?;
        let (label, count) = torus.components(&closure.mask);
        // component of each variable of X
        let comp_of: Vec<usize> = x
            .iter()
            .map(|&v| {
                touched.clear();
                torus.touched(v, &mut touched);
                let (a, b) = touched[0];
                label[a * n + b].unwrap()
            })
            .collect();
        let mut factors: Vec<(Vec<usize>, Vec<u64>, u64)> = Vec::new();
        for comp in 0..count {
            let positions: Vec<usize> = (0..x.len()).filter(|&p| comp_of[p] == comp).collect();
            if positions.is_empty() {
                continue;
            }
            let mask: Vec<bool> = label.iter().map(|&l| l == Some(comp)).collect();
            let region = Region::new(torus, &mask)?;
            check_budget("closure enumeration", region.expected, budget)?;
            let mut counts = vec![0u64; tuples::count(d, positions.len())];
            let total = region.enumerate(torus, |values| {
                counts[positions.iter().fold(0, |acc, &p| acc * d + values[x[p]])] += 1;
            })?;
            factors.push((positions, counts, total as u64));
        }
        let mut sigma = vec![0; x.len()];
        for (s, slot) in lambda.distribution_mut(i).iter_mut().enumerate() {
            tuples::decode(s, d, &mut sigma);
            let mut p = Rational::one();
            for (positions, counts, total) in &factors {
                let c = counts[positions.iter().fold(0, |acc, &q| acc * d + sigma[q])];
                if c == 0 {
                    p = Rational::zero();
                    break;
                }
                p = p * Rational::new(c as i64, *total as i64);
            }
            *slot = p;
        }
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DEFAULT_BUDGET;
    use crate::rational::ExtRat;
    use crate::sa::verify_sa_feasible;

    fn z2() -> AbelianGroup {
        AbelianGroup::cyclic(2).unwrap()
    }

    #[test]
    fn small_tori_are_unsatisfiable() {
        let t1 = TorusInstance::canonical(z2(), 1).unwrap();
        assert_eq!(t1.instance().num_vars(), 3);
        assert_eq!(t1.instance().brute_force_opt(DEFAULT_BUDGET).unwrap().0, ExtRat::Infinite);
        let t2 = TorusInstance::canonical(z2(), 2).unwrap();
        assert_eq!((t2.instance().num_vars(), t2.instance().constraints().len()), (12, 8));
        assert_eq!(t2.instance().brute_force_opt(DEFAULT_BUDGET).unwrap().0, ExtRat::Infinite);
        let e1 = t1.eqs_instance(3).unwrap();
        assert_eq!(e1.brute_force_opt(DEFAULT_BUDGET).unwrap().0, ExtRat::Infinite);
    }

    #[test]
    fn balanced_parameters_are_rejected() {
        let mut c = vec![0; 4];
        c[0] = 1;
        let mut d = vec![0; 4];
        d[3] = 1;
        assert!(TorusInstance::with_parameters(z2(), 2, c.clone(), d).is_err());
        assert!(TorusInstance::with_parameters(z2(), 2, c, vec![0; 4]).is_ok());
        assert!(TorusInstance::with_parameters(z2(), 2, vec![2, 0, 0, 0], vec![0; 4]).is_err());
    }

    #[test]
    fn single_variable_closures() {
        let t = TorusInstance::canonical(z2(), 7).unwrap();
        let x00 = t.id(TorusVar::X(0, 0));
        let cl = closure_xbar(&t, &[x00]).unwrap();
        assert_eq!((cl.vertices(), cl.counts(), cl.vars()), (vec![(0, 0)], (1, 0, 0), &[x00][..]));
        assert_eq!(cl.solutions(&t, DEFAULT_BUDGET).unwrap().len(), 2);

        let y00 = t.id(TorusVar::Y(0, 0));
        let cl = closure_xbar(&t, &[y00]).unwrap();
        assert_eq!(cl.vertices(), vec![(0, 0), (0, 1)]);
        assert_eq!(cl.counts(), (2, 1, 0));
        assert_eq!(cl.solutions(&t, DEFAULT_BUDGET).unwrap().len(), 8);

        let empty = closure_xbar(&t, &[]).unwrap();
        assert!(empty.vars().is_empty());
    }

    #[test]
    fn enclosed_vertices_join_the_closure() {
        let t = TorusInstance::canonical(z2(), 7).unwrap();
        let ring: Vec<usize> = [(1, 2), (3, 2), (2, 1), (2, 3)]
            .iter()
            .map(|&(a, b)| t.id(TorusVar::X(a, b)))
            .collect();
        let cl = closure_xbar(&t, &ring).unwrap();
        assert!(cl.contains_vertex(2, 2));
        assert_eq!(cl.counts(), (5, 1, 1));
        assert_eq!(cl.solutions(&t, DEFAULT_BUDGET).unwrap().len(), 1 << 7);
    }

    #[test]
    fn closure_needs_a_cross() {
        let t = TorusInstance::canonical(z2(), 3).unwrap();
        let diag: Vec<usize> = (0..3).map(|a| t.id(TorusVar::X(a, a))).collect();
        assert!(matches!(closure_xbar(&t, &diag), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gap_solution_is_feasible_at_level_two() {
        let t = TorusInstance::canonical(z2(), 5).unwrap();
        let lambda = build_gap_solution(&t, 2, DEFAULT_BUDGET).unwrap();
        let y00 = t.id(TorusVar::Y(0, 0));
        let half = Rational::new(1, 2);
        assert_eq!(lambda.get(&[y00]).unwrap(), &[half.clone(), half.clone()]);
        assert_eq!(lambda.unary(0), &[half.clone(), half]);
        let report = verify_sa_feasible(t.instance(), &lambda, 2, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(report.violation, None);
        assert_eq!(report.objective, ExtRat::ZERO);
        assert!(build_gap_solution(&t, 3, DEFAULT_BUDGET).is_err());
    }
}
