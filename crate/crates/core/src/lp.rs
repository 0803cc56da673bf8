//! Exact linear programming over ℚ.
//!
//! [`solve_lp`] runs a two-phase primal simplex on a sparse row tableau with
//! exact [`Rational`] entries. The default pivot rule is Bland's
//! smallest-index rule, which cannot cycle; a Dantzig rule that falls back to
//! Bland on degenerate stalls is available through [`SolverOptions`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::rational::{ExtRat, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn token(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// A constraint row `Σ a_j x_j (sense) rhs`, stored sparsely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpRow {
    /// `(variable, coefficient)` pairs; variables may appear in any order.
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

impl LpRow {
    pub fn activity(&self, point: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, a)| a * &point[*j]).sum()
    }

    pub fn is_satisfied(&self, point: &[Rational]) -> bool {
        let lhs = self.activity(point);
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Eq => lhs == self.rhs,
            Sense::Ge => lhs >= self.rhs,
        }
    }
}

/// `minimize c·x` subject to rows and per-variable bounds.
///
/// Every variable starts with lower bound 0 and no upper bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<Rational>,
    rows: Vec<LpRow>,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            rows: Vec::new(),
            lower: vec![Some(Rational::zero()); num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[Rational] {
        &self.objective
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn lower_bound(&self, j: usize) -> Option<&Rational> {
        self.lower[j].as_ref()
    }

    pub fn upper_bound(&self, j: usize) -> Option<&Rational> {
        self.upper[j].as_ref()
    }

    pub fn set_objective(&mut self, objective: Vec<Rational>) -> Result<()> {
        if objective.len() != self.num_vars {
            return Err(invalid!(
                "objective has length {}, expected {}",
                objective.len(),
                self.num_vars
            ));
        }
        self.objective = objective;
        Ok(())
    }

    pub fn set_cost(&mut self, j: usize, c: Rational) {
        self.objective[j] = c;
    }

    /// Add a row from `(variable, coefficient)` pairs.
    pub fn add_sparse_row(
        &mut self,
        coeffs: Vec<(usize, Rational)>,
        sense: Sense,
        rhs: Rational,
    ) -> Result<usize> {
        if let Some((j, _)) = coeffs.iter().find(|(j, _)| *j >= self.num_vars) {
            return Err(invalid!("row references variable {j} of {}", self.num_vars));
        }
        self.rows.push(LpRow { coeffs, sense, rhs });
        Ok(self.rows.len() - 1)
    }

    /// Add a row from a dense coefficient vector.
    pub fn add_row(&mut self, dense: &[Rational], sense: Sense, rhs: Rational) -> Result<usize> {
        if dense.len() != self.num_vars {
            return Err(invalid!(
                "row has length {}, expected {}",
                dense.len(),
                self.num_vars
            ));
        }
        let coeffs = dense
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(j, a)| (j, a.clone()))
            .collect();
        self.add_sparse_row(coeffs, sense, rhs)
    }

    /// Set bounds for variable `j`; `None` means unbounded on that side.
    pub fn set_bounds(&mut self, j: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn objective_value(&self, point: &[Rational]) -> Rational {
        self.objective
            .iter()
            .zip(point)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, x)| c * x)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Optimal {
        value: Rational,
        point: Vec<Rational>,
    },
    Infeasible,
    Unbounded,
}

impl LpResult {
    /// The optimum as an extended rational: `∞` when infeasible, `None` when unbounded.
    pub fn value(&self) -> Option<ExtRat> {
        match self {
            LpResult::Optimal { value, .. } => Some(ExtRat::Finite(value.clone())),
            LpResult::Infeasible => Some(ExtRat::Infinite),
            LpResult::Unbounded => None,
        }
    }

    pub fn point(&self) -> Option<&[Rational]> {
        match self {
            LpResult::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables.
    #[default]
    Bland,
    /// Most negative reduced cost, switching to Bland while pivots are degenerate.
    DantzigWithBlandFallback,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolverOptions {
    pub pivot_rule: PivotRule,
}

/// Solve with the default options (Bland's rule).
pub fn solve_lp(lp: &LinearProgram) -> Result<LpResult> {
    solve_lp_with(lp, SolverOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, options: SolverOptions) -> Result<LpResult> {
    Ok(solve_with_multipliers(lp, options)?.0)
}

/// Solve, and at an optimum also return the simplex multiplier `π_i` of every
/// row when all rows are inequalities and none was dropped as redundant.
///
/// For a `≤` row of a minimisation `π_i ≤ 0`, for a `≥` row `π_i ≥ 0`, and
/// `c - πA` is non-negative on the structural columns.
pub(crate) fn solve_with_multipliers(
    lp: &LinearProgram,
    options: SolverOptions,
) -> Result<(LpResult, Option<Vec<Rational>>)> {
    validate(lp)?;
    let std = StandardForm::build(lp);
    if std.trivially_infeasible {
        return Ok((LpResult::Infeasible, None));
    }
    let mut tab = Tableau::new(&std);
    // Phase 1: minimise the sum of artificials.
    if tab.num_artificial > 0 {
        let phase1_cost: Vec<Rational> = (0..tab.ncols)
            .map(|j| {
                if j >= tab.first_artificial {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        tab.set_cost(&phase1_cost);
        match tab.optimize(options.pivot_rule, tab.ncols) {
            Phase::Optimal => {}
            Phase::Unbounded => unreachable!("phase 1 objective is bounded below by 0"),
        }
        if tab.objective.is_positive() {
            return Ok((LpResult::Infeasible, None));
        }
        tab.drive_out_artificials();
    }
    let mut cost = vec![Rational::zero(); tab.ncols];
    cost[..std.cost.len()].clone_from_slice(&std.cost);
    tab.set_cost(&cost);
    match tab.optimize(options.pivot_rule, tab.first_artificial) {
        Phase::Unbounded => Ok((LpResult::Unbounded, None)),
        Phase::Optimal => {
            let mut values = vec![Rational::zero(); tab.ncols];
            for (r, &b) in tab.basis.iter().enumerate() {
                values[b] = tab.rhs[r].clone();
            }
            let point = std.recover(&values);
            let value = lp.objective_value(&point);
            debug_assert_eq!(value, &tab.objective + &std.cost_offset);
            let multipliers = if tab.rows.len() == std.rows.len() {
                std.row_slack[..lp.rows.len()]
                    .iter()
                    .map(|slack| slack.as_ref().map(|(col, sign)| -(&tab.cost[*col] * sign)))
                    .collect()
            } else {
                None
            };
            Ok((LpResult::Optimal { value, point }, multipliers))
        }
    }
}

fn validate(lp: &LinearProgram) -> Result<()> {
    if lp.objective.len() != lp.num_vars
        || lp.lower.len() != lp.num_vars
        || lp.upper.len() != lp.num_vars
    {
        return Err(invalid!("inconsistent LP dimensions"));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if let Some((j, _)) = row.coeffs.iter().find(|(j, _)| *j >= lp.num_vars) {
            return Err(invalid!("row {i} references variable {j}"));
        }
    }
    Ok(())
}

/// How an original variable maps onto non-negative standard-form columns.
#[derive(Clone, Debug)]
enum VarMap {
    /// `x = offset + col`
    Shifted { col: usize, offset: Rational },
    /// `x = col_pos − col_neg`
    Split { pos: usize, neg: usize },
    /// `x = offset − col` (only an upper bound)
    Mirrored { col: usize, offset: Rational },
}

/// `A x (=) b` with `x ≥ 0`, `b ≥ 0`, plus the column kinds.
struct StandardForm {
    rows: Vec<Vec<(usize, Rational)>>,
    rhs: Vec<Rational>,
    /// Per row, the slack column usable as an initial basic variable.
    initial_basic: Vec<Option<usize>>,
    /// Slack column of each row with its sign before any negation of the row.
    row_slack: Vec<Option<(usize, Rational)>>,
    ncols: usize,
    cost: Vec<Rational>,
    cost_offset: Rational,
    maps: Vec<VarMap>,
    trivially_infeasible: bool,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut ncols = 0;
        let mut maps = Vec::with_capacity(lp.num_vars);
        let mut extra_rows: Vec<(Vec<(usize, Rational)>, Sense, Rational)> = Vec::new();
        let mut trivially_infeasible = false;
        for j in 0..lp.num_vars {
            match (&lp.lower[j], &lp.upper[j]) {
                (Some(l), u) => {
                    let col = ncols;
                    ncols += 1;
                    if let Some(u) = u {
                        if u < l {
                            trivially_infeasible = true;
                        }
                        extra_rows.push((vec![(col, Rational::one())], Sense::Le, u - l));
                    }
                    maps.push(VarMap::Shifted {
                        col,
                        offset: l.clone(),
                    });
                }
                (None, Some(u)) => {
                    let col = ncols;
                    ncols += 1;
                    maps.push(VarMap::Mirrored {
                        col,
                        offset: u.clone(),
                    });
                }
                (None, None) => {
                    maps.push(VarMap::Split {
                        pos: ncols,
                        neg: ncols + 1,
                    });
                    ncols += 2;
                }
            }
        }
        let mut cost = vec![Rational::zero(); ncols];
        let mut cost_offset = Rational::zero();
        for (j, c) in lp.objective.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match &maps[j] {
                VarMap::Shifted { col, offset } => {
                    cost[*col] += c;
                    cost_offset += c * offset;
                }
                VarMap::Mirrored { col, offset } => {
                    cost[*col] -= c;
                    cost_offset += c * offset;
                }
                VarMap::Split { pos, neg } => {
                    cost[*pos] += c;
                    cost[*neg] -= c;
                }
            }
        }
        let mut raw: Vec<(Vec<(usize, Rational)>, Sense, Rational)> = lp
            .rows
            .iter()
            .map(|row| {
                let mut coeffs: Vec<(usize, Rational)> = Vec::with_capacity(row.coeffs.len());
                let mut rhs = row.rhs.clone();
                for (j, a) in &row.coeffs {
                    if a.is_zero() {
                        continue;
                    }
                    match &maps[*j] {
                        VarMap::Shifted { col, offset } => {
                            coeffs.push((*col, a.clone()));
                            rhs -= a * offset;
                        }
                        VarMap::Mirrored { col, offset } => {
                            coeffs.push((*col, -a));
                            rhs -= a * offset;
                        }
                        VarMap::Split { pos, neg } => {
                            coeffs.push((*pos, a.clone()));
                            coeffs.push((*neg, -a));
                        }
                    }
                }
                (normalize_sparse(coeffs), row.sense, rhs)
            })
            .collect();
        raw.extend(extra_rows);

        let mut rows = Vec::with_capacity(raw.len());
        let mut rhs_out = Vec::with_capacity(raw.len());
        let mut initial_basic = Vec::with_capacity(raw.len());
        let mut row_slack = Vec::with_capacity(raw.len());
        for (mut coeffs, sense, mut rhs) in raw {
            let slack_sign = match sense {
                Sense::Le => Some(Rational::one()),
                Sense::Ge => Some(-Rational::one()),
                Sense::Eq => None,
            };
            let mut slack = None;
            row_slack.push(slack_sign.clone().map(|sign| (ncols, sign)));
            if let Some(sign) = slack_sign {
                coeffs.push((ncols, sign));
                slack = Some(ncols);
                ncols += 1;
            }
            let flip = rhs.is_negative();
            if flip {
                rhs = -rhs;
                for (_, a) in coeffs.iter_mut() {
                    *a = -&*a;
                }
            }
            let basic = slack.filter(|&s| coeffs.iter().any(|(j, a)| *j == s && a.is_positive()));
            if coeffs.is_empty() && !rhs.is_zero() {
                trivially_infeasible = true;
            }
            rows.push(coeffs);
            rhs_out.push(rhs);
            initial_basic.push(basic);
        }
        cost.resize(ncols, Rational::zero());
        StandardForm {
            rows,
            rhs: rhs_out,
            initial_basic,
            row_slack,
            ncols,
            cost,
            cost_offset,
            maps,
            trivially_infeasible,
        }
    }

    fn recover(&self, values: &[Rational]) -> Vec<Rational> {
        self.maps
            .iter()
            .map(|m| match m {
                VarMap::Shifted { col, offset } => offset + &values[*col],
                VarMap::Mirrored { col, offset } => offset - &values[*col],
                VarMap::Split { pos, neg } => &values[*pos] - &values[*neg],
            })
            .collect()
    }
}

/// Sort by column and merge duplicate entries.
fn normalize_sparse(mut coeffs: Vec<(usize, Rational)>) -> Vec<(usize, Rational)> {
    coeffs.sort_by_key(|(j, _)| *j);
    let mut out: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|(_, a)| !a.is_zero());
    out
}

enum Phase {
    Optimal,
    Unbounded,
}

type SparseRow = Vec<(u32, Rational)>;

struct Tableau {
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Reduced costs.
    cost: Vec<Rational>,
    /// Current objective value (without the constant offset).
    objective: Rational,
    ncols: usize,
    first_artificial: usize,
    num_artificial: usize,
}

fn entry(row: &SparseRow, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&(col as u32), |(j, _)| *j)
        .ok()
        .map(|k| &row[k].1)
}

/// `row - f * pivot_row`, dropping exact zeros.
fn axpy(row: &SparseRow, f: &Rational, pivot_row: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot_row.len());
    let (mut a, mut b) = (0, 0);
    while a < row.len() || b < pivot_row.len() {
        let ja = row.get(a).map_or(u32::MAX, |e| e.0);
        let jb = pivot_row.get(b).map_or(u32::MAX, |e| e.0);
        if ja < jb {
            out.push(row[a].clone());
            a += 1;
        } else if jb < ja {
            out.push((jb, -(f * &pivot_row[b].1)));
            b += 1;
        } else {
            let v = &row[a].1 - f * &pivot_row[b].1;
            if !v.is_zero() {
                out.push((ja, v));
            }
            a += 1;
            b += 1;
        }
    }
    out
}

/// Consecutive degenerate pivots tolerated before Dantzig pricing yields to Bland.
const DEGENERATE_STALL: usize = 32;

impl Tableau {
    fn new(std: &StandardForm) -> Self {
        let m = std.rows.len();
        let first_artificial = std.ncols;
        let mut ncols = std.ncols;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (r, coeffs) in std.rows.iter().enumerate() {
            let mut row: SparseRow = coeffs.iter().map(|(j, a)| (*j as u32, a.clone())).collect();
            match std.initial_basic[r] {
                Some(s) => basis.push(s),
                None => {
                    row.push((ncols as u32, Rational::one()));
                    basis.push(ncols);
                    ncols += 1;
                }
            }
            rows.push(row);
        }
        let mut is_basic = vec![false; ncols];
        for &b in &basis {
            is_basic[b] = true;
        }
        Tableau {
            rows,
            rhs: std.rhs.clone(),
            basis,
            is_basic,
            cost: vec![Rational::zero(); ncols],
            objective: Rational::zero(),
            num_artificial: ncols - first_artificial,
            ncols,
            first_artificial,
        }
    }

    /// Install a cost vector and price out the current basis.
    fn set_cost(&mut self, cost: &[Rational]) {
        self.cost = cost.to_vec();
        self.objective = Rational::zero();
        for r in 0..self.rows.len() {
            let b = self.basis[r];
            let cb = self.cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (j, a) in &self.rows[r] {
                self.cost[*j as usize] -= &cb * a;
            }
            self.objective += &cb * &self.rhs[r];
        }
    }

    fn entering(&self, rule: PivotRule, limit: usize, bland: bool) -> Option<usize> {
        let candidates = (0..limit).filter(|&j| !self.is_basic[j] && self.cost[j].is_negative());
        if bland || rule == PivotRule::Bland {
            candidates.into_iter().next()
        } else {
            let mut best: Option<usize> = None;
            for j in candidates {
                if best.is_none_or(|b| self.cost[j] < self.cost[b]) {
                    best = Some(j);
                }
            }
            best
        }
    }

    fn leaving(&self, s: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for r in 0..self.rows.len() {
            let Some(a) = entry(&self.rows[r], s) else {
                continue;
            };
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.rhs[r] / a;
            let better = match &best {
                None => true,
                Some((br, bratio)) => {
                    ratio < *bratio || (ratio == *bratio && self.basis[r] < self.basis[*br])
                }
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }

    fn optimize(&mut self, rule: PivotRule, limit: usize) -> Phase {
        let mut stall = 0;
        loop {
            let Some(s) = self.entering(rule, limit, stall >= DEGENERATE_STALL) else {
                return Phase::Optimal;
            };
            let Some(r) = self.leaving(s) else {
                return Phase::Unbounded;
            };
            if self.rhs[r].is_zero() {
                stall += 1;
            } else {
                stall = 0;
            }
            self.pivot(r, s);
        }
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let inv = entry(&self.rows[r], s).expect("pivot entry").recip();
        let mut prow = core::mem::take(&mut self.rows[r]);
        if inv != Rational::one() {
            for (_, a) in prow.iter_mut() {
                *a *= &inv;
            }
            self.rhs[r] *= &inv;
        }
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let Some(f) = entry(&self.rows[i], s).cloned() else {
                continue;
            };
            self.rows[i] = axpy(&self.rows[i], &f, &prow);
            if !prhs.is_zero() {
                self.rhs[i] -= &f * &prhs;
            }
        }
        let f = self.cost[s].clone();
        if !f.is_zero() {
            for (j, a) in &prow {
                self.cost[*j as usize] -= &f * a;
            }
            self.objective += &f * &prhs;
        }
        self.rows[r] = prow;
        self.is_basic[self.basis[r]] = false;
        self.is_basic[s] = true;
        self.basis[r] = s;
    }

    /// After a zero-cost phase 1, pivot basic artificials out on any
    /// structural column, delete rows that are redundant, and strip the
    /// artificial columns.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.first_artificial {
                let col = self.rows[r]
                    .iter()
                    .find(|(j, _)| (*j as usize) < self.first_artificial)
                    .map(|(j, _)| *j as usize);
                match col {
                    Some(s) => self.pivot(r, s),
                    None => {
                        self.is_basic[self.basis[r]] = false;
                        self.rows.swap_remove(r);
                        self.rhs.swap_remove(r);
                        self.basis.swap_remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        let limit = self.first_artificial as u32;
        for row in self.rows.iter_mut() {
            row.retain(|(j, _)| *j < limit);
        }
    }
}

/// One violated condition found by [`check_point`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Row { row: usize, activity: Rational },
    Lower { var: usize },
    Upper { var: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointReport {
    pub violations: Vec<Violation>,
    pub objective: Rational,
}

impl PointReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact check of every row and bound at `point`.
pub fn check_point(lp: &LinearProgram, point: &[Rational]) -> Result<PointReport> {
    if point.len() != lp.num_vars {
        return Err(invalid!(
            "point has length {}, LP has {} variables",
            point.len(),
            lp.num_vars
        ));
    }
    let mut violations = Vec::new();
    for (j, x) in point.iter().enumerate() {
        if lp.lower[j].as_ref().is_some_and(|l| x < l) {
            violations.push(Violation::Lower { var: j });
        }
        if lp.upper[j].as_ref().is_some_and(|u| x > u) {
            violations.push(Violation::Upper { var: j });
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if !row.is_satisfied(point) {
            violations.push(Violation::Row {
                row: i,
                activity: row.activity(point),
            });
        }
    }
    Ok(PointReport {
        violations,
        objective: lp.objective_value(point),
    })
}
